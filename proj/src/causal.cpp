#include "bidrank/causal.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace bidrank {

namespace {

void validate_discounts(const std::vector<double>& discounts) {
  if (discounts.empty()) throw ValidationError("model: discounts must be nonempty");
  if (discounts[0] != 1.0)
    throw ValidationError(
        "model: discounts[1] != 1 (position-effect assumption requires alpha_1 = 1)");
  for (std::size_t r = 1; r < discounts.size(); ++r)
    if (!(discounts[r] > 0.0 && discounts[r] < 1.0))
      throw ValidationError("model: discounts must lie in (0,1) for ranks >= 2");
}

void validate_q_floor(double q) {
  if (!(q > 0.0 && q <= 0.5))
    throw ValidationError("model: q must lie in (0, 0.5]");
}

}  // namespace

void OutcomesModel::validate() const {
  validate_discounts(discounts);
  validate_q_floor(q_floor);
  if (noise_sd < 0.0) throw ValidationError("model: sigma must be >= 0");
  const std::size_t n = baseline.size();
  if (effect.size() != n || treat_prob.size() != n)
    throw ValidationError("model: baseline/effect/treat_prob sizes disagree");
  for (const auto& row : effect)
    if (row.size() != discounts.size())
      throw ValidationError("model: effect rows must cover every rank");
  for (double q : treat_prob)
    if (!(q >= q_floor && q <= 1.0 - q_floor))
      throw ValidationError("model: treatment probabilities must lie in [q, 1-q]");
}

double OutcomesModel::y_max(const RankAssignment& assignment, int admin) const {
  double m = 0.0;
  for (int t = 0; t < assignment.n_slots(); ++t) {
    const int r = assignment.rank(admin, t);
    if (r == kNoRank) continue;
    m = std::max(m, std::abs(baseline[t] + effect[t][r - 1]));
  }
  return m;
}

OutcomesModel make_outcomes_model(const ModelParams& params) {
  if (params.n_slots < 1) throw ValidationError("model: n_slots must be >= 1");
  validate_discounts(params.discounts);
  validate_q_floor(params.q);
  if (params.heterogeneity < 0.0)
    throw ValidationError("model: heterogeneity spread must be >= 0");
  if (std::abs(params.tau) + params.heterogeneity > 1.0)
    throw ValidationError(
        "model: |tau| + heterogeneity must be <= 1 (bounded-effect assumption)");

  OutcomesModel model;
  model.discounts = params.discounts;
  model.noise_sd = params.sigma;
  model.q_floor = params.q;
  model.baseline.assign(static_cast<std::size_t>(params.n_slots), params.baseline);
  model.effect.resize(static_cast<std::size_t>(params.n_slots));
  model.treat_prob.resize(static_cast<std::size_t>(params.n_slots));

  Rng rng(derive_seed(params.seed, kOutcomeStream, 0x71));
  const int n = params.n_slots;
  for (int i = 0; i < n; ++i) {
    // Zero-sum, evenly spread heterogeneity keeps the slot effects symmetric
    // around tau and inside the bounded-effect region.
    const double delta =
        n > 1 ? params.heterogeneity * (2.0 * i / (n - 1.0) - 1.0) : 0.0;
    model.effect[i].resize(params.discounts.size());
    for (std::size_t r = 0; r < params.discounts.size(); ++r)
      model.effect[i][r] = params.discounts[r] * (params.tau + delta);
    model.treat_prob[i] =
        params.heterogeneous_q
            ? params.q + (1.0 - 2.0 * params.q) * rng.uniform()
            : params.q;
  }
  model.validate();
  return model;
}

int OutcomeDataset::count_at_rank(int rank) const {
  int c = 0;
  for (const auto& rec : records)
    if (rec.rank == rank) ++c;
  return c;
}

SampleProfile OutcomeDataset::profile(int n_ranks) const {
  SampleProfile p;
  p.counts.assign(static_cast<std::size_t>(n_ranks), 0);
  for (const auto& rec : records) ++p.counts[rec.rank - 1];
  return p;
}

RankAssignment assignment_from_profile(const SampleProfile& profile) {
  const int k = static_cast<int>(profile.counts.size());
  const int n = profile.total();
  if (n < 1) throw ValidationError("assignment_from_profile: empty profile");
  RankAssignment assignment(1, n, k);
  int t = 0;
  for (int r = 1; r <= k; ++r)
    for (int i = 0; i < profile.counts[r - 1]; ++i) assignment.set_rank(0, t++, r);
  return assignment;
}

double realized_tau(const OutcomesModel& model, const RankAssignment& assignment, int admin) {
  double sum = 0.0;
  int n = 0;
  for (int t = 0; t < assignment.n_slots(); ++t) {
    const int r = assignment.rank(admin, t);
    if (r == kNoRank) continue;
    sum += model.effect[t][r - 1] / model.discounts[r - 1];
    ++n;
  }
  if (n == 0) throw ValidationError("realized_tau: admin won no slots");
  return sum / n;
}

double realized_tau_r(const OutcomesModel& model, const RankAssignment& assignment,
                      int admin, int rank) {
  double sum = 0.0;
  int n = 0;
  for (int t = 0; t < assignment.n_slots(); ++t) {
    if (assignment.rank(admin, t) != rank) continue;
    sum += model.effect[t][rank - 1];
    ++n;
  }
  if (n == 0)
    throw ValidationError("realized_tau_r: no slots at rank " + std::to_string(rank));
  return sum / n;
}

OutcomeDataset sample_outcomes(const OutcomesModel& model, const RankAssignment& assignment,
                               int admin, std::uint64_t seed) {
  model.validate();
  if (assignment.n_slots() > model.n_slots())
    throw ValidationError("sample_outcomes: model does not cover every slot");
  OutcomeDataset data;
  for (int t = 0; t < assignment.n_slots(); ++t) {
    const int r = assignment.rank(admin, t);
    if (r == kNoRank) continue;
    if (r > model.n_ranks())
      throw ValidationError("sample_outcomes: model has no coefficients for rank " +
                            std::to_string(r));
    Rng rng(derive_seed(seed, kOutcomeStream, static_cast<std::uint64_t>(t)));
    const double q = model.treat_prob[t];
    const int treated = rng.uniform() < q ? 1 : 0;
    const double y = model.baseline[t] + model.effect[t][r - 1] * treated +
                     model.noise_sd * rng.normal();
    data.records.push_back({t, r, treated, y, q});
  }
  return data;
}

namespace {

// Inverse-propensity difference term for one record.
double ht_term(const OutcomeRecord& rec) {
  if (!(rec.q > 0.0 && rec.q < 1.0))
    throw ValidationError("ht_estimate: treatment probability must lie in (0,1)");
  return rec.treated ? rec.outcome / rec.q : -rec.outcome / (1.0 - rec.q);
}

}  // namespace

EstimateReport ht_estimate_rank(const OutcomeDataset& data, int rank) {
  double sum = 0.0;
  int n_r = 0;
  int max_rank = 0;
  for (const auto& rec : data.records) {
    max_rank = std::max(max_rank, rec.rank);
    if (rec.rank != rank) continue;
    sum += ht_term(rec);
    ++n_r;
  }
  if (n_r == 0)
    throw ValidationError("ht_estimate_rank: no data at rank " + std::to_string(rank));
  EstimateReport report;
  report.estimate = sum / n_r;
  report.target = EstimandKind::tau_r;
  report.n_used.assign(static_cast<std::size_t>(std::max(rank, max_rank)), 0);
  report.n_used[rank - 1] = n_r;
  return report;
}

double r_estimand(double tau_r_hat, double alpha_r) {
  if (alpha_r <= 0.0) throw ValidationError("r_estimand: alpha_r must be > 0");
  if (std::abs(alpha_r) < 1e-12)
    throw ValidationError("r_estimand: alpha_r too close to zero");
  return tau_r_hat / alpha_r;
}

WeightedEstimate inverse_variance_combine(
    const std::vector<std::pair<double, double>>& estimates_and_variances) {
  if (estimates_and_variances.empty())
    throw ValidationError("inverse_variance_combine: empty estimate list");
  double precision_sum = 0.0;
  for (const auto& [est, var] : estimates_and_variances) {
    (void)est;
    if (!(var > 0.0))
      throw ValidationError("inverse_variance_combine: variances must be > 0");
    precision_sum += 1.0 / var;
  }
  WeightedEstimate out;
  out.variance = 1.0 / precision_sum;
  for (const auto& [est, var] : estimates_and_variances) {
    const double w = (1.0 / var) / precision_sum;
    out.weights.push_back(w);
    out.estimate += w * est;
  }
  return out;
}

double ht_variance_upper_bound(int n_r, double sigma, double q, double y_max) {
  if (n_r < 1) throw ValidationError("ht_variance_upper_bound: n_r must be >= 1");
  validate_q_floor(q);
  if (sigma < 0.0 || y_max < 0.0)
    throw ValidationError("ht_variance_upper_bound: sigma and y_max must be >= 0");
  const double q1 = q * (1.0 - q);
  return (sigma * sigma / q1 +
          y_max * y_max * (((1.0 - q) * (1.0 - q) + q * q) / q1 + 2.0)) /
         n_r;
}

double minimax_lower_bound(const SampleProfile& profile, std::span<const double> discounts,
                           double sigma, double q) {
  validate_q_floor(q);
  const double s = sample_value(profile, discounts);
  if (s == 0.0) return 1.0;
  return std::min(sigma * sigma / (16.0 * (1.0 - q) * s), 1.0);
}

EstimateReport estimate_tau_pipeline(const OutcomeDataset& data, const OutcomesModel& model,
                                     VarianceWeighting weighting) {
  if (data.records.empty())
    throw ValidationError("estimate_tau_pipeline: no data at any rank");

  const int k = model.n_ranks();
  const SampleProfile profile = data.profile(k);
  double y_max = 0.0;
  for (const auto& rec : data.records)
    y_max = std::max(y_max, std::abs(model.baseline[rec.slot] +
                                     model.effect[rec.slot][rec.rank - 1]));

  std::vector<std::pair<double, double>> components;
  EstimateReport report;
  report.target = EstimandKind::tau;
  report.n_used = profile.counts;
  report.biased_weighting = weighting == VarianceWeighting::sample_variance;
  for (int r = 1; r <= k; ++r) {
    const int n_r = profile.counts[r - 1];
    if (n_r == 0) continue;
    const EstimateReport per_rank = ht_estimate_rank(data, r);
    const double alpha = model.discounts[r - 1];
    const double identified = r_estimand(per_rank.estimate, alpha);
    double variance;
    if (weighting == VarianceWeighting::plugin_bound) {
      variance = ht_variance_upper_bound(n_r, model.noise_sd, model.q_floor, y_max) /
                 (alpha * alpha);
    } else {
      // Sample variance of the per-record terms; ties the weights to the data.
      RunningStat stat;
      for (const auto& rec : data.records)
        if (rec.rank == r) stat.add(ht_term(rec));
      variance = stat.variance() / n_r / (alpha * alpha);
      if (!(variance > 0.0))
        variance = ht_variance_upper_bound(n_r, model.noise_sd, model.q_floor, y_max) /
                   (alpha * alpha);
    }
    components.emplace_back(identified, variance);
  }

  const WeightedEstimate combined = inverse_variance_combine(components);
  report.estimate = combined.estimate;
  report.variance_estimate = combined.variance;
  report.minimax_lower =
      minimax_lower_bound(profile, model.discounts, model.noise_sd, model.q_floor);
  return report;
}

double naive_alpha_estimate(const OutcomeDataset& data_split_r, int rank,
                            const OutcomeDataset& data_split_1) {
  if (data_split_r.records.empty() || data_split_1.records.empty())
    throw ValidationError("naive_alpha_estimate: both splits must be nonempty");
  const double tau_r = ht_estimate_rank(data_split_r, rank).estimate;
  const double tau_1 = ht_estimate_rank(data_split_1, 1).estimate;
  if (std::abs(tau_1) < 1e-12)
    throw ValidationError("naive_alpha_estimate: rank-1 estimate too close to zero");
  return tau_r / tau_1;
}

namespace {

double ht_over(const std::vector<OutcomeRecord>& records, std::size_t begin, std::size_t end) {
  double sum = 0.0;
  for (std::size_t i = begin; i < end; ++i) sum += ht_term(records[i]);
  return sum / static_cast<double>(end - begin);
}

}  // namespace

std::vector<SplitCompareResult> data_splitting_compare(const OutcomesModel& model,
                                                       const SampleProfile& profile,
                                                       const std::vector<double>& fractions,
                                                       long long n_reps, std::uint64_t seed) {
  model.validate();
  if (fractions.empty())
    throw ValidationError("data_splitting_compare: fractions must be nonempty");
  for (double f : fractions)
    if (!(f >= 0.0 && f <= 1.0))
      throw ValidationError("data_splitting_compare: fractions must lie in [0,1]");
  if (n_reps < 1) throw ValidationError("data_splitting_compare: n_reps must be >= 1");
  const int k = static_cast<int>(profile.counts.size());
  if (k != model.n_ranks())
    throw ValidationError("data_splitting_compare: profile and model rank counts disagree");
  const int n_1 = profile.counts[0];
  if (n_1 < 1)
    throw ValidationError("data_splitting_compare: needs rank-1 data (n_1 >= 1)");

  const RankAssignment assignment = assignment_from_profile(profile);
  if (assignment.n_slots() > model.n_slots())
    throw ValidationError("data_splitting_compare: model has fewer slots than the profile");
  const double tau_true = realized_tau(model, assignment, 0);
  const double y_max = model.y_max(assignment, 0);

  // Split sizes per fraction; spec'd to keep the rank-1 blocks disjoint and
  // within n_1 in total.
  std::vector<std::vector<int>> split_sizes;
  for (double f : fractions) {
    std::vector<int> sizes(static_cast<std::size_t>(k), 0);
    for (int r = 2; r <= k; ++r) {
      const double cap = std::min(static_cast<double>(n_1) / (k - 1),
                                  static_cast<double>(profile.counts[r - 1]));
      sizes[r - 1] = static_cast<int>(std::floor(f * cap));
    }
    split_sizes.push_back(std::move(sizes));
  }

  // Records arrive rank-major from assignment_from_profile; index ranges per rank.
  std::vector<std::size_t> rank_begin(static_cast<std::size_t>(k) + 1, 0);
  for (int r = 1; r <= k; ++r)
    rank_begin[r] = rank_begin[r - 1] + static_cast<std::size_t>(profile.counts[r - 1]);

  std::vector<RunningStat> e1(fractions.size()), e2(fractions.size()), diff(fractions.size());
  std::vector<long long> fallbacks(fractions.size(), 0);

  for (long long rep = 0; rep < n_reps; ++rep) {
    const OutcomeDataset data = sample_outcomes(
        model, assignment, 0, derive_seed(seed, kReplicationStream, static_cast<std::uint64_t>(rep)));

    const double scenario1 = ht_over(data.records, rank_begin[0], rank_begin[1]);
    const double err1 = (scenario1 - tau_true) * (scenario1 - tau_true);

    for (std::size_t fi = 0; fi < fractions.size(); ++fi) {
      const std::vector<int>& sizes = split_sizes[fi];
      const int total_split = std::accumulate(sizes.begin(), sizes.end(), 0);

      double scenario2;
      if (total_split == 0) {
        scenario2 = scenario1;  // nothing to split: degenerates to scenario 1
      } else {
        bool fell_back = false;
        std::vector<std::pair<double, double>> components;
        // Rank-1 remainder goes in directly (alpha_1 = 1).
        const std::size_t n1_rem = static_cast<std::size_t>(n_1 - total_split);
        if (n1_rem >= 1) {
          const double est = ht_over(data.records, rank_begin[0] + total_split, rank_begin[1]);
          components.emplace_back(
              est, ht_variance_upper_bound(static_cast<int>(n1_rem), model.noise_sd,
                                           model.q_floor, y_max));
        }
        std::size_t rank1_offset = rank_begin[0];
        for (int r = 2; r <= k; ++r) {
          const int n_prime = sizes[r - 1];
          if (n_prime == 0) continue;
          const double tau_r_split =
              ht_over(data.records, rank_begin[r - 1], rank_begin[r - 1] + n_prime);
          const double tau_1_split = ht_over(data.records, rank1_offset, rank1_offset + n_prime);
          rank1_offset += static_cast<std::size_t>(n_prime);
          const int n_r_rem = profile.counts[r - 1] - n_prime;
          if (std::abs(tau_1_split) < 1e-12 || n_r_rem < 1) {
            fell_back = true;
            continue;  // discount ratio undefined or no data left at this rank
          }
          const double alpha_hat = tau_r_split / tau_1_split;
          if (std::abs(alpha_hat) < 1e-12) {
            fell_back = true;
            continue;
          }
          const double est =
              ht_over(data.records, rank_begin[r - 1] + n_prime, rank_begin[r]) / alpha_hat;
          components.emplace_back(
              est, ht_variance_upper_bound(n_r_rem, model.noise_sd, model.q_floor, y_max) /
                       (alpha_hat * alpha_hat));
        }
        if (fell_back) ++fallbacks[fi];
        if (components.empty()) {
          scenario2 = scenario1;  // every component dropped; counted above
        } else {
          scenario2 = inverse_variance_combine(components).estimate;
        }
      }
      const double err2 = (scenario2 - tau_true) * (scenario2 - tau_true);
      e1[fi].add(err1);
      e2[fi].add(err2);
      diff[fi].add(err2 - err1);
    }
  }

  std::vector<SplitCompareResult> out;
  for (std::size_t fi = 0; fi < fractions.size(); ++fi) {
    SplitCompareResult res;
    res.fraction = fractions[fi];
    res.mse_scenario1 = e1[fi].mean();
    res.mse_scenario2 = e2[fi].mean();
    res.se_scenario1 = e1[fi].std_error();
    res.se_scenario2 = e2[fi].std_error();
    res.se_diff = diff[fi].std_error();
    res.n_reps = n_reps;
    res.alpha_fallbacks = fallbacks[fi];
    out.push_back(res);
  }
  return out;
}

}  // namespace bidrank
