#include "bidrank/utility.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace bidrank {

namespace {

void check_reps(long long n_reps) {
  if (n_reps < 1) throw ValidationError("monte carlo: n_reps must be >= 1");
}

double slot_value_exact(std::span<const int> column, int admin, const GameConfig& cfg) {
  const auto probs = exact_rank_win_probabilities(column, cfg);
  double v = 0.0;
  for (int r = 0; r < cfg.n_admins; ++r)
    v += cfg.discounts[r] * cfg.discounts[r] * probs[admin][r];
  return v;
}

}  // namespace

UtilityEstimate exact_sv_utility(const BidMatrix& bids, int admin, const GameConfig& cfg) {
  bids.validate(cfg);
  std::vector<int> column(static_cast<std::size_t>(cfg.n_admins));
  double total = 0.0;
  for (int t = 0; t < cfg.n_slots; ++t) {
    for (int a = 0; a < cfg.n_admins; ++a) column[a] = bids.at(a, t);
    total += slot_value_exact(column, admin, cfg);
  }
  return {total, 0.0, 0, ObjectiveKind::sample_value};
}

namespace {

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

double binomial(int n, int m) {
  if (m < 0 || m > n) return 0.0;
  double b = 1.0;
  for (int i = 1; i <= m; ++i) b = b * (n - m + i) / i;
  return b;
}

// Transcription of the printed per-slot closed form (see header).
double slot_value_printed(std::span<const double> pa, int admin, const GameConfig& cfg) {
  const int k = cfg.n_admins;
  std::vector<int> others;
  for (int a = 0; a < k; ++a)
    if (a != admin) others.push_back(a);

  std::vector<double> g(static_cast<std::size_t>(k), 0.0);
  for (int r = 1; r <= k; ++r) {
    const int subset_size = k - r;
    double c_sum = 0.0;
    // Enumerate size-(k-r) subsets of the other admins via a selection mask.
    std::vector<int> select(others.size(), 0);
    std::fill(select.begin(), select.begin() + subset_size, 1);
    std::sort(select.begin(), select.end());  // ascending: lexicographic subset walk
    do {
      std::vector<int> group;
      for (std::size_t i = 0; i < others.size(); ++i)
        if (select[i]) group.push_back(others[i]);
      group.push_back(admin);
      std::sort(group.begin(), group.end());
      do {
        double prod = 1.0;
        for (int member : group) {
          if (member == admin) break;
          prod *= 1.0 - pa[member];
        }
        c_sum += prod;
      } while (std::next_permutation(group.begin(), group.end()));
    } while (std::next_permutation(select.begin(), select.end()));

    const double c_r = c_sum / binomial(k - 1, subset_size) / factorial(subset_size + 1);
    g[r - 1] = pa[admin] * c_r;
  }

  double value = 0.0;
  double survive = 1.0;  // prod_{rr < r} (1 - g_rr)
  for (int r = 1; r <= k; ++r) {
    value += cfg.discounts[r - 1] * cfg.discounts[r - 1] * g[r - 1] * survive;
    survive *= 1.0 - g[r - 1];
  }
  return value;
}

}  // namespace

UtilityEstimate printed_formula_sv_utility(const BidMatrix& bids, int admin,
                                           const GameConfig& cfg) {
  bids.validate(cfg);
  if (cfg.n_admins > kEnumerationLimit)
    throw GuardError("enumeration_limit",
                     "printed-formula utility supports at most " +
                         std::to_string(kEnumerationLimit) + " admins");
  std::vector<double> pa(static_cast<std::size_t>(cfg.n_admins));
  double total = 0.0;
  for (int t = 0; t < cfg.n_slots; ++t) {
    for (int a = 0; a < cfg.n_admins; ++a)
      pa[a] = activation_probability(bids.at(a, t), cfg.relevance);
    if (pa[admin] > 0.0) total += slot_value_printed(pa, admin, cfg);
  }
  return {total, 0.0, 0, ObjectiveKind::sample_value};
}

UtilityEstimate mc_sv_utility(const BidMatrix& bids, int admin, const GameConfig& cfg,
                              long long n_reps, std::uint64_t seed) {
  check_reps(n_reps);
  AllocationSampler sampler(bids, cfg);
  AllocationScratch scratch;
  SampleProfile profile;
  RunningStat stat;
  for (long long i = 0; i < n_reps; ++i) {
    const std::uint64_t rep_seed = derive_seed(seed, kReplicationStream, static_cast<std::uint64_t>(i));
    sampler.sample_profile_of(admin, rep_seed, profile, scratch);
    stat.add(sample_value(profile, cfg.discounts));
  }
  return {stat.mean(), stat.std_error(), n_reps, ObjectiveKind::sample_value};
}

UtilityEstimate mc_mse_utility(const BidMatrix& bids, int admin, const GameConfig& cfg,
                               long long n_reps, std::uint64_t seed) {
  check_reps(n_reps);
  AllocationSampler sampler(bids, cfg);
  AllocationScratch scratch;
  SampleProfile profile;
  RunningStat stat;
  for (long long i = 0; i < n_reps; ++i) {
    const std::uint64_t rep_seed = derive_seed(seed, kReplicationStream, static_cast<std::uint64_t>(i));
    sampler.sample_profile_of(admin, rep_seed, profile, scratch);
    const double s = sample_value(profile, cfg.discounts);
    stat.add(s > 0.0 ? std::min(1.0 / s, 1.0) : 1.0);
  }
  return {-stat.mean(), stat.std_error(), n_reps, ObjectiveKind::estimation_error};
}

JensenGap jensen_gap(const BidMatrix& bids, int admin, const GameConfig& cfg,
                     long long n_reps, std::uint64_t seed, double max_zero_fraction) {
  check_reps(n_reps);
  AllocationSampler sampler(bids, cfg);
  AllocationScratch scratch;
  SampleProfile profile;
  RunningStat inv_stat, s_stat;
  long long zeros = 0;
  for (long long i = 0; i < n_reps; ++i) {
    const std::uint64_t rep_seed = derive_seed(seed, kReplicationStream, static_cast<std::uint64_t>(i));
    sampler.sample_profile_of(admin, rep_seed, profile, scratch);
    const double s = sample_value(profile, cfg.discounts);
    if (s == 0.0) {
      ++zeros;
      continue;
    }
    inv_stat.add(1.0 / s);
    s_stat.add(s);
  }

  JensenGap gap;
  gap.zero_fraction = static_cast<double>(zeros) / static_cast<double>(n_reps);
  gap.n_used = inv_stat.count();
  if (gap.zero_fraction > max_zero_fraction || gap.n_used == 0)
    throw ValidationError("jensen_gap: S=0 fraction " + std::to_string(gap.zero_fraction) +
                          " exceeds threshold " + std::to_string(max_zero_fraction));
  gap.lhs = -inv_stat.mean();
  gap.lhs_se = inv_stat.std_error();
  gap.rhs = -1.0 / s_stat.mean();
  gap.rhs_se = s_stat.std_error() / (s_stat.mean() * s_stat.mean());
  return gap;
}

}  // namespace bidrank
