#include <doctest.h>

#include <cmath>

#include "bidrank/causal.hpp"

using namespace bidrank;

namespace {

OutcomesModel simple_model(int n, std::vector<double> alpha, double tau, double sigma,
                           double q, double baseline = 0.0, double spread = 0.0) {
  ModelParams params;
  params.n_slots = n;
  params.discounts = std::move(alpha);
  params.tau = tau;
  params.sigma = sigma;
  params.q = q;
  params.baseline = baseline;
  params.heterogeneity = spread;
  return make_outcomes_model(params);
}

OutcomeDataset manual_dataset(const std::vector<OutcomeRecord>& records) {
  OutcomeDataset data;
  data.records = records;
  return data;
}

}  // namespace

TEST_CASE("model generator keeps the position-effect structure exactly") {
  const OutcomesModel model = simple_model(5, {1.0, 0.5}, 0.6, 1.0, 0.3, 0.1, 0.3);
  double delta_sum = 0.0;
  for (int i = 0; i < 5; ++i) {
    CHECK(model.effect[i][1] == doctest::Approx(0.5 * model.effect[i][0]).epsilon(1e-12));
    delta_sum += model.effect[i][0] - 0.6;
    CHECK(std::abs(model.effect[i][0]) <= 1.0);
  }
  CHECK(delta_sum == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("model generator rejects effects outside the bounded region") {
  CHECK_THROWS_AS(simple_model(3, {1.0, 0.5}, 0.9, 1.0, 0.3, 0.0, 0.2), ValidationError);
  CHECK_THROWS_AS(simple_model(3, {1.0, 0.5}, 0.5, 1.0, 0.7), ValidationError);
  CHECK_THROWS_AS(simple_model(3, {0.9, 0.5}, 0.5, 1.0, 0.5), ValidationError);
}

TEST_CASE("sample_outcomes: noiseless outcomes are the structural values") {
  const OutcomesModel model = simple_model(4, {1.0, 0.5}, 0.5, 0.0, 0.5);
  SampleProfile profile;
  profile.counts = {2, 2};
  const RankAssignment assignment = assignment_from_profile(profile);
  const OutcomeDataset data = sample_outcomes(model, assignment, 0, 31);
  REQUIRE(data.records.size() == 4);
  for (const auto& rec : data.records) {
    const double effect = rec.rank == 1 ? 0.5 : 0.25;
    CHECK(rec.outcome == doctest::Approx(rec.treated ? effect : 0.0).epsilon(1e-12));
    CHECK(rec.q == 0.5);
  }
}

TEST_CASE("sample_outcomes: treated fraction approaches q") {
  const OutcomesModel model = simple_model(2000, {1.0}, 0.5, 0.0, 0.3);
  SampleProfile profile;
  profile.counts = {2000};
  const OutcomeDataset data = sample_outcomes(model, assignment_from_profile(profile), 0, 32);
  long treated = 0;
  for (const auto& rec : data.records) treated += rec.treated;
  const double frac = static_cast<double>(treated) / 2000.0;
  CHECK(std::abs(frac - 0.3) <= 4.0 * std::sqrt(0.3 * 0.7 / 2000.0));
}

TEST_CASE("sample_outcomes: treated mean at a rank approaches baseline plus effect") {
  const int n = 4000;
  const OutcomesModel model = simple_model(n, {1.0, 0.5}, 0.8, 1.0, 0.5, 0.3);
  SampleProfile profile;
  profile.counts = {0, n};
  const OutcomeDataset data = sample_outcomes(model, assignment_from_profile(profile), 0, 33);
  RunningStat treated;
  for (const auto& rec : data.records)
    if (rec.treated) treated.add(rec.outcome);
  CHECK(std::abs(treated.mean() - (0.3 + 0.4)) <= 4.0 * treated.std_error());
}

TEST_CASE("sample_outcomes is deterministic in the seed") {
  const OutcomesModel model = simple_model(6, {1.0, 0.5}, 0.5, 1.0, 0.4);
  SampleProfile profile;
  profile.counts = {3, 3};
  const RankAssignment assignment = assignment_from_profile(profile);
  const OutcomeDataset a = sample_outcomes(model, assignment, 0, 34);
  const OutcomeDataset b = sample_outcomes(model, assignment, 0, 34);
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].outcome == b.records[i].outcome);
    CHECK(a.records[i].treated == b.records[i].treated);
  }
}

TEST_CASE("ht_estimate_rank evaluates the inverse-propensity difference") {
  const OutcomeDataset data = manual_dataset({{0, 1, 1, 2.0, 0.5}, {1, 1, 0, 1.0, 0.5}});
  CHECK(ht_estimate_rank(data, 1).estimate == doctest::Approx(1.0).epsilon(1e-12));

  const OutcomeDataset zeros = manual_dataset({{0, 1, 1, 0.0, 0.5}, {1, 1, 0, 0.0, 0.5}});
  CHECK(ht_estimate_rank(zeros, 1).estimate == 0.0);

  CHECK_THROWS_WITH_AS(ht_estimate_rank(data, 2).estimate,
                       "ht_estimate_rank: no data at rank 2", ValidationError);
}

TEST_CASE("ht_estimate_rank is unbiased over replications") {
  const int n_r = 5;
  const OutcomesModel model = simple_model(n_r, {1.0}, 0.8, 0.5, 0.2, 0.3);
  SampleProfile profile;
  profile.counts = {n_r};
  const RankAssignment assignment = assignment_from_profile(profile);
  const double tau_r = realized_tau_r(model, assignment, 0, 1);
  RunningStat stat;
  for (int i = 0; i < 20000; ++i) {
    const OutcomeDataset data =
        sample_outcomes(model, assignment, 0, derive_seed(35, 0, static_cast<std::uint64_t>(i)));
    stat.add(ht_estimate_rank(data, 1).estimate);
  }
  CHECK(std::abs(stat.mean() - tau_r) <= 4.0 * stat.std_error());
}

TEST_CASE("r_estimand rescales and guards the denominator") {
  CHECK(r_estimand(0.3, 0.5) == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(r_estimand(0.37, 1.0) == doctest::Approx(0.37).epsilon(1e-12));
  CHECK_THROWS_AS(r_estimand(0.3, 0.0), ValidationError);
  CHECK_THROWS_AS(r_estimand(0.3, -0.5), ValidationError);
}

TEST_CASE("identified-estimate variance scales by the inverse squared discount") {
  // tau^(r) = tau_r / alpha is a deterministic rescaling, so the sample-variance
  // ratio equals 1/alpha^2 exactly.
  const double alpha = 0.5;
  const OutcomesModel model = simple_model(10, {1.0, alpha}, 0.6, 1.0, 0.5);
  SampleProfile profile;
  profile.counts = {0, 10};
  const RankAssignment assignment = assignment_from_profile(profile);
  RunningStat raw, identified;
  for (int i = 0; i < 4000; ++i) {
    const OutcomeDataset data =
        sample_outcomes(model, assignment, 0, derive_seed(36, 0, static_cast<std::uint64_t>(i)));
    const double tau_r = ht_estimate_rank(data, 2).estimate;
    raw.add(tau_r);
    identified.add(r_estimand(tau_r, alpha));
  }
  CHECK(identified.variance() ==
        doctest::Approx(raw.variance() / (alpha * alpha)).epsilon(1e-9));
}

TEST_CASE("inverse variance combination: weights, variance, passthrough") {
  const WeightedEstimate even = inverse_variance_combine({{1.0, 1.0}, {3.0, 1.0}});
  CHECK(even.weights[0] == doctest::Approx(0.5));
  CHECK(even.weights[1] == doctest::Approx(0.5));
  CHECK(even.estimate == doctest::Approx(2.0));

  const WeightedEstimate uneven = inverse_variance_combine({{1.0, 1.0}, {2.0, 3.0}});
  CHECK(uneven.weights[0] == doctest::Approx(0.75));
  CHECK(uneven.weights[1] == doctest::Approx(0.25));
  CHECK(uneven.variance == doctest::Approx(0.75));

  const WeightedEstimate single = inverse_variance_combine({{1.7, 2.0}});
  CHECK(single.estimate == doctest::Approx(1.7));
  CHECK(single.weights[0] == doctest::Approx(1.0));

  CHECK_THROWS_AS(inverse_variance_combine({}), ValidationError);
  CHECK_THROWS_AS(inverse_variance_combine({{1.0, 0.0}}), ValidationError);
}

TEST_CASE("inverse variance combination is optimal for independent unbiased inputs") {
  // Independent-oracle check: two normal estimators with known variances 1 and 3;
  // the combined mean-squared error should match 1/(1/1 + 1/3) = 0.75 and beat
  // both single estimators.
  Rng rng(37);
  RunningStat combined, first, second;
  for (int i = 0; i < 50000; ++i) {
    const double a = rng.normal();
    const double b = std::sqrt(3.0) * rng.normal();
    const WeightedEstimate w = inverse_variance_combine({{a, 1.0}, {b, 3.0}});
    combined.add(w.estimate * w.estimate);
    first.add(a * a);
    second.add(b * b);
  }
  CHECK(std::abs(combined.mean() - 0.75) <= 4.0 * combined.std_error());
  CHECK(combined.mean() < first.mean());
  CHECK(combined.mean() < second.mean());
}

TEST_CASE("ht variance bound closed form") {
  CHECK(ht_variance_upper_bound(1, 1.0, 0.5, 0.0) == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(ht_variance_upper_bound(2, 1.0, 0.5, 0.0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(ht_variance_upper_bound(1, 0.0, 0.25, 1.0) ==
        doctest::Approx(((0.75 * 0.75 + 0.0625) / 0.1875 + 2.0)).epsilon(1e-12));
  CHECK_THROWS_AS(ht_variance_upper_bound(0, 1.0, 0.5, 0.0), ValidationError);
  CHECK_THROWS_AS(ht_variance_upper_bound(1, 1.0, 0.7, 0.0), ValidationError);
}

TEST_CASE("minimax floor evaluates and caps") {
  SampleProfile profile;
  profile.counts = {8, 0};
  const std::vector<double> alpha = {1.0, 0.5};
  CHECK(minimax_lower_bound(profile, alpha, 2.0, 0.5) == doctest::Approx(0.0625).epsilon(1e-12));

  profile.counts = {0, 1};  // S = 0.25 caps the floor at 1
  CHECK(minimax_lower_bound(profile, alpha, 2.0, 0.5) == 1.0);

  profile.counts = {0, 0};
  CHECK(minimax_lower_bound(profile, alpha, 2.0, 0.5) == 1.0);

  profile.counts = {2000000, 0};
  CHECK(minimax_lower_bound(profile, alpha, 2.0, 0.5) < 1e-6);
}

TEST_CASE("pipeline reduces to the rank-1 estimate on single-rank data") {
  const OutcomesModel model = simple_model(6, {1.0, 0.5}, 0.5, 1.0, 0.5);
  SampleProfile profile;
  profile.counts = {6, 0};
  const OutcomeDataset data = sample_outcomes(model, assignment_from_profile(profile), 0, 38);
  const EstimateReport report = estimate_tau_pipeline(data, model);
  CHECK(report.estimate == doctest::Approx(ht_estimate_rank(data, 1).estimate).epsilon(1e-12));
  CHECK(report.n_used == std::vector<int>{6, 0});
  REQUIRE(report.minimax_lower.has_value());
}

TEST_CASE("pipeline recovers tau exactly on balanced noiseless data") {
  // Noiseless outcomes with equally many treated and control at each rank keep the
  // inverse-propensity estimator exact; the combination then returns tau itself.
  const OutcomesModel model = simple_model(8, {1.0, 0.5}, 0.5, 0.0, 0.5);
  std::vector<OutcomeRecord> records;
  for (int i = 0; i < 4; ++i)
    records.push_back({i, 1, i % 2, (i % 2) ? 0.5 : 0.0, 0.5});
  for (int i = 4; i < 8; ++i)
    records.push_back({i, 2, i % 2, (i % 2) ? 0.25 : 0.0, 0.5});
  const EstimateReport report = estimate_tau_pipeline(manual_dataset(records), model);
  CHECK(report.estimate == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("pipeline refuses empty datasets") {
  const OutcomesModel model = simple_model(4, {1.0, 0.5}, 0.5, 1.0, 0.5);
  CHECK_THROWS_AS(estimate_tau_pipeline(OutcomeDataset{}, model), ValidationError);
}

TEST_CASE("naive alpha estimate: exact on balanced noiseless splits") {
  // Rank-2 and rank-1 splits built so the inverse-propensity estimates are exactly
  // 0.4 and 0.8, giving the true ratio 0.5.
  const OutcomeDataset split_r = manual_dataset({{0, 2, 1, 0.4, 0.5}, {1, 2, 0, 0.0, 0.5}});
  const OutcomeDataset split_1 = manual_dataset({{2, 1, 1, 0.8, 0.5}, {3, 1, 0, 0.0, 0.5}});
  CHECK(naive_alpha_estimate(split_r, 2, split_1) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK_THROWS_AS(naive_alpha_estimate(OutcomeDataset{}, 2, split_1), ValidationError);
  const OutcomeDataset null_1 = manual_dataset({{2, 1, 1, 0.0, 0.5}, {3, 1, 0, 0.0, 0.5}});
  CHECK_THROWS_AS(naive_alpha_estimate(split_r, 2, null_1), ValidationError);
}

TEST_CASE("data splitting: zero fraction degenerates to scenario 1 exactly") {
  const OutcomesModel model = simple_model(30, {1.0, 0.5}, 0.8, 0.5, 0.5);
  SampleProfile profile;
  profile.counts = {10, 20};
  const auto results = data_splitting_compare(model, profile, {0.0}, 500, 39);
  REQUIRE(results.size() == 1);
  CHECK(results[0].mse_scenario1 == results[0].mse_scenario2);
  CHECK(results[0].alpha_fallbacks == 0);
}

TEST_CASE("data splitting never beats the first-rank-only estimate") {
  const OutcomesModel model = simple_model(220, {1.0, 0.5}, 0.8, 0.5, 0.5);
  SampleProfile profile;
  profile.counts = {20, 200};
  const auto results = data_splitting_compare(model, profile, {0.5}, 2000, 40);
  REQUIRE(results.size() == 1);
  CHECK(results[0].mse_scenario1 <= results[0].mse_scenario2 + 3.0 * results[0].se_diff + 1e-12);
}

TEST_CASE("heterogeneous treatment probabilities stay in range and keep HT unbiased") {
  ModelParams params;
  params.n_slots = 30;
  params.discounts = {1.0};
  params.tau = 0.6;
  params.sigma = 0.5;
  params.q = 0.2;
  params.heterogeneous_q = true;
  params.seed = 41;
  const OutcomesModel model = make_outcomes_model(params);
  bool varied = false;
  for (double q : model.treat_prob) {
    REQUIRE(q >= 0.2);
    REQUIRE(q <= 0.8);
    varied = varied || q != model.treat_prob[0];
  }
  CHECK(varied);

  SampleProfile profile;
  profile.counts = {30};
  const RankAssignment assignment = assignment_from_profile(profile);
  const double tau_r = realized_tau_r(model, assignment, 0, 1);
  RunningStat stat;
  for (int i = 0; i < 10000; ++i)
    stat.add(ht_estimate_rank(sample_outcomes(model, assignment, 0,
                                              derive_seed(42, 0, static_cast<std::uint64_t>(i))),
                              1)
                 .estimate);
  CHECK(std::abs(stat.mean() - tau_r) <= 4.0 * stat.std_error());
}

TEST_CASE("sample-variance weighting is flagged and stays near the plug-in estimate") {
  const OutcomesModel model = simple_model(20, {1.0, 0.5}, 0.6, 1.0, 0.5);
  SampleProfile profile;
  profile.counts = {10, 10};
  const OutcomeDataset data = sample_outcomes(model, assignment_from_profile(profile), 0, 43);
  const EstimateReport plugin = estimate_tau_pipeline(data, model);
  const EstimateReport sampled =
      estimate_tau_pipeline(data, model, VarianceWeighting::sample_variance);
  CHECK(!plugin.biased_weighting);
  CHECK(sampled.biased_weighting);
  CHECK(std::isfinite(sampled.estimate));
  CHECK(sampled.variance_estimate > 0.0);
}

TEST_CASE("data splitting validates its inputs") {
  const OutcomesModel model = simple_model(10, {1.0, 0.5}, 0.8, 0.5, 0.5);
  SampleProfile profile;
  profile.counts = {5, 5};
  CHECK_THROWS_AS(data_splitting_compare(model, profile, {}, 100, 1), ValidationError);
  CHECK_THROWS_AS(data_splitting_compare(model, profile, {1.5}, 100, 1), ValidationError);
  SampleProfile no_rank1;
  no_rank1.counts = {0, 5};
  CHECK_THROWS_AS(data_splitting_compare(model, no_rank1, {0.5}, 100, 1), ValidationError);
}
