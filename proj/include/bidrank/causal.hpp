#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "bidrank/game.hpp"

namespace bidrank {

// Potential-outcomes model over subject slots: Y = c0 + c1^(rank) * T + eps,
// T ~ Bernoulli(q_i), eps ~ Normal(0, sigma^2).
struct OutcomesModel {
  std::vector<double> baseline;              // c0 per slot
  std::vector<std::vector<double>> effect;   // effect[slot][rank-1] = c1^(rank)
  std::vector<double> treat_prob;            // q_i per slot, in [q_floor, 1-q_floor]
  double noise_sd = 1.0;
  double q_floor = 0.5;                      // the design constant q in (0, 0.5]
  std::vector<double> discounts;

  int n_slots() const { return static_cast<int>(baseline.size()); }
  int n_ranks() const { return static_cast<int>(discounts.size()); }
  void validate() const;

  // max_i |c0_i + c1_i^(r_i)| over the given realized ranks (kNoRank slots skipped).
  double y_max(const RankAssignment& assignment, int admin) const;
};

struct ModelParams {
  int n_slots = 0;
  std::vector<double> discounts;
  double tau = 0.5;             // first-rank effect, |tau| <= 1
  double heterogeneity = 0.0;   // effect spread; |tau| + heterogeneity <= 1
  double baseline = 0.0;
  double sigma = 1.0;
  double q = 0.5;
  bool heterogeneous_q = false; // draw q_i uniform in [q, 1-q] instead of q_i = q
  std::uint64_t seed = kDefaultSeed;  // used only for heterogeneous q
};

// Synthesizes coefficients consistent with the position-effect structure exactly:
// c1^(r)_i = alpha_r (tau + delta_i) with evenly spread, zero-sum delta.
OutcomesModel make_outcomes_model(const ModelParams& params);

struct OutcomeRecord {
  int slot = 0;
  int rank = 0;
  int treated = 0;
  double outcome = 0.0;
  double q = 0.5;  // the treatment probability used for this record
};

struct OutcomeDataset {
  std::vector<OutcomeRecord> records;

  int count_at_rank(int rank) const;
  SampleProfile profile(int n_ranks) const;
};

// A fixed single-admin assignment realizing the given rank counts: the first
// counts[0] slots sit at rank 1, the next counts[1] at rank 2, and so on.
RankAssignment assignment_from_profile(const SampleProfile& profile);

// Average first-rank effect identified by the model over the slots the admin won:
// mean of c1^(r_i) / alpha_{r_i}.
double realized_tau(const OutcomesModel& model, const RankAssignment& assignment, int admin);

// Average rank-r effect over the admin's rank-r slots: mean of c1^(r).
double realized_tau_r(const OutcomesModel& model, const RankAssignment& assignment,
                      int admin, int rank);

// Draws one outcome tuple per won slot; record i uses stream
// derive_seed(seed, kOutcomeStream, slot).
OutcomeDataset sample_outcomes(const OutcomesModel& model, const RankAssignment& assignment,
                               int admin, std::uint64_t seed);

enum class EstimandKind { tau, tau_r, r_estimand };

struct EstimateReport {
  double estimate = 0.0;
  EstimandKind target = EstimandKind::tau;
  double variance_estimate = 0.0;
  std::vector<int> n_used;  // per rank
  std::optional<double> minimax_lower;
  std::optional<double> ht_variance_upper;
  bool biased_weighting = false;  // set when data-driven weights were used
};

// Horvitz-Thompson estimate of the rank-r effect:
//   (1/n_r) sum_{i: r_i = r} [ Y_i 1{T_i=1}/q_i - Y_i 1{T_i=0}/(1-q_i) ].
EstimateReport ht_estimate_rank(const OutcomeDataset& data, int rank);

// First-rank effect identified from a rank-r estimate: tau_r / alpha_r.
double r_estimand(double tau_r_hat, double alpha_r);

// Unbiased minimum-variance combination: weights proportional to 1/variance;
// combined variance 1 / sum(1/variance).
struct WeightedEstimate {
  double estimate = 0.0;
  double variance = 0.0;
  std::vector<double> weights;
};
WeightedEstimate inverse_variance_combine(
    const std::vector<std::pair<double, double>>& estimates_and_variances);

// Closed-form upper bound on Var(tau_r_hat):
//   (1/n_r) [ sigma^2/(q(1-q)) + y_max^2 (((1-q)^2 + q^2)/(q(1-q)) + 2) ].
double ht_variance_upper_bound(int n_r, double sigma, double q, double y_max);

// Worst-case squared-error floor for a sample profile:
//   min( sigma^2 / (16 (1-q) S), 1 ) with S the sample value; 1 when S = 0.
double minimax_lower_bound(const SampleProfile& profile, std::span<const double> discounts,
                           double sigma, double q);

enum class VarianceWeighting {
  plugin_bound,     // deterministic weights from the closed-form variance bound
  sample_variance,  // data-driven weights; biased weighting, opt-in
};

// Full pipeline: per-rank Horvitz-Thompson estimates, identified to first-rank
// scale, combined with inverse-variance weights. Empty ranks are skipped. The
// report carries the minimax floor for the dataset's profile.
EstimateReport estimate_tau_pipeline(const OutcomeDataset& data, const OutcomesModel& model,
                                     VarianceWeighting weighting = VarianceWeighting::plugin_bound);

// Ratio estimator for a discount factor from two disjoint splits:
// tau_r_hat(split_r) / tau_1_hat(split_1).
double naive_alpha_estimate(const OutcomeDataset& data_split_r, int rank,
                            const OutcomeDataset& data_split_1);

struct SplitCompareResult {
  double fraction = 0.0;
  double mse_scenario1 = 0.0;  // first-rank data only
  double mse_scenario2 = 0.0;  // split, estimate discounts, run the pipeline
  double se_scenario1 = 0.0;
  double se_scenario2 = 0.0;
  double se_diff = 0.0;        // paired std error of (e2 - e1); draws are shared
  long long n_reps = 0;
  long long alpha_fallbacks = 0;  // replications where some alpha ratio was undefined
};

// Monte Carlo comparison of estimating tau from rank-1 data alone versus
// splitting data to first estimate the discount factors. For each fraction f and
// rank r >= 2, n'_r = floor(f * min(n_1/(k-1), n_r)) samples from rank r and the
// same number from rank 1 feed the ratio estimate; the remaining samples feed the
// pipeline with the estimated discounts.
std::vector<SplitCompareResult> data_splitting_compare(const OutcomesModel& model,
                                                       const SampleProfile& profile,
                                                       const std::vector<double>& fractions,
                                                       long long n_reps, std::uint64_t seed);

}  // namespace bidrank
