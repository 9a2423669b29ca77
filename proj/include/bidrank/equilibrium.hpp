#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "bidrank/game.hpp"
#include "bidrank/utility.hpp"

namespace bidrank {

inline constexpr std::uint64_t kStrategySpaceGuard = 1000000;       // per-admin deviations
inline constexpr std::uint64_t kJointProfileGuard = 10000000;       // full enumeration
inline constexpr double kExactGainTolerance = 1e-9;

// All integer bid vectors of length n_slots with entries in [0, max_bid] and total
// spend <= budget (== budget when include_underspending is false).
class StrategySpace {
 public:
  StrategySpace(int n_slots, int budget, int max_bid, bool include_underspending);

  std::uint64_t count() const;

  // Visits strategies in lexicographic order (slot 0 varies slowest).
  void for_each(const std::function<void(std::span<const int>)>& fn) const;

  int n_slots() const { return n_slots_; }
  int budget() const { return budget_; }
  int max_bid() const { return max_bid_; }
  bool include_underspending() const { return include_underspending_; }

 private:
  int n_slots_;
  int budget_;
  int max_bid_;
  bool include_underspending_;
};

// The closed-form equilibrium family: 0/1 bids, budgets spent exactly, and column
// loads balanced to within one unit. Built greedily, admins in order, each placing
// single units on the currently least-loaded slots (ties to the lowest index).
BidMatrix build_canonical_equilibrium(const GameConfig& cfg);

struct LemmaCheck {
  bool ok = false;
  std::vector<std::string> violations;
};

// True iff all entries are 0/1, every row spends its full budget, and all column
// sums pairwise differ by at most 1.
LemmaCheck check_lemma_conditions(const BidMatrix& bids, const GameConfig& cfg);

enum class Objective { exact_sv, mc_mse };

struct ObjectiveOptions {
  long long n_reps = 10000;      // mc_mse only
  std::uint64_t seed = kDefaultSeed;
};

struct BestResponse {
  std::vector<int> strategy;   // argmax (the incumbent when nothing strictly improves)
  double gain = 0.0;           // utility(argmax) - utility(incumbent)
  double gain_se = 0.0;        // 0 for the exact objective
  double utility_incumbent = 0.0;
  double utility_best = 0.0;
};

// Exhaustive best response over the admin's strategy space (under-spending
// strategies included), holding the other rows fixed. Ties break toward the
// incumbent, then lexicographically.
BestResponse best_response(const BidMatrix& bids, int admin, const GameConfig& cfg,
                           Objective objective, const ObjectiveOptions& opts = {});

struct NashReport {
  bool is_equilibrium = false;
  struct AdminDeviation {
    int admin = 0;
    std::vector<int> strategy;
    double gain = 0.0;
    double gain_se = 0.0;
  };
  std::vector<AdminDeviation> deviations;  // one per admin: their best deviation
  double eps_hat = 0.0;                    // populated by approx_nash_audit only
  double eta_hat = 0.0;
};

// Runs best_response for every admin. Equilibrium iff every gain is within
// tolerance: kExactGainTolerance for the exact objective, 3 combined std errors
// for the Monte Carlo objective.
NashReport verify_pure_nash(const BidMatrix& bids, const GameConfig& cfg,
                            Objective objective, const ObjectiveOptions& opts = {});

// Full cross-product enumeration of joint profiles; returns every profile passing
// verify_pure_nash under the exact sample-value objective.
std::vector<BidMatrix> enumerate_pure_nash(const GameConfig& cfg);

struct ApproxNashReport {
  double epsilon = 0.0;     // the multiplicative slack audited against
  double eta_hat = 0.0;     // max(0, sup_gap): smallest additive slack that works
  double sup_gap = 0.0;     // max over admins/deviations of (1+eps)f(dev) - f(incumbent)
  double sup_gap_se = 0.0;  // combined MC std error at the argmax pair
  int worst_admin = 0;
  std::vector<int> worst_deviation;
  double f_incumbent = 0.0;       // estimation-error utility at the audited profile
  double f_worst_deviation = 0.0;
  long long n_deviations = 0;
};

// Audits how close a profile is to equilibrium under the estimation-error
// objective: for every admin and every deviation, estimates the objective by
// Monte Carlo and reports the smallest eta such that
//   f_a(x) >= (1+epsilon) f_a(x_a', x_-a) - eta  for all a, x_a'.
// epsilon <= 0 selects the default k / sqrt(min_a B_a).
ApproxNashReport approx_nash_audit(const BidMatrix& bids, const GameConfig& cfg,
                                   long long n_reps, std::uint64_t seed,
                                   double epsilon = 0.0);

struct ConcentrationResult {
  double empirical_tail = 0.0;  // P(|S - E[S]| >= eps * E[S]) over the replications
  double tail_se = 0.0;         // binomial std error
  double bound = 0.0;           // 2 exp(-2 (eps E[S])^2 / m)
  double expected_s = 0.0;      // exact E[S]
  int m = 0;                    // slots carrying a positive own bid
  long long n_reps = 0;
};

// Bounded-differences tail check for one admin's sample value. Requires every
// admin to spend their full budget.
ConcentrationResult concentration_check(const BidMatrix& bids, const GameConfig& cfg,
                                        int admin, long long n_reps, std::uint64_t seed,
                                        double epsilon);

struct ExpectedSvBound {
  int admin = 0;
  double expected_s = 0.0;
  double lower_bound = 0.0;  // B_a * p / k
  bool ok = false;
};

// Exact E[S] >= B_a p / k for every admin; requires the closed-form equilibrium
// conditions to hold.
std::vector<ExpectedSvBound> expected_sv_lower_bound_check(const BidMatrix& bids,
                                                           const GameConfig& cfg);

}  // namespace bidrank
