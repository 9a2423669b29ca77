#pragma once

#include <cstdint>

#include "bidrank/game.hpp"

namespace bidrank {

enum class ObjectiveKind { sample_value, estimation_error };

struct UtilityEstimate {
  double value = 0.0;
  double std_error = 0.0;     // 0 for exact computations
  long long n_replications = 0;  // 0 for exact computations
  ObjectiveKind kind = ObjectiveKind::sample_value;
};

// Expected sample value for one admin, exact by linearity: per slot,
// sum_r alpha_r^2 * P(admin wins rank r) from the enumeration oracle.
UtilityEstimate exact_sv_utility(const BidMatrix& bids, int admin, const GameConfig& cfg);

// The closed-form expected sample value as printed in the source analysis, kept as a
// cross-check artifact: per rank, g_{r} = PA_a * C_r with
//   C_r = 1/C(k-1, k-r) * 1/(k-r+1)! * sum over size-(k-r) subsets s of the other
//         admins, sum over permutations of s+{a}, of prod_{j before a}(1 - PA_j),
// and the slot value sum_r alpha_r^2 g_r prod_{rr<r}(1 - g_rr). This expression
// assumes exactly r-1 opponents are gone by rank r, so it deviates from the exact
// process on contested slots; exact_sv_utility is authoritative.
UtilityEstimate printed_formula_sv_utility(const BidMatrix& bids, int admin,
                                           const GameConfig& cfg);

// Monte Carlo mean of the sample value over independent allocation draws.
// Replication i runs on stream derive_seed(seed, kReplicationStream, i).
UtilityEstimate mc_sv_utility(const BidMatrix& bids, int admin, const GameConfig& cfg,
                              long long n_reps, std::uint64_t seed);

// Monte Carlo estimation-error objective: -mean of min(1/S, 1), with the S = 0
// draws capped at 1 (the constant estimator keeps the error at 1). Values lie in
// [-1, 0].
UtilityEstimate mc_mse_utility(const BidMatrix& bids, int admin, const GameConfig& cfg,
                               long long n_reps, std::uint64_t seed);

// Monte Carlo check of the convexity relation -E[1/S] <= -1/E[S] on the uncapped
// functional. Replications with S = 0 are excluded from both moments (both sides
// are computed on the same conditioned sample) and their fraction is reported;
// refuses when that fraction exceeds max_zero_fraction.
struct JensenGap {
  double lhs = 0.0;      // -E[1/S | S > 0]
  double rhs = 0.0;      // -1/E[S | S > 0]
  double lhs_se = 0.0;
  double rhs_se = 0.0;   // delta method
  double zero_fraction = 0.0;
  long long n_used = 0;
};

JensenGap jensen_gap(const BidMatrix& bids, int admin, const GameConfig& cfg,
                     long long n_reps, std::uint64_t seed,
                     double max_zero_fraction = 0.95);

}  // namespace bidrank
