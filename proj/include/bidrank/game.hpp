#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bidrank/errors.hpp"
#include "bidrank/rng.hpp"

namespace bidrank {

// Exhaustive rank-win enumeration is limited to this many admins; beyond it only
// Monte Carlo estimates are available.
inline constexpr int kEnumerationLimit = 6;

// Game parameters: n subject slots, k admins, a shared relevance probability,
// per-rank discount factors (alpha_1 = 1, alpha_r in (0,1) for r >= 2), integer
// budgets and a per-slot bid cap.
struct GameConfig {
  int n_slots = 0;
  int n_admins = 0;
  double relevance = 0.0;
  std::vector<double> discounts;
  std::vector<int> budgets;
  int max_bid = 1;

  void validate() const;
};

// Nonnegative integer bids, one row per admin, one column per subject slot.
class BidMatrix {
 public:
  BidMatrix() = default;
  BidMatrix(int n_admins, int n_slots)
      : n_admins_(n_admins), n_slots_(n_slots),
        x_(static_cast<std::size_t>(n_admins) * n_slots, 0) {}

  static BidMatrix from_rows(const std::vector<std::vector<int>>& rows);

  int n_admins() const { return n_admins_; }
  int n_slots() const { return n_slots_; }

  int at(int admin, int slot) const { return x_[idx(admin, slot)]; }
  int& at(int admin, int slot) { return x_[idx(admin, slot)]; }

  std::span<const int> row(int admin) const {
    return {x_.data() + idx(admin, 0), static_cast<std::size_t>(n_slots_)};
  }
  void set_row(int admin, std::span<const int> bids);

  int spend(int admin) const;

  // Checks entry bounds and budget feasibility against the config.
  void validate(const GameConfig& cfg) const;

  bool operator==(const BidMatrix& other) const = default;

 private:
  std::size_t idx(int admin, int slot) const {
    return static_cast<std::size_t>(admin) * n_slots_ + slot;
  }

  int n_admins_ = 0;
  int n_slots_ = 0;
  std::vector<int> x_;
};

inline constexpr int kNoRank = 0;

// Realized ranks per (admin, slot); kNoRank means the admin won nothing there.
// In the game the rank range equals the admin count; standalone causal fixtures
// may carry more ranks than admins.
class RankAssignment {
 public:
  RankAssignment() = default;
  RankAssignment(int n_admins, int n_slots, int n_ranks = 0)
      : n_admins_(n_admins), n_slots_(n_slots),
        n_ranks_(n_ranks > 0 ? n_ranks : n_admins),
        r_(static_cast<std::size_t>(n_admins) * n_slots, kNoRank) {}

  int n_admins() const { return n_admins_; }
  int n_slots() const { return n_slots_; }
  int n_ranks() const { return n_ranks_; }

  int rank(int admin, int slot) const { return r_[idx(admin, slot)]; }
  void set_rank(int admin, int slot, int rank) { r_[idx(admin, slot)] = static_cast<std::uint8_t>(rank); }
  void clear() { std::fill(r_.begin(), r_.end(), std::uint8_t{kNoRank}); }

  bool operator==(const RankAssignment& other) const = default;

 private:
  std::size_t idx(int admin, int slot) const {
    return static_cast<std::size_t>(admin) * n_slots_ + slot;
  }

  int n_admins_ = 0;
  int n_slots_ = 0;
  int n_ranks_ = 0;
  std::vector<std::uint8_t> r_;
};

// Counts of slots won at each rank by one admin.
struct SampleProfile {
  std::vector<int> counts;  // counts[r-1] = number of slots at rank r

  int total() const;
};

// Probability that a single bid unit count activates at one rank attempt:
// 1 - (1 - p)^bid. Zero bid never activates.
double activation_probability(int bid, double p);

// Per-slot exact win probabilities for one bid column: out[a][r-1] is the
// probability that admin a ends up at rank r. Rows sum to <= 1; the residual is
// the probability of winning nothing. Exact enumeration over the sequential
// rank-allocation process; guarded by kEnumerationLimit.
std::vector<std::vector<double>> exact_rank_win_probabilities(
    std::span<const int> column_bids, const GameConfig& cfg);

// Scratch buffers reused across sampling calls so hot loops stay allocation-free.
struct AllocationScratch {
  std::vector<int> candidates;
  std::vector<std::uint8_t> column;
};

// Samples realized rank assignments for a fixed bid matrix. Each slot runs the
// sequential process independently on its own RNG stream derive_seed(seed,
// kSlotStream, slot): for rank r = 1..k, the admins still unranked on the slot
// (zero bidders excluded, they can never activate) are tried in a fresh uniform
// random order; the first activation takes the rank, an unwon rank is skipped.
class AllocationSampler {
 public:
  AllocationSampler(const BidMatrix& bids, const GameConfig& cfg);

  // Full assignment for all admins; deterministic in (bids, cfg, seed).
  void sample(std::uint64_t seed, RankAssignment& out, AllocationScratch& scratch) const;

  // Sample profile of a single admin. Only the admin's positive-bid slots are
  // simulated; with per-slot streams this is bit-identical to sampling the full
  // assignment and counting.
  void sample_profile_of(int admin, std::uint64_t seed, SampleProfile& out,
                         AllocationScratch& scratch) const;

  int n_admins() const { return n_admins_; }
  int n_slots() const { return n_slots_; }

 private:
  // Runs one slot; column must hold n_admins entries preset to kNoRank.
  void run_slot(int slot, std::uint64_t seed, std::uint8_t* column,
                std::vector<int>& candidates) const;

  int n_admins_ = 0;
  int n_slots_ = 0;
  std::vector<double> pa_;            // activation probability per (admin, slot)
  std::vector<std::vector<int>> bidders_;    // per slot: admins with positive bid
  std::vector<std::vector<int>> own_slots_;  // per admin: slots with positive bid
};

// One draw of the full allocation process.
RankAssignment allocate_ranks(const BidMatrix& bids, const GameConfig& cfg,
                              std::uint64_t seed);

SampleProfile sample_profile(const RankAssignment& assignment, int admin);

// Weighted sample count sum_r counts[r] * discounts[r]^2.
double sample_value(const SampleProfile& profile, std::span<const double> discounts);

}  // namespace bidrank
