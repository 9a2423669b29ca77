#include "bidrank/game.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace bidrank {

void GameConfig::validate() const {
  if (n_slots < 1) throw ValidationError("config: n_subjects must be >= 1");
  if (n_admins < 1) throw ValidationError("config: n_admins must be >= 1");
  if (n_admins > 64) throw ValidationError("config: n_admins must be <= 64");
  if (!(relevance > 0.0 && relevance <= 1.0))
    throw ValidationError("config: relevance p must lie in (0,1]");
  if (static_cast<int>(discounts.size()) != n_admins)
    throw ValidationError("config: discounts must have one entry per rank (k = n_admins)");
  if (discounts[0] != 1.0)
    throw ValidationError(
        "config: discounts[1] != 1 (position-effect assumption requires alpha_1 = 1)");
  for (int r = 1; r < n_admins; ++r) {
    if (!(discounts[r] > 0.0 && discounts[r] <= 1.0))
      throw ValidationError("config: discounts[" + std::to_string(r + 1) +
                            "] must lie in (0,1] for ranks >= 2");
  }
  if (static_cast<int>(budgets.size()) != n_admins)
    throw ValidationError("config: budgets must have one entry per admin");
  for (int b : budgets)
    if (b < 0) throw ValidationError("config: budgets must be nonnegative");
  if (max_bid < 1) throw ValidationError("config: max_bid_per_slot must be >= 1");
}

BidMatrix BidMatrix::from_rows(const std::vector<std::vector<int>>& rows) {
  if (rows.empty()) throw ValidationError("bids: empty matrix");
  BidMatrix m(static_cast<int>(rows.size()), static_cast<int>(rows[0].size()));
  for (int a = 0; a < m.n_admins(); ++a) {
    if (static_cast<int>(rows[a].size()) != m.n_slots())
      throw ValidationError("bids: ragged rows");
    for (int t = 0; t < m.n_slots(); ++t) m.at(a, t) = rows[a][t];
  }
  return m;
}

void BidMatrix::set_row(int admin, std::span<const int> bids) {
  std::copy(bids.begin(), bids.end(), x_.begin() + idx(admin, 0));
}

int BidMatrix::spend(int admin) const {
  int s = 0;
  for (int t = 0; t < n_slots_; ++t) s += at(admin, t);
  return s;
}

void BidMatrix::validate(const GameConfig& cfg) const {
  if (n_admins_ != cfg.n_admins || n_slots_ != cfg.n_slots)
    throw ValidationError("bids: shape does not match config");
  for (int a = 0; a < n_admins_; ++a) {
    for (int t = 0; t < n_slots_; ++t) {
      const int b = at(a, t);
      if (b < 0) throw ValidationError("bids: negative entry");
      if (b > cfg.max_bid)
        throw ValidationError("bids: entry exceeds max_bid_per_slot");
    }
    if (spend(a) > cfg.budgets[a])
      throw ValidationError("bids: admin " + std::to_string(a + 1) +
                            " spends more than their budget");
  }
}

int SampleProfile::total() const {
  int s = 0;
  for (int c : counts) s += c;
  return s;
}

double activation_probability(int bid, double p) {
  if (bid < 0) throw ValidationError("activation_probability: bid must be >= 0");
  if (!(p >= 0.0 && p <= 1.0))
    throw ValidationError("activation_probability: p must lie in [0,1]");
  if (bid == 0) return 0.0;
  return 1.0 - std::pow(1.0 - p, static_cast<double>(bid));
}

namespace {

// First-success statistics for one rank attempt over the admins in `mask`,
// averaged over the uniformly random trial order.
struct RankStep {
  std::vector<double> win;  // win[a]: P(admin a takes the rank)
  double none = 1.0;        // P(nobody activates)
};

RankStep rank_step_for_mask(std::uint32_t mask, std::span<const double> pa, int k) {
  RankStep step;
  step.win.assign(static_cast<std::size_t>(k), 0.0);
  std::vector<int> members;
  for (int a = 0; a < k; ++a)
    if (mask & (1u << a)) members.push_back(a);
  if (members.empty()) return step;

  for (int a : members) step.none *= 1.0 - pa[a];

  std::sort(members.begin(), members.end());
  double n_perms = 0.0;
  std::vector<double> acc(static_cast<std::size_t>(k), 0.0);
  do {
    double survive = 1.0;
    for (int a : members) {
      acc[a] += survive * pa[a];
      survive *= 1.0 - pa[a];
    }
    n_perms += 1.0;
  } while (std::next_permutation(members.begin(), members.end()));
  for (int a = 0; a < k; ++a) step.win[a] = acc[a] / n_perms;
  return step;
}

}  // namespace

std::vector<std::vector<double>> exact_rank_win_probabilities(
    std::span<const int> column_bids, const GameConfig& cfg) {
  const int k = cfg.n_admins;
  if (static_cast<int>(column_bids.size()) != k)
    throw ValidationError("rank probabilities: column size must equal n_admins");
  if (k > kEnumerationLimit)
    throw GuardError("enumeration_limit",
                     "exact rank probabilities support at most " +
                         std::to_string(kEnumerationLimit) + " admins, got " +
                         std::to_string(k));

  std::vector<double> pa(static_cast<std::size_t>(k));
  std::uint32_t active = 0;
  for (int a = 0; a < k; ++a) {
    pa[a] = activation_probability(column_bids[a], cfg.relevance);
    if (column_bids[a] > 0) active |= 1u << a;
  }

  std::vector<std::vector<double>> out(
      static_cast<std::size_t>(k), std::vector<double>(static_cast<std::size_t>(k), 0.0));
  if (active == 0) return out;

  // Memoize per-mask one-rank statistics; they do not depend on the rank index.
  std::vector<RankStep> steps(1u << k);
  std::vector<bool> have(1u << k, false);

  // Distribution over remaining-candidate sets, advanced one rank at a time.
  std::vector<double> weight(1u << k, 0.0), next(1u << k, 0.0);
  weight[active] = 1.0;
  for (int r = 1; r <= k; ++r) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::uint32_t mask = 1; mask < (1u << k); ++mask) {
      const double w = weight[mask];
      if (w == 0.0) continue;
      if (!have[mask]) {
        steps[mask] = rank_step_for_mask(mask, pa, k);
        have[mask] = true;
      }
      const RankStep& step = steps[mask];
      for (int a = 0; a < k; ++a) {
        if (!(mask & (1u << a))) continue;
        const double pw = w * step.win[a];
        if (pw == 0.0) continue;
        out[a][r - 1] += pw;
        next[mask & ~(1u << a)] += pw;
      }
      next[mask] += w * step.none;
    }
    weight.swap(next);
  }
  return out;
}

AllocationSampler::AllocationSampler(const BidMatrix& bids, const GameConfig& cfg)
    : n_admins_(cfg.n_admins), n_slots_(cfg.n_slots) {
  bids.validate(cfg);
  pa_.resize(static_cast<std::size_t>(n_admins_) * n_slots_);
  bidders_.resize(static_cast<std::size_t>(n_slots_));
  own_slots_.resize(static_cast<std::size_t>(n_admins_));

  // Activation probabilities are a function of the integer bid only; cache per value.
  std::vector<double> by_value(static_cast<std::size_t>(cfg.max_bid) + 1);
  for (int b = 0; b <= cfg.max_bid; ++b) by_value[b] = activation_probability(b, cfg.relevance);

  for (int t = 0; t < n_slots_; ++t) {
    for (int a = 0; a < n_admins_; ++a) {
      const int b = bids.at(a, t);
      pa_[static_cast<std::size_t>(a) * n_slots_ + t] = by_value[b];
      if (b > 0) {
        bidders_[t].push_back(a);
        own_slots_[a].push_back(t);
      }
    }
  }
}

void AllocationSampler::run_slot(int slot, std::uint64_t seed, std::uint8_t* column,
                                 std::vector<int>& candidates) const {
  candidates.assign(bidders_[slot].begin(), bidders_[slot].end());
  if (candidates.empty()) return;
  Rng rng(derive_seed(seed, kSlotStream, static_cast<std::uint64_t>(slot)));
  for (int r = 1; r <= n_admins_ && !candidates.empty(); ++r) {
    rng.shuffle(candidates.data(), candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      const int a = candidates[i];
      if (rng.uniform() < pa_[static_cast<std::size_t>(a) * n_slots_ + slot]) {
        column[a] = static_cast<std::uint8_t>(r);
        candidates.erase(candidates.begin() + static_cast<std::ptrdiff_t>(i));
        break;
      }
    }
  }
}

void AllocationSampler::sample(std::uint64_t seed, RankAssignment& out,
                               AllocationScratch& scratch) const {
  if (out.n_admins() != n_admins_ || out.n_slots() != n_slots_)
    out = RankAssignment(n_admins_, n_slots_);
  else
    out.clear();
  scratch.column.assign(static_cast<std::size_t>(n_admins_), kNoRank);
  for (int t = 0; t < n_slots_; ++t) {
    std::fill(scratch.column.begin(), scratch.column.end(), std::uint8_t{kNoRank});
    run_slot(t, seed, scratch.column.data(), scratch.candidates);
    for (int a : bidders_[t])
      if (scratch.column[a] != kNoRank) out.set_rank(a, t, scratch.column[a]);
  }
}

void AllocationSampler::sample_profile_of(int admin, std::uint64_t seed, SampleProfile& out,
                                          AllocationScratch& scratch) const {
  out.counts.assign(static_cast<std::size_t>(n_admins_), 0);
  scratch.column.assign(static_cast<std::size_t>(n_admins_), kNoRank);
  for (int t : own_slots_[admin]) {
    std::fill(scratch.column.begin(), scratch.column.end(), std::uint8_t{kNoRank});
    run_slot(t, seed, scratch.column.data(), scratch.candidates);
    if (scratch.column[admin] != kNoRank) ++out.counts[scratch.column[admin] - 1];
  }
}

RankAssignment allocate_ranks(const BidMatrix& bids, const GameConfig& cfg,
                              std::uint64_t seed) {
  AllocationSampler sampler(bids, cfg);
  RankAssignment out(cfg.n_admins, cfg.n_slots);
  AllocationScratch scratch;
  sampler.sample(seed, out, scratch);
  return out;
}

SampleProfile sample_profile(const RankAssignment& assignment, int admin) {
  SampleProfile p;
  p.counts.assign(static_cast<std::size_t>(assignment.n_ranks()), 0);
  for (int t = 0; t < assignment.n_slots(); ++t) {
    const int r = assignment.rank(admin, t);
    if (r != kNoRank) ++p.counts[r - 1];
  }
  return p;
}

double sample_value(const SampleProfile& profile, std::span<const double> discounts) {
  if (profile.counts.size() != discounts.size())
    throw ValidationError("sample_value: profile length must equal number of ranks");
  double s = 0.0;
  for (std::size_t r = 0; r < discounts.size(); ++r)
    s += profile.counts[r] * discounts[r] * discounts[r];
  return s;
}

}  // namespace bidrank
