#include "bidrank/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace bidrank {

StrategySpace::StrategySpace(int n_slots, int budget, int max_bid,
                             bool include_underspending)
    : n_slots_(n_slots), budget_(budget), max_bid_(max_bid),
      include_underspending_(include_underspending) {
  if (n_slots < 1) throw ValidationError("strategy space: n_slots must be >= 1");
  if (budget < 0) throw ValidationError("strategy space: budget must be >= 0");
  if (max_bid < 1) throw ValidationError("strategy space: max_bid must be >= 1");
}

std::uint64_t StrategySpace::count() const {
  // ways[s] = number of partial vectors with spend s; one slot at a time.
  const int cap = budget_;
  std::vector<std::uint64_t> ways(static_cast<std::size_t>(cap) + 1, 0);
  ways[0] = 1;
  const std::uint64_t kOverflowMark = std::numeric_limits<std::uint64_t>::max();
  for (int t = 0; t < n_slots_; ++t) {
    std::vector<std::uint64_t> next(static_cast<std::size_t>(cap) + 1, 0);
    for (int s = 0; s <= cap; ++s) {
      if (ways[s] == 0) continue;
      for (int b = 0; b <= max_bid_ && s + b <= cap; ++b) {
        if (next[s + b] > kOverflowMark - ways[s]) {
          next[s + b] = kOverflowMark;
        } else if (next[s + b] != kOverflowMark) {
          next[s + b] += ways[s];
        }
      }
    }
    ways.swap(next);
  }
  if (include_underspending_) {
    std::uint64_t total = 0;
    for (std::uint64_t w : ways) {
      if (total > std::numeric_limits<std::uint64_t>::max() - w)
        return std::numeric_limits<std::uint64_t>::max();
      total += w;
    }
    return total;
  }
  return ways[static_cast<std::size_t>(cap)];
}

void StrategySpace::for_each(const std::function<void(std::span<const int>)>& fn) const {
  std::vector<int> v(static_cast<std::size_t>(n_slots_), 0);
  // Recursive fill; remaining capacity prunes infeasible branches early.
  std::function<void(int, int)> rec = [&](int t, int spent) {
    if (t == n_slots_) {
      if (include_underspending_ || spent == budget_) fn(v);
      return;
    }
    const int slots_left_after = n_slots_ - t - 1;
    for (int b = 0; b <= std::min(max_bid_, budget_ - spent); ++b) {
      if (!include_underspending_ &&
          spent + b + slots_left_after * max_bid_ < budget_)
        continue;  // cannot reach full spend any more
      v[t] = b;
      rec(t + 1, spent + b);
    }
    v[t] = 0;
  };
  rec(0, 0);
}

BidMatrix build_canonical_equilibrium(const GameConfig& cfg) {
  cfg.validate();
  for (int a = 0; a < cfg.n_admins; ++a)
    if (cfg.budgets[a] > cfg.n_slots)
      throw ValidationError("canonical equilibrium: budget of admin " +
                            std::to_string(a + 1) + " exceeds the number of slots");

  BidMatrix bids(cfg.n_admins, cfg.n_slots);
  std::vector<int> load(static_cast<std::size_t>(cfg.n_slots), 0);
  std::vector<int> order(static_cast<std::size_t>(cfg.n_slots));
  for (int a = 0; a < cfg.n_admins; ++a) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int lhs, int rhs) { return load[lhs] < load[rhs]; });
    for (int i = 0; i < cfg.budgets[a]; ++i) {
      bids.at(a, order[i]) = 1;
      ++load[order[i]];
    }
  }
  return bids;
}

LemmaCheck check_lemma_conditions(const BidMatrix& bids, const GameConfig& cfg) {
  bids.validate(cfg);
  LemmaCheck check;
  for (int a = 0; a < cfg.n_admins; ++a) {
    for (int t = 0; t < cfg.n_slots; ++t)
      if (bids.at(a, t) > 1)
        check.violations.push_back("entry > 1 at admin " + std::to_string(a + 1) +
                                   ", slot " + std::to_string(t + 1));
    if (bids.spend(a) != cfg.budgets[a])
      check.violations.push_back("budget not exhausted by admin " + std::to_string(a + 1));
  }
  int min_load = std::numeric_limits<int>::max(), max_load = 0;
  for (int t = 0; t < cfg.n_slots; ++t) {
    int load = 0;
    for (int a = 0; a < cfg.n_admins; ++a) load += bids.at(a, t);
    min_load = std::min(min_load, load);
    max_load = std::max(max_load, load);
  }
  if (max_load - min_load > 1)
    check.violations.push_back("column loads differ by " +
                               std::to_string(max_load - min_load));
  check.ok = check.violations.empty();
  return check;
}

namespace {

// Per-slot exact value tables: table[t][b] is the admin's slot-t contribution when
// they bid b and everyone else keeps their column. Candidate utilities are then
// plain sums, accumulated in ascending slot order exactly like exact_sv_utility.
std::vector<std::vector<double>> exact_value_tables(const BidMatrix& bids, int admin,
                                                    const GameConfig& cfg) {
  std::vector<std::vector<double>> table(
      static_cast<std::size_t>(cfg.n_slots),
      std::vector<double>(static_cast<std::size_t>(cfg.max_bid) + 1, 0.0));
  std::vector<int> column(static_cast<std::size_t>(cfg.n_admins));
  for (int t = 0; t < cfg.n_slots; ++t) {
    for (int a = 0; a < cfg.n_admins; ++a) column[a] = bids.at(a, t);
    for (int b = 0; b <= cfg.max_bid; ++b) {
      column[admin] = b;
      const auto probs = exact_rank_win_probabilities(column, cfg);
      double v = 0.0;
      for (int r = 0; r < cfg.n_admins; ++r)
        v += cfg.discounts[r] * cfg.discounts[r] * probs[admin][r];
      table[t][b] = v;
    }
  }
  return table;
}

double table_utility(const std::vector<std::vector<double>>& table,
                     std::span<const int> strategy) {
  double u = 0.0;
  for (std::size_t t = 0; t < strategy.size(); ++t) u += table[t][strategy[t]];
  return u;
}

void check_space_guard(const StrategySpace& space) {
  const std::uint64_t count = space.count();
  if (count > kStrategySpaceGuard)
    throw GuardError("strategy_space", "deviation space holds " + std::to_string(count) +
                                           " strategies, guard is " +
                                           std::to_string(kStrategySpaceGuard));
}

}  // namespace

BestResponse best_response(const BidMatrix& bids, int admin, const GameConfig& cfg,
                           Objective objective, const ObjectiveOptions& opts) {
  bids.validate(cfg);
  StrategySpace space(cfg.n_slots, cfg.budgets[admin], cfg.max_bid,
                      /*include_underspending=*/true);
  check_space_guard(space);

  const std::vector<int> incumbent(bids.row(admin).begin(), bids.row(admin).end());
  BestResponse best;
  best.strategy = incumbent;

  if (objective == Objective::exact_sv) {
    const auto table = exact_value_tables(bids, admin, cfg);
    const double u_inc = table_utility(table, incumbent);
    double u_best = u_inc;
    std::vector<int> argmax = incumbent;
    space.for_each([&](std::span<const int> v) {
      const double u = table_utility(table, v);
      if (u > u_best) {
        u_best = u;
        argmax.assign(v.begin(), v.end());
      }
    });
    best.strategy = argmax;
    best.gain = u_best - u_inc;
    best.utility_incumbent = u_inc;
    best.utility_best = u_best;
    return best;
  }

  // Monte Carlo estimation-error objective; one derived stream per strategy index.
  BidMatrix work = bids;
  const UtilityEstimate inc =
      mc_mse_utility(bids, admin, cfg, opts.n_reps,
                     derive_seed(opts.seed, kStrategyStream, static_cast<std::uint64_t>(admin),
                                 std::numeric_limits<std::uint64_t>::max()));
  double u_best = inc.value;
  double se_best = inc.std_error;
  std::vector<int> argmax = incumbent;
  std::uint64_t index = 0;
  space.for_each([&](std::span<const int> v) {
    // The incumbent reuses its dedicated estimate; re-sampling the same strategy
    // on a fresh stream would let noise fake a positive gain.
    const bool is_incumbent = std::equal(v.begin(), v.end(), incumbent.begin(), incumbent.end());
    work.set_row(admin, v);
    const UtilityEstimate u =
        is_incumbent
            ? inc
            : mc_mse_utility(work, admin, cfg, opts.n_reps,
                             derive_seed(opts.seed, kStrategyStream,
                                         static_cast<std::uint64_t>(admin), index));
    ++index;
    if (u.value > u_best) {
      u_best = u.value;
      se_best = u.std_error;
      argmax.assign(v.begin(), v.end());
    }
  });
  best.strategy = argmax;
  best.gain = u_best - inc.value;
  best.gain_se = std::sqrt(se_best * se_best + inc.std_error * inc.std_error);
  best.utility_incumbent = inc.value;
  best.utility_best = u_best;
  return best;
}

NashReport verify_pure_nash(const BidMatrix& bids, const GameConfig& cfg,
                            Objective objective, const ObjectiveOptions& opts) {
  NashReport report;
  report.is_equilibrium = true;
  for (int a = 0; a < cfg.n_admins; ++a) {
    BestResponse br = best_response(bids, a, cfg, objective, opts);
    const double tolerance = objective == Objective::exact_sv
                                 ? kExactGainTolerance
                                 : 3.0 * br.gain_se;
    if (br.gain > tolerance) report.is_equilibrium = false;
    report.deviations.push_back({a, std::move(br.strategy), br.gain, br.gain_se});
  }
  return report;
}

std::vector<BidMatrix> enumerate_pure_nash(const GameConfig& cfg) {
  cfg.validate();
  std::uint64_t joint = 1;
  std::vector<StrategySpace> spaces;
  for (int a = 0; a < cfg.n_admins; ++a) {
    spaces.emplace_back(cfg.n_slots, cfg.budgets[a], cfg.max_bid, true);
    const std::uint64_t c = spaces.back().count();
    if (c != 0 && joint > kJointProfileGuard / c)
      throw GuardError("joint_profile_space",
                       "joint strategy space exceeds " + std::to_string(kJointProfileGuard) +
                           " profiles");
    joint *= c;
  }

  std::vector<BidMatrix> equilibria;
  BidMatrix profile(cfg.n_admins, cfg.n_slots);
  std::function<void(int)> rec = [&](int admin) {
    if (admin == cfg.n_admins) {
      if (verify_pure_nash(profile, cfg, Objective::exact_sv).is_equilibrium)
        equilibria.push_back(profile);
      return;
    }
    spaces[admin].for_each([&](std::span<const int> v) {
      profile.set_row(admin, v);
      rec(admin + 1);
    });
  };
  rec(0);
  return equilibria;
}

ApproxNashReport approx_nash_audit(const BidMatrix& bids, const GameConfig& cfg,
                                   long long n_reps, std::uint64_t seed, double epsilon) {
  bids.validate(cfg);
  ApproxNashReport report;
  if (epsilon <= 0.0) {
    const int min_budget = *std::min_element(cfg.budgets.begin(), cfg.budgets.end());
    if (min_budget < 1)
      throw ValidationError("approx_nash_audit: default epsilon needs budgets >= 1");
    epsilon = cfg.n_admins / std::sqrt(static_cast<double>(min_budget));
  }
  report.epsilon = epsilon;
  report.sup_gap = -std::numeric_limits<double>::infinity();

  BidMatrix work = bids;
  for (int a = 0; a < cfg.n_admins; ++a) {
    StrategySpace space(cfg.n_slots, cfg.budgets[a], cfg.max_bid, true);
    check_space_guard(space);
    const UtilityEstimate inc =
        mc_mse_utility(bids, a, cfg, n_reps,
                       derive_seed(seed, kStrategyStream, static_cast<std::uint64_t>(a),
                                   std::numeric_limits<std::uint64_t>::max()));
    std::uint64_t index = 0;
    space.for_each([&](std::span<const int> v) {
      work.set_row(a, v);
      const UtilityEstimate dev = mc_mse_utility(
          work, a, cfg, n_reps,
          derive_seed(seed, kStrategyStream, static_cast<std::uint64_t>(a), index));
      ++index;
      const double gap = (1.0 + epsilon) * dev.value - inc.value;
      if (gap > report.sup_gap) {
        report.sup_gap = gap;
        report.sup_gap_se = std::sqrt((1.0 + epsilon) * (1.0 + epsilon) * dev.std_error * dev.std_error +
                                      inc.std_error * inc.std_error);
        report.worst_admin = a;
        report.worst_deviation.assign(v.begin(), v.end());
        report.f_incumbent = inc.value;
        report.f_worst_deviation = dev.value;
      }
      ++report.n_deviations;
    });
    work.set_row(a, bids.row(a));
  }
  report.eta_hat = std::max(0.0, report.sup_gap);
  return report;
}

ConcentrationResult concentration_check(const BidMatrix& bids, const GameConfig& cfg,
                                        int admin, long long n_reps, std::uint64_t seed,
                                        double epsilon) {
  bids.validate(cfg);
  if (epsilon <= 0.0) throw ValidationError("concentration_check: epsilon must be > 0");
  for (int a = 0; a < cfg.n_admins; ++a)
    if (bids.spend(a) != cfg.budgets[a])
      throw ValidationError("concentration_check: admin " + std::to_string(a + 1) +
                            " does not spend their full budget");

  ConcentrationResult result;
  result.expected_s = exact_sv_utility(bids, admin, cfg).value;
  for (int t = 0; t < cfg.n_slots; ++t)
    if (bids.at(admin, t) > 0) ++result.m;
  result.bound = 2.0 * std::exp(-2.0 * (epsilon * result.expected_s) *
                                (epsilon * result.expected_s) / result.m);
  result.n_reps = n_reps;

  AllocationSampler sampler(bids, cfg);
  AllocationScratch scratch;
  SampleProfile profile;
  const double threshold = epsilon * result.expected_s;
  long long hits = 0;
  for (long long i = 0; i < n_reps; ++i) {
    sampler.sample_profile_of(admin, derive_seed(seed, kReplicationStream, static_cast<std::uint64_t>(i)),
                              profile, scratch);
    const double s = sample_value(profile, cfg.discounts);
    if (std::abs(s - result.expected_s) >= threshold) ++hits;
  }
  result.empirical_tail = static_cast<double>(hits) / static_cast<double>(n_reps);
  result.tail_se = std::sqrt(result.empirical_tail * (1.0 - result.empirical_tail) /
                             static_cast<double>(n_reps));
  return result;
}

std::vector<ExpectedSvBound> expected_sv_lower_bound_check(const BidMatrix& bids,
                                                           const GameConfig& cfg) {
  const LemmaCheck lemma = check_lemma_conditions(bids, cfg);
  if (!lemma.ok)
    throw ValidationError("expected_sv_lower_bound_check: bids do not satisfy the "
                          "closed-form equilibrium conditions");
  std::vector<ExpectedSvBound> out;
  for (int a = 0; a < cfg.n_admins; ++a) {
    ExpectedSvBound row;
    row.admin = a;
    row.expected_s = exact_sv_utility(bids, a, cfg).value;
    row.lower_bound = cfg.budgets[a] * cfg.relevance / cfg.n_admins;
    row.ok = row.expected_s >= row.lower_bound - 1e-12;
    out.push_back(row);
  }
  return out;
}

}  // namespace bidrank
