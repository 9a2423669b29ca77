#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "bidrank/equilibrium.hpp"

using namespace bidrank;

namespace {

GameConfig make_cfg(int n, int k, double p, std::vector<double> alpha,
                    std::vector<int> budgets, int cap) {
  GameConfig cfg;
  cfg.n_slots = n;
  cfg.n_admins = k;
  cfg.relevance = p;
  cfg.discounts = std::move(alpha);
  cfg.budgets = std::move(budgets);
  cfg.max_bid = cap;
  cfg.validate();
  return cfg;
}

}  // namespace

TEST_CASE("strategy space counts and enumerates consistently") {
  StrategySpace space(3, 2, 2, /*include_underspending=*/true);
  long long visited = 0;
  int max_spend = 0;
  space.for_each([&](std::span<const int> v) {
    ++visited;
    int spend = 0;
    for (int b : v) spend += b;
    max_spend = std::max(max_spend, spend);
  });
  CHECK(static_cast<std::uint64_t>(visited) == space.count());
  CHECK(visited == 10);  // spend 2: C(3,2) pairs + 3 doubles; spend 1: 3; spend 0: 1
  CHECK(max_spend == 2);

  StrategySpace exact_spend(3, 2, 2, /*include_underspending=*/false);
  long long full = 0;
  exact_spend.for_each([&](std::span<const int> v) {
    int spend = 0;
    for (int b : v) spend += b;
    REQUIRE(spend == 2);
    ++full;
  });
  CHECK(static_cast<std::uint64_t>(full) == exact_spend.count());
  CHECK(full == 6);
}

TEST_CASE("canonical construction separates admins when room allows") {
  const auto cfg = make_cfg(4, 2, 0.5, {1.0, 0.5}, {2, 2}, 2);
  const BidMatrix bids = build_canonical_equilibrium(cfg);
  CHECK(bids.row(0)[0] == 1);
  CHECK(bids.row(0)[1] == 1);
  CHECK(bids.row(1)[2] == 1);
  CHECK(bids.row(1)[3] == 1);
  CHECK(check_lemma_conditions(bids, cfg).ok);
}

TEST_CASE("canonical construction balances loads within one unit") {
  const auto cfg = make_cfg(3, 2, 0.5, {1.0, 0.5}, {2, 2}, 2);
  const BidMatrix bids = build_canonical_equilibrium(cfg);
  int load[3] = {0, 0, 0};
  for (int a = 0; a < 2; ++a)
    for (int t = 0; t < 3; ++t) load[t] += bids.at(a, t);
  std::sort(load, load + 3);
  CHECK(load[0] == 1);
  CHECK(load[2] == 2);
  CHECK(check_lemma_conditions(bids, cfg).ok);
}

TEST_CASE("canonical construction: forced overlap at full coverage") {
  const auto cfg = make_cfg(2, 2, 0.5, {1.0, 0.5}, {2, 2}, 2);
  const BidMatrix bids = build_canonical_equilibrium(cfg);
  for (int a = 0; a < 2; ++a)
    for (int t = 0; t < 2; ++t) CHECK(bids.at(a, t) == 1);
}

TEST_CASE("canonical construction rejects budgets above the slot count") {
  const auto cfg = make_cfg(2, 2, 0.5, {1.0, 0.5}, {3, 1}, 2);
  CHECK_THROWS_AS(build_canonical_equilibrium(cfg), ValidationError);
}

TEST_CASE("lemma conditions itemize violations") {
  const auto cfg = make_cfg(3, 2, 0.5, {1.0, 0.5}, {2, 2}, 2);

  const LemmaCheck aggregated =
      check_lemma_conditions(BidMatrix::from_rows({{2, 0, 0}, {0, 1, 1}}), cfg);
  CHECK(!aggregated.ok);
  REQUIRE(!aggregated.violations.empty());
  CHECK(aggregated.violations[0].find("entry > 1") != std::string::npos);

  const LemmaCheck underspent =
      check_lemma_conditions(BidMatrix::from_rows({{1, 0, 0}, {0, 1, 1}}), cfg);
  CHECK(!underspent.ok);
  CHECK(underspent.violations[0].find("budget not exhausted") != std::string::npos);

  const LemmaCheck lopsided =
      check_lemma_conditions(BidMatrix::from_rows({{1, 1, 0}, {1, 1, 0}}), cfg);
  CHECK(!lopsided.ok);
  CHECK(lopsided.violations[0].find("column loads differ") != std::string::npos);
}

TEST_CASE("best response: aggregated bids lose to the uniform split") {
  const auto cfg = make_cfg(2, 2, 0.5, {1.0, 0.5}, {2, 2}, 2);
  const BidMatrix bids = BidMatrix::from_rows({{2, 0}, {1, 1}});
  const BestResponse br = best_response(bids, 0, cfg, Objective::exact_sv);
  CHECK(br.gain > 1e-6);
  CHECK(br.strategy == std::vector<int>{1, 1});
}

TEST_CASE("best response: unused budget always improves") {
  const auto cfg = make_cfg(2, 2, 0.5, {1.0, 0.5}, {2, 2}, 2);
  const BidMatrix bids = BidMatrix::from_rows({{1, 0}, {1, 1}});
  const BestResponse br = best_response(bids, 0, cfg, Objective::exact_sv);
  CHECK(br.gain > 1e-6);
  int spend = 0;
  for (int b : br.strategy) spend += b;
  CHECK(spend == 2);
}

TEST_CASE("best response: canonical profiles leave no room to improve") {
  for (double ratio : {0.3, 0.7}) {
    for (int n : {2, 4}) {
      const auto cfg = make_cfg(n, 2, 0.5, {1.0, ratio}, {n / 2, n / 2}, 2);
      const BidMatrix bids = build_canonical_equilibrium(cfg);
      for (int a = 0; a < 2; ++a) {
        const BestResponse br = best_response(bids, a, cfg, Objective::exact_sv);
        CHECK(br.gain <= kExactGainTolerance);
        CHECK(br.strategy == std::vector<int>(bids.row(a).begin(), bids.row(a).end()));
      }
    }
  }
}

TEST_CASE("equal-opposition slots are interchangeable for a 0/1 bidder") {
  // k=3, n=4, B=(2,2,2): after admins 1 and 2 place, every column carries load 1,
  // so admin 3 faces identical opposition everywhere and every two-slot placement
  // has the same exact utility.
  const auto cfg = make_cfg(4, 3, 0.5, {1.0, 0.6, 0.3}, {2, 2, 2}, 2);
  BidMatrix bids = build_canonical_equilibrium(cfg);
  const double reference = exact_sv_utility(bids, 2, cfg).value;
  for (int s1 = 0; s1 < 4; ++s1)
    for (int s2 = s1 + 1; s2 < 4; ++s2) {
      std::vector<int> row(4, 0);
      row[s1] = row[s2] = 1;
      bids.set_row(2, row);
      CHECK(exact_sv_utility(bids, 2, cfg).value == reference);
    }

  // Two admins, budgets (1,2): slots 1 and 4 are equally empty of opposition for
  // admin 1, so moving the single unit between them changes nothing.
  const auto cfg2 = make_cfg(4, 2, 0.5, {1.0, 0.5}, {1, 2}, 2);
  BidMatrix bids2 = build_canonical_equilibrium(cfg2);
  REQUIRE(bids2.row(0)[0] == 1);
  const double before = exact_sv_utility(bids2, 0, cfg2).value;
  bids2.set_row(0, std::vector<int>{0, 0, 0, 1});
  CHECK(exact_sv_utility(bids2, 0, cfg2).value == before);
}

TEST_CASE("verify_pure_nash matches the best-response verdicts") {
  const auto cfg = make_cfg(2, 2, 0.5, {1.0, 0.5}, {2, 2}, 2);
  CHECK(verify_pure_nash(build_canonical_equilibrium(cfg), cfg, Objective::exact_sv)
            .is_equilibrium);
  CHECK(!verify_pure_nash(BidMatrix::from_rows({{2, 0}, {1, 1}}), cfg, Objective::exact_sv)
             .is_equilibrium);
  CHECK(!verify_pure_nash(BidMatrix(2, 2), cfg, Objective::exact_sv).is_equilibrium);
}

TEST_CASE("enumerate_pure_nash: two admins, one unit each") {
  const auto cfg = make_cfg(2, 2, 0.5, {1.0, 0.5}, {1, 1}, 2);
  const auto equilibria = enumerate_pure_nash(cfg);
  REQUIRE(equilibria.size() == 2);
  for (const auto& eq : equilibria) CHECK(check_lemma_conditions(eq, cfg).ok);
}

TEST_CASE("enumerate_pure_nash: two admins over three slots") {
  const auto cfg = make_cfg(3, 2, 0.5, {1.0, 0.5}, {2, 2}, 2);
  const auto equilibria = enumerate_pure_nash(cfg);
  CHECK(equilibria.size() == 6);  // ordered pairs of distinct slot pairs
  for (const auto& eq : equilibria) CHECK(check_lemma_conditions(eq, cfg).ok);
}

TEST_CASE("enumerate_pure_nash: three-admin probe is recorded, not asserted") {
  const auto cfg = make_cfg(3, 3, 0.5, {1.0, 0.5, 0.25}, {1, 1, 1}, 2);
  const auto equilibria = enumerate_pure_nash(cfg);
  CHECK(equilibria.size() >= 6);  // the six separated placements are equilibria
  int lemma_ok = 0;
  for (const auto& eq : equilibria)
    if (check_lemma_conditions(eq, cfg).ok) ++lemma_ok;
  MESSAGE("k=3 probe: ", equilibria.size(), " equilibria, ", lemma_ok, " of the balanced form");
}

TEST_CASE("enumeration guard trips on oversized joint spaces") {
  const auto cfg = make_cfg(5, 4, 0.5, {1.0, 0.5, 0.5, 0.5}, {5, 5, 5, 5}, 3);
  CHECK_THROWS_AS(enumerate_pure_nash(cfg), GuardError);
}

TEST_CASE("approx audit: deterministic single-admin toy has zero slack") {
  const auto cfg = make_cfg(2, 1, 1.0, {1.0}, {2}, 2);
  const BidMatrix bids = BidMatrix::from_rows({{1, 1}});
  const ApproxNashReport audit = approx_nash_audit(bids, cfg, 200, 11);
  const double eps = 1.0 / std::sqrt(2.0);
  CHECK(audit.epsilon == doctest::Approx(eps).epsilon(1e-12));
  // Every deviation is deterministic; the best one is the incumbent itself, so the
  // worst slack is (1+eps)(-1/2) + 1/2 = -eps/2 and no positive eta is needed.
  CHECK(audit.sup_gap == doctest::Approx(-eps / 2.0).epsilon(1e-12));
  CHECK(audit.eta_hat == 0.0);
  CHECK(audit.sup_gap_se == 0.0);
  CHECK(audit.n_deviations == 6);  // (0,0) (1,0) (0,1) (2,0) (0,2) (1,1)
}

TEST_CASE("approx audit reports finite slack on a stochastic profile") {
  const auto cfg = make_cfg(4, 2, 0.5, {1.0, 0.5}, {2, 2}, 1);
  const BidMatrix bids = build_canonical_equilibrium(cfg);
  const ApproxNashReport audit = approx_nash_audit(bids, cfg, 400, 12);
  CHECK(std::isfinite(audit.eta_hat));
  CHECK(audit.eta_hat >= 0.0);
  CHECK(audit.f_incumbent < 0.0);
  CHECK(audit.f_incumbent >= -1.0);
}

TEST_CASE("concentration: deterministic sample value has an empty tail") {
  const auto cfg = make_cfg(2, 1, 1.0, {1.0}, {2}, 1);
  const BidMatrix bids = BidMatrix::from_rows({{1, 1}});
  const ConcentrationResult res = concentration_check(bids, cfg, 0, 500, 13, 0.5);
  CHECK(res.empirical_tail == 0.0);
  CHECK(res.expected_s == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(res.m == 2);
}

TEST_CASE("concentration: binomial case matches the exact tail and the bound") {
  // One admin, four unit bids at p = 1/2: S ~ Binomial(4, 1/2) (only rank 1 exists),
  // E[S] = 2, and the eps = 1/2 tail is P(|S-2| >= 1) = 1 - 6/16 = 0.625.
  const auto cfg = make_cfg(4, 1, 0.5, {1.0}, {4}, 1);
  const BidMatrix bids = BidMatrix::from_rows({{1, 1, 1, 1}});
  const ConcentrationResult res = concentration_check(bids, cfg, 0, 20000, 14, 0.5);
  CHECK(res.expected_s == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(res.bound == doctest::Approx(2.0 * std::exp(-0.5)).epsilon(1e-12));
  CHECK(std::abs(res.empirical_tail - 0.625) <=
        4.0 * std::sqrt(0.625 * 0.375 / 20000.0) + 1e-12);
  CHECK(0.625 <= res.bound);
}

TEST_CASE("concentration rejects under-spending profiles") {
  const auto cfg = make_cfg(4, 1, 0.5, {1.0}, {4}, 1);
  const BidMatrix bids = BidMatrix::from_rows({{1, 1, 1, 0}});
  CHECK_THROWS_AS(concentration_check(bids, cfg, 0, 100, 15, 0.5), ValidationError);
}

TEST_CASE("expected sample value clears the B p / k floor") {
  const auto solo = make_cfg(3, 1, 0.5, {1.0}, {3}, 1);
  const auto rows = expected_sv_lower_bound_check(BidMatrix::from_rows({{1, 1, 1}}), solo);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].expected_s == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(rows[0].lower_bound == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(rows[0].ok);

  const auto cfg = make_cfg(4, 2, 0.5, {1.0, 0.5}, {2, 2}, 2);
  for (const auto& row : expected_sv_lower_bound_check(build_canonical_equilibrium(cfg), cfg)) {
    CHECK(row.lower_bound == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(row.ok);
  }
}

TEST_CASE("expected sample value check requires the balanced 0/1 profile") {
  const auto cfg = make_cfg(2, 2, 0.5, {1.0, 0.5}, {2, 2}, 2);
  CHECK_THROWS_AS(expected_sv_lower_bound_check(BidMatrix::from_rows({{2, 0}, {1, 1}}), cfg),
                  ValidationError);
}

TEST_CASE("monte carlo objective verification accepts the deterministic equilibrium") {
  // p = 1 toy where the estimation-error utilities are exact (zero variance).
  const auto cfg = make_cfg(2, 2, 1.0, {1.0, 0.5}, {1, 1}, 1);
  const BidMatrix bids = build_canonical_equilibrium(cfg);
  ObjectiveOptions opts;
  opts.n_reps = 200;
  opts.seed = 21;
  const NashReport report = verify_pure_nash(bids, cfg, Objective::mc_mse, opts);
  CHECK(report.is_equilibrium);
}
