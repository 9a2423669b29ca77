#include <doctest.h>

#include "bidrank/config_tree.hpp"
#include "bidrank/scenario.hpp"

using namespace bidrank;

TEST_CASE("config tree parses sections, arrays and scalars") {
  const ConfigTree tree = ConfigTree::parse_string(R"(
# scenario header
id = "demo"
seed = 42
ratio = 0.5
flag = true

[game]
n_subjects = 4
discounts = [1.0, 0.5]
budgets = [2, 2]

bids = [[1, 1, 0, 0],
        [0, 0, 1, 1]]  # nested arrays
name = "a b"
)");
  CHECK(tree.require_string("id") == "demo");
  CHECK(tree.require_int("seed") == 42);
  CHECK(tree.require_double("ratio") == 0.5);
  CHECK(tree.require_bool("flag"));
  CHECK(tree.require_int("game.n_subjects") == 4);
  CHECK(tree.require_double_array("game.discounts") == std::vector<double>{1.0, 0.5});
  CHECK(tree.require_int_array("game.budgets") == std::vector<long long>{2, 2});
  const auto bids = tree.require_int_matrix("game.bids");
  REQUIRE(bids.size() == 2);
  CHECK(bids[0] == std::vector<long long>{1, 1, 0, 0});
  CHECK(tree.require_string("game.name") == "a b");
  CHECK_NOTHROW(tree.check_all_consumed());
}

TEST_CASE("config tree promotes integers to doubles but not the reverse") {
  const ConfigTree tree = ConfigTree::parse_string("a = 3\nb = 2.5\n");
  CHECK(tree.require_double("a") == 3.0);
  CHECK_THROWS_AS(tree.require_int("b"), ValidationError);
}

TEST_CASE("config tree rejects malformed input") {
  CHECK_THROWS_AS(ConfigTree::parse_string("a = \n"), ValidationError);
  CHECK_THROWS_AS(ConfigTree::parse_string("a 3\n"), ValidationError);
  CHECK_THROWS_AS(ConfigTree::parse_string("a = [1, 2\n"), ValidationError);
  CHECK_THROWS_AS(ConfigTree::parse_string("a = \"open\n"), ValidationError);
  CHECK_THROWS_AS(ConfigTree::parse_string("a = 1\na = 2\n"), ValidationError);
  CHECK_THROWS_AS(ConfigTree::parse_string("a = 1 2\n"), ValidationError);
}

TEST_CASE("config tree flags unknown and missing keys") {
  const ConfigTree tree = ConfigTree::parse_string("a = 1\nb = 2\n");
  CHECK(tree.require_int("a") == 1);
  CHECK_THROWS_AS(tree.check_all_consumed(), ValidationError);
  CHECK_THROWS_AS(tree.require_int("missing"), ValidationError);
}

namespace {

const char* kEquilibriumConfig = R"(
id = "canonical-demo"
seed = 7
reps = 500

[game]
n_subjects = 4
n_admins = 2
relevance_p = 0.5
discounts = [1.0, 0.5]
budgets = [2, 2]
max_bid = 2
)";

}  // namespace

TEST_CASE("scenario builder reads a nash_verify config") {
  const ConfigTree tree = ConfigTree::parse_string(kEquilibriumConfig);
  const Scenario s = scenario_from_config(tree, ScenarioKind::nash_verify, std::nullopt,
                                          std::nullopt);
  CHECK(s.id == "canonical-demo");
  CHECK(s.master_seed == 7);
  CHECK(s.n_reps == 500);
  REQUIRE(s.game.has_value());
  CHECK(s.game->n_slots == 4);
  CHECK(!s.bids.has_value());
  CHECK(s.resolve_bids().spend(0) == 2);
}

TEST_CASE("seed precedence: override beats the config which beats the default") {
  const ConfigTree with_seed = ConfigTree::parse_string(kEquilibriumConfig);
  CHECK(scenario_from_config(with_seed, ScenarioKind::nash_verify, 99, std::nullopt)
            .master_seed == 99);

  const ConfigTree no_seed = ConfigTree::parse_string(R"(
id = "x"
[game]
n_subjects = 2
n_admins = 2
relevance_p = 0.5
discounts = [1.0, 0.5]
budgets = [1, 1]
max_bid = 1
)");
  CHECK(scenario_from_config(no_seed, ScenarioKind::nash_verify, std::nullopt, std::nullopt)
            .master_seed == kDefaultSeed);
}

TEST_CASE("scenario builder names the first-rank discount violation") {
  const ConfigTree tree = ConfigTree::parse_string(R"(
id = "bad-alpha"
[game]
n_subjects = 2
n_admins = 2
relevance_p = 0.5
discounts = [0.9, 0.5]
budgets = [1, 1]
max_bid = 1
)");
  try {
    scenario_from_config(tree, ScenarioKind::nash_verify, std::nullopt, std::nullopt);
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("alpha_1 = 1") != std::string::npos);
  }
}

TEST_CASE("scenario builder rejects unknown keys") {
  const ConfigTree tree = ConfigTree::parse_string(R"(
id = "typo"
repz = 100
[game]
n_subjects = 2
n_admins = 2
relevance_p = 0.5
discounts = [1.0, 0.5]
budgets = [1, 1]
max_bid = 1
)");
  CHECK_THROWS_AS(scenario_from_config(tree, ScenarioKind::nash_verify, std::nullopt,
                                       std::nullopt),
                  ValidationError);
}

TEST_CASE("scenario builder wires causal scenarios") {
  const ConfigTree tree = ConfigTree::parse_string(R"(
id = "est"
reps = 100
profile = [10, 10]
[model]
tau = 0.8
sigma = 2.0
q = 0.5
discounts = [1.0, 0.5]
)");
  const Scenario s = scenario_from_config(tree, ScenarioKind::estimator_bounds, std::nullopt,
                                          std::nullopt);
  REQUIRE(s.model.has_value());
  CHECK(s.model->n_slots == 20);
  CHECK(s.profile->counts == std::vector<int>{10, 10});
  CHECK_NOTHROW(s.resolve_model().validate());
}
