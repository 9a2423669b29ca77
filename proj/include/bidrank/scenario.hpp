#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bidrank/causal.hpp"
#include "bidrank/config_tree.hpp"
#include "bidrank/equilibrium.hpp"
#include "bidrank/game.hpp"

namespace bidrank {

enum class ScenarioKind {
  simulate,
  utility_report,
  nash_verify,
  nash_enumerate,
  approx_nash,
  concentration,
  estimator_bounds,
  data_splitting,
  minimax_curve,
};

std::string kind_name(ScenarioKind kind);

struct SweepSpec {
  std::string axis;            // "budget" or "epsilon"
  std::vector<double> values;
  int n_per_budget = 0;        // budget axis: rescale n_subjects = v * n_per_budget when > 0
};

// A fully validated experiment description; everything the runner needs.
struct Scenario {
  std::string id;
  ScenarioKind kind = ScenarioKind::nash_verify;
  std::uint64_t master_seed = kDefaultSeed;
  long long n_reps = 10000;

  std::optional<GameConfig> game;
  std::optional<BidMatrix> bids;  // absent: the nash_verify family builds the canonical profile
  Objective objective = Objective::exact_sv;

  double audit_epsilon = 0.0;       // approx_nash; <= 0 picks k/sqrt(min budget)
  std::vector<double> epsilons;     // concentration
  int target_admin = -1;            // -1: every admin

  std::optional<ModelParams> model;       // causal scenarios
  std::optional<SampleProfile> profile;   // estimator_bounds / data_splitting
  std::vector<double> fractions;          // data_splitting
  std::vector<double> curve_s;            // minimax_curve sample-value grid

  std::optional<SweepSpec> sweep;

  void validate() const;

  // Realizes the bid profile: explicit bids when given, else the canonical
  // construction.
  BidMatrix resolve_bids() const;

  // Builds the outcomes model over the profile's slot count.
  OutcomesModel resolve_model() const;
};

// Reads one scenario from a config tree. `kind` comes from the CLI subcommand.
// Seed precedence: explicit override > config file > kDefaultSeed.
Scenario scenario_from_config(const ConfigTree& tree, ScenarioKind kind,
                              std::optional<std::uint64_t> seed_override,
                              std::optional<long long> reps_override);

}  // namespace bidrank
