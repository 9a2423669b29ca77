#include "bidrank/scenario.hpp"

#include <algorithm>
#include <cmath>

namespace bidrank {

std::string kind_name(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::simulate: return "simulate";
    case ScenarioKind::utility_report: return "utility";
    case ScenarioKind::nash_verify: return "nash_verify";
    case ScenarioKind::nash_enumerate: return "nash_enumerate";
    case ScenarioKind::approx_nash: return "approx_nash";
    case ScenarioKind::concentration: return "concentration";
    case ScenarioKind::estimator_bounds: return "estimator_bounds";
    case ScenarioKind::data_splitting: return "data_splitting";
    case ScenarioKind::minimax_curve: return "minimax_curve";
  }
  return "unknown";
}

namespace {

bool needs_game(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::simulate:
    case ScenarioKind::utility_report:
    case ScenarioKind::nash_verify:
    case ScenarioKind::nash_enumerate:
    case ScenarioKind::approx_nash:
    case ScenarioKind::concentration:
      return true;
    default:
      return false;
  }
}

bool needs_model(ScenarioKind kind) {
  return kind == ScenarioKind::estimator_bounds || kind == ScenarioKind::data_splitting ||
         kind == ScenarioKind::minimax_curve;
}

}  // namespace

void Scenario::validate() const {
  if (id.empty()) throw ValidationError("scenario: id must be nonempty");
  if (n_reps < 1) throw ValidationError("scenario: reps must be >= 1");

  if (needs_game(kind)) {
    if (!game) throw ValidationError("scenario: [game] section required for " + kind_name(kind));
    game->validate();
    if (bids) bids->validate(*game);
    if (target_admin >= 0 && target_admin >= game->n_admins)
      throw ValidationError("scenario: admin index out of range");
  }
  if (kind == ScenarioKind::concentration && epsilons.empty())
    throw ValidationError("scenario: concentration needs at least one epsilon");
  for (double e : epsilons)
    if (!(e > 0.0)) throw ValidationError("scenario: epsilons must be > 0");

  if (needs_model(kind)) {
    if (!model) throw ValidationError("scenario: [model] section required for " + kind_name(kind));
    if (kind != ScenarioKind::minimax_curve) {
      if (!profile || profile->counts.empty())
        throw ValidationError("scenario: profile required for " + kind_name(kind));
      if (profile->counts.size() != model->discounts.size())
        throw ValidationError("scenario: profile length must match the discount vector");
      for (int c : profile->counts)
        if (c < 0) throw ValidationError("scenario: profile counts must be >= 0");
      resolve_model();  // full coefficient validation
    } else if (curve_s.empty()) {
      throw ValidationError("scenario: minimax_curve needs a sample-value grid");
    }
  }
  if (kind == ScenarioKind::data_splitting && fractions.empty())
    throw ValidationError("scenario: data_splitting needs split fractions");
}

BidMatrix Scenario::resolve_bids() const {
  if (!game) throw ValidationError("scenario: no game configured");
  if (bids) return *bids;
  return build_canonical_equilibrium(*game);
}

OutcomesModel Scenario::resolve_model() const {
  if (!model) throw ValidationError("scenario: no model configured");
  ModelParams params = *model;
  if (params.n_slots == 0 && profile) params.n_slots = profile->total();
  params.seed = derive_seed(master_seed, kOutcomeStream, 0x0Du);
  return make_outcomes_model(params);
}

Scenario scenario_from_config(const ConfigTree& tree, ScenarioKind kind,
                              std::optional<std::uint64_t> seed_override,
                              std::optional<long long> reps_override) {
  Scenario s;
  s.kind = kind;
  s.id = tree.require_string("id");
  // Reads always consume the keys so overrides do not leave them flagged unknown.
  const auto config_seed =
      static_cast<std::uint64_t>(tree.get_int("seed", static_cast<long long>(kDefaultSeed)));
  const long long config_reps = tree.get_int("reps", 10000);
  s.master_seed = seed_override ? *seed_override : config_seed;
  s.n_reps = reps_override ? *reps_override : config_reps;

  if (tree.has("game.n_subjects") || needs_game(kind)) {
    GameConfig cfg;
    cfg.n_slots = static_cast<int>(tree.require_int("game.n_subjects"));
    cfg.n_admins = static_cast<int>(tree.require_int("game.n_admins"));
    cfg.relevance = tree.require_double("game.relevance_p");
    cfg.discounts = tree.require_double_array("game.discounts");
    for (long long b : tree.require_int_array("game.budgets"))
      cfg.budgets.push_back(static_cast<int>(b));
    cfg.max_bid = static_cast<int>(tree.get_int("game.max_bid", 1));
    s.game = std::move(cfg);
  }

  const std::string bids_key = tree.has("game.bids") ? "game.bids" : "bids";
  if (tree.has(bids_key)) {
    const auto rows = tree.require_int_matrix(bids_key);
    std::vector<std::vector<int>> bid_rows;
    for (const auto& row : rows) {
      std::vector<int> r;
      for (long long v : row) r.push_back(static_cast<int>(v));
      bid_rows.push_back(std::move(r));
    }
    s.bids = BidMatrix::from_rows(bid_rows);
  }

  const std::string objective = tree.get_string("objective.kind", "exact_sv");
  if (objective == "exact_sv") {
    s.objective = Objective::exact_sv;
  } else if (objective == "mc_mse") {
    s.objective = Objective::mc_mse;
  } else {
    throw ValidationError("scenario: objective.kind must be exact_sv or mc_mse");
  }

  s.audit_epsilon = tree.get_double("audit.epsilon", 0.0);
  if (tree.has("concentration.epsilons"))
    s.epsilons = tree.require_double_array("concentration.epsilons");
  s.target_admin = static_cast<int>(tree.get_int("admin", 0)) - 1;  // 1-based in configs

  if (tree.has("model.tau") || needs_model(kind)) {
    ModelParams params;
    // The curve kind only evaluates the closed-form floor; tau plays no role there.
    params.tau = kind == ScenarioKind::minimax_curve ? tree.get_double("model.tau", 0.0)
                                                     : tree.require_double("model.tau");
    params.sigma = tree.require_double("model.sigma");
    params.q = tree.require_double("model.q");
    params.baseline = tree.get_double("model.baseline", 0.0);
    params.heterogeneity = tree.get_double("model.heterogeneity", 0.0);
    params.heterogeneous_q = tree.get_bool("model.heterogeneous_q", false);
    params.discounts = tree.has("model.discounts")
                           ? tree.require_double_array("model.discounts")
                           : (s.game ? s.game->discounts : std::vector<double>{});
    if (params.discounts.empty())
      throw ValidationError("scenario: model.discounts required when no [game] is given");
    s.model = std::move(params);
  }

  if (tree.has("profile")) {
    SampleProfile p;
    for (long long c : tree.require_int_array("profile"))
      p.counts.push_back(static_cast<int>(c));
    s.profile = std::move(p);
    if (s.model && s.model->n_slots == 0) s.model->n_slots = s.profile->total();
  }

  if (tree.has("splitting.fractions"))
    s.fractions = tree.require_double_array("splitting.fractions");

  if (tree.has("curve.s_values")) {
    s.curve_s = tree.require_double_array("curve.s_values");
  } else if (tree.has("curve.s_min")) {
    const double lo = tree.require_double("curve.s_min");
    const double hi = tree.require_double("curve.s_max");
    const long long steps = tree.require_int("curve.s_steps");
    if (!(lo > 0.0 && hi > lo && steps >= 2))
      throw ValidationError("scenario: curve grid needs 0 < s_min < s_max and s_steps >= 2");
    for (long long i = 0; i < steps; ++i)  // geometric spacing
      s.curve_s.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (steps - 1.0)));
  }

  if (tree.has("sweep.axis")) {
    SweepSpec spec;
    spec.axis = tree.require_string("sweep.axis");
    spec.values = tree.require_double_array("sweep.values");
    spec.n_per_budget = static_cast<int>(tree.get_int("sweep.n_per_budget", 0));
    s.sweep = std::move(spec);
  }

  tree.check_all_consumed();
  s.validate();
  return s;
}

}  // namespace bidrank
