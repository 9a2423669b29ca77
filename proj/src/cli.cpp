#include "bidrank/cli.hpp"

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "bidrank/runner.hpp"

namespace bidrank {

namespace {

struct SubcommandSpec {
  const char* name;
  const char* description;
  ScenarioKind kind;
};

constexpr SubcommandSpec kSubcommands[] = {
    {"simulate", "Sample the allocation process and compare rank frequencies to the exact law",
     ScenarioKind::simulate},
    {"utility", "Exact, closed-form and Monte Carlo utilities for a bid profile",
     ScenarioKind::utility_report},
    {"equilibrium", "Verify a bid profile (default: the canonical construction) as a pure equilibrium",
     ScenarioKind::nash_verify},
    {"enumerate-nash", "Exhaustively enumerate pure equilibria of a small game",
     ScenarioKind::nash_enumerate},
    {"approx-nash", "Audit a profile as an approximate equilibrium of the error objective",
     ScenarioKind::approx_nash},
    {"concentration", "Empirical sample-value tails against the bounded-differences bound",
     ScenarioKind::concentration},
    {"estimator", "Per-rank estimator bias/variance and the combined-pipeline error bounds",
     ScenarioKind::estimator_bounds},
    {"data-splitting", "First-rank-only estimation versus splitting data to learn the discounts",
     ScenarioKind::data_splitting},
    {"minimax-curve", "Worst-case error floor as a function of the sample value",
     ScenarioKind::minimax_curve},
};

ScenarioKind kind_from_cli_name(const std::string& name) {
  for (const auto& spec : kSubcommands)
    if (name == spec.name) return spec.kind;
  throw ValidationError("sweep: unknown base subcommand '" + name + "'");
}

void write_one(const RunReport& report, const std::string& out_dir, const std::string& format) {
  namespace fs = std::filesystem;
  const fs::path path = fs::path(out_dir) / (report.scenario_id + "." + format);
  if (format == "json")
    write_report_json(report, path.string());
  else
    write_report_csv(report, path.string());
  std::cerr << "wrote " << path.string() << "\n";
}

}  // namespace

int parse_and_dispatch(int argc, const char* const* argv) {
  CLI::App app{"Budget-bidding rank-allocation workbench: equilibrium checks and "
               "treatment-effect estimation experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";
  std::string format = "csv";
  std::uint64_t seed = 0;
  long long reps = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Scenario config file")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "Master seed override (wins over the config file)");
    sub->add_option("--reps", reps, "Replication count override")->check(CLI::PositiveNumber);
    sub->add_option("--out", out_dir, "Output directory")->capture_default_str();
    sub->add_option("--format", format, "Report format")
        ->capture_default_str()
        ->check(CLI::IsMember({"csv", "json"}));
  };

  for (const auto& spec : kSubcommands) add_common(app.add_subcommand(spec.name, spec.description));
  add_common(app.add_subcommand("sweep", "Re-run a base scenario across a parameter axis"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
    std::cerr << "error: validation: " << e.what() << "\n";
    return 1;
  }

  CLI::App* sub = app.get_subcommands().front();
  std::optional<std::uint64_t> seed_override;
  if (sub->count("--seed")) seed_override = seed;
  std::optional<long long> reps_override;
  if (sub->count("--reps")) reps_override = reps;

  try {
    const ConfigTree tree = ConfigTree::parse_file(config_path);
    if (sub->get_name() == "sweep") {
      const ScenarioKind base_kind = kind_from_cli_name(tree.require_string("sweep.base"));
      const Scenario base = scenario_from_config(tree, base_kind, seed_override, reps_override);
      if (!base.sweep)
        throw ValidationError("sweep: the config needs [sweep] axis and values");
      const SweepResult result = run_sweep(base, *base.sweep);
      for (const auto& report : result.reports) write_one(report, out_dir, format);
      write_one(result.summary, out_dir, format);
    } else {
      const Scenario scenario =
          scenario_from_config(tree, kind_from_cli_name(sub->get_name()), seed_override,
                               reps_override);
      write_one(run_scenario(scenario), out_dir, format);
    }
    return 0;
  } catch (const GuardError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "error: validation: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace bidrank
