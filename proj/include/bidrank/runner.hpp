#pragma once

#include <vector>

#include "bidrank/report.hpp"
#include "bidrank/scenario.hpp"

namespace bidrank {

// Executes one scenario. All randomness is derived from the scenario's master
// seed and id, so identical (scenario, seed) pairs reproduce every payload
// number bit-for-bit.
RunReport run_scenario(const Scenario& scenario);

struct SweepResult {
  std::vector<RunReport> reports;  // one per axis value
  RunReport summary;               // per-value series plus trend checks
};

// Re-runs the scenario across an axis. "budget" sets every admin's budget to the
// value (and n_subjects = value * n_per_budget when configured); "epsilon"
// replaces the concentration epsilon list with the single value.
SweepResult run_sweep(const Scenario& base, const SweepSpec& spec);

}  // namespace bidrank
