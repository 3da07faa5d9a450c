#pragma once

// Batch simulation driver: executes one configured two-scale run and writes
// all artifacts (iteration metrics, per-qp state and coefficient traces,
// convergence log, centroid table, VTK steps, run metadata, timings) into the
// configured output directory.

#include <string>

#include "csahom/config.hpp"

namespace csahom {

struct RunOutcome {
  int exit_code = 0;   // 0 ok; 2 input/config; 3 macro failure; 4 cell-solve failure
  std::string reason;  // one line, empty on success
};

RunOutcome run_simulation(const RunConfig& cfg);

/// Parse + apply overrides + run; input problems map to exit code 2.
RunOutcome run_simulation_file(const std::string& config_path, const ConfigOverrides& ov = {});

}  // namespace csahom
