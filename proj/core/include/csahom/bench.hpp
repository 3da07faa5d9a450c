#pragma once

// Method-comparison driver: executes a small matrix of runs (one base config,
// per-run method and parameter overrides), collects their timing and work
// counters, and writes a consolidated report.
//
// Matrix file format ('#' comments):
//   base = path/to/base.cfg
//   run fe2
//   run csa rho=0.005
//   run pod delta=0.02 seed=7
// Supported override keys: rho, delta, seed, steps, threads.

#include <string>
#include <vector>

#include "csahom/runner.hpp"

namespace csahom {

struct BenchCase {
  std::string label;
  std::string method;
  RunOutcome outcome;
  double total_s = 0.0;
  double offline_s = 0.0;
  double coefficients_s = 0.0;
  long micro_solves = 0;
  long adaptations = 0;
  int steps_done = 0;
};

struct BenchReport {
  int exit_code = 0;  // first nonzero case code; 2 on matrix parse problems
  std::string reason;
  std::vector<BenchCase> cases;
};

/// Runs every case (failures don't stop the matrix); writes
/// bench_report.json into out_dir alongside the per-case run directories.
BenchReport run_bench(const std::string& matrix_path, const std::string& out_dir,
                      int threads = -1);

}  // namespace csahom
