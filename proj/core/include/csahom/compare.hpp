#pragma once

// Error quantification of an approximate run against the full cell model.
// Run A's recorded per-qp deformation-gradient chains are replayed through
// the full solver (one persistent cell per qp, driven in stretch space, the
// same code path the direct backend uses); the recorded coefficients are then
// compared record by record.  Macro displacements are compared against a
// second run B (typically a direct-method run of the same case).

#include <map>
#include <string>
#include <vector>

namespace csahom {

struct CompareOptions {
  std::vector<std::string> probes;  // empty: every probe recorded by run A
  int threads = 0;
};

struct CompareResult {
  int exit_code = 0;  // 0 ok, 2 incompatible or unreadable runs
  std::string reason;

  // Relative errors: per component |x_a - x_ref| / (Frobenius norm of the
  // reference tensor), exact zeros over zeros count as zero.
  double max_err_S = 0.0;  // over every record, quadrature point, component
  double max_err_A = 0.0;
  double cum_err_S = 0.0;  // sum over records of the per-record probe maximum
  double cum_err_A = 0.0;
  std::map<std::string, double> probe_cum_S;
  std::map<std::string, double> probe_cum_A;

  std::vector<double> u_err;  // per step: max over probes of |uA-uB|/|uB|

  long records = 0;  // (step, iter) blocks replayed
  long replay_micro_steps = 0;
};

/// Writes compare_metrics.csv and compare_summary.json into dir_a.
CompareResult compare_runs(const std::string& dir_a, const std::string& dir_b,
                           const CompareOptions& opt = {});

}  // namespace csahom
