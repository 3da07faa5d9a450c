#pragma once

// Reduced-order cell model.  Offline, the full solver is driven along six
// uniaxial/shear stretch ramps and the accumulated periodic fluctuations are
// collected as snapshot columns; an orthonormal basis is extracted from the
// dominant eigenpairs of the snapshot correlation.  Online, equilibration and
// corrector solves are Galerkin-projected onto that basis (dense M x M
// systems), while element integration, coefficients, and substepping reuse
// the full machinery.

#include <cstdint>
#include <string>
#include <vector>

#include "csahom/macro.hpp"
#include "csahom/micro.hpp"

namespace csahom {

struct PodParams {
  double delta = 0.02;       // eigenvalue-tail truncation tolerance
  int n_t = 10;              // snapshots per ramp, including the undeformed state
  double bound_min = -0.015; // ramp end amplitude, contraction side
  double bound_max = 0.015;  // ramp end amplitude, extension side
  bool force_dense = false;  // eigen-decompose the full-space correlation instead
  std::string basis_file;    // optional basis cache path ("" = rebuild every run)
};

/// Accumulated-fluctuation snapshots: one column per (ramp, load level),
/// column index = ramp * n_t + level, level 0 being the zero state.  Ramps in
/// order 11-min, 11-max, 22-min, 22-max, 12-min, 12-max.
struct SnapshotBank {
  Eigen::MatrixXd V;  // n_reduced x (6 n_t)
  int n_t = 0;
  double bound_min = 0.0, bound_max = 0.0;
  std::uint64_t mesh_checksum = 0;
};

SnapshotBank generate_snapshots(const PeriodicCell& cell, const MicroParams& mp,
                                const PodParams& pp, int threads,
                                SolveCounters* counters = nullptr);

struct ReducedBasis {
  Eigen::MatrixXd phi;          // n_reduced x M, orthonormal columns
  Eigen::VectorXd eigenvalues;  // full correlation spectrum, descending
  double delta = 0.0;
  std::uint64_t mesh_checksum = 0;
  int n_modes() const { return static_cast<int>(phi.cols()); }
};

/// Keeps the smallest M with sqrt(tail energy / total energy) < delta; for
/// delta <= 0 keeps every mode above the numerical-rank threshold, i.e. the
/// basis spans the whole snapshot space.  `force_dense` computes the same
/// spectrum from the full-space correlation (expensive; for diagnostics).
ReducedBasis build_basis(const SnapshotBank& bank, double delta, bool force_dense = false);

void save_basis(const ReducedBasis& basis, const std::string& path);
/// Throws Error if the file is missing or malformed.
ReducedBasis load_basis(const std::string& path);

/// One persistent cell driven with basis-projected solves.  Copies share the
/// (externally owned) basis.
class ReducedCellSolver {
 public:
  ReducedCellSolver(const PeriodicCell& cell, const MicroParams& mp, const ReducedBasis* basis);

  /// Reduced counterpart of micro_step: relative map, substepping included.
  CoefficientSet step(const Mat2& g, SolveCounters* counters = nullptr);
  /// Drives to the exact stretch target (relative map from the current state).
  CoefficientSet advance_to_stretch(const Mat2& u_target, SolveCounters* counters = nullptr);

  const MicroState& state() const { return st_; }

 private:
  void reduced_equilibrate(SolveCounters* counters);
  void reduced_correctors(SolveCounters* counters);

  MicroState st_;
  const ReducedBasis* basis_;
};

class PodBackend : public CoefficientBackend {
 public:
  PodBackend(const PeriodicCell& cell, const MicroParams& mp, const ReducedBasis& basis, int n_qp,
             int threads, SolveCounters* counters = nullptr);

  void get_coefficients(const std::vector<Mat2>& f_qp, CoefficientField& out) override;
  long micro_solves() const override { return counters_->micro_steps.load(); }

 private:
  ReducedBasis basis_;
  std::vector<ReducedCellSolver> solvers_;
  int threads_;
  SolveCounters own_;
  SolveCounters* counters_;
};

}  // namespace csahom
