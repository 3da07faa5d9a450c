#pragma once

// Direct two-scale backend: one persistent micro state per macro quadrature
// point, driven incrementally in unrotated stretch space.  Per evaluation the
// macro deformation gradient is polar-decomposed, F = R U; the cell is
// advanced by the exact relative map (target U) (current U)^-1 and the
// resulting coefficients are pushed forward by R.  Driving by stretch keeps
// the per-qp chains path-consistent under finite rotations (hyperelastic cell
// equilibria depend only on the total stretch, so any two chains reaching the
// same U agree to solver tolerance).

#include "csahom/macro.hpp"
#include "csahom/micro.hpp"

namespace csahom {

/// Advances a persistent cell state to the exact stretch target and returns
/// the coefficients at that state (unrotated frame).  Shared by the direct
/// backend and the reference replayer so both follow the identical code path.
CoefficientSet advance_to_stretch(MicroState& st, const Mat2& u_target, bool with_sensitivities,
                                  SolveCounters* counters);

class Fe2Backend : public CoefficientBackend {
 public:
  /// `n_qp` persistent states are copied from one initialized reference state.
  Fe2Backend(const PeriodicCell& cell, const MicroParams& params, int n_qp, int threads,
             SolveCounters* counters = nullptr);

  void get_coefficients(const std::vector<Mat2>& f_qp, CoefficientField& out) override;
  long micro_solves() const override { return counters_->micro_steps.load(); }

  const MicroState& state_at(int qp) const { return states_[static_cast<size_t>(qp)]; }

 private:
  std::vector<MicroState> states_;
  int threads_;
  SolveCounters own_;
  SolveCounters* counters_;
};

}  // namespace csahom
