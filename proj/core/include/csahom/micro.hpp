#pragma once

// Periodic cell solver: equilibration of the fluctuation field, corrector
// problems for the three symmetric in-plane strain modes, volume-averaged
// coefficients (moduli A and stress S), and their sensitivities with respect
// to unit stretch-mode perturbations of the cell state.
//
// A MicroState carries the deformed cell configuration together with the
// accumulated per-quadrature-point deformation gradients; it is advanced
// incrementally by relative in-plane deformations g via micro_step.  States
// are value types: backends copy an initialized reference state per macro
// quadrature point or per cluster centroid.

#include <array>
#include <atomic>
#include <map>
#include <vector>

#include "csahom/linear_solver.hpp"
#include "csahom/material.hpp"
#include "csahom/periodic.hpp"
#include "csahom/tensor.hpp"

namespace csahom {

// ---- strain modes ----------------------------------------------------------

/// Number of stored corrector modes: unit stretches 11, 22 and the symmetric
/// shear (the 12/21 correctors coincide at equilibrated states).
constexpr int kNumModes = 3;

/// Unit mode matrices E^0 = e1(x)e1, E^1 = e2(x)e2, E^2 = sym shear (offdiag 1/2).
Mat2 mode_matrix(int m);

/// Contraction coefficients of a 2x2 tensor against the stored modes:
/// (g11, g22, g12 + g21).  sum_m weights[m] * E^m == sym(g).
Vec3 mode_contraction(const Mat2& g);

// ---- results and parameters ------------------------------------------------

/// Volume-averaged cell coefficients at a state, plus (optionally) their
/// derivatives with respect to the three unit stretch modes.
struct CoefficientSet {
  Tensor4 A;                            // homogenized spatial moduli
  SymTensor2 S = SymTensor2::Zero();    // homogenized Cauchy stress
  std::array<Tensor4, kNumModes> dA;
  std::array<SymTensor2, kNumModes> dS{};
  bool has_sensitivities = false;
};

struct MicroParams {
  std::map<int, MaterialParams> materials;  // mesh region tag -> parameters
  double eps_inner = 1e-9;   // equilibration: |dw| relative to cell coordinate norm
  int max_inner = 20;
  int max_substep_splits = 8;  // halving levels when an increment fails
};

/// Cumulative work counters (shared across threads; all increments atomic).
struct SolveCounters {
  std::atomic<long> micro_steps{0};   // micro_step invocations including substeps
  std::atomic<long> equilibrations{0};
  std::atomic<long> inner_iterations{0};
  std::atomic<long> factorizations{0};
  std::atomic<long> linear_solves{0};
};

// ---- state -----------------------------------------------------------------

struct MicroState {
  PeriodicCell cell;  // current configuration
  MicroParams params;

  std::vector<Vec2> ref_nodes;  // reference coordinates
  double ref_coord_norm = 0.0;  // fixed convergence scale

  /// Accumulated cell-average deformation gradient (the affine carrier).  The
  /// library's drivers keep it exactly symmetric, so the state is labeled by
  /// the stretch Fbar - I with no rotation content.
  Mat2 Fbar = Mat2::Identity();

  std::vector<Mat2> F_qp;               // total deformation gradient per qp
  std::vector<int> qp_offset;           // per element start into F_qp
  std::vector<MaterialParams> mat_of_element;

  std::array<FieldVector, kNumModes> omega;  // corrector fluctuations (full nodal)
  bool correctors_valid = false;

  int n_qp() const { return qp_offset.back(); }
  /// Current periodic fluctuation displacement w = y - Fbar * Y_ref (exact,
  /// periodic by construction); full nodal layout.
  FieldVector fluctuation() const;
};

/// Builds a state at the reference configuration (F = I everywhere).  Throws
/// ConfigError if some element region has no material entry.
MicroState make_micro_state(const PeriodicCell& cell, const MicroParams& params);

// ---- operations ------------------------------------------------------------

/// Tangent operator of the cell problem on the reduced periodic dof space,
/// volume-averaged (assembled from the full spatial moduli at the current
/// state).  Symmetric.
SparseMat assemble_tangent(const MicroState& s);

/// Solves the three corrector problems at the current configuration and
/// stores the fluctuation parts in s.omega.
void solve_correctors(MicroState& s, SolveCounters* counters = nullptr);

/// Volume averages at the current state: homogenized stress S and moduli A
/// (reconstructed from the stored symmetric modes; exact at equilibrated
/// states).  Requires valid correctors.
CoefficientSet homogenized_coefficients(const MicroState& s);

/// Applies a relative in-plane deformation g to the cell: every node moves by
/// dw = g y + sum_m c_m(g) omega^m with c = mode_contraction(g).  The affine
/// part uses g exactly (so cell-average deformations compose multiplicatively
/// and drivers land on their stretch targets exactly); the corrector part sees
/// only sym(g).  Updates per-qp deformation gradients multiplicatively and
/// invalidates the correctors.  Throws InversionError if an element would
/// invert; the state is unchanged in that case.
void micro_update(MicroState& s, const Mat2& g);

/// Newton iteration on the fluctuation field until |dw| relative to the cell
/// coordinate norm is below eps_inner.  Returns the iteration count (an
/// already equilibrated state returns 1).  Throws ConvergenceError when the
/// budget is exhausted.
int equilibrate(MicroState& s, SolveCounters* counters = nullptr);

/// Fills dA/dS in `coeffs` (which must already hold A and S for this state):
/// derivative of the volume averages under the corrector-mode configuration
/// flows V^m = Pi^m + omega^m.
void coefficient_sensitivities(const MicroState& s, CoefficientSet& coeffs);

/// Full advance: update by g (with automatic multiplicative substepping when
/// an increment inverts elements or fails to converge), re-equilibrate,
/// re-solve correctors, and return the coefficients at the new state.
CoefficientSet micro_step(MicroState& s, const Mat2& g, bool with_sensitivities,
                          SolveCounters* counters = nullptr);

}  // namespace csahom
