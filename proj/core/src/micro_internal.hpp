#pragma once

// Internal working set shared by the micro-solver phases (and reused by the
// reduced-basis solver).  Not installed.

#include <Eigen/Sparse>
#include <array>
#include <vector>

#include "csahom/micro.hpp"

namespace csahom::detail {

struct QpData {
  ShapeGradients shp;  // at the current configuration
  double wdet = 0.0;
  Mat3 sigma = Mat3::Zero();
  Tensor4 amod;
};

struct MicroScratch {
  std::vector<QpData> qp;
  double volume = 0.0;
  std::vector<std::array<Mat2, kNumModes>> gxi;  // corrector-mode gradients per qp
  std::vector<Eigen::Triplet<double>> trips;
};

/// Evaluates shape data, stress and moduli at every quadrature point of the
/// current configuration.
void prepare(const MicroState& s, MicroScratch& sc);

/// Reduced-space tangent (includes the 1/|Y| average factor).
SparseMat assemble_from_scratch(const MicroState& s, MicroScratch& sc);

/// Out-of-balance load of the fluctuation problem: rhs[dof] = -avg sigma:grad.
Eigen::VectorXd residual_rhs(const MicroState& s, const MicroScratch& sc);

/// Corrector loads for the three stored strain modes.
std::array<Eigen::VectorXd, kNumModes> corrector_rhs(const MicroState& s, const MicroScratch& sc);

/// Moves nodes by dw and composes per-qp deformation gradients with the
/// increment; checks element inversion before mutating.  When `sc` is given,
/// its shape data (which must match the pre-move configuration) is reused.
void apply_displacement(MicroState& s, const FieldVector& dw, const MicroScratch* sc,
                        const char* where);

int equilibrate_impl(MicroState& s, MicroScratch& sc, SolveCounters* counters);
/// Requires `sc` freshly prepared at the current configuration.
void solve_correctors_impl(MicroState& s, MicroScratch& sc, SolveCounters* counters);
void coefficients_impl(const MicroState& s, MicroScratch& sc, CoefficientSet& out);
void sensitivities_impl(const MicroState& s, MicroScratch& sc, CoefficientSet& out);

/// Fills sc.gxi with E^m + grad omega^m at every qp.
void compute_gxi(const MicroState& s, MicroScratch& sc);

/// In-plane bilinear kernel T_pqkl gu_kl gv_pq.
double bil(const Tensor4& t, const Mat2& gu, const Mat2& gv);

/// Projection of a rank-4 tensor onto the stored symmetric modes
/// (mean over index-order representatives).
Eigen::Matrix3d symmetric_mode_projection(const Tensor4& t);

/// Expands mode-space values plus a stress-like geometric part to the full
/// rank-4 tensor A_ijkl = expand(ms - proj(geom)) + s_jl delta_ik.
Tensor4 reconstruct_full(const Eigen::Matrix3d& ms, const Mat3& svals);

/// Principal square root of a 2x2 map with positive determinant (used for
/// multiplicative substep splitting): X with X*X = a.
Mat2 sqrt_map(const Mat2& a);

}  // namespace csahom::detail
