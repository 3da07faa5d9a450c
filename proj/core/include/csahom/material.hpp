#pragma once

// Compressible neo-Hookean constitutive kernels and their configuration
// sensitivities.
//
// Strain energy (per unit reference volume):
//   W = K/2 (J - 1)^2 + mu/2 (J^(-2/3) tr b - 3),   b = F F^T,  J = det F.
// Cauchy stress:
//   sigma = K (J - 1) I + mu J^(-5/3) dev b.
//
// Besides the stress and the spatial tangent moduli, this module provides the
// directional derivatives of stress and moduli under a configuration
// perturbation of the current placement, y -> y + tau*V with spatial velocity
// gradient G_ij = dV_i/dy_j.  Under that flow the total deformation gradient
// evolves as F -> (I + tau G) F, so every kernel here is the tau-derivative at
// tau = 0 of its parent quantity along that path.  These are the building
// blocks for the cluster-coefficient sensitivities.
//
// All kernels take the in-plane 2x2 deformation gradient and evaluate in the
// plane-strain embedding (F33 = 1); returned tensors are full 3x3 / 3^4.

#include "csahom/tensor.hpp"

namespace csahom {

struct MaterialParams {
  double K = 0.0;   // bulk modulus
  double mu = 0.0;  // shear modulus
};

/// Deformation state at a point: total in-plane deformation gradient.
struct DefState {
  Mat2 F = Mat2::Identity();
};

/// Spatial gradient of a configuration-perturbation velocity field,
/// G_ij = dV_i/dy_j (in-plane; embedded with zero third row/column).
struct VelocityGrad {
  Mat2 G = Mat2::Zero();
};

/// True (Cauchy) stress.  Requires det F > 0.
SymTensor2 cauchy_stress(const DefState& s, const MaterialParams& m);

/// Kirchhoff stress tau = J sigma.
SymTensor2 kirchhoff_stress(const DefState& s, const MaterialParams& m);

/// Material part of the spatial tangent, D_ijkl = (1/J) F_jq F_lp d^2W/dF_iq dF_kp
/// evaluated in closed form.  Minor- and major-symmetric.
Tensor4 tangent_D(const DefState& s, const MaterialParams& m);

/// Full spatial acoustic-tensor moduli A_ijkl = D_ijkl + sigma_jl delta_ik,
/// the kernel of the updated-Lagrangian weak form.  Major-symmetric only.
Tensor4 tangent_A(const DefState& s, const MaterialParams& m);

/// Jaumann-rate moduli D^JK (closed form).
Tensor4 jaumann_moduli(const DefState& s, const MaterialParams& m);

/// Truesdell-rate Kirchhoff moduli D^TK = D^JK - (1/2)(delta ot tau + ...).
/// Identity D = D^TK / J ties this route to tangent_D (checked in tests, the
/// two are implemented independently).
Tensor4 truesdell_moduli(const DefState& s, const MaterialParams& m);

/// Configuration derivative of the Kirchhoff stress.
SymTensor2 dtau_kirchhoff(const DefState& s, const MaterialParams& m, const VelocityGrad& v);

/// Configuration derivative of the Cauchy stress:
/// delta sigma = (delta tau - tau tr G) / J.
SymTensor2 dtau_cauchy(const DefState& s, const MaterialParams& m, const VelocityGrad& v);

/// Configuration derivative of the Truesdell-rate moduli D^TK.
Tensor4 dtau_truesdell_moduli(const DefState& s, const MaterialParams& m, const VelocityGrad& v);

/// Configuration derivative of the full spatial moduli A:
/// delta A = (delta D^TK - D^TK tr G)/J + (delta sigma)_jl delta_ik.
Tensor4 dtau_A(const DefState& s, const MaterialParams& m, const VelocityGrad& v);

}  // namespace csahom
