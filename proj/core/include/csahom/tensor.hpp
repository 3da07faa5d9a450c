#pragma once

// Small tensor value types shared across the library.
//
// The engine is 2D plane strain: deformation gradients are stored as 2x2
// in-plane blocks and embedded into 3x3 with F33 = 1 when constitutive
// quantities are evaluated.  Stress-like symmetric tensors and rank-4 moduli
// are kept full 3x3 / 3x3x3x3 so out-of-plane components (e.g. sigma_33) are
// carried along.

#include <Eigen/Dense>
#include <array>

namespace csahom {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;

/// Symmetric second-order tensor in 3D (stored dense; symmetry is a contract
/// of the producing operation, checked in debug assertions and tests).
using SymTensor2 = Mat3;

/// Dense fourth-order tensor on R^3, zero-initialized.
struct Tensor4 {
  std::array<double, 81> a{};

  double& operator()(int i, int j, int k, int l) { return a[((i * 3 + j) * 3 + k) * 3 + l]; }
  double operator()(int i, int j, int k, int l) const { return a[((i * 3 + j) * 3 + k) * 3 + l]; }

  Tensor4& operator+=(const Tensor4& o);
  Tensor4& operator-=(const Tensor4& o);
  Tensor4& operator*=(double s);
};

Tensor4 operator+(Tensor4 x, const Tensor4& y);
Tensor4 operator-(Tensor4 x, const Tensor4& y);
Tensor4 operator*(double s, Tensor4 x);

/// Largest absolute entry (useful as a scale for relative comparisons).
double max_abs(const Tensor4& t);
double frobenius(const Tensor4& t);

/// Double contraction T_ijkl B_kl.
Mat3 contract_right(const Tensor4& t, const Mat3& b);
/// Double contraction A_ij T_ijkl.
Mat3 contract_left(const Mat3& a, const Tensor4& t);
/// Full contraction A_ij T_ijkl B_kl.
double contract_full(const Mat3& a, const Tensor4& t, const Mat3& b);

/// Push-forward by a rotation: (R x R x R x R) : T.
Tensor4 rotate(const Tensor4& t, const Mat3& r);
/// R S R^T.
Mat3 rotate(const Mat3& s, const Mat3& r);

/// Plane-strain embeddings.
Mat3 embed_deformation(const Mat2& f);  // F33 = 1
Mat3 embed_gradient(const Mat2& g);     // third row/col zero
Mat2 in_plane(const Mat3& m);

/// Right polar decomposition F = R U of an in-plane deformation gradient with
/// det F > 0: U symmetric positive definite, R a proper rotation.  Computed
/// from the spectral decomposition of C = F^T F (exact for 2x2).
struct PolarFactors {
  Mat2 R;
  Mat2 U;
};
PolarFactors polar_decompose(const Mat2& f);

/// Principal square root of a symmetric positive definite 2x2 matrix.
Mat2 sqrt_spd(const Mat2& m);

}  // namespace csahom
