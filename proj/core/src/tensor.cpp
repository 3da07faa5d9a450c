#include "csahom/tensor.hpp"

#include <cmath>

#include "csahom/error.hpp"

namespace csahom {

Tensor4& Tensor4::operator+=(const Tensor4& o) {
  for (int n = 0; n < 81; ++n) a[n] += o.a[n];
  return *this;
}

Tensor4& Tensor4::operator-=(const Tensor4& o) {
  for (int n = 0; n < 81; ++n) a[n] -= o.a[n];
  return *this;
}

Tensor4& Tensor4::operator*=(double s) {
  for (int n = 0; n < 81; ++n) a[n] *= s;
  return *this;
}

Tensor4 operator+(Tensor4 x, const Tensor4& y) { return x += y; }
Tensor4 operator-(Tensor4 x, const Tensor4& y) { return x -= y; }
Tensor4 operator*(double s, Tensor4 x) { return x *= s; }

double max_abs(const Tensor4& t) {
  double m = 0.0;
  for (double v : t.a) m = std::max(m, std::abs(v));
  return m;
}

double frobenius(const Tensor4& t) {
  double s = 0.0;
  for (double v : t.a) s += v * v;
  return std::sqrt(s);
}

Mat3 contract_right(const Tensor4& t, const Mat3& b) {
  Mat3 r = Mat3::Zero();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double s = 0.0;
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) s += t(i, j, k, l) * b(k, l);
      r(i, j) = s;
    }
  return r;
}

Mat3 contract_left(const Mat3& a, const Tensor4& t) {
  Mat3 r = Mat3::Zero();
  for (int k = 0; k < 3; ++k)
    for (int l = 0; l < 3; ++l) {
      double s = 0.0;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) s += a(i, j) * t(i, j, k, l);
      r(k, l) = s;
    }
  return r;
}

double contract_full(const Mat3& a, const Tensor4& t, const Mat3& b) {
  double s = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      if (a(i, j) == 0.0) continue;
      double inner = 0.0;
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) inner += t(i, j, k, l) * b(k, l);
      s += a(i, j) * inner;
    }
  return s;
}

Tensor4 rotate(const Tensor4& t, const Mat3& r) {
  // Two-stage contraction keeps this O(3^5) instead of O(3^8).
  Tensor4 half;  // half(i,j,k,l) = R_ip R_jq t(p,q,k,l)
  for (int k = 0; k < 3; ++k)
    for (int l = 0; l < 3; ++l)
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
          double s = 0.0;
          for (int p = 0; p < 3; ++p)
            for (int q = 0; q < 3; ++q) s += r(i, p) * r(j, q) * t(p, q, k, l);
          half(i, j, k, l) = s;
        }
  Tensor4 out;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) {
          double s = 0.0;
          for (int p = 0; p < 3; ++p)
            for (int q = 0; q < 3; ++q) s += r(k, p) * r(l, q) * half(i, j, p, q);
          out(i, j, k, l) = s;
        }
  return out;
}

Mat3 rotate(const Mat3& s, const Mat3& r) { return r * s * r.transpose(); }

Mat3 embed_deformation(const Mat2& f) {
  Mat3 out = Mat3::Identity();
  out.topLeftCorner<2, 2>() = f;
  return out;
}

Mat3 embed_gradient(const Mat2& g) {
  Mat3 out = Mat3::Zero();
  out.topLeftCorner<2, 2>() = g;
  return out;
}

Mat2 in_plane(const Mat3& m) { return m.topLeftCorner<2, 2>(); }

PolarFactors polar_decompose(const Mat2& f) {
  const double det = f.determinant();
  if (!(det > 0.0)) throw InversionError("polar_decompose", -1, det);
  // Spectral decomposition of C = F^T F (symmetric positive definite).
  const Mat2 c = f.transpose() * f;
  Eigen::SelfAdjointEigenSolver<Mat2> es(c);
  const Vec2 lam = es.eigenvalues();
  const Mat2 q = es.eigenvectors();
  Mat2 u = q * Vec2(std::sqrt(lam[0]), std::sqrt(lam[1])).asDiagonal() * q.transpose();
  u = 0.5 * (u + u.transpose());  // scrub roundoff asymmetry
  PolarFactors pf;
  pf.U = u;
  pf.R = f * u.inverse();
  // Re-orthonormalize R against accumulated roundoff: nearest rotation to R.
  const double a = pf.R(0, 0) + pf.R(1, 1);
  const double b = pf.R(1, 0) - pf.R(0, 1);
  const double n = std::hypot(a, b);
  if (n > 0.0) {
    const double ca = a / n, sb = b / n;
    pf.R << ca, -sb, sb, ca;
  }
  return pf;
}

Mat2 sqrt_spd(const Mat2& m) {
  Eigen::SelfAdjointEigenSolver<Mat2> es(m);
  const Vec2 lam = es.eigenvalues();
  if (!(lam[0] > 0.0)) throw Error("sqrt_spd: matrix not positive definite");
  const Mat2 q = es.eigenvectors();
  Mat2 r = q * Vec2(std::sqrt(lam[0]), std::sqrt(lam[1])).asDiagonal() * q.transpose();
  return 0.5 * (r + r.transpose());
}

}  // namespace csahom
