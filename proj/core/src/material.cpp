#include "csahom/material.hpp"

#include <cmath>

#include "csahom/error.hpp"

namespace csahom {

namespace {

constexpr double kThird = 1.0 / 3.0;

struct Kinematics {
  double J;
  Mat3 b;      // left Cauchy-Green, plane strain (b33 = 1)
  double trb;
  double Jm23; // J^(-2/3)
  double Jm53; // J^(-5/3)
};

Kinematics kinematics(const DefState& s) {
  Kinematics k;
  k.J = s.F.determinant();
  if (!(k.J > 0.0)) throw InversionError("material kinematics", -1, k.J);
  const Mat3 f = embed_deformation(s.F);
  k.b = f * f.transpose();
  k.trb = k.b.trace();
  k.Jm23 = std::pow(k.J, -2.0 / 3.0);
  k.Jm53 = k.Jm23 / k.J;
  return k;
}

inline double kron(int i, int j) { return i == j ? 1.0 : 0.0; }

// The b-dependent bracket of the Jaumann-rate moduli; linear in its argument,
// so it also serves for the configuration derivative with c = delta b.
Tensor4 jaumann_bracket(const Mat3& c, double trc) {
  Tensor4 t;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) {
          double v = (2.0 / 9.0) * trc * kron(i, j) * kron(k, l);
          v -= (2.0 / 3.0) * (c(i, j) * kron(k, l) + kron(i, j) * c(k, l));
          v += 0.5 * (kron(i, k) * c(l, j) + c(i, l) * kron(j, k) +
                      kron(i, l) * c(k, j) + c(i, k) * kron(j, l));
          t(i, j, k, l) = v;
        }
  return t;
}

// (1/2)(delta_ik t_lj + t_il delta_jk + delta_il t_kj + t_ik delta_jl) for a
// symmetric t; the geometric bracket shared by the Truesdell-rate kernels.
Tensor4 stress_bracket(const Mat3& t) {
  Tensor4 out;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l)
          out(i, j, k, l) = 0.5 * (kron(i, k) * t(l, j) + t(i, l) * kron(j, k) +
                                   kron(i, l) * t(k, j) + t(i, k) * kron(j, l));
  return out;
}

}  // namespace

SymTensor2 cauchy_stress(const DefState& s, const MaterialParams& m) {
  const Kinematics k = kinematics(s);
  const Mat3 devb = k.b - kThird * k.trb * Mat3::Identity();
  return m.K * (k.J - 1.0) * Mat3::Identity() + m.mu * k.Jm53 * devb;
}

SymTensor2 kirchhoff_stress(const DefState& s, const MaterialParams& m) {
  const Kinematics k = kinematics(s);
  const Mat3 devb = k.b - kThird * k.trb * Mat3::Identity();
  return m.K * k.J * (k.J - 1.0) * Mat3::Identity() + m.mu * k.Jm23 * devb;
}

Tensor4 tangent_D(const DefState& s, const MaterialParams& m) {
  const Kinematics k = kinematics(s);
  Tensor4 d;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int kk = 0; kk < 3; ++kk)
        for (int l = 0; l < 3; ++l) {
          double v = m.K * (2.0 * k.J - 1.0) * kron(i, j) * kron(kk, l);
          v -= m.K * (k.J - 1.0) * (kron(i, kk) * kron(l, j) + kron(i, l) * kron(j, kk));
          double nh = (2.0 / 9.0) * k.trb * kron(i, j) * kron(kk, l);
          nh -= (2.0 / 3.0) * (k.b(i, j) * kron(kk, l) + kron(i, j) * k.b(kk, l));
          nh += kThird * k.trb * (kron(i, kk) * kron(l, j) + kron(i, l) * kron(j, kk));
          v += m.mu * k.Jm53 * nh;
          d(i, j, kk, l) = v;
        }
  return d;
}

Tensor4 tangent_A(const DefState& s, const MaterialParams& m) {
  const SymTensor2 sig = cauchy_stress(s, m);
  Tensor4 a = tangent_D(s, m);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int l = 0; l < 3; ++l) a(i, j, i, l) += sig(j, l);
  return a;
}

Tensor4 jaumann_moduli(const DefState& s, const MaterialParams& m) {
  const Kinematics k = kinematics(s);
  Tensor4 t = jaumann_bracket(k.b, k.trb);
  t *= m.mu * k.Jm23;
  const double vol = m.K * (2.0 * k.J - 1.0) * k.J;
  for (int i = 0; i < 3; ++i)
    for (int kk = 0; kk < 3; ++kk) t(i, i, kk, kk) += vol;
  return t;
}

Tensor4 truesdell_moduli(const DefState& s, const MaterialParams& m) {
  const SymTensor2 tau = kirchhoff_stress(s, m);
  return jaumann_moduli(s, m) - stress_bracket(tau);
}

SymTensor2 dtau_kirchhoff(const DefState& s, const MaterialParams& m, const VelocityGrad& v) {
  const Kinematics k = kinematics(s);
  const Mat3 g = embed_gradient(v.G);
  const double divv = v.G.trace();  // third row/col of G are zero
  const Mat3 devb = k.b - kThird * k.trb * Mat3::Identity();
  const Mat3 gb = g * k.b;
  const double trgb = gb.trace();
  Mat3 out = m.K * (2.0 * k.J - 1.0) * k.J * divv * Mat3::Identity();
  out -= (2.0 / 3.0) * m.mu * k.Jm23 * divv * devb;
  out += m.mu * k.Jm23 * (gb + gb.transpose() - (2.0 / 3.0) * trgb * Mat3::Identity());
  return out;
}

SymTensor2 dtau_cauchy(const DefState& s, const MaterialParams& m, const VelocityGrad& v) {
  const Kinematics k = kinematics(s);
  const double divv = v.G.trace();
  const SymTensor2 tau = kirchhoff_stress(s, m);
  return (dtau_kirchhoff(s, m, v) - divv * tau) / k.J;
}

namespace {

// Configuration derivative of the Jaumann-rate moduli (an intermediate shared
// by dtau_truesdell_moduli; not part of the public surface).
Tensor4 dtau_jaumann(const Kinematics& k, const MaterialParams& m, const VelocityGrad& v) {
  const Mat3 g = embed_gradient(v.G);
  const double divv = v.G.trace();
  const Mat3 gb = g * k.b;
  const Mat3 db = gb + gb.transpose();  // delta b = G b + b G^T

  Tensor4 t = jaumann_bracket(db, db.trace());
  t -= (2.0 / 3.0) * divv * jaumann_bracket(k.b, k.trb);
  t *= m.mu * k.Jm23;
  const double vol = m.K * (4.0 * k.J - 1.0) * k.J * divv;
  for (int i = 0; i < 3; ++i)
    for (int kk = 0; kk < 3; ++kk) t(i, i, kk, kk) += vol;
  return t;
}

}  // namespace

Tensor4 dtau_truesdell_moduli(const DefState& s, const MaterialParams& m, const VelocityGrad& v) {
  const Kinematics k = kinematics(s);
  const SymTensor2 dtau = dtau_kirchhoff(s, m, v);
  return dtau_jaumann(k, m, v) - stress_bracket(dtau);
}

Tensor4 dtau_A(const DefState& s, const MaterialParams& m, const VelocityGrad& v) {
  const Kinematics k = kinematics(s);
  const double divv = v.G.trace();
  Tensor4 out = dtau_truesdell_moduli(s, m, v) - divv * truesdell_moduli(s, m);
  out *= 1.0 / k.J;
  const SymTensor2 dsig = dtau_cauchy(s, m, v);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int l = 0; l < 3; ++l) out(i, j, i, l) += dsig(j, l);
  return out;
}

}  // namespace csahom
