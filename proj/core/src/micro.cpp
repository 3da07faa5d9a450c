#include "csahom/micro.hpp"

#include <cmath>

#include "csahom/error.hpp"
#include "micro_internal.hpp"

namespace csahom {

using detail::MicroScratch;

Mat2 mode_matrix(int m) {
  Mat2 e = Mat2::Zero();
  switch (m) {
    case 0: e(0, 0) = 1.0; break;
    case 1: e(1, 1) = 1.0; break;
    case 2: e(0, 1) = e(1, 0) = 0.5; break;
    default: throw Error("mode_matrix: invalid mode index");
  }
  return e;
}

Vec3 mode_contraction(const Mat2& g) { return Vec3(g(0, 0), g(1, 1), g(0, 1) + g(1, 0)); }

FieldVector MicroState::fluctuation() const {
  const int nn = cell.mesh.n_nodes();
  FieldVector w(2 * nn);
  for (int i = 0; i < nn; ++i) {
    const Vec2 affine = Fbar * ref_nodes[static_cast<size_t>(i)];
    w[2 * i] = cell.mesh.nodes[static_cast<size_t>(i)].x() - affine.x();
    w[2 * i + 1] = cell.mesh.nodes[static_cast<size_t>(i)].y() - affine.y();
  }
  return w;
}

MicroState make_micro_state(const PeriodicCell& cell, const MicroParams& params) {
  MicroState s;
  s.cell = cell;
  s.params = params;
  s.ref_nodes = cell.mesh.nodes;
  double nrm = 0.0;
  for (const Vec2& x : s.ref_nodes) nrm += x.squaredNorm();
  s.ref_coord_norm = std::sqrt(nrm);
  if (!(s.ref_coord_norm > 0.0)) s.ref_coord_norm = 1.0;

  const Mesh& mesh = cell.mesh;
  s.qp_offset.resize(static_cast<size_t>(mesh.n_elements()) + 1);
  s.qp_offset[0] = 0;
  s.mat_of_element.resize(static_cast<size_t>(mesh.n_elements()));
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const Element& el = mesh.elements[static_cast<size_t>(e)];
    const auto it = params.materials.find(el.region);
    if (it == params.materials.end())
      throw ConfigError("no material for mesh region " + std::to_string(el.region));
    s.mat_of_element[static_cast<size_t>(e)] = it->second;
    const int nq = el.kind == ElementKind::tri3 ? 3 : 4;
    s.qp_offset[static_cast<size_t>(e) + 1] = s.qp_offset[static_cast<size_t>(e)] + nq;
  }
  s.F_qp.assign(static_cast<size_t>(s.qp_offset.back()), Mat2::Identity());
  return s;
}

namespace detail {

namespace {
const QuadratureRule& rule_for(ElementKind k) {
  static const QuadratureRule tri = build_quadrature(ElementKind::tri3);
  static const QuadratureRule quad = build_quadrature(ElementKind::quad4);
  return k == ElementKind::tri3 ? tri : quad;
}
}  // namespace

void prepare(const MicroState& s, MicroScratch& sc) {
  const Mesh& mesh = s.cell.mesh;
  sc.qp.resize(static_cast<size_t>(s.qp_offset.back()));
  double vol = 0.0;
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const QuadratureRule& rule = rule_for(mesh.elements[static_cast<size_t>(e)].kind);
    const MaterialParams& mat = s.mat_of_element[static_cast<size_t>(e)];
    for (size_t q = 0; q < rule.points.size(); ++q) {
      QpData& qd = sc.qp[static_cast<size_t>(s.qp_offset[static_cast<size_t>(e)]) + q];
      qd.shp = shape_gradients(mesh, e, rule.points[q]);
      qd.wdet = rule.weights[q] * qd.shp.detJ;
      const DefState def{s.F_qp[static_cast<size_t>(s.qp_offset[static_cast<size_t>(e)]) + q]};
      qd.sigma = cauchy_stress(def, mat);
      qd.amod = tangent_A(def, mat);
      vol += qd.wdet;
    }
  }
  sc.volume = vol;
}

SparseMat assemble_from_scratch(const MicroState& s, MicroScratch& sc) {
  const Mesh& mesh = s.cell.mesh;
  const double inv_vol = 1.0 / sc.volume;
  sc.trips.clear();
  double ke[8][8];
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const Element& el = mesh.elements[static_cast<size_t>(e)];
    const int nn = node_count(el.kind);
    const int q0 = s.qp_offset[static_cast<size_t>(e)];
    const int q1 = s.qp_offset[static_cast<size_t>(e) + 1];
    for (int i = 0; i < 2 * nn; ++i)
      for (int j = 0; j < 2 * nn; ++j) ke[i][j] = 0.0;
    for (int q = q0; q < q1; ++q) {
      const QpData& qd = sc.qp[static_cast<size_t>(q)];
      for (int a = 0; a < nn; ++a)
        for (int b = 0; b < nn; ++b) {
          const Vec2& da = qd.shp.dN[static_cast<size_t>(a)];
          const Vec2& db = qd.shp.dN[static_cast<size_t>(b)];
          for (int p = 0; p < 2; ++p)
            for (int k = 0; k < 2; ++k) {
              const double v = qd.amod(p, 0, k, 0) * da[0] * db[0] +
                               qd.amod(p, 0, k, 1) * da[0] * db[1] +
                               qd.amod(p, 1, k, 0) * da[1] * db[0] +
                               qd.amod(p, 1, k, 1) * da[1] * db[1];
              ke[2 * a + p][2 * b + k] += qd.wdet * v;
            }
        }
    }
    for (int a = 0; a < nn; ++a)
      for (int p = 0; p < 2; ++p) {
        const int ra = s.cell.reduced_dof(el.nodes[static_cast<size_t>(a)], p);
        if (ra < 0) continue;
        for (int b = 0; b < nn; ++b)
          for (int k = 0; k < 2; ++k) {
            const int rb = s.cell.reduced_dof(el.nodes[static_cast<size_t>(b)], k);
            if (rb < 0) continue;
            sc.trips.emplace_back(ra, rb, ke[2 * a + p][2 * b + k] * inv_vol);
          }
      }
  }
  SparseMat m(s.cell.n_reduced, s.cell.n_reduced);
  m.setFromTriplets(sc.trips.begin(), sc.trips.end());
  return m;
}

Eigen::VectorXd residual_rhs(const MicroState& s, const MicroScratch& sc) {
  const Mesh& mesh = s.cell.mesh;
  const double inv_vol = 1.0 / sc.volume;
  Eigen::VectorXd r = Eigen::VectorXd::Zero(s.cell.n_reduced);
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const Element& el = mesh.elements[static_cast<size_t>(e)];
    const int nn = node_count(el.kind);
    for (int q = s.qp_offset[static_cast<size_t>(e)]; q < s.qp_offset[static_cast<size_t>(e) + 1];
         ++q) {
      const QpData& qd = sc.qp[static_cast<size_t>(q)];
      for (int a = 0; a < nn; ++a) {
        const Vec2& da = qd.shp.dN[static_cast<size_t>(a)];
        for (int p = 0; p < 2; ++p) {
          const int ra = s.cell.reduced_dof(el.nodes[static_cast<size_t>(a)], p);
          if (ra < 0) continue;
          r[ra] -= qd.wdet * inv_vol * (qd.sigma(p, 0) * da[0] + qd.sigma(p, 1) * da[1]);
        }
      }
    }
  }
  return r;
}

std::array<Eigen::VectorXd, kNumModes> corrector_rhs(const MicroState& s, const MicroScratch& sc) {
  const Mesh& mesh = s.cell.mesh;
  const double inv_vol = 1.0 / sc.volume;
  std::array<Eigen::VectorXd, kNumModes> rhs;
  for (int m = 0; m < kNumModes; ++m) rhs[m] = Eigen::VectorXd::Zero(s.cell.n_reduced);
  const Mat2 emode[kNumModes] = {mode_matrix(0), mode_matrix(1), mode_matrix(2)};
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const Element& el = mesh.elements[static_cast<size_t>(e)];
    const int nn = node_count(el.kind);
    for (int q = s.qp_offset[static_cast<size_t>(e)]; q < s.qp_offset[static_cast<size_t>(e) + 1];
         ++q) {
      const QpData& qd = sc.qp[static_cast<size_t>(q)];
      // ae(p,q') = A_pq'kl E_kl for each mode
      Mat2 ae[kNumModes];
      for (int m = 0; m < kNumModes; ++m)
        for (int p = 0; p < 2; ++p)
          for (int qq = 0; qq < 2; ++qq)
            ae[m](p, qq) = qd.amod(p, qq, 0, 0) * emode[m](0, 0) +
                           qd.amod(p, qq, 0, 1) * emode[m](0, 1) +
                           qd.amod(p, qq, 1, 0) * emode[m](1, 0) +
                           qd.amod(p, qq, 1, 1) * emode[m](1, 1);
      for (int a = 0; a < nn; ++a) {
        const Vec2& da = qd.shp.dN[static_cast<size_t>(a)];
        for (int p = 0; p < 2; ++p) {
          const int ra = s.cell.reduced_dof(el.nodes[static_cast<size_t>(a)], p);
          if (ra < 0) continue;
          for (int m = 0; m < kNumModes; ++m)
            rhs[m][ra] -= qd.wdet * inv_vol * (ae[m](p, 0) * da[0] + ae[m](p, 1) * da[1]);
        }
      }
    }
  }
  return rhs;
}

void apply_displacement(MicroState& s, const FieldVector& dw, const MicroScratch* sc,
                        const char* where) {
  Mesh& mesh = s.cell.mesh;
  const int nq = s.qp_offset.back();
  std::vector<Mat2> h(static_cast<size_t>(nq));
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const Element& el = mesh.elements[static_cast<size_t>(e)];
    const int nn = node_count(el.kind);
    const QuadratureRule& rule = rule_for(el.kind);
    for (int q = s.qp_offset[static_cast<size_t>(e)]; q < s.qp_offset[static_cast<size_t>(e) + 1];
         ++q) {
      const ShapeGradients shp =
          sc ? sc->qp[static_cast<size_t>(q)].shp
             : shape_gradients(mesh, e, rule.points[static_cast<size_t>(q - s.qp_offset[static_cast<size_t>(e)])]);
      Mat2 grad = Mat2::Zero();
      for (int a = 0; a < nn; ++a) {
        const int n = el.nodes[static_cast<size_t>(a)];
        grad += Vec2(dw[2 * n], dw[2 * n + 1]) * shp.dN[static_cast<size_t>(a)].transpose();
      }
      const double det = (Mat2::Identity() + grad).determinant();
      if (!(det > 0.0)) throw InversionError(where, e, det);
      h[static_cast<size_t>(q)] = grad;
    }
  }
  // All increments admissible: commit.
  for (int i = 0; i < mesh.n_nodes(); ++i) {
    mesh.nodes[static_cast<size_t>(i)].x() += dw[2 * i];
    mesh.nodes[static_cast<size_t>(i)].y() += dw[2 * i + 1];
  }
  for (int q = 0; q < nq; ++q)
    s.F_qp[static_cast<size_t>(q)] =
        (Mat2::Identity() + h[static_cast<size_t>(q)]) * s.F_qp[static_cast<size_t>(q)];
}

int equilibrate_impl(MicroState& s, MicroScratch& sc, SolveCounters* counters) {
  if (counters) counters->equilibrations++;
  double rel = 0.0;
  for (int it = 1; it <= s.params.max_inner; ++it) {
    prepare(s, sc);
    const Eigen::VectorXd r = residual_rhs(s, sc);
    const SparseMat k = assemble_from_scratch(s, sc);
    DirectSolver solver;
    solver.factorize(k);
    const Eigen::VectorXd dred = solver.solve(r);
    if (counters) {
      counters->factorizations++;
      counters->linear_solves++;
      counters->inner_iterations++;
    }
    const FieldVector dw = expand(s.cell, dred);
    apply_displacement(s, dw, &sc, "equilibrate");
    s.correctors_valid = false;
    rel = dw.norm() / s.ref_coord_norm;
    if (rel <= s.params.eps_inner) return it;
  }
  throw ConvergenceError("equilibrate", s.params.max_inner, rel);
}

void solve_correctors_impl(MicroState& s, MicroScratch& sc, SolveCounters* counters) {
  const auto rhs = corrector_rhs(s, sc);
  const SparseMat k = assemble_from_scratch(s, sc);
  DirectSolver solver;
  solver.factorize(k);
  if (counters) counters->factorizations++;
  for (int m = 0; m < kNumModes; ++m) {
    const Eigen::VectorXd sol = solver.solve(rhs[m]);
    if (counters) counters->linear_solves++;
    s.omega[m] = expand(s.cell, sol);
  }
  s.correctors_valid = true;
}

void compute_gxi(const MicroState& s, MicroScratch& sc) {
  const Mesh& mesh = s.cell.mesh;
  sc.gxi.resize(static_cast<size_t>(s.qp_offset.back()));
  const Mat2 emode[kNumModes] = {mode_matrix(0), mode_matrix(1), mode_matrix(2)};
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const Element& el = mesh.elements[static_cast<size_t>(e)];
    const int nn = node_count(el.kind);
    for (int q = s.qp_offset[static_cast<size_t>(e)]; q < s.qp_offset[static_cast<size_t>(e) + 1];
         ++q) {
      const QpData& qd = sc.qp[static_cast<size_t>(q)];
      for (int m = 0; m < kNumModes; ++m) {
        Mat2 g = emode[m];
        for (int a = 0; a < nn; ++a) {
          const int n = el.nodes[static_cast<size_t>(a)];
          g += Vec2(s.omega[m][2 * n], s.omega[m][2 * n + 1]) *
               qd.shp.dN[static_cast<size_t>(a)].transpose();
        }
        sc.gxi[static_cast<size_t>(q)][static_cast<size_t>(m)] = g;
      }
    }
  }
}

double bil(const Tensor4& t, const Mat2& gu, const Mat2& gv) {
  double sum = 0.0;
  for (int p = 0; p < 2; ++p)
    for (int q = 0; q < 2; ++q) {
      const double v = gv(p, q);
      if (v == 0.0) continue;
      sum += v * (t(p, q, 0, 0) * gu(0, 0) + t(p, q, 0, 1) * gu(0, 1) +
                  t(p, q, 1, 0) * gu(1, 0) + t(p, q, 1, 1) * gu(1, 1));
    }
  return sum;
}

namespace {
int mode_of(int i, int j) {
  if (i == 0 && j == 0) return 0;
  if (i == 1 && j == 1) return 1;
  return 2;
}
// Index-order representatives of each stored mode.
const std::array<std::pair<int, int>, 2> kReps[3] = {
    {{{0, 0}, {0, 0}}}, {{{1, 1}, {1, 1}}}, {{{0, 1}, {1, 0}}}};
const int kRepCount[3] = {1, 1, 2};
}  // namespace

Eigen::Matrix3d symmetric_mode_projection(const Tensor4& t) {
  Eigen::Matrix3d ms;
  for (int bi = 0; bi < 3; ++bi)
    for (int bj = 0; bj < 3; ++bj) {
      double sum = 0.0;
      for (int u = 0; u < kRepCount[bi]; ++u)
        for (int v = 0; v < kRepCount[bj]; ++v) {
          const auto [i, j] = kReps[bi][static_cast<size_t>(u)];
          const auto [k, l] = kReps[bj][static_cast<size_t>(v)];
          sum += t(i, j, k, l);
        }
      ms(bi, bj) = sum / (kRepCount[bi] * kRepCount[bj]);
    }
  return ms;
}

Tensor4 reconstruct_full(const Eigen::Matrix3d& ms, const Mat3& svals) {
  // Mode-space projection of the stress-like geometric part s_jl delta_ik.
  Eigen::Matrix3d gs;
  for (int bi = 0; bi < 3; ++bi)
    for (int bj = 0; bj < 3; ++bj) {
      double sum = 0.0;
      for (int u = 0; u < kRepCount[bi]; ++u)
        for (int v = 0; v < kRepCount[bj]; ++v) {
          const auto [i, j] = kReps[bi][static_cast<size_t>(u)];
          const auto [k, l] = kReps[bj][static_cast<size_t>(v)];
          sum += (i == k ? svals(j, l) : 0.0);
        }
      gs(bi, bj) = sum / (kRepCount[bi] * kRepCount[bj]);
    }
  const Eigen::Matrix3d bs = ms - gs;
  Tensor4 a;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l)
          a(i, j, k, l) = bs(mode_of(i, j), mode_of(k, l)) + (i == k ? svals(j, l) : 0.0);
  return a;
}

void coefficients_impl(const MicroState& s, MicroScratch& sc, CoefficientSet& out) {
  compute_gxi(s, sc);
  const double inv_vol = 1.0 / sc.volume;
  Mat3 stress = Mat3::Zero();
  for (const QpData& qd : sc.qp) stress += qd.wdet * qd.sigma;
  stress *= inv_vol;

  Eigen::Matrix3d ms = Eigen::Matrix3d::Zero();
  for (size_t q = 0; q < sc.qp.size(); ++q) {
    const QpData& qd = sc.qp[q];
    for (int bi = 0; bi < 3; ++bi)
      for (int bj = bi; bj < 3; ++bj)
        ms(bi, bj) += qd.wdet * bil(qd.amod, sc.gxi[q][static_cast<size_t>(bj)],
                                    sc.gxi[q][static_cast<size_t>(bi)]);
  }
  ms *= inv_vol;
  for (int bi = 0; bi < 3; ++bi)
    for (int bj = 0; bj < bi; ++bj) ms(bi, bj) = ms(bj, bi);

  out.S = stress;
  out.A = reconstruct_full(ms, stress);
  out.has_sensitivities = false;
}

namespace {
// Gradient of the corrector-load variation for mode `bj` under velocity
// gradient g: rows of the Pi-variation.
Mat2 dpi_grad(int bj, const Mat2& g) {
  Mat2 d = Mat2::Zero();
  switch (bj) {
    case 0: d.row(0) = g.row(0); break;
    case 1: d.row(1) = g.row(1); break;
    default:
      d.row(0) = 0.5 * g.row(1);
      d.row(1) = 0.5 * g.row(0);
  }
  return d;
}
}  // namespace

void sensitivities_impl(const MicroState& s, MicroScratch& sc, CoefficientSet& out) {
  compute_gxi(s, sc);
  const double inv_vol = 1.0 / sc.volume;
  const Eigen::Matrix3d ms = symmetric_mode_projection(out.A);

  std::array<Mat3, kNumModes> ds;
  std::array<Eigen::Matrix3d, kNumModes> das;
  Vec3 mean_tr = Vec3::Zero();
  for (int m = 0; m < kNumModes; ++m) {
    ds[m].setZero();
    das[m].setZero();
  }

  for (size_t e = 0; e < s.mat_of_element.size(); ++e) {
    const MaterialParams& mat = s.mat_of_element[e];
    for (int q = s.qp_offset[e]; q < s.qp_offset[e + 1]; ++q) {
      const QpData& qd = sc.qp[static_cast<size_t>(q)];
      const DefState def{s.F_qp[static_cast<size_t>(q)]};
      const auto& gx = sc.gxi[static_cast<size_t>(q)];
      for (int m = 0; m < kNumModes; ++m) {
        const Mat2& g = gx[static_cast<size_t>(m)];
        const double trg = g.trace();
        const VelocityGrad vel{g};
        ds[m] += qd.wdet * ((qd.sigma - out.S) * trg + dtau_cauchy(def, mat, vel));
        mean_tr[m] += qd.wdet * trg;
        const Tensor4 da4 = dtau_A(def, mat, vel);
        for (int bi = 0; bi < 3; ++bi)
          for (int bj = bi; bj < 3; ++bj) {
            const Mat2& gu = gx[static_cast<size_t>(bj)];
            const Mat2& gv = gx[static_cast<size_t>(bi)];
            double v = bil(qd.amod, gu, gv) * trg;
            v -= bil(qd.amod, gu * g, gv) + bil(qd.amod, gu, gv * g);
            v += bil(da4, gu, gv);
            v += bil(qd.amod, dpi_grad(bj, g), gv) + bil(qd.amod, dpi_grad(bi, g), gu);
            das[m](bi, bj) += qd.wdet * v;
          }
      }
    }
  }

  for (int m = 0; m < kNumModes; ++m) {
    ds[m] *= inv_vol;
    das[m] *= inv_vol;
    mean_tr[m] *= inv_vol;
    for (int bi = 0; bi < 3; ++bi)
      for (int bj = bi; bj < 3; ++bj) {
        das[m](bi, bj) -= ms(bi, bj) * mean_tr[m];
        das[m](bj, bi) = das[m](bi, bj);
      }
    out.dS[static_cast<size_t>(m)] = ds[m];
    out.dA[static_cast<size_t>(m)] = reconstruct_full(das[m], ds[m]);
  }
  out.has_sensitivities = true;
}

Mat2 sqrt_map(const Mat2& a) {
  const double det = a.determinant();
  if (!(det > 0.0)) throw Error("sqrt_map: non-positive determinant");
  const double sd = std::sqrt(det);
  const double t = a.trace() + 2.0 * sd;
  if (!(t > 0.0)) throw Error("sqrt_map: map has no real principal root");
  return (a + sd * Mat2::Identity()) / std::sqrt(t);
}

}  // namespace detail

// ---- public wrappers -------------------------------------------------------

SparseMat assemble_tangent(const MicroState& s) {
  MicroScratch sc;
  detail::prepare(s, sc);
  return detail::assemble_from_scratch(s, sc);
}

void solve_correctors(MicroState& s, SolveCounters* counters) {
  MicroScratch sc;
  detail::prepare(s, sc);
  detail::solve_correctors_impl(s, sc, counters);
}

CoefficientSet homogenized_coefficients(const MicroState& s) {
  if (!s.correctors_valid)
    throw Error("homogenized_coefficients: correctors are stale; call solve_correctors first");
  MicroScratch sc;
  detail::prepare(s, sc);
  CoefficientSet out;
  detail::coefficients_impl(s, sc, out);
  return out;
}

void micro_update(MicroState& s, const Mat2& g) {
  if (!s.correctors_valid)
    throw Error("micro_update: correctors are stale; call solve_correctors first");
  const Vec3 cw = mode_contraction(g);
  const Mesh& mesh = s.cell.mesh;
  FieldVector dw(2 * mesh.n_nodes());
  for (int i = 0; i < mesh.n_nodes(); ++i) {
    Vec2 d = g * mesh.nodes[static_cast<size_t>(i)];
    for (int m = 0; m < kNumModes; ++m) {
      d.x() += cw[m] * s.omega[m][2 * i];
      d.y() += cw[m] * s.omega[m][2 * i + 1];
    }
    dw[2 * i] = d.x();
    dw[2 * i + 1] = d.y();
  }
  detail::apply_displacement(s, dw, nullptr, "micro_update");
  s.Fbar = (Mat2::Identity() + g) * s.Fbar;
  s.correctors_valid = false;
}

int equilibrate(MicroState& s, SolveCounters* counters) {
  MicroScratch sc;
  return detail::equilibrate_impl(s, sc, counters);
}

void coefficient_sensitivities(const MicroState& s, CoefficientSet& coeffs) {
  if (!s.correctors_valid)
    throw Error("coefficient_sensitivities: correctors are stale; call solve_correctors first");
  MicroScratch sc;
  detail::prepare(s, sc);
  detail::sensitivities_impl(s, sc, coeffs);
}

CoefficientSet micro_step(MicroState& s, const Mat2& g, bool with_sensitivities,
                          SolveCounters* counters) {
  if (!s.correctors_valid)
    throw Error("micro_step: correctors are stale; call solve_correctors first");
  MicroScratch sc;
  // Pending relative maps, applied back to front; failures split the head map
  // into its exact multiplicative halves.
  std::vector<Mat2> pending{Mat2(Mat2::Identity() + g)};
  int splits = 0;
  while (!pending.empty()) {
    const Mat2 amap = pending.back();
    MicroState saved = s;
    try {
      micro_update(s, amap - Mat2::Identity());
      detail::equilibrate_impl(s, sc, counters);
      detail::prepare(s, sc);
      detail::solve_correctors_impl(s, sc, counters);
    } catch (const Error&) {
      s = std::move(saved);
      if (++splits > s.params.max_substep_splits) throw;
      const Mat2 half = detail::sqrt_map(amap);
      pending.back() = half;
      pending.push_back(half);
      continue;
    }
    pending.pop_back();
    if (counters) counters->micro_steps++;
  }
  CoefficientSet out;
  detail::coefficients_impl(s, sc, out);
  if (with_sensitivities) detail::sensitivities_impl(s, sc, out);
  return out;
}

}  // namespace csahom
