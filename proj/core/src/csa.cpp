#include "csahom/csa.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "csahom/error.hpp"
#include "csahom/parallel.hpp"

namespace csahom {

namespace {
double shear_weight(bool tensor_metric) { return tensor_metric ? std::sqrt(2.0) : 1.0; }
}  // namespace

Vec3 stretch_coords(const Mat2& u, bool tensor_metric) {
  return Vec3(u(0, 0) - 1.0, u(1, 1) - 1.0, shear_weight(tensor_metric) * 0.5 * (u(0, 1) + u(1, 0)));
}

Mat2 stretch_matrix(const Vec3& e, bool tensor_metric) {
  Mat2 u;
  const double s = e[2] / shear_weight(tensor_metric);
  u << 1.0 + e[0], s, s, 1.0 + e[1];
  return u;
}

Mat2 relative_deformation(const Vec3& e_to, const Vec3& e_from, bool tensor_metric) {
  const Mat2 ut = stretch_matrix(e_to, tensor_metric);
  const Mat2 uf = stretch_matrix(e_from, tensor_metric);
  return ut * uf.inverse() - Mat2::Identity();
}

// ---- registry ---------------------------------------------------------------

CentroidRegistry::CentroidRegistry(const PeriodicCell& cell, const MicroParams& mp,
                                   const CsaParams& cp)
    : p_(cp), ref_(make_micro_state(cell, mp)), rng_(cp.seed) {
  solve_correctors(ref_);
}

std::vector<int> CentroidRegistry::in_range(const Vec3& e) const {
  std::vector<int> ids;
  for (const Centroid& c : cents_)
    if (dist(e, c.center) < p_.rho) ids.push_back(c.id);
  return ids;
}

int CentroidRegistry::nearest(const Vec3& e) const {
  int best = -1;
  double bd = 0.0;
  for (const Centroid& c : cents_) {
    const double d = dist(e, c.center);
    if (best < 0 || d < bd) {
      best = c.id;
      bd = d;
    }
  }
  return best;
}

Classification CentroidRegistry::classify(const std::vector<Vec3>& points) const {
  Classification cl;
  cl.covering.resize(points.size());
  for (size_t i = 0; i < points.size(); ++i) {
    cl.covering[i] = in_range(points[i]);
    if (cl.covering[i].empty()) cl.uncovered.push_back(static_cast<int>(i));
  }
  return cl;
}

namespace {

struct KmeansResult {
  std::vector<Vec3> centers;
  double inertia = 0.0;
  double max_dist = 0.0;
};

int nearest_center(const Vec3& p, const std::vector<Vec3>& centers) {
  int best = 0;
  double bd = (p - centers[0]).squaredNorm();
  for (size_t c = 1; c < centers.size(); ++c) {
    const double d = (p - centers[c]).squaredNorm();
    if (d < bd) {
      bd = d;
      best = static_cast<int>(c);
    }
  }
  return best;
}

KmeansResult kmeans_once(const std::vector<Vec3>& pts, int k, int max_iter,
                         std::mt19937_64& rng) {
  const int n = static_cast<int>(pts.size());
  std::vector<Vec3> centers;
  centers.reserve(static_cast<size_t>(k));
  // Distance-squared weighted seeding.
  std::uniform_int_distribution<int> first(0, n - 1);
  centers.push_back(pts[static_cast<size_t>(first(rng))]);
  std::vector<double> d2(static_cast<size_t>(n));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  while (static_cast<int>(centers.size()) < k) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      double bd = (pts[static_cast<size_t>(i)] - centers[0]).squaredNorm();
      for (size_t c = 1; c < centers.size(); ++c)
        bd = std::min(bd, (pts[static_cast<size_t>(i)] - centers[c]).squaredNorm());
      d2[static_cast<size_t>(i)] = bd;
      total += bd;
    }
    if (total <= 0.0) break;  // fewer distinct points than requested centers
    double r = unit(rng) * total;
    int pick = n - 1;
    for (int i = 0; i < n; ++i) {
      r -= d2[static_cast<size_t>(i)];
      if (r <= 0.0) {
        pick = i;
        break;
      }
    }
    centers.push_back(pts[static_cast<size_t>(pick)]);
  }

  std::vector<int> assign(static_cast<size_t>(n), -1);
  for (int it = 0; it < max_iter; ++it) {
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      const int c = nearest_center(pts[static_cast<size_t>(i)], centers);
      if (c != assign[static_cast<size_t>(i)]) {
        assign[static_cast<size_t>(i)] = c;
        changed = true;
      }
    }
    if (!changed && it > 0) break;
    std::vector<Vec3> sums(centers.size(), Vec3::Zero());
    std::vector<int> counts(centers.size(), 0);
    for (int i = 0; i < n; ++i) {
      sums[static_cast<size_t>(assign[static_cast<size_t>(i)])] += pts[static_cast<size_t>(i)];
      counts[static_cast<size_t>(assign[static_cast<size_t>(i)])]++;
    }
    std::vector<Vec3> next;
    next.reserve(centers.size());
    for (size_t c = 0; c < centers.size(); ++c)
      if (counts[c] > 0) next.push_back(sums[c] / counts[c]);
    if (next.size() != centers.size()) {
      centers = std::move(next);
      std::fill(assign.begin(), assign.end(), -1);
      continue;
    }
    centers = std::move(next);
  }

  KmeansResult res;
  res.centers = centers;
  for (int i = 0; i < n; ++i) {
    const double d = std::sqrt((pts[static_cast<size_t>(i)] -
                                centers[static_cast<size_t>(nearest_center(
                                    pts[static_cast<size_t>(i)], centers))]).squaredNorm());
    res.inertia += d * d;
    res.max_dist = std::max(res.max_dist, d);
  }
  return res;
}

}  // namespace

void CentroidRegistry::cover(const std::vector<Vec3>& points, int threads,
                             SolveCounters* counters) {
  if (cents_.empty()) {
    Centroid seed;
    seed.center = Vec3::Zero();
    seed.id = 0;
    seed.source_id = -1;
    seed.state = ref_;
    seed.coeffs = micro_step(seed.state, Mat2::Zero(), true, counters);
    cents_.push_back(std::move(seed));
  }

  std::vector<Vec3> rem;
  for (const Vec3& p : points)
    if (in_range(p).empty()) rem.push_back(p);
  if (rem.empty()) return;

  // Canonical order plus exact-duplicate removal keeps clustering independent
  // of the caller's point ordering.
  std::sort(rem.begin(), rem.end(), [](const Vec3& a, const Vec3& b) {
    if (a[0] != b[0]) return a[0] < b[0];
    if (a[1] != b[1]) return a[1] < b[1];
    return a[2] < b[2];
  });
  rem.erase(std::unique(rem.begin(), rem.end(),
                        [](const Vec3& a, const Vec3& b) { return a == b; }),
            rem.end());

  std::vector<Vec3> centers;
  for (int k = 1; k <= static_cast<int>(rem.size()); ++k) {
    KmeansResult best;
    bool have = false;
    for (int r = 0; r < std::max(1, p_.kmeans_restarts); ++r) {
      KmeansResult res = kmeans_once(rem, k, p_.kmeans_max_iter, rng_);
      if (!have || res.inertia < best.inertia) {
        best = std::move(res);
        have = true;
      }
    }
    if (best.max_dist < p_.rho) {
      centers = std::move(best.centers);
      break;
    }
  }
  if (centers.empty()) throw Error("cluster cover: clustering failed to cover the point set");

  std::sort(centers.begin(), centers.end(), [](const Vec3& a, const Vec3& b) {
    if (a[0] != b[0]) return a[0] < b[0];
    if (a[1] != b[1]) return a[1] < b[1];
    return a[2] < b[2];
  });

  // Sources are chosen among the pre-batch centroids only, so batch members
  // never depend on each other's (parallel) solves.
  const int base_id = static_cast<int>(cents_.size());
  const int n_new = static_cast<int>(centers.size());
  std::vector<int> src(static_cast<size_t>(n_new));
  for (int i = 0; i < n_new; ++i) src[static_cast<size_t>(i)] = nearest(centers[static_cast<size_t>(i)]);

  std::vector<Centroid> batch(static_cast<size_t>(n_new));
  parallel_for(n_new, threads, [&](int i) {
    Centroid c;
    c.center = centers[static_cast<size_t>(i)];
    c.id = base_id + i;
    c.source_id = src[static_cast<size_t>(i)];
    c.state = cents_[static_cast<size_t>(c.source_id)].state;
    const Mat2 g = relative_deformation(c.center, cents_[static_cast<size_t>(c.source_id)].center,
                                        p_.tensor_shear_metric);
    c.coeffs = micro_step(c.state, g, true, counters);
    batch[static_cast<size_t>(i)] = std::move(c);
  });
  for (Centroid& c : batch) cents_.push_back(std::move(c));
}

std::vector<double> CentroidRegistry::blend_weights(const Vec3& e,
                                                    const std::vector<int>& ids) const {
  std::vector<double> w(ids.size());
  double total = 0.0;
  for (size_t l = 0; l < ids.size(); ++l) {
    const double d = p_.rho - dist(e, cents_[static_cast<size_t>(ids[l])].center);
    if (!(d > 0.0)) throw Error("blend_weights: point outside the coverage ball of a listed centroid");
    w[l] = d * d;
    total += w[l];
  }
  for (double& v : w) v /= total;
  return w;
}

CoefficientSet CentroidRegistry::blend(const Vec3& e) const {
  std::vector<int> ids = in_range(e);
  std::vector<double> w;
  if (ids.empty()) {
    fallback_count_++;
    ids.assign(1, nearest(e));
    w.assign(1, 1.0);
  } else {
    w = blend_weights(e, ids);
  }
  CoefficientSet out;
  for (size_t l = 0; l < ids.size(); ++l) {
    const Centroid& c = cents_[static_cast<size_t>(ids[l])];
    const Mat2 g = relative_deformation(e, c.center, p_.tensor_shear_metric);
    const Vec3 cw = mode_contraction(g);
    Tensor4 a = c.coeffs.A;
    Mat3 sst = c.coeffs.S;
    for (int m = 0; m < kNumModes; ++m) {
      a += cw[m] * c.coeffs.dA[static_cast<size_t>(m)];
      sst += cw[m] * c.coeffs.dS[static_cast<size_t>(m)];
    }
    out.A += w[l] * a;
    out.S += w[l] * sst;
  }
  return out;
}

std::vector<Vec2> CentroidRegistry::approximate_microstructure(const Vec3& e,
                                                               const Mat2& r) const {
  std::vector<int> ids = in_range(e);
  std::vector<double> w;
  if (ids.empty()) {
    fallback_count_++;
    ids.assign(1, nearest(e));
    w.assign(1, 1.0);
  } else {
    w = blend_weights(e, ids);
  }

  const int nn = ref_.cell.mesh.n_nodes();
  std::vector<Vec2> out(static_cast<size_t>(nn), Vec2::Zero());
  for (size_t l = 0; l < ids.size(); ++l) {
    const Centroid& c = cents_[static_cast<size_t>(ids[l])];
    const Mat2 g = relative_deformation(e, c.center, p_.tensor_shear_metric);
    const Vec3 cw = mode_contraction(g);
    const Mat2 emode[kNumModes] = {mode_matrix(0), mode_matrix(1), mode_matrix(2)};
    Mat2 affine = Mat2::Zero();
    for (int m = 0; m < kNumModes; ++m) affine += cw[m] * emode[m];
    for (int i = 0; i < nn; ++i) {
      const Vec2 y = c.state.cell.mesh.nodes[static_cast<size_t>(i)];
      Vec2 d = affine * y;
      for (int m = 0; m < kNumModes; ++m) {
        d.x() += cw[m] * c.state.omega[static_cast<size_t>(m)][2 * i];
        d.y() += cw[m] * c.state.omega[static_cast<size_t>(m)][2 * i + 1];
      }
      out[static_cast<size_t>(i)] += w[l] * (y + d);
    }
  }

  // Rigid rotation about the area centroid of the estimated configuration.
  Mesh probe = ref_.cell.mesh;
  probe.nodes = out;
  double area = 0.0;
  Vec2 moment = Vec2::Zero();
  for (int el = 0; el < probe.n_elements(); ++el) {
    const Element& elem = probe.elements[static_cast<size_t>(el)];
    const QuadratureRule rule = build_quadrature(elem.kind);
    for (size_t q = 0; q < rule.points.size(); ++q) {
      const ShapeGradients sg = shape_gradients(probe, el, rule.points[q]);
      const double wq = rule.weights[q] * sg.detJ;
      const auto nv = shape_values(elem.kind, rule.points[q]);
      Vec2 x = Vec2::Zero();
      for (int a = 0; a < node_count(elem.kind); ++a)
        x += nv[static_cast<size_t>(a)] * probe.nodes[static_cast<size_t>(elem.nodes[static_cast<size_t>(a)])];
      area += wq;
      moment += wq * x;
    }
  }
  const Vec2 center = moment / area;
  for (Vec2& x : out) x = center + r * (x - center);
  return out;
}

void CentroidRegistry::export_text(std::ostream& os) const {
  os << "# id source e11 e22 e12\n";
  char buf[160];
  for (const Centroid& c : cents_) {
    std::snprintf(buf, sizeof buf, "%d %d %.17g %.17g %.17g\n", c.id, c.source_id, c.center[0],
                  c.center[1], c.center[2]);
    os << buf;
  }
}

// ---- backend ----------------------------------------------------------------

CsaBackend::CsaBackend(const PeriodicCell& cell, const MicroParams& mp, const CsaParams& cp,
                       int threads, SolveCounters* counters)
    : p_(cp),
      threads_(resolve_threads(threads)),
      counters_(counters ? counters : &own_),
      registry_(cell, mp, cp) {}

void CsaBackend::get_coefficients(const std::vector<Mat2>& f_qp, CoefficientField& out) {
  const int n = static_cast<int>(f_qp.size());
  out.resize(static_cast<size_t>(n));
  std::vector<Vec3> es(static_cast<size_t>(n));
  std::vector<Mat2> rs(static_cast<size_t>(n));
  parallel_for(n, threads_, [&](int i) {
    const PolarFactors pf = polar_decompose(f_qp[static_cast<size_t>(i)]);
    es[static_cast<size_t>(i)] = stretch_coords(pf.U, p_.tensor_shear_metric);
    rs[static_cast<size_t>(i)] = pf.R;
  });

  registry_.cover(es, threads_, counters_);

  parallel_for(n, threads_, [&](int i) {
    const CoefficientSet cs = registry_.blend(es[static_cast<size_t>(i)]);
    const Mat3 r3 = embed_deformation(rs[static_cast<size_t>(i)]);
    out[static_cast<size_t>(i)].A = rotate(cs.A, r3);
    out[static_cast<size_t>(i)].S = rotate(cs.S, r3);
  });
}

}  // namespace csahom
