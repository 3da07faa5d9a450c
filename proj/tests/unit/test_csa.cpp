// Clustering-based coefficient approximation: stretch coordinates, coverage
// bookkeeping, blending, and the deterministic clustering pass.
#include <sstream>

#include "csahom/csa.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace csahom;

namespace {

MicroParams cell_params() {
  MicroParams p;
  p.materials[1] = testutil::matrix_material();
  p.materials[2] = testutil::inclusion_material();
  return p;
}

PeriodicCell tiny_cell() {
  return match_periodic(load_mesh(testutil::data_file("micro/cell_tiny.txt")));
}

CsaParams params(double rho) {
  CsaParams p;
  p.rho = rho;
  p.seed = 42;
  return p;
}

}  // namespace

TEST_CASE("stretch coordinates round-trip through the stretch matrix") {
  for (bool tensor : {false, true}) {
    CAPTURE(tensor);
    const Vec3 e(0.013, -0.007, 0.004);
    const Mat2 u = stretch_matrix(e, tensor);
    CHECK(std::abs(u(0, 1) - u(1, 0)) == 0.0);
    const Vec3 back = stretch_coords(u, tensor);
    CHECK((back - e).cwiseAbs().maxCoeff() <= 1e-15);
  }
  // The tensor metric scales only the shear coordinate: e_s = w * u01.
  const Vec3 e(0.01, 0.002, 0.006);
  const Mat2 plain = stretch_matrix(e, false);
  CHECK(plain(0, 1) == doctest::Approx(0.006));
  const Mat2 tensor = stretch_matrix(e, true);
  CHECK(tensor(0, 1) == doctest::Approx(0.006 / std::sqrt(2.0)));
}

TEST_CASE("relative deformation maps one stretch exactly onto another") {
  const Vec3 a(0.004, -0.009, 0.006);
  const Vec3 b(-0.002, 0.005, -0.003);
  for (bool tensor : {false, true}) {
    const Mat2 g = relative_deformation(b, a, tensor);
    const Mat2 reached = (Mat2::Identity() + g) * stretch_matrix(a, tensor);
    CHECK((reached - stretch_matrix(b, tensor)).cwiseAbs().maxCoeff() <= 1e-15);
    CHECK(relative_deformation(a, a, tensor).cwiseAbs().maxCoeff() <= 1e-15);
  }
}

TEST_CASE("mode contraction only sees the symmetric part of a map") {
  Mat2 g;
  g << 0.01, 0.03, -0.02, 0.005;
  const Mat2 sym = 0.5 * (g + g.transpose());
  CHECK((mode_contraction(g) - mode_contraction(sym)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("coverage is strict and blend weights partition unity") {
  CentroidRegistry reg(tiny_cell(), cell_params(), params(0.004));
  CHECK(reg.size() == 0);

  // First cover: seeds the undeformed centroid, then solves one more.
  SolveCounters counters;
  const Vec3 p0(0.0048, 0.0, 0.0);
  reg.cover({p0}, 1, &counters);
  REQUIRE(reg.size() == 2);
  CHECK(reg.centroids()[0].center.norm() == 0.0);
  CHECK((reg.centroids()[1].center - p0).norm() <= 1e-15);
  CHECK(reg.centroids()[0].source_id == -1);
  CHECK(reg.centroids()[1].source_id == 0);
  CHECK(counters.micro_steps.load() >= 2);
  for (const Centroid& c : reg.centroids()) CHECK(c.coeffs.has_sensitivities);

  // Strictness: just outside the radius is uncovered, just inside is covered
  // (the negative side is only within reach of the origin centroid).
  CHECK(reg.in_range(Vec3(-0.004 * (1.0 + 1e-9), 0.0, 0.0)).empty());
  CHECK(reg.in_range(Vec3(-0.0039999, 0.0, 0.0)).size() == 1);

  // Overlap region: both centroids cover, weights sum to one and fade to
  // zero at the edge of each ball.
  const Vec3 mid(0.0024, 0.0, 0.0);
  const auto ids = reg.in_range(mid);
  REQUIRE(ids.size() == 2);
  const auto w = reg.blend_weights(mid, ids);
  CHECK(w[0] + w[1] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(w[0] > 0.0);
  CHECK(w[1] > 0.0);

  const Vec3 near_edge(0.004 * (1.0 - 1e-7), 0.0, 0.0);
  const auto ids2 = reg.in_range(near_edge);
  REQUIRE(ids2.size() == 2);
  const auto w2 = reg.blend_weights(near_edge, ids2);
  // The fading centroid is the one the point is about to leave.
  const double fading = ids2[0] == 0 ? w2[0] : w2[1];
  CHECK(fading <= 1e-10);
}

TEST_CASE("blending at a centroid returns its coefficients unchanged") {
  CentroidRegistry reg(tiny_cell(), cell_params(), params(0.003));
  const Vec3 p0(0.006, -0.002, 0.004);  // outside the seed ball
  reg.cover({p0}, 1, nullptr);
  REQUIRE(reg.size() == 2);

  const CoefficientSet b = reg.blend(p0);
  const CoefficientSet& c = reg.centroids()[1].coeffs;
  CHECK(testutil::rel_diff(b.A, c.A) <= 1e-14);
  CHECK((b.S - c.S).cwiseAbs().maxCoeff() <= 1e-14 * c.S.cwiseAbs().maxCoeff());
  CHECK(reg.fallback_count() == 0);
}

TEST_CASE("uncovered queries fall back to the nearest centroid and are counted") {
  CentroidRegistry reg(tiny_cell(), cell_params(), params(0.003));
  reg.cover({Vec3(0.005, 0.0, 0.0)}, 1, nullptr);
  const Vec3 far(0.02, 0.01, 0.0);
  CHECK(reg.in_range(far).empty());
  CHECK(reg.nearest(far) == 1);
  const CoefficientSet b = reg.blend(far);
  CHECK(reg.fallback_count() == 1);
  // Fallback still extrapolates from the nearest centroid's tangent plane.
  const CoefficientSet& c = reg.centroids()[1].coeffs;
  CHECK(frobenius(b.A - c.A) > 0.0);
}

TEST_CASE("clustering uses the smallest number of balls that covers the batch") {
  CentroidRegistry reg(tiny_cell(), cell_params(), params(0.002));
  // Two well-separated blobs, each comfortably inside one ball.
  std::vector<Vec3> pts;
  for (double d : {-2e-4, 0.0, 2e-4}) {
    pts.push_back(Vec3(0.006 + d, 0.0, d));
    pts.push_back(Vec3(-0.006 + d, d, 0.0));
  }
  reg.cover(pts, 1, nullptr);
  CHECK(reg.size() == 3);  // seed + one per blob

  const Classification cls = reg.classify(pts);
  CHECK(cls.uncovered.empty());
  for (const auto& ids : cls.covering) CHECK(!ids.empty());
}

TEST_CASE("coverage growth is append-only and deterministic") {
  CentroidRegistry a(tiny_cell(), cell_params(), params(0.002));
  CentroidRegistry b(tiny_cell(), cell_params(), params(0.002));

  const std::vector<Vec3> first{Vec3(0.004, 0.001, 0.0), Vec3(-0.003, 0.002, 0.001)};
  const std::vector<Vec3> second{Vec3(0.007, -0.002, 0.003), Vec3(0.0041, 0.0009, 0.0)};

  a.cover(first, 1, nullptr);
  const int n_after_first = a.size();
  std::vector<Vec3> centers;
  for (const auto& c : a.centroids()) centers.push_back(c.center);
  a.cover(second, 1, nullptr);
  CHECK(a.size() >= n_after_first);
  for (int i = 0; i < n_after_first; ++i)
    CHECK((a.centroids()[i].center - centers[i]).norm() == 0.0);

  b.cover(first, 1, nullptr);
  b.cover(second, 1, nullptr);
  REQUIRE(b.size() == a.size());
  for (int i = 0; i < a.size(); ++i) {
    CHECK((a.centroids()[i].center - b.centroids()[i].center).norm() == 0.0);
    CHECK(a.centroids()[i].source_id == b.centroids()[i].source_id);
    CHECK(testutil::rel_diff(a.centroids()[i].coeffs.A, b.centroids()[i].coeffs.A) == 0.0);
  }

  std::ostringstream ta, tb;
  a.export_text(ta);
  b.export_text(tb);
  CHECK(ta.str() == tb.str());
}

TEST_CASE("already covered batches solve nothing new") {
  CentroidRegistry reg(tiny_cell(), cell_params(), params(0.003));
  reg.cover({Vec3(0.005, 0.0, 0.0)}, 1, nullptr);
  const int n = reg.size();
  SolveCounters counters;
  reg.cover({Vec3(0.0051, 0.0001, 0.0), Vec3(0.0002, 0.0, 0.0)}, 1, &counters);
  CHECK(reg.size() == n);
  CHECK(counters.micro_steps.load() == 0);
}

TEST_CASE("deformed snapshots rotate rigidly without stretching") {
  CentroidRegistry reg(tiny_cell(), cell_params(), params(0.003));
  const Vec3 p0(0.006, -0.002, 0.004);
  reg.cover({p0}, 1, nullptr);

  const double th = 0.7;
  Mat2 r;
  r << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
  const auto straight = reg.approximate_microstructure(p0, Mat2::Identity());
  const auto rotated = reg.approximate_microstructure(p0, r);
  REQUIRE(straight.size() == rotated.size());
  REQUIRE(!straight.empty());
  // Pairwise distances are invariant under the rigid rotation.
  const size_t i = 0, j = straight.size() / 2;
  CHECK((straight[i] - straight[j]).norm() ==
        doctest::Approx((rotated[i] - rotated[j]).norm()).epsilon(1e-12));
}
