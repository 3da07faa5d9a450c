// Coefficient sensitivities: analytic derivatives of the homogenized stress
// and moduli along the stretch modes, validated against full re-solves.
#include "csahom/csa.hpp"
#include "csahom/fe2.hpp"
#include "csahom/micro.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace csahom;

namespace {

MicroState solved_cell(const std::string& rel) {
  MicroParams p;
  p.materials[1] = testutil::matrix_material();
  p.materials[2] = testutil::inclusion_material();
  const Mesh mesh = load_mesh(testutil::data_file(rel));
  MicroState st = make_micro_state(match_periodic(mesh), p);
  solve_correctors(st);
  return st;
}

}  // namespace

TEST_CASE("mode sensitivities match central differences of full re-solves") {
  MicroState st = solved_cell("micro/cell_tiny.txt");
  const Vec3 e(0.01, -0.004, 0.006);
  const CoefficientSet base = advance_to_stretch(st, stretch_matrix(e, false), true, nullptr);
  REQUIRE(base.has_sensitivities);

  const double h = 1e-5;
  for (int m = 0; m < kNumModes; ++m) {
    MicroState plus = st;
    MicroState minus = st;
    const CoefficientSet cp = micro_step(plus, h * mode_matrix(m), false);
    const CoefficientSet cm = micro_step(minus, -h * mode_matrix(m), false);

    const Mat3 ds_fd = (cp.S - cm.S) / (2.0 * h);
    REQUIRE(ds_fd.norm() > 0.0);
    CHECK(testutil::frob_rel_diff(ds_fd, base.dS[m]) <= 1e-4);

    Tensor4 da_fd = cp.A - cm.A;
    da_fd *= 1.0 / (2.0 * h);
    CHECK(testutil::frob_rel_diff(da_fd, base.dA[m]) <= 1e-4);
  }
}

TEST_CASE("first-order coefficient extrapolation is second-order accurate") {
  // Predicting coefficients at a nearby stretch with the sensitivities must
  // lose accuracy like the square of the distance.
  MicroState st = solved_cell("micro/cell_tiny.txt");
  const Vec3 e0(0.006, -0.002, 0.003);
  const CoefficientSet base = advance_to_stretch(st, stretch_matrix(e0, false), true, nullptr);

  const Vec3 dir = Vec3(1.0, 0.6, -0.8).normalized();
  auto predict_error = [&](double dist) {
    const Vec3 e1 = e0 + dist * dir;
    const Mat2 g = relative_deformation(e1, e0, false);
    const Vec3 c = mode_contraction(g);

    Mat3 s_pred = base.S;
    Tensor4 a_pred = base.A;
    for (int m = 0; m < kNumModes; ++m) {
      s_pred += c[m] * base.dS[m];
      a_pred += c[m] * base.dA[m];
    }

    MicroState ref = st;
    const CoefficientSet full = advance_to_stretch(ref, stretch_matrix(e1, false), false, nullptr);
    const double es = (s_pred - full.S).norm();
    const double ea = frobenius(a_pred - full.A) / frobenius(full.A);
    return std::make_pair(es, ea);
  };

  const auto [es1, ea1] = predict_error(4e-3);
  const auto [es2, ea2] = predict_error(2e-3);
  // Halving the distance should shrink the error by roughly four.
  CHECK(es1 / es2 >= 2.5);
  CHECK(es1 / es2 <= 7.0);
  CHECK(ea1 / ea2 >= 2.5);
  CHECK(ea1 / ea2 <= 7.0);
  CHECK(ea2 <= 1e-4);  // already accurate at 0.2% distance
}
