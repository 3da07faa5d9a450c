// Snapshot collection, reduced-basis construction, and the projected cell
// solver.
#include "csahom/error.hpp"
#include "csahom/pod.hpp"
#include "doctest.h"
#include "micro_internal.hpp"
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

}  // namespace

TEST_CASE("snapshot bank covers six ramps with an undeformed lead column") {
  const PeriodicCell cell = tiny_cell();
  PodParams pp;
  pp.n_t = 6;
  const SnapshotBank bank = generate_snapshots(cell, cell_params(), pp, 1);

  CHECK(bank.V.rows() == cell.n_reduced);
  CHECK(bank.V.cols() == 6 * pp.n_t);
  CHECK(bank.mesh_checksum == mesh_checksum(cell.mesh));
  for (int ramp = 0; ramp < 6; ++ramp)
    CHECK(bank.V.col(ramp * pp.n_t).cwiseAbs().maxCoeff() == 0.0);
  // Later levels carry actual fluctuation content.
  int nonzero = 0;
  for (int c = 0; c < bank.V.cols(); ++c)
    if (bank.V.col(c).cwiseAbs().maxCoeff() > 0.0) ++nonzero;
  CHECK(nonzero == 6 * (pp.n_t - 1));
}

TEST_CASE("snapshot generation is deterministic") {
  const PeriodicCell cell = tiny_cell();
  PodParams pp;
  pp.n_t = 4;
  const SnapshotBank a = generate_snapshots(cell, cell_params(), pp, 1);
  const SnapshotBank b = generate_snapshots(cell, cell_params(), pp, 2);
  CHECK((a.V - b.V).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("basis size grows as the truncation tolerance tightens") {
  const PeriodicCell cell = tiny_cell();
  PodParams pp;
  const SnapshotBank bank = generate_snapshots(cell, cell_params(), pp, 1);

  int prev = 0;
  for (double delta : {0.3, 0.1, 0.03, 0.01, 0.003, 0.0}) {
    const ReducedBasis basis = build_basis(bank, delta);
    CHECK(basis.n_modes() >= prev);
    CHECK(basis.n_modes() >= 1);
    prev = basis.n_modes();

    // Orthonormal columns.
    const Eigen::MatrixXd gram =
        basis.phi.transpose() * basis.phi - Eigen::MatrixXd::Identity(prev, prev);
    CHECK(gram.cwiseAbs().maxCoeff() <= 1e-12);

    // Truncation rule: the retained modes push the spectral tail below delta.
    if (delta > 0.0) {
      const auto& ev = basis.eigenvalues;
      const double total = ev.sum();
      double tail = 0.0;
      for (int i = basis.n_modes(); i < ev.size(); ++i) tail += std::max(ev[i], 0.0);
      CHECK(std::sqrt(tail / total) < delta);
    }
  }
  CHECK(prev <= cell.n_reduced);
}

TEST_CASE("snapshot-space and dense-correlation routes agree") {
  const PeriodicCell cell = tiny_cell();
  PodParams pp;
  pp.n_t = 5;
  const SnapshotBank bank = generate_snapshots(cell, cell_params(), pp, 1);
  const ReducedBasis snap = build_basis(bank, 0.01, false);
  const ReducedBasis dense = build_basis(bank, 0.01, true);
  REQUIRE(snap.n_modes() == dense.n_modes());
  // The two correlation operators share their nonzero spectrum.
  const int k = snap.n_modes();
  CHECK((snap.eigenvalues.head(k) - dense.eigenvalues.head(k)).cwiseAbs().maxCoeff() <=
        1e-10 * std::max(snap.eigenvalues[0], 1.0));
  // Same retained subspace: projecting one basis onto the other loses nothing.
  const Eigen::MatrixXd resid = dense.phi - snap.phi * (snap.phi.transpose() * dense.phi);
  CHECK(resid.cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("a complete basis reproduces the unreduced solver") {
  const PeriodicCell cell = tiny_cell();
  const SnapshotBank bank = generate_snapshots(cell, cell_params(), PodParams{}, 1);
  const ReducedBasis basis = build_basis(bank, 0.0);
  REQUIRE(basis.n_modes() == cell.n_reduced);  // snapshots span the full space

  ReducedCellSolver red(cell, cell_params(), &basis);
  MicroState full = make_micro_state(cell, cell_params());
  solve_correctors(full);

  Mat2 g;
  g << 0.009, 0.004, 0.002, -0.007;
  const CoefficientSet cr = red.step(g);
  MicroState fullc = full;
  const CoefficientSet cf = micro_step(fullc, g, false);

  CHECK(testutil::rel_diff(cr.A, cf.A) <= 1e-8);
  CHECK((cr.S - cf.S).cwiseAbs().maxCoeff() <= 1e-8 * cf.S.cwiseAbs().maxCoeff());
}

TEST_CASE("reduced equilibrium satisfies galerkin orthogonality") {
  const PeriodicCell cell = tiny_cell();
  const SnapshotBank bank = generate_snapshots(cell, cell_params(), PodParams{}, 1);
  const ReducedBasis basis = build_basis(bank, 0.05);
  REQUIRE(basis.n_modes() < cell.n_reduced);  // genuinely truncated

  ReducedCellSolver red(cell, cell_params(), &basis);
  Mat2 g;
  g << 0.012, 0.005, 0.003, -0.009;
  red.step(g);

  // Residual of the full model at the reduced solution: nonzero, but
  // invisible to the basis.
  MicroState st = red.state();
  detail::MicroScratch sc;
  detail::prepare(st, sc);
  const Eigen::VectorXd r = detail::residual_rhs(st, sc);
  const double rn = r.norm();
  REQUIRE(rn > 0.0);
  const double pn = (basis.phi.transpose() * r).norm();
  CHECK(pn <= 1e-7 * rn);
}

TEST_CASE("basis files round-trip and refuse foreign meshes") {
  const auto dir = testutil::fresh_tmp_dir("csahom_test_pod");
  const PeriodicCell cell = tiny_cell();
  PodParams pp;
  pp.n_t = 4;
  const SnapshotBank bank = generate_snapshots(cell, cell_params(), pp, 1);
  const ReducedBasis basis = build_basis(bank, 0.01);

  const std::string path = (dir / "cell.basis").string();
  save_basis(basis, path);
  const ReducedBasis loaded = load_basis(path);
  CHECK(loaded.n_modes() == basis.n_modes());
  CHECK((loaded.phi - basis.phi).cwiseAbs().maxCoeff() == 0.0);
  CHECK((loaded.eigenvalues - basis.eigenvalues).cwiseAbs().maxCoeff() == 0.0);
  CHECK(loaded.mesh_checksum == basis.mesh_checksum);
  CHECK(loaded.delta == basis.delta);

  // A basis built for a different cell is rejected by the solver.
  const PeriodicCell other = match_periodic(load_mesh(testutil::data_file("micro/cell_sym.txt")));
  CHECK_THROWS_AS(ReducedCellSolver(other, cell_params(), &basis), Error);

  // Corrupt header: loading fails loudly.
  testutil::write_file(dir / "bad.basis", "not a basis file at all");
  CHECK_THROWS_AS(load_basis((dir / "bad.basis").string()), Error);
}
