// Periodic pairing of cell meshes and the reduced <-> full dof maps.
#include <random>

#include "csahom/error.hpp"
#include "csahom/periodic.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace csahom;

TEST_CASE("structured cell pairs boundaries and collapses corners") {
  const Mesh mesh = load_mesh(testutil::data_file("micro/cell_tiny.txt"));
  const PeriodicCell cell = match_periodic(mesh);

  // 6x6 nodes; opposite edges identify, corners collapse: 25 unique nodes,
  // two dofs each, anchor pinned.
  CHECK(cell.n_reduced == 48);
  CHECK(cell.volume() == doctest::Approx(1.0).epsilon(1e-12));
  REQUIRE(cell.anchor >= 0);
  CHECK(cell.red_of_dof[2 * cell.anchor + 0] == -1);
  CHECK(cell.red_of_dof[2 * cell.anchor + 1] == -1);

  const double tol = 1e-12;
  int corner_count = 0;
  for (int n = 0; n < mesh.n_nodes(); ++n) {
    const Vec2& x = mesh.nodes[n];
    const bool on_x = std::abs(x.x()) < tol || std::abs(x.x() - 1.0) < tol;
    const bool on_y = std::abs(x.y()) < tol || std::abs(x.y() - 1.0) < tol;
    if (on_x && on_y) {
      CHECK(cell.node_master[n] == cell.anchor);
      ++corner_count;
    } else if (!on_x && !on_y) {
      CHECK(cell.node_master[n] == n);  // interior nodes are their own master
    }
  }
  CHECK(corner_count == 4);

  // Left/right and bottom/top partners share a master.
  for (int n = 0; n < mesh.n_nodes(); ++n) {
    const Vec2& x = mesh.nodes[n];
    if (std::abs(x.x()) < tol && x.y() > tol && x.y() < 1.0 - tol) {
      for (int p = 0; p < mesh.n_nodes(); ++p) {
        const Vec2& y = mesh.nodes[p];
        if (std::abs(y.x() - 1.0) < tol && std::abs(y.y() - x.y()) < tol)
          CHECK(cell.node_master[n] == cell.node_master[p]);
      }
    }
  }
}

TEST_CASE("expand and reduce_add are adjoint maps") {
  const Mesh mesh = load_mesh(testutil::data_file("micro/cell_tiny.txt"));
  const PeriodicCell cell = match_periodic(mesh);

  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::VectorXd red(cell.n_reduced);
  for (int i = 0; i < red.size(); ++i) red[i] = u(rng);
  FieldVector full(2 * mesh.n_nodes());
  for (int i = 0; i < full.size(); ++i) full[i] = u(rng);

  const double lhs = full.dot(expand(cell, red));
  const double rhs = reduce_add(cell, full).dot(red);
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));

  // Expanding a reduced unit vector lights up every periodic copy equally.
  Eigen::VectorXd e0 = Eigen::VectorXd::Zero(cell.n_reduced);
  e0[0] = 1.0;
  const FieldVector x = expand(cell, e0);
  int hits = 0;
  for (int i = 0; i < x.size(); ++i) {
    CHECK((x[i] == 0.0 || x[i] == 1.0));
    if (x[i] == 1.0) {
      CHECK(cell.reduced_dof(i / 2, i % 2) == 0);
      ++hits;
    }
  }
  CHECK(hits >= 1);
}

TEST_CASE("pinned dofs stay silent through the round trip") {
  const Mesh mesh = load_mesh(testutil::data_file("micro/cell_tiny.txt"));
  const PeriodicCell cell = match_periodic(mesh);
  Eigen::VectorXd red = Eigen::VectorXd::Ones(cell.n_reduced);
  const FieldVector full = expand(cell, red);
  CHECK(full[2 * cell.anchor + 0] == 0.0);
  CHECK(full[2 * cell.anchor + 1] == 0.0);
}

TEST_CASE("meshes without matching boundary discretizations are rejected") {
  Mesh mesh = load_mesh(testutil::data_file("micro/cell_tiny.txt"));
  // Slide one non-corner boundary node along the edge; its partner no longer
  // lines up.
  for (int n = 0; n < mesh.n_nodes(); ++n) {
    Vec2& x = mesh.nodes[n];
    if (std::abs(x.x()) < 1e-12 && x.y() > 0.1 && x.y() < 0.9) {
      x.y() += 0.07;
      break;
    }
  }
  CHECK_THROWS_AS(match_periodic(mesh), Error);
}
