#include "csahom/periodic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "csahom/error.hpp"

namespace csahom {

namespace {

int find_root(std::vector<int>& parent, int i) {
  while (parent[static_cast<size_t>(i)] != i) {
    parent[static_cast<size_t>(i)] = parent[static_cast<size_t>(parent[static_cast<size_t>(i)])];
    i = parent[static_cast<size_t>(i)];
  }
  return i;
}

void unite(std::vector<int>& parent, int a, int b) {
  a = find_root(parent, a);
  b = find_root(parent, b);
  if (a == b) return;
  // Lower id wins, so masters are deterministic.
  if (a < b)
    parent[static_cast<size_t>(b)] = a;
  else
    parent[static_cast<size_t>(a)] = b;
}

// Collects nodes lying on the line coord[axis] == value (within tol), sorted
// by the other coordinate.
std::vector<int> side_nodes(const Mesh& mesh, int axis, double value, double tol) {
  std::vector<int> out;
  for (int i = 0; i < mesh.n_nodes(); ++i)
    if (std::abs(mesh.nodes[static_cast<size_t>(i)][axis] - value) <= tol) out.push_back(i);
  const int other = 1 - axis;
  std::sort(out.begin(), out.end(), [&](int a, int b) {
    return mesh.nodes[static_cast<size_t>(a)][other] < mesh.nodes[static_cast<size_t>(b)][other];
  });
  return out;
}

}  // namespace

PeriodicCell match_periodic(const Mesh& mesh, double tol_rel) {
  if (mesh.n_nodes() == 0) throw Error("match_periodic: empty mesh");

  Vec2 lo(std::numeric_limits<double>::max(), std::numeric_limits<double>::max());
  Vec2 hi = -lo;
  for (const Vec2& x : mesh.nodes) {
    lo = lo.cwiseMin(x);
    hi = hi.cwiseMax(x);
  }
  const double extent = std::max(hi.x() - lo.x(), hi.y() - lo.y());
  if (!(extent > 0.0)) throw Error("match_periodic: degenerate cell bounding box");
  const double tol = tol_rel * extent;

  std::vector<int> parent(static_cast<size_t>(mesh.n_nodes()));
  std::iota(parent.begin(), parent.end(), 0);

  for (int axis = 0; axis < 2; ++axis) {
    const auto a = side_nodes(mesh, axis, lo[axis], tol);
    const auto b = side_nodes(mesh, axis, hi[axis], tol);
    const char* name = axis == 0 ? "left/right" : "bottom/top";
    if (a.size() != b.size())
      throw Error(std::string("match_periodic: ") + name + " node counts differ");
    if (a.empty()) throw Error(std::string("match_periodic: no nodes on ") + name + " boundary");
    const int other = 1 - axis;
    for (size_t i = 0; i < a.size(); ++i) {
      const double ca = mesh.nodes[static_cast<size_t>(a[i])][other];
      const double cb = mesh.nodes[static_cast<size_t>(b[i])][other];
      if (std::abs(ca - cb) > tol)
        throw Error(std::string("match_periodic: unmatched node positions on ") + name +
                    " boundary");
      unite(parent, a[i], b[i]);
    }
  }

  PeriodicCell cell;
  cell.mesh = mesh;
  cell.node_master.resize(static_cast<size_t>(mesh.n_nodes()));
  for (int i = 0; i < mesh.n_nodes(); ++i)
    cell.node_master[static_cast<size_t>(i)] = find_root(parent, i);

  // The four corners sit on two side pairings each, so their union is a single
  // class; its master anchors the cell.
  int corner = -1;
  for (int i = 0; i < mesh.n_nodes(); ++i) {
    const Vec2& x = mesh.nodes[static_cast<size_t>(i)];
    if (std::abs(x.x() - lo.x()) <= tol && std::abs(x.y() - lo.y()) <= tol) {
      corner = i;
      break;
    }
  }
  if (corner < 0) throw Error("match_periodic: no corner node found");
  cell.anchor = cell.node_master[static_cast<size_t>(corner)];

  cell.red_of_dof.assign(static_cast<size_t>(2 * mesh.n_nodes()), -1);
  int next = 0;
  for (int i = 0; i < mesh.n_nodes(); ++i) {
    if (cell.node_master[static_cast<size_t>(i)] != i) continue;  // slave
    if (i == cell.anchor) continue;                               // pinned
    cell.red_of_dof[static_cast<size_t>(2 * i)] = next++;
    cell.red_of_dof[static_cast<size_t>(2 * i + 1)] = next++;
  }
  cell.n_reduced = next;
  return cell;
}

FieldVector expand(const PeriodicCell& cell, const Eigen::VectorXd& reduced) {
  if (reduced.size() != cell.n_reduced)
    throw Error("expand: reduced vector size mismatch");
  FieldVector full = FieldVector::Zero(2 * cell.mesh.n_nodes());
  for (int i = 0; i < cell.mesh.n_nodes(); ++i)
    for (int c = 0; c < 2; ++c) {
      const int r = cell.reduced_dof(i, c);
      if (r >= 0) full[2 * i + c] = reduced[r];
    }
  return full;
}

Eigen::VectorXd reduce_add(const PeriodicCell& cell, const FieldVector& full) {
  if (full.size() != 2 * cell.mesh.n_nodes())
    throw Error("reduce_add: full vector size mismatch");
  Eigen::VectorXd reduced = Eigen::VectorXd::Zero(cell.n_reduced);
  for (int i = 0; i < cell.mesh.n_nodes(); ++i)
    for (int c = 0; c < 2; ++c) {
      const int r = cell.reduced_dof(i, c);
      if (r >= 0) reduced[r] += full[2 * i + c];
    }
  return reduced;
}

}  // namespace csahom
