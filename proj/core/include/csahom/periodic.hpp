#pragma once

// Periodic pairing of a rectangular unit cell mesh: boundary nodes on opposite
// sides are identified (slave -> master), the four corners collapse to a single
// master, and that corner master is pinned to remove the translation nullspace
// of the periodic cell problems.  The result is a reduced "periodic dof" space
// used by all cell solves.

#include <vector>

#include "csahom/mesh.hpp"

namespace csahom {

struct PeriodicCell {
  Mesh mesh;  // current configuration (updated as the cell deforms)

  std::vector<int> node_master;  // per node: representative node id
  int anchor = -1;               // master of the collapsed corners (pinned)
  std::vector<int> red_of_dof;   // full dof (2*node+comp) -> reduced index, -1 if pinned
  int n_reduced = 0;

  int reduced_dof(int node, int comp) const {
    return red_of_dof[static_cast<size_t>(2 * node_master[static_cast<size_t>(node)] + comp)];
  }
  /// Current (deformed) cell measure |Y|.
  double volume() const { return mesh_area(mesh); }
};

/// Builds the pairing from node coordinates.  Opposite-side nodes must match
/// within `tol_rel` * (cell extent); unmatched boundary layouts throw Error.
PeriodicCell match_periodic(const Mesh& mesh, double tol_rel = 1e-8);

/// Scatter a reduced vector to the full nodal space (slaves copy their master,
/// pinned dofs are zero).
FieldVector expand(const PeriodicCell& cell, const Eigen::VectorXd& reduced);

/// Gather-add a full nodal vector into reduced space (transpose of expand).
Eigen::VectorXd reduce_add(const PeriodicCell& cell, const FieldVector& full);

}  // namespace csahom
