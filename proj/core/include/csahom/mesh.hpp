#pragma once

// 2D unstructured mesh: 3-node triangles and 4-node quadrilaterals with
// integer region tags, plus optional tagged boundary facets (2-node segments).
//
// Text format (whitespace separated, '#' starts a comment):
//   nodes N
//   <id> <x> <y>                      (ids 0-based, strictly increasing)
//   elements M
//   <id> tri3|quad4 <n...> <region>
//   facets K                          (optional section)
//   <id> <n1> <n2> <tag>

#include <Eigen/Dense>
#include <array>
#include <string>
#include <vector>

#include "csahom/tensor.hpp"

namespace csahom {

enum class ElementKind { tri3, quad4 };

inline int node_count(ElementKind k) { return k == ElementKind::tri3 ? 3 : 4; }

struct Element {
  ElementKind kind = ElementKind::tri3;
  std::array<int, 4> nodes{{-1, -1, -1, -1}};
  int region = 0;
};

struct Facet {
  std::array<int, 2> nodes{{-1, -1}};
  int tag = 0;
};

struct Mesh {
  std::vector<Vec2> nodes;
  std::vector<Element> elements;
  std::vector<Facet> facets;

  int n_nodes() const { return static_cast<int>(nodes.size()); }
  int n_elements() const { return static_cast<int>(elements.size()); }
};

/// Parses the text format above.  Throws ParseError on malformed input,
/// out-of-range connectivity, or non-contiguous ids.
Mesh load_mesh(const std::string& path);

/// Writes the same format; load_mesh(write_mesh(m)) reproduces m exactly
/// (coordinates are emitted with round-trip precision).
void write_mesh(const Mesh& mesh, const std::string& path);

/// Nodal displacement field, 2 entries per node [u0x u0y u1x u1y ...].
using FieldVector = Eigen::VectorXd;

/// Returns a copy of the mesh with nodes moved by u.  Throws InversionError
/// if any element Jacobian becomes non-positive at any quadrature point.
Mesh displace(const Mesh& mesh, const FieldVector& u);

// ---- quadrature and shape functions ----------------------------------------

struct QuadratureRule {
  std::vector<Vec2> points;    // reference coordinates
  std::vector<double> weights; // reference weights (sum = reference measure)
};

/// tri3: 3-point interior rule, degree 2, weights 1/6 each.
/// quad4: 2x2 Gauss on [-1,1]^2, weights 1 each.
QuadratureRule build_quadrature(ElementKind kind);

/// Shape function values at a reference point (first node_count entries valid).
std::array<double, 4> shape_values(ElementKind kind, const Vec2& ref);

struct ShapeGradients {
  std::array<Vec2, 4> dN;  // physical gradients, first n valid
  double detJ = 0.0;       // reference->physical Jacobian determinant
  int n = 0;
};

/// Physical shape-function gradients of element `e` evaluated at reference
/// point `ref`, using the node coordinates in `mesh`.  Throws InversionError
/// when det J <= 0.
ShapeGradients shape_gradients(const Mesh& mesh, int e, const Vec2& ref);

/// Area of the mesh (sum of w * detJ over all quadrature points).
double mesh_area(const Mesh& mesh);

/// FNV-1a checksum over the canonical serialization of nodes + elements;
/// used to pair run outputs with the meshes that produced them.
std::uint64_t mesh_checksum(const Mesh& mesh);

}  // namespace csahom
