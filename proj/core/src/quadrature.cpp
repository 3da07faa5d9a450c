#include <cmath>

#include "csahom/error.hpp"
#include "csahom/mesh.hpp"

namespace csahom {

QuadratureRule build_quadrature(ElementKind kind) {
  QuadratureRule r;
  if (kind == ElementKind::tri3) {
    // Edge-midpoint rule on the unit triangle: exact for quadratics.
    r.points = {Vec2(0.5, 0.0), Vec2(0.5, 0.5), Vec2(0.0, 0.5)};
    r.weights = {1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0};
  } else {
    const double g = 1.0 / std::sqrt(3.0);
    r.points = {Vec2(-g, -g), Vec2(g, -g), Vec2(g, g), Vec2(-g, g)};
    r.weights = {1.0, 1.0, 1.0, 1.0};
  }
  return r;
}

std::array<double, 4> shape_values(ElementKind kind, const Vec2& ref) {
  std::array<double, 4> n{};
  if (kind == ElementKind::tri3) {
    n[0] = 1.0 - ref.x() - ref.y();
    n[1] = ref.x();
    n[2] = ref.y();
  } else {
    const double xi = ref.x(), eta = ref.y();
    n[0] = 0.25 * (1.0 - xi) * (1.0 - eta);
    n[1] = 0.25 * (1.0 + xi) * (1.0 - eta);
    n[2] = 0.25 * (1.0 + xi) * (1.0 + eta);
    n[3] = 0.25 * (1.0 - xi) * (1.0 + eta);
  }
  return n;
}

namespace {

// Reference-space shape gradients, rows = nodes.
void ref_gradients(ElementKind kind, const Vec2& ref, std::array<Vec2, 4>& d, int& n) {
  if (kind == ElementKind::tri3) {
    n = 3;
    d[0] = Vec2(-1.0, -1.0);
    d[1] = Vec2(1.0, 0.0);
    d[2] = Vec2(0.0, 1.0);
  } else {
    n = 4;
    const double xi = ref.x(), eta = ref.y();
    d[0] = 0.25 * Vec2(-(1.0 - eta), -(1.0 - xi));
    d[1] = 0.25 * Vec2(1.0 - eta, -(1.0 + xi));
    d[2] = 0.25 * Vec2(1.0 + eta, 1.0 + xi);
    d[3] = 0.25 * Vec2(-(1.0 + eta), 1.0 - xi);
  }
}

}  // namespace

ShapeGradients shape_gradients(const Mesh& mesh, int e, const Vec2& ref) {
  const Element& el = mesh.elements[static_cast<size_t>(e)];
  std::array<Vec2, 4> dref;
  ShapeGradients out;
  ref_gradients(el.kind, ref, dref, out.n);

  Mat2 jac = Mat2::Zero();  // jac(i,j) = d x_i / d xi_j
  for (int a = 0; a < out.n; ++a) {
    const Vec2& x = mesh.nodes[static_cast<size_t>(el.nodes[a])];
    jac += x * dref[a].transpose();
  }
  out.detJ = jac.determinant();
  if (!(out.detJ > 0.0)) throw InversionError("shape_gradients", e, out.detJ);
  const Mat2 jinv_t = jac.inverse().transpose();
  for (int a = 0; a < out.n; ++a) out.dN[a] = jinv_t * dref[a];
  return out;
}

}  // namespace csahom
