#include "csahom/macro.hpp"

#include <cmath>

#include "csahom/error.hpp"

namespace csahom {

namespace {

const QuadratureRule& rule_for(ElementKind k) {
  static const QuadratureRule tri = build_quadrature(ElementKind::tri3);
  static const QuadratureRule quad = build_quadrature(ElementKind::quad4);
  return k == ElementKind::tri3 ? tri : quad;
}

std::vector<int> build_qp_offsets(const Mesh& mesh) {
  std::vector<int> off(static_cast<size_t>(mesh.n_elements()) + 1, 0);
  for (int e = 0; e < mesh.n_elements(); ++e)
    off[static_cast<size_t>(e) + 1] =
        off[static_cast<size_t>(e)] +
        (mesh.elements[static_cast<size_t>(e)].kind == ElementKind::tri3 ? 3 : 4);
  return off;
}

}  // namespace

MacroSolver::MacroSolver(Mesh mesh0, LoadCase load, NewtonOptions opt)
    : load_(std::move(load)), opt_(opt) {
  state_.mesh0 = std::move(mesh0);
  state_.mesh = state_.mesh0;
  state_.qp_offset = build_qp_offsets(state_.mesh0);
  state_.F_qp.assign(static_cast<size_t>(state_.qp_offset.back()), Mat2::Identity());
  state_.u_total = FieldVector::Zero(2 * state_.mesh0.n_nodes());
  state_.steps_done = 0;

  const int ndof = 2 * state_.mesh0.n_nodes();
  constrained_.assign(static_cast<size_t>(ndof), 0);
  presc_unit_.assign(static_cast<size_t>(ndof), 0.0);
  for (const Facet& f : state_.mesh0.facets) {
    const auto fix = load_.fixed.find(f.tag);
    const auto dis = load_.displacements.find(f.tag);
    if (fix == load_.fixed.end() && dis == load_.displacements.end()) continue;
    for (int n : f.nodes) {
      for (int c = 0; c < 2; ++c) {
        const size_t dof = static_cast<size_t>(2 * n + c);
        if (fix != load_.fixed.end() && fix->second[static_cast<size_t>(c)]) {
          constrained_[dof] = 1;
          presc_unit_[dof] = 0.0;
        } else if (dis != load_.displacements.end() && !constrained_[dof]) {
          constrained_[dof] = 1;
          presc_unit_[dof] = dis->second.eval(state_.mesh0.nodes[static_cast<size_t>(n)])[c];
        }
      }
    }
  }

  // Dead external load at unit ramp: facet tractions + body force, both on
  // the reference configuration.
  unit_external_ = FieldVector::Zero(ndof);
  for (const Facet& f : state_.mesh0.facets) {
    const auto tr = load_.tractions.find(f.tag);
    if (tr == load_.tractions.end()) continue;
    const Vec2& x1 = state_.mesh0.nodes[static_cast<size_t>(f.nodes[0])];
    const Vec2& x2 = state_.mesh0.nodes[static_cast<size_t>(f.nodes[1])];
    const double half_len = 0.5 * (x2 - x1).norm();
    const double gp = 1.0 / std::sqrt(3.0);
    for (const double xi : {-gp, gp}) {
      const double n1 = 0.5 * (1.0 - xi), n2 = 0.5 * (1.0 + xi);
      const Vec2 x = n1 * x1 + n2 * x2;
      const Vec2 t = tr->second.eval(x);
      for (int c = 0; c < 2; ++c) {
        unit_external_[2 * f.nodes[0] + c] += half_len * n1 * t[c];
        unit_external_[2 * f.nodes[1] + c] += half_len * n2 * t[c];
      }
    }
  }
  if (!load_.body_force.isZero()) {
    for (int e = 0; e < state_.mesh0.n_elements(); ++e) {
      const Element& el = state_.mesh0.elements[static_cast<size_t>(e)];
      const QuadratureRule& rule = rule_for(el.kind);
      for (size_t q = 0; q < rule.points.size(); ++q) {
        const ShapeGradients shp = shape_gradients(state_.mesh0, e, rule.points[q]);
        const auto nv = shape_values(el.kind, rule.points[q]);
        const double w = rule.weights[q] * shp.detJ;
        for (int a = 0; a < node_count(el.kind); ++a)
          for (int c = 0; c < 2; ++c)
            unit_external_[2 * el.nodes[static_cast<size_t>(a)] + c] +=
                w * nv[static_cast<size_t>(a)] * load_.body_force[c];
      }
    }
  }
}

FieldVector MacroSolver::external_force(int step) const {
  return load_.ramp(step) * unit_external_;
}

std::vector<Vec2> MacroSolver::qp_positions_reference() const {
  std::vector<Vec2> pos(static_cast<size_t>(state_.qp_offset.back()));
  for (int e = 0; e < state_.mesh0.n_elements(); ++e) {
    const Element& el = state_.mesh0.elements[static_cast<size_t>(e)];
    const QuadratureRule& rule = rule_for(el.kind);
    for (size_t q = 0; q < rule.points.size(); ++q) {
      const auto nv = shape_values(el.kind, rule.points[q]);
      Vec2 x = Vec2::Zero();
      for (int a = 0; a < node_count(el.kind); ++a)
        x += nv[static_cast<size_t>(a)] * state_.mesh0.nodes[static_cast<size_t>(el.nodes[static_cast<size_t>(a)])];
      pos[static_cast<size_t>(state_.qp_offset[static_cast<size_t>(e)]) + q] = x;
    }
  }
  return pos;
}

SparseMat MacroSolver::assemble_tangent_field(const Mesh& mesh, const std::vector<int>& qp_offset,
                                              const CoefficientField& coeffs) {
  const int ndof = 2 * mesh.n_nodes();
  std::vector<Eigen::Triplet<double>> trips;
  double ke[8][8];
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const Element& el = mesh.elements[static_cast<size_t>(e)];
    const int nn = node_count(el.kind);
    const QuadratureRule& rule = rule_for(el.kind);
    for (int i = 0; i < 2 * nn; ++i)
      for (int j = 0; j < 2 * nn; ++j) ke[i][j] = 0.0;
    for (size_t q = 0; q < rule.points.size(); ++q) {
      const ShapeGradients shp = shape_gradients(mesh, e, rule.points[q]);
      const double w = rule.weights[q] * shp.detJ;
      const Tensor4& a4 = coeffs[static_cast<size_t>(qp_offset[static_cast<size_t>(e)]) + q].A;
      for (int a = 0; a < nn; ++a)
        for (int b = 0; b < nn; ++b) {
          const Vec2& da = shp.dN[static_cast<size_t>(a)];
          const Vec2& db = shp.dN[static_cast<size_t>(b)];
          for (int p = 0; p < 2; ++p)
            for (int k = 0; k < 2; ++k)
              ke[2 * a + p][2 * b + k] +=
                  w * (a4(p, 0, k, 0) * da[0] * db[0] + a4(p, 0, k, 1) * da[0] * db[1] +
                       a4(p, 1, k, 0) * da[1] * db[0] + a4(p, 1, k, 1) * da[1] * db[1]);
        }
    }
    for (int a = 0; a < nn; ++a)
      for (int p = 0; p < 2; ++p)
        for (int b = 0; b < nn; ++b)
          for (int k = 0; k < 2; ++k)
            trips.emplace_back(2 * el.nodes[static_cast<size_t>(a)] + p,
                               2 * el.nodes[static_cast<size_t>(b)] + k, ke[2 * a + p][2 * b + k]);
  }
  SparseMat m(ndof, ndof);
  m.setFromTriplets(trips.begin(), trips.end());
  return m;
}

FieldVector MacroSolver::internal_force_field(const Mesh& mesh, const std::vector<int>& qp_offset,
                                              const CoefficientField& coeffs) {
  FieldVector f = FieldVector::Zero(2 * mesh.n_nodes());
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const Element& el = mesh.elements[static_cast<size_t>(e)];
    const int nn = node_count(el.kind);
    const QuadratureRule& rule = rule_for(el.kind);
    for (size_t q = 0; q < rule.points.size(); ++q) {
      const ShapeGradients shp = shape_gradients(mesh, e, rule.points[q]);
      const double w = rule.weights[q] * shp.detJ;
      const SymTensor2& s = coeffs[static_cast<size_t>(qp_offset[static_cast<size_t>(e)]) + q].S;
      for (int a = 0; a < nn; ++a) {
        const Vec2& da = shp.dN[static_cast<size_t>(a)];
        for (int p = 0; p < 2; ++p)
          f[2 * el.nodes[static_cast<size_t>(a)] + p] += w * (s(p, 0) * da[0] + s(p, 1) * da[1]);
      }
    }
  }
  return f;
}

StepResult MacroSolver::newton_solve(CoefficientBackend& backend, const IterationHook& hook) {
  const int step = state_.steps_done;
  const int ndof = 2 * state_.mesh0.n_nodes();
  const double dr = load_.ramp(step) - (step > 0 ? load_.ramp(step - 1) : 0.0);
  const FieldVector f_ext = external_force(step);

  // Shape data of the frozen step configuration.
  struct QpShape {
    ShapeGradients shp;
    double w;
  };
  std::vector<QpShape> shapes(static_cast<size_t>(state_.n_qp()));
  for (int e = 0; e < state_.mesh.n_elements(); ++e) {
    const QuadratureRule& rule = rule_for(state_.mesh.elements[static_cast<size_t>(e)].kind);
    for (size_t q = 0; q < rule.points.size(); ++q) {
      QpShape& qs = shapes[static_cast<size_t>(state_.qp_offset[static_cast<size_t>(e)]) + q];
      qs.shp = shape_gradients(state_.mesh, e, rule.points[q]);
      qs.w = rule.weights[q] * qs.shp.detJ;
    }
  }

  FieldVector u_step = FieldVector::Zero(ndof);
  std::vector<Mat2> f_work = state_.F_qp;
  CoefficientField coeffs;

  // Total in-step deformation relative to the frozen configuration.
  auto update_f_work = [&]() {
    for (int e = 0; e < state_.mesh.n_elements(); ++e) {
      const Element& el = state_.mesh.elements[static_cast<size_t>(e)];
      const int nn = node_count(el.kind);
      for (int q = state_.qp_offset[static_cast<size_t>(e)];
           q < state_.qp_offset[static_cast<size_t>(e) + 1]; ++q) {
        Mat2 h = Mat2::Zero();
        for (int a = 0; a < nn; ++a) {
          const int n = el.nodes[static_cast<size_t>(a)];
          h += Vec2(u_step[2 * n], u_step[2 * n + 1]) *
               shapes[static_cast<size_t>(q)].shp.dN[static_cast<size_t>(a)].transpose();
        }
        const Mat2 f_new = (Mat2::Identity() + h) * state_.F_qp[static_cast<size_t>(q)];
        if (!(f_new.determinant() > 0.0))
          throw InversionError("macro newton_solve", e, f_new.determinant());
        f_work[static_cast<size_t>(q)] = f_new;
      }
    }
  };

  // Prescribed boundary motion enters once, before the first residual check,
  // so displacement-driven steps cannot converge trivially at the old state.
  if (dr != 0.0) {
    bool moved = false;
    for (int d = 0; d < ndof; ++d)
      if (constrained_[static_cast<size_t>(d)] && presc_unit_[static_cast<size_t>(d)] != 0.0) {
        u_step[d] = dr * presc_unit_[static_cast<size_t>(d)];
        moved = true;
      }
    if (moved) update_f_work();
  }

  StepResult result;
  result.step = step;
  const long adapt0 = backend.adaptation_count();

  for (int iter = 0;; ++iter) {
    try {
      backend.get_coefficients(f_work, coeffs);
    } catch (const Error& e) {
      throw MicroBackendError(e.what());
    }
    if (static_cast<int>(coeffs.size()) != state_.n_qp())
      throw Error("coefficient backend returned wrong field size");

    const FieldVector f_int = internal_force_field(state_.mesh, state_.qp_offset, coeffs);
    // The internal-force scale runs over every dof so that reactions keep it
    // nonzero under pure displacement control; the residual itself only sees
    // the free dofs.
    double rnorm = 0.0, next = 0.0, fint_n = 0.0;
    for (int d = 0; d < ndof; ++d) {
      fint_n += f_int[d] * f_int[d];
      if (constrained_[static_cast<size_t>(d)]) continue;
      const double r = f_ext[d] - f_int[d];
      rnorm += r * r;
      next += f_ext[d] * f_ext[d];
    }
    rnorm = std::sqrt(rnorm);
    const double scale = std::max(std::sqrt(next), std::sqrt(fint_n));

    if (hook) {
      FieldVector u_now = state_.u_total + u_step;
      hook(step, iter, u_now, f_work, coeffs, rnorm);
    }
    IterationRecord rec;
    rec.step = step;
    rec.iter = iter;
    rec.residual = rnorm;
    rec.scale = scale;
    rec.adaptations = backend.adaptation_count() - adapt0;
    result.history.push_back(rec);
    result.iterations = iter;

    if (rnorm <= opt_.eps * scale) {
      result.converged = true;
      break;
    }

    // Oscillation: a window of non-decreasing residuals with no backend
    // adaptation happening in that window.
    const int w = opt_.oscillation_window;
    if (static_cast<int>(result.history.size()) > w) {
      bool stalled = true;
      const size_t n = result.history.size();
      for (size_t i = n - static_cast<size_t>(w); i < n; ++i) {
        if (result.history[i].residual < result.history[i - 1].residual ||
            result.history[i].adaptations != result.history[i - 1].adaptations) {
          stalled = false;
          break;
        }
      }
      if (stalled) {
        result.oscillation = true;
        break;
      }
    }

    if (iter >= opt_.max_iter)
      throw ConvergenceError("macro newton_solve", iter, rnorm / (scale > 0.0 ? scale : 1.0));

    // Tangent solve on the free dofs (prescribed motion already applied).
    const SparseMat k_full = assemble_tangent_field(state_.mesh, state_.qp_offset, coeffs);
    std::vector<int> free_of_dof(static_cast<size_t>(ndof), -1);
    int nfree = 0;
    for (int d = 0; d < ndof; ++d)
      if (!constrained_[static_cast<size_t>(d)]) free_of_dof[static_cast<size_t>(d)] = nfree++;

    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nfree);
    for (int d = 0; d < ndof; ++d) {
      const int fd = free_of_dof[static_cast<size_t>(d)];
      if (fd >= 0) rhs[fd] = f_ext[d] - f_int[d];
    }
    std::vector<Eigen::Triplet<double>> trips;
    for (int col = 0; col < k_full.outerSize(); ++col)
      for (SparseMat::InnerIterator it(k_full, col); it; ++it) {
        const int fr = free_of_dof[static_cast<size_t>(it.row())];
        const int fc = free_of_dof[static_cast<size_t>(col)];
        if (fr >= 0 && fc >= 0) trips.emplace_back(fr, fc, it.value());
      }
    SparseMat k_ff(nfree, nfree);
    k_ff.setFromTriplets(trips.begin(), trips.end());
    DirectSolver solver;
    solver.factorize(k_ff);
    const Eigen::VectorXd x = solver.solve(rhs);
    for (int d = 0; d < ndof; ++d) {
      const int fd = free_of_dof[static_cast<size_t>(d)];
      if (fd >= 0) u_step[d] += x[fd];
    }
    update_f_work();
  }

  // Commit the step (also on oscillation termination: the current state is
  // accepted and the run continues).
  state_.mesh = displace(state_.mesh, u_step);
  state_.F_qp = f_work;
  state_.u_total += u_step;
  state_.steps_done++;
  return result;
}

}  // namespace csahom
