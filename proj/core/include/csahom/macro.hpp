#pragma once

// Macroscale quasi-static solver: load stepping with a Newton iteration per
// step on the step-start configuration (updated-Lagrangian; the mesh is moved
// to the converged configuration at the end of every step).  Constitutive
// response at the macro quadrature points comes from a pluggable coefficient
// backend (direct two-scale evaluation, cluster approximation, or any other
// provider of homogenized moduli and stresses).

#include <array>
#include <functional>
#include <map>
#include <vector>

#include "csahom/error.hpp"
#include "csahom/linear_solver.hpp"
#include "csahom/mesh.hpp"
#include "csahom/micro.hpp"

namespace csahom {

/// Homogenized response at one macro quadrature point (spatial frame).
struct QpCoefficients {
  Tensor4 A;
  SymTensor2 S = SymTensor2::Zero();
};
using CoefficientField = std::vector<QpCoefficients>;

/// Supplier of homogenized coefficients for all macro quadrature points given
/// their accumulated total deformation gradients.  Implementations own any
/// per-qp persistent micro state.
class CoefficientBackend {
 public:
  virtual ~CoefficientBackend() = default;
  virtual void get_coefficients(const std::vector<Mat2>& f_qp, CoefficientField& out) = 0;
  /// Monotone count of adaptation events (e.g. cluster growth); the
  /// oscillation detector only fires when this stalls.
  virtual long adaptation_count() const { return 0; }
  /// Total micro problems solved so far (for cost reporting).
  virtual long micro_solves() const { return 0; }
};

/// Error raised by newton_solve when the coefficient backend fails (micro
/// nonconvergence, inversion inside a cell, ...), so callers can distinguish
/// micro-level failures from macro-level ones.
class MicroBackendError : public Error {
 public:
  using Error::Error;
};

/// Linear polynomial load profile t(x) = c0 + cx * x1 + cy * x2 per component,
/// evaluated at reference coordinates and scaled by the step ramp.
struct TractionPoly {
  Vec2 c0 = Vec2::Zero();
  Vec2 cx = Vec2::Zero();
  Vec2 cy = Vec2::Zero();
  Vec2 eval(const Vec2& x) const { return c0 + cx * x.x() + cy * x.y(); }
};

struct LoadCase {
  std::map<int, std::array<bool, 2>> fixed;     // facet tag -> fix x / fix y
  std::map<int, TractionPoly> tractions;        // dead loads on reference facets
  std::map<int, TractionPoly> displacements;    // prescribed motion (both components)
  Vec2 body_force = Vec2::Zero();               // constant dead body force
  int n_steps = 10;

  /// Load factor of step k: k/(n_steps-1), so the first step carries zero
  /// load; a single-step case ramps straight to 1.
  double ramp(int k) const { return n_steps > 1 ? double(k) / double(n_steps - 1) : 1.0; }
};

struct MacroState {
  Mesh mesh0;            // reference configuration (loads live here)
  Mesh mesh;             // start-of-step configuration
  FieldVector u_total;   // accumulated displacement from mesh0
  std::vector<Mat2> F_qp;
  std::vector<int> qp_offset;
  int steps_done = 0;

  int n_qp() const { return qp_offset.back(); }
};

struct NewtonOptions {
  double eps = 1e-6;           // residual, relative to max(|f_ext|, |f_int|)
  int max_iter = 25;
  int oscillation_window = 4;  // non-decreasing residuals before giving up
};

struct IterationRecord {
  int step = 0;
  int iter = 0;
  double residual = 0.0;
  double scale = 0.0;
  long adaptations = 0;
};

struct StepResult {
  int step = 0;
  int iterations = 0;
  bool converged = false;
  bool oscillation = false;
  std::vector<IterationRecord> history;
};

/// Snapshot callback, invoked once per Newton iteration with the state the
/// coefficients were evaluated at (iteration 0 is the state entering the
/// step; the final call is the converged state).
using IterationHook =
    std::function<void(int step, int iter, const FieldVector& u_total,
                       const std::vector<Mat2>& f_qp, const CoefficientField& coeffs,
                       double residual)>;

class MacroSolver {
 public:
  MacroSolver(Mesh mesh0, LoadCase load, NewtonOptions opt = {});

  const MacroState& state() const { return state_; }
  const LoadCase& load() const { return load_; }

  /// Advances one load step (state().steps_done picks the ramp value).
  /// Throws ConvergenceError when the iteration budget runs out without
  /// convergence or oscillation, MicroBackendError when the backend fails.
  StepResult newton_solve(CoefficientBackend& backend, const IterationHook& hook = {});

  /// Dead external load at the given step's ramp value (full dof layout).
  FieldVector external_force(int step) const;

  /// Reference-configuration positions of the macro quadrature points.
  std::vector<Vec2> qp_positions_reference() const;

  // Assembly on a given configuration with a given coefficient field; exposed
  // for direct verification.
  static SparseMat assemble_tangent_field(const Mesh& mesh, const std::vector<int>& qp_offset,
                                          const CoefficientField& coeffs);
  static FieldVector internal_force_field(const Mesh& mesh, const std::vector<int>& qp_offset,
                                          const CoefficientField& coeffs);

 private:
  LoadCase load_;
  NewtonOptions opt_;
  MacroState state_;
  FieldVector unit_external_;        // external force at ramp = 1
  std::vector<char> constrained_;    // per dof
  std::vector<double> presc_unit_;   // prescribed value per dof at ramp = 1
};

}  // namespace csahom
