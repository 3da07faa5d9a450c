#include "csahom/fe2.hpp"

#include "csahom/parallel.hpp"

namespace csahom {

CoefficientSet advance_to_stretch(MicroState& st, const Mat2& u_target, bool with_sensitivities,
                                  SolveCounters* counters) {
  // Exact relative map: (I + g) Fbar = U_target.
  const Mat2 g = u_target * st.Fbar.inverse() - Mat2::Identity();
  return micro_step(st, g, with_sensitivities, counters);
}

Fe2Backend::Fe2Backend(const PeriodicCell& cell, const MicroParams& params, int n_qp, int threads,
                       SolveCounters* counters)
    : threads_(resolve_threads(threads)), counters_(counters ? counters : &own_) {
  MicroState ref = make_micro_state(cell, params);
  solve_correctors(ref);
  states_.assign(static_cast<size_t>(n_qp), ref);
}

void Fe2Backend::get_coefficients(const std::vector<Mat2>& f_qp, CoefficientField& out) {
  const int n = static_cast<int>(f_qp.size());
  if (n != static_cast<int>(states_.size()))
    throw Error("direct backend: quadrature point count changed between evaluations");
  out.resize(static_cast<size_t>(n));
  parallel_for(n, threads_, [&](int i) {
    const PolarFactors pf = polar_decompose(f_qp[static_cast<size_t>(i)]);
    const CoefficientSet cs =
        advance_to_stretch(states_[static_cast<size_t>(i)], pf.U, false, counters_);
    const Mat3 r3 = embed_deformation(pf.R);
    out[static_cast<size_t>(i)].A = rotate(cs.A, r3);
    out[static_cast<size_t>(i)].S = rotate(cs.S, r3);
  });
}

}  // namespace csahom
