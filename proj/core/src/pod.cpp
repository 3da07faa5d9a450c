#include "csahom/pod.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "csahom/error.hpp"
#include "csahom/parallel.hpp"
#include "micro_internal.hpp"

namespace csahom {

namespace {

// Sample master-dof values of a full nodal field into the reduced layout.
Eigen::VectorXd sample_reduced(const PeriodicCell& cell, const FieldVector& full) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(cell.n_reduced);
  const int nn = cell.mesh.n_nodes();
  for (int i = 0; i < nn; ++i) {
    if (cell.node_master[static_cast<size_t>(i)] != i) continue;
    for (int c = 0; c < 2; ++c) {
      const int r = cell.red_of_dof[static_cast<size_t>(2 * i + c)];
      if (r >= 0) v[r] = full[2 * i + c];
    }
  }
  return v;
}

Mat2 ramp_direction(int pq) {
  Mat2 m = Mat2::Zero();
  switch (pq) {
    case 0: m(0, 0) = 1.0; break;
    case 1: m(1, 1) = 1.0; break;
    default: m(0, 1) = m(1, 0) = 1.0;
  }
  return m;
}

}  // namespace

SnapshotBank generate_snapshots(const PeriodicCell& cell, const MicroParams& mp,
                                const PodParams& pp, int threads, SolveCounters* counters) {
  if (pp.n_t < 2) throw ConfigError("snapshot generation needs at least two load levels per ramp");
  MicroState ref = make_micro_state(cell, mp);
  solve_correctors(ref, counters);

  SnapshotBank bank;
  bank.n_t = pp.n_t;
  bank.bound_min = pp.bound_min;
  bank.bound_max = pp.bound_max;
  bank.mesh_checksum = mesh_checksum(cell.mesh);
  bank.V = Eigen::MatrixXd::Zero(cell.n_reduced, 6 * pp.n_t);

  parallel_for(6, threads, [&](int alpha) {
    const int pq = alpha / 2;
    const double bound = (alpha % 2 == 0) ? pp.bound_min : pp.bound_max;
    const Mat2 dir = ramp_direction(pq);
    MicroState st = ref;
    for (int k = 1; k < pp.n_t; ++k) {
      const double amp = bound * static_cast<double>(k) / static_cast<double>(pp.n_t - 1);
      const Mat2 u_target = Mat2::Identity() + amp * dir;
      const Mat2 g = u_target * st.Fbar.inverse() - Mat2::Identity();
      micro_step(st, g, false, counters);
      bank.V.col(alpha * pp.n_t + k) = sample_reduced(st.cell, st.fluctuation());
    }
  });
  return bank;
}

ReducedBasis build_basis(const SnapshotBank& bank, double delta, bool force_dense) {
  const int m = static_cast<int>(bank.V.cols());
  const int n = static_cast<int>(bank.V.rows());
  if (m == 0 || n == 0) throw Error("basis construction: empty snapshot bank");

  ReducedBasis basis;
  basis.delta = delta;
  basis.mesh_checksum = bank.mesh_checksum;

  Eigen::VectorXd lambda;
  Eigen::MatrixXd modes;  // candidate modes, one per eigenvalue, descending
  // delta <= 0 asks for a complete basis.  Only the dense correlation
  // operator has eigenvectors spanning the whole space (the snapshot-space
  // lift cannot reach directions the data never excited), so route there.
  if (force_dense || delta <= 0.0) {
    const Eigen::MatrixXd corr = bank.V * bank.V.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(corr);
    if (eig.info() != Eigen::Success) throw Error("basis construction: eigensolver failed");
    lambda.resize(n);
    modes.resize(n, n);
    for (int i = 0; i < n; ++i) {
      lambda[i] = std::max(0.0, eig.eigenvalues()[n - 1 - i]);
      modes.col(i) = eig.eigenvectors().col(n - 1 - i);
    }
  } else {
    const Eigen::MatrixXd corr = bank.V.transpose() * bank.V;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(corr);
    if (eig.info() != Eigen::Success) throw Error("basis construction: eigensolver failed");
    lambda.resize(m);
    modes.resize(n, m);
    for (int i = 0; i < m; ++i) {
      lambda[i] = std::max(0.0, eig.eigenvalues()[m - 1 - i]);
      if (lambda[i] > 0.0)
        modes.col(i) = bank.V * eig.eigenvectors().col(m - 1 - i) / std::sqrt(lambda[i]);
      else
        modes.col(i).setZero();
    }
  }

  const double total = lambda.sum();
  if (!(total > 0.0)) throw Error("basis construction: snapshot bank has no energy");

  int n_modes = 0;
  if (delta <= 0.0) {
    n_modes = static_cast<int>(lambda.size());  // every mode, zero ones included
  } else {
    double tail = total;
    while (n_modes < lambda.size()) {
      if (std::sqrt(tail / total) < delta) break;
      tail -= lambda[n_modes];
      ++n_modes;
    }
    n_modes = std::max(1, n_modes);
  }

  // Re-orthonormalize the kept modes (guards the snapshot-space route against
  // roundoff for near-degenerate eigenvalues).
  Eigen::MatrixXd kept = modes.leftCols(n_modes);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(kept);
  Eigen::MatrixXd q = Eigen::MatrixXd::Identity(n, n_modes);
  q = qr.householderQ() * q;

  basis.phi = q;
  basis.eigenvalues = lambda;
  return basis;
}

void save_basis(const ReducedBasis& basis, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write basis file: " + path);
  const char magic[8] = {'R', 'B', 'A', 'S', 'I', 'S', '0', '1'};
  os.write(magic, 8);
  const std::uint64_t checksum = basis.mesh_checksum;
  const std::int32_t n = static_cast<std::int32_t>(basis.phi.rows());
  const std::int32_t m = static_cast<std::int32_t>(basis.phi.cols());
  const std::int32_t nl = static_cast<std::int32_t>(basis.eigenvalues.size());
  os.write(reinterpret_cast<const char*>(&checksum), sizeof checksum);
  os.write(reinterpret_cast<const char*>(&n), sizeof n);
  os.write(reinterpret_cast<const char*>(&m), sizeof m);
  os.write(reinterpret_cast<const char*>(&basis.delta), sizeof basis.delta);
  os.write(reinterpret_cast<const char*>(&nl), sizeof nl);
  os.write(reinterpret_cast<const char*>(basis.eigenvalues.data()),
           static_cast<std::streamsize>(sizeof(double) * static_cast<size_t>(nl)));
  os.write(reinterpret_cast<const char*>(basis.phi.data()),
           static_cast<std::streamsize>(sizeof(double) * static_cast<size_t>(n) * static_cast<size_t>(m)));
  if (!os) throw Error("short write on basis file: " + path);
}

ReducedBasis load_basis(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open basis file: " + path);
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, "RBASIS01", 8) != 0)
    throw Error("not a basis file: " + path);
  ReducedBasis basis;
  std::int32_t n = 0, m = 0, nl = 0;
  is.read(reinterpret_cast<char*>(&basis.mesh_checksum), sizeof basis.mesh_checksum);
  is.read(reinterpret_cast<char*>(&n), sizeof n);
  is.read(reinterpret_cast<char*>(&m), sizeof m);
  is.read(reinterpret_cast<char*>(&basis.delta), sizeof basis.delta);
  is.read(reinterpret_cast<char*>(&nl), sizeof nl);
  if (!is || n <= 0 || m <= 0 || m > n || nl < m)
    throw Error("malformed basis file: " + path);
  basis.eigenvalues.resize(nl);
  basis.phi.resize(n, m);
  is.read(reinterpret_cast<char*>(basis.eigenvalues.data()),
          static_cast<std::streamsize>(sizeof(double) * static_cast<size_t>(nl)));
  is.read(reinterpret_cast<char*>(basis.phi.data()),
          static_cast<std::streamsize>(sizeof(double) * static_cast<size_t>(n) * static_cast<size_t>(m)));
  if (!is) throw Error("truncated basis file: " + path);
  return basis;
}

// ---- online solver ----------------------------------------------------------

ReducedCellSolver::ReducedCellSolver(const PeriodicCell& cell, const MicroParams& mp,
                                     const ReducedBasis* basis)
    : st_(make_micro_state(cell, mp)), basis_(basis) {
  if (basis_->mesh_checksum != mesh_checksum(cell.mesh))
    throw ConfigError("reduced basis was built for a different cell mesh");
  if (basis_->phi.rows() != cell.n_reduced)
    throw ConfigError("reduced basis dimension does not match the cell");
  reduced_correctors(nullptr);
}

void ReducedCellSolver::reduced_equilibrate(SolveCounters* counters) {
  detail::MicroScratch sc;
  if (counters) counters->equilibrations++;
  double rel = 0.0;
  for (int it = 1; it <= st_.params.max_inner; ++it) {
    detail::prepare(st_, sc);
    const Eigen::VectorXd r = detail::residual_rhs(st_, sc);
    const SparseMat k = detail::assemble_from_scratch(st_, sc);
    const Eigen::MatrixXd kr = basis_->phi.transpose() * (k * basis_->phi);
    const Eigen::VectorXd rr = basis_->phi.transpose() * r;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(kr);
    if (ldlt.info() != Eigen::Success)
      throw SolveError("reduced equilibrate: projected tangent factorization failed");
    const Eigen::VectorXd xi = ldlt.solve(rr);
    if (counters) {
      counters->factorizations++;
      counters->linear_solves++;
      counters->inner_iterations++;
    }
    const FieldVector dw = expand(st_.cell, basis_->phi * xi);
    detail::apply_displacement(st_, dw, &sc, "reduced equilibrate");
    st_.correctors_valid = false;
    rel = dw.norm() / st_.ref_coord_norm;
    if (rel <= st_.params.eps_inner) return;
  }
  throw ConvergenceError("reduced equilibrate", st_.params.max_inner, rel);
}

void ReducedCellSolver::reduced_correctors(SolveCounters* counters) {
  detail::MicroScratch sc;
  detail::prepare(st_, sc);
  const auto rhs = detail::corrector_rhs(st_, sc);
  const SparseMat k = detail::assemble_from_scratch(st_, sc);
  const Eigen::MatrixXd kr = basis_->phi.transpose() * (k * basis_->phi);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(kr);
  if (ldlt.info() != Eigen::Success)
    throw SolveError("reduced correctors: projected tangent factorization failed");
  if (counters) counters->factorizations++;
  for (int m = 0; m < kNumModes; ++m) {
    const Eigen::VectorXd xi = ldlt.solve(basis_->phi.transpose() * rhs[m]);
    if (counters) counters->linear_solves++;
    st_.omega[static_cast<size_t>(m)] = expand(st_.cell, basis_->phi * xi);
  }
  st_.correctors_valid = true;
}

CoefficientSet ReducedCellSolver::step(const Mat2& g, SolveCounters* counters) {
  if (!st_.correctors_valid)
    throw Error("reduced step: correctors are stale");
  std::vector<Mat2> pending{Mat2(Mat2::Identity() + g)};
  int splits = 0;
  while (!pending.empty()) {
    const Mat2 amap = pending.back();
    MicroState saved = st_;
    try {
      micro_update(st_, amap - Mat2::Identity());
      reduced_equilibrate(counters);
      reduced_correctors(counters);
    } catch (const Error&) {
      st_ = std::move(saved);
      if (++splits > st_.params.max_substep_splits) throw;
      const Mat2 half = detail::sqrt_map(amap);
      pending.back() = half;
      pending.push_back(half);
      continue;
    }
    pending.pop_back();
    if (counters) counters->micro_steps++;
  }
  detail::MicroScratch sc;
  detail::prepare(st_, sc);
  CoefficientSet out;
  detail::coefficients_impl(st_, sc, out);
  return out;
}

CoefficientSet ReducedCellSolver::advance_to_stretch(const Mat2& u_target,
                                                     SolveCounters* counters) {
  const Mat2 g = u_target * st_.Fbar.inverse() - Mat2::Identity();
  return step(g, counters);
}

// ---- backend ----------------------------------------------------------------

PodBackend::PodBackend(const PeriodicCell& cell, const MicroParams& mp, const ReducedBasis& basis,
                       int n_qp, int threads, SolveCounters* counters)
    : basis_(basis),
      threads_(resolve_threads(threads)),
      counters_(counters ? counters : &own_) {
  const ReducedCellSolver proto(cell, mp, &basis_);
  solvers_.assign(static_cast<size_t>(n_qp), proto);
}

void PodBackend::get_coefficients(const std::vector<Mat2>& f_qp, CoefficientField& out) {
  const int n = static_cast<int>(f_qp.size());
  if (n != static_cast<int>(solvers_.size()))
    throw Error("reduced backend: quadrature point count changed between evaluations");
  out.resize(static_cast<size_t>(n));
  parallel_for(n, threads_, [&](int i) {
    const PolarFactors pf = polar_decompose(f_qp[static_cast<size_t>(i)]);
    const CoefficientSet cs =
        solvers_[static_cast<size_t>(i)].advance_to_stretch(pf.U, counters_);
    const Mat3 r3 = embed_deformation(pf.R);
    out[static_cast<size_t>(i)].A = rotate(cs.A, r3);
    out[static_cast<size_t>(i)].S = rotate(cs.S, r3);
  });
}

}  // namespace csahom
