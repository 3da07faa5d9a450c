#include "csahom/linear_solver.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include "csahom/error.hpp"

namespace csahom {

struct DirectSolver::Impl {
  Eigen::SimplicialLDLT<SparseMat> ldlt;
  Eigen::SparseLU<SparseMat> lu;
  bool use_lu = false;
  bool ready = false;
};

DirectSolver::DirectSolver() : impl_(std::make_unique<Impl>()) {}
DirectSolver::~DirectSolver() = default;
DirectSolver::DirectSolver(DirectSolver&&) noexcept = default;
DirectSolver& DirectSolver::operator=(DirectSolver&&) noexcept = default;

void DirectSolver::factorize(const SparseMat& m) {
  impl_->ready = false;
  impl_->use_lu = false;
  impl_->ldlt.compute(m);
  if (impl_->ldlt.info() == Eigen::Success) {
    impl_->ready = true;
    return;
  }
  impl_->use_lu = true;
  impl_->lu.compute(m);
  if (impl_->lu.info() != Eigen::Success)
    throw SolveError("sparse factorization failed (LDLT and LU)");
  impl_->ready = true;
}

Eigen::VectorXd DirectSolver::solve(const Eigen::VectorXd& rhs) const {
  if (!impl_->ready) throw SolveError("solve called before factorize");
  Eigen::VectorXd x = impl_->use_lu ? impl_->lu.solve(rhs).eval() : impl_->ldlt.solve(rhs).eval();
  const auto info = impl_->use_lu ? impl_->lu.info() : impl_->ldlt.info();
  if (info != Eigen::Success) throw SolveError("sparse back-substitution failed");
  return x;
}

bool DirectSolver::factorized() const { return impl_->ready; }

}  // namespace csahom
