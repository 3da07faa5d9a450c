#pragma once

// Direct sparse solver wrapper: LDLT first (the periodic tangents are
// symmetric), transparent LU fallback when the factorization reports failure
// (tangents can lose definiteness at strongly deformed states).

#include <Eigen/Sparse>
#include <memory>

namespace csahom {

using SparseMat = Eigen::SparseMatrix<double>;

class DirectSolver {
 public:
  DirectSolver();
  ~DirectSolver();
  DirectSolver(DirectSolver&&) noexcept;
  DirectSolver& operator=(DirectSolver&&) noexcept;

  /// Factorizes; throws SolveError if both backends fail.
  void factorize(const SparseMat& m);
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;
  bool factorized() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace csahom
