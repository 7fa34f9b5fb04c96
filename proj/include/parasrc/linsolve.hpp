#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <stdexcept>
#include <string>

#include "assembly.hpp"

namespace parasrc {

struct SolveError : std::runtime_error {
  enum class Kind { indefinite, no_convergence };
  Kind kind;
  SolveError(Kind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
};

// Cached sparse Cholesky factorization. Every solve verifies the residual
// against the 1e-10 relative contract.
class SpdSolver {
 public:
  explicit SpdSolver(const SparseSymMatrix& a) : a_(a) {
    llt_.compute(a_);
    if (llt_.info() != Eigen::Success)
      throw SolveError(SolveError::Kind::indefinite, "SpdSolver: matrix is not positive definite");
  }

  NodalField solve(const NodalField& rhs) const {
    if (rhs.size() != a_.rows()) throw std::invalid_argument("SpdSolver: dimension mismatch");
    NodalField x = llt_.solve(rhs);
    const double rhs_norm = rhs.norm();
    double res = (a_ * x - rhs).norm();
    if (res > kRelTol * rhs_norm && rhs_norm > 0.0) {
      // one step of iterative refinement before giving up
      x += llt_.solve(rhs - a_ * x);
      res = (a_ * x - rhs).norm();
      if (res > kRelTol * rhs_norm)
        throw SolveError(SolveError::Kind::no_convergence,
                         "SpdSolver: residual " + std::to_string(res / rhs_norm) + " exceeds tolerance");
    }
    return x;
  }

  const SparseSymMatrix& matrix() const { return a_; }

  static constexpr double kRelTol = 1e-10;

 private:
  SparseSymMatrix a_;
  Eigen::SimplicialLLT<SparseSymMatrix> llt_;
};

inline NodalField solve_spd(const SparseSymMatrix& a, const NodalField& rhs) { return SpdSolver(a).solve(rhs); }

}  // namespace parasrc
