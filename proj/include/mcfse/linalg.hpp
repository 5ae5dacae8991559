#pragma once

#include <Eigen/Dense>

namespace mcfse {

/// Cholesky factorization of a symmetric positive definite matrix with a
/// 1-norm condition estimate. Construction throws ConditioningError when the
/// matrix is not positive definite or its condition estimate exceeds
/// `max_condition`.
class SpdSolver {
 public:
  static constexpr double kMaxCondition = 1e12;

  explicit SpdSolver(const Eigen::MatrixXd& a, double max_condition = kMaxCondition);

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;

  double condition() const { return condition_; }

 private:
  Eigen::LLT<Eigen::MatrixXd> llt_;
  double condition_ = 0.0;
};

}  // namespace mcfse
