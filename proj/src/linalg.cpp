#include "mcfse/linalg.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "mcfse/errors.hpp"

namespace mcfse {

SpdSolver::SpdSolver(const Eigen::MatrixXd& a, double max_condition) {
  if (a.rows() != a.cols() || a.rows() == 0) throw InvalidArgument("SPD solve needs a non-empty square matrix");
  if (!a.allFinite()) throw ConditioningError("matrix has non-finite entries", std::numeric_limits<double>::infinity());
  llt_.compute(a);
  if (llt_.info() != Eigen::Success)
    throw ConditioningError("matrix is not positive definite", std::numeric_limits<double>::infinity());
  const double rcond = llt_.rcond();
  condition_ = rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();
  if (!(condition_ <= max_condition)) {
    std::ostringstream msg;
    msg << "matrix is ill conditioned (condition estimate " << condition_ << ")";
    throw ConditioningError(msg.str(), condition_);
  }
}

Eigen::VectorXd SpdSolver::solve(const Eigen::VectorXd& rhs) const {
  if (rhs.size() != llt_.rows()) throw InvalidArgument("right-hand side length mismatch");
  return llt_.solve(rhs);
}

}  // namespace mcfse
