#include "uner/compound_symmetry.hpp"

#include <cmath>

#include "uner/error.hpp"

namespace uner {

CompoundSymmetry::CompoundSymmetry(Eigen::Index n, double diag, double common)
    : n_(n), diag_(diag), common_(common) {
  if (n < 1) throw DomainError("compound symmetry block size must be positive");
  if (!(diag > 0.0) || !std::isfinite(diag))
    throw DomainError("compound symmetry diagonal must be positive");
  if (!(common >= 0.0) || !std::isfinite(common))
    throw DomainError("compound symmetry common term must be non-negative");
  inv_common_ = common_ / (diag_ * (diag_ + static_cast<double>(n_) * common_));
}

double CompoundSymmetry::log_det() const noexcept {
  const double n = static_cast<double>(n_);
  return (n - 1.0) * std::log(diag_) + std::log(diag_ + n * common_);
}

Matrix CompoundSymmetry::solve(const Matrix& rhs) const {
  if (rhs.rows() != n_) throw DomainError("right-hand side row count does not match block size");
  const Eigen::RowVectorXd colsum = rhs.colwise().sum();
  Matrix out = rhs / diag_;
  out.rowwise() -= inv_common_ * colsum;
  return out;
}

Vector CompoundSymmetry::solve(const Vector& rhs) const {
  if (rhs.size() != n_) throw DomainError("right-hand side length does not match block size");
  return (rhs / diag_).array() - inv_common_ * rhs.sum();
}

Matrix CompoundSymmetry::inverse_gram(const Matrix& atb, const Vector& colsum_a,
                                      const Vector& colsum_b) const {
  return atb / diag_ - inv_common_ * colsum_a * colsum_b.transpose();
}

double CompoundSymmetry::inverse_quadratic(double rtr, double rsum) const noexcept {
  return rtr / diag_ - inv_common_ * rsum * rsum;
}

Matrix CompoundSymmetry::dense() const {
  Matrix s = Matrix::Constant(n_, n_, common_);
  s.diagonal().array() += diag_;
  return s;
}

SolveLogDet cs_solve_logdet(const CompoundSymmetry& cs, const Matrix& rhs) {
  return {cs.solve(rhs), cs.log_det()};
}

}  // namespace uner
