#pragma once

#include "uner/types.hpp"

namespace uner {

// The n x n matrix diag * I + common * J, with J the all-ones matrix.
// Inverse and determinant are closed form (Sherman-Morrison):
//   (d I + c J)^{-1} = I / d - c / (d (d + n c)) J
//   log |d I + c J| = (n - 1) log d + log(d + n c)
class CompoundSymmetry {
 public:
  // Throws DomainError unless diag > 0 and common >= 0.
  CompoundSymmetry(Eigen::Index n, double diag, double common);

  Eigen::Index n() const noexcept { return n_; }
  double diag() const noexcept { return diag_; }
  double common() const noexcept { return common_; }

  // Coefficient g of J in the inverse, so inverse = I / diag - g J.
  double inverse_common() const noexcept { return inv_common_; }

  double log_det() const noexcept;
  Matrix solve(const Matrix& rhs) const;
  Vector solve(const Vector& rhs) const;

  // A' S^{-1} B from the sufficient statistics A'B and the column sums of A
  // and B; no n-row work.
  Matrix inverse_gram(const Matrix& atb, const Vector& colsum_a, const Vector& colsum_b) const;
  // r' S^{-1} r from r'r and sum(r).
  double inverse_quadratic(double rtr, double rsum) const noexcept;

  Matrix dense() const;

 private:
  Eigen::Index n_;
  double diag_;
  double common_;
  double inv_common_;
};

struct SolveLogDet {
  Matrix solution;
  double log_det;
};

// (diag I + common J)^{-1} rhs together with log |diag I + common J|.
SolveLogDet cs_solve_logdet(const CompoundSymmetry& cs, const Matrix& rhs);

}  // namespace uner
