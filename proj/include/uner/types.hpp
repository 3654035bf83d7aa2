#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace uner {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class ModelKind { kUner, kNer };

const char* to_string(ModelKind kind) noexcept;

// Observations for one area: response y (n_i) and covariates X (n_i x q).
// Means and cross-products are cached at construction; the object is
// immutable afterwards.
class AreaData {
 public:
  AreaData(std::string id, Vector y, Matrix x);

  const std::string& id() const noexcept { return id_; }
  const Vector& y() const noexcept { return y_; }
  const Matrix& x() const noexcept { return x_; }
  Eigen::Index n() const noexcept { return y_.size(); }
  Eigen::Index q() const noexcept { return x_.cols(); }

  double ybar() const noexcept { return ybar_; }
  const Vector& xbar() const noexcept { return xbar_; }

  // X'X, X'y and the column sums of X (= n * xbar), reused by every sweep.
  const Matrix& xtx() const noexcept { return xtx_; }
  const Vector& xty() const noexcept { return xty_; }
  const Vector& xsum() const noexcept { return xsum_; }
  double ysum() const noexcept { return ysum_; }

 private:
  std::string id_;
  Vector y_;
  Matrix x_;
  double ysum_ = 0.0;
  double ybar_ = 0.0;
  Vector xsum_;
  Vector xbar_;
  Matrix xtx_;
  Vector xty_;
};

// Grouped unit-level data. Construction enforces n_i >= 1, a common q, and a
// full-column-rank stacked X.
class UnitDataset {
 public:
  explicit UnitDataset(std::vector<AreaData> areas);

  const std::vector<AreaData>& areas() const noexcept { return areas_; }
  const AreaData& area(std::size_t i) const { return areas_.at(i); }
  std::size_t m() const noexcept { return areas_.size(); }
  Eigen::Index q() const noexcept { return q_; }
  Eigen::Index total_units() const noexcept { return total_; }

  // Stacked response and design, areas in order.
  const Vector& y() const noexcept { return y_; }
  const Matrix& x() const noexcept { return x_; }
  // Row offset of area i in the stacked arrays.
  Eigen::Index offset(std::size_t i) const { return offsets_.at(i); }

  // Content hash over ids, shapes and the bit patterns of every value.
  std::uint64_t fingerprint() const noexcept { return fingerprint_; }

 private:
  std::vector<AreaData> areas_;
  Eigen::Index q_ = 0;
  Eigen::Index total_ = 0;
  Vector y_;
  Matrix x_;
  std::vector<Eigen::Index> offsets_;
  std::uint64_t fingerprint_ = 0;
};

// Numerical rank of a matrix with tolerance 1e-10 * largest singular value.
Eigen::Index numerical_rank(const Matrix& x);

struct ModelParams {
  Vector beta;
  double sigma2 = 1.0;
  double tau2 = 1.0;
  double p = 0.5;
  ModelKind kind = ModelKind::kUner;

  // Throws DomainError unless sigma2 > 0, tau2 > 0 and 0 <= p <= 1.
  void validate() const;
};

// Per-area indicators u and effects v. u_i = 0 forces v_i = 0 exactly.
struct LatentState {
  std::vector<std::uint8_t> u;
  Vector v;

  int z() const noexcept;
  bool consistent() const noexcept;
};

struct PriorConfig {
  int a = 5;
  double b1 = 4.0;
  double b2 = 2.0;
  bool auto_hyper = false;

  // Throws ConfigError unless a >= 1, b1 > 3 and b2 > 0.
  void validate() const;
};

// mu_i = c_i' beta + v_i.
struct TargetSpec {
  std::vector<Vector> c;

  static TargetSpec area_means(const UnitDataset& data);
  void validate(const UnitDataset& data) const;
};

}  // namespace uner
