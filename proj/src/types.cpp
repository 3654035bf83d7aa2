#include "uner/types.hpp"

#include <bit>
#include <cmath>

#include "uner/error.hpp"

namespace uner {

namespace {

class Fnv1a {
 public:
  void bytes(const void* data, std::size_t len) noexcept {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h_ ^= p[i];
      h_ *= 0x100000001b3ULL;
    }
  }
  void u64(std::uint64_t x) noexcept { bytes(&x, sizeof x); }
  void real(double x) noexcept { u64(std::bit_cast<std::uint64_t>(x)); }
  std::uint64_t value() const noexcept { return h_; }

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

}  // namespace

const char* to_string(ModelKind kind) noexcept { return kind == ModelKind::kUner ? "uner" : "ner"; }

AreaData::AreaData(std::string id, Vector y, Matrix x)
    : id_(std::move(id)), y_(std::move(y)), x_(std::move(x)) {
  if (y_.size() < 1) throw DataError("area '" + id_ + "' has no observations");
  if (x_.rows() != y_.size())
    throw DataError("area '" + id_ + "': covariate rows (" + std::to_string(x_.rows()) +
                    ") do not match responses (" + std::to_string(y_.size()) + ")");
  if (x_.cols() < 1) throw DataError("area '" + id_ + "' has no covariates");
  const double n = static_cast<double>(y_.size());
  ysum_ = y_.sum();
  ybar_ = ysum_ / n;
  xsum_ = x_.colwise().sum().transpose();
  xbar_ = xsum_ / n;
  xtx_ = x_.transpose() * x_;
  xty_ = x_.transpose() * y_;
}

Eigen::Index numerical_rank(const Matrix& x) {
  if (x.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(x);
  const Vector& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  const double tol = 1e-10 * s(0);
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > tol) ++rank;
  return rank;
}

UnitDataset::UnitDataset(std::vector<AreaData> areas) : areas_(std::move(areas)) {
  if (areas_.empty()) throw DataError("dataset has no areas");
  q_ = areas_.front().q();
  for (const auto& a : areas_) {
    if (a.q() != q_)
      throw DataError("area '" + a.id() + "' has " + std::to_string(a.q()) +
                      " covariates, expected " + std::to_string(q_));
    offsets_.push_back(total_);
    total_ += a.n();
  }
  y_.resize(total_);
  x_.resize(total_, q_);
  for (std::size_t i = 0; i < areas_.size(); ++i) {
    const auto& a = areas_[i];
    y_.segment(offsets_[i], a.n()) = a.y();
    x_.middleRows(offsets_[i], a.n()) = a.x();
  }
  if (numerical_rank(x_) < q_)
    throw DataError("stacked covariate matrix is not of full column rank (q = " +
                    std::to_string(q_) + ")");

  Fnv1a h;
  h.u64(areas_.size());
  h.u64(static_cast<std::uint64_t>(q_));
  for (const auto& a : areas_) {
    h.u64(a.id().size());
    h.bytes(a.id().data(), a.id().size());
    h.u64(static_cast<std::uint64_t>(a.n()));
    for (Eigen::Index j = 0; j < a.n(); ++j) {
      h.real(a.y()(j));
      for (Eigen::Index k = 0; k < q_; ++k) h.real(a.x()(j, k));
    }
  }
  fingerprint_ = h.value();
}

void ModelParams::validate() const {
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2))
    throw DomainError("sigma2 must be positive and finite");
  if (!(tau2 > 0.0) || !std::isfinite(tau2)) throw DomainError("tau2 must be positive and finite");
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("p must lie in [0, 1]");
}

int LatentState::z() const noexcept {
  int z = 0;
  for (const auto ui : u) z += ui;
  return z;
}

bool LatentState::consistent() const noexcept {
  if (static_cast<Eigen::Index>(u.size()) != v.size()) return false;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (u[i] > 1) return false;
    if (u[i] == 0 && v(static_cast<Eigen::Index>(i)) != 0.0) return false;
  }
  return true;
}

void PriorConfig::validate() const {
  if (a < 1) throw ConfigError("threshold a must satisfy a >= 1 (got " + std::to_string(a) + ")");
  if (!(b1 > 3.0)) throw ConfigError("b1 must satisfy b1 > 3 (got " + std::to_string(b1) + ")");
  if (!(b2 > 0.0)) throw ConfigError("b2 must satisfy b2 > 0 (got " + std::to_string(b2) + ")");
}

TargetSpec TargetSpec::area_means(const UnitDataset& data) {
  TargetSpec t;
  t.c.reserve(data.m());
  for (const auto& a : data.areas()) t.c.push_back(a.xbar());
  return t;
}

void TargetSpec::validate(const UnitDataset& data) const {
  if (c.size() != data.m())
    throw ConfigError("target spec has " + std::to_string(c.size()) + " vectors for " +
                      std::to_string(data.m()) + " areas");
  for (const auto& ci : c)
    if (ci.size() != data.q()) throw ConfigError("target vector length does not match q");
}

}  // namespace uner
