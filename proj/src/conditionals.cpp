#include "uner/conditionals.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "uner/compound_symmetry.hpp"
#include "uner/error.hpp"
#include "uner/posterior.hpp"

namespace uner {

namespace {

constexpr double kDegenerateRate = 1e-300;

int count_on(const Indicators& u) {
  int z = 0;
  for (const auto ui : u) z += ui;
  return z;
}

GaussianLaw gls_law(const UnitDataset& data, double sigma2, const auto& common_of,
                    const ProperSurrogate* surrogate) {
  const auto q = data.q();
  Matrix precision = Matrix::Zero(q, q);
  Vector score = Vector::Zero(q);
  Vector ysum(1);
  for (std::size_t i = 0; i < data.m(); ++i) {
    const auto& a = data.area(i);
    const CompoundSymmetry cs(a.n(), sigma2, common_of(i));
    precision += cs.inverse_gram(a.xtx(), a.xsum(), a.xsum());
    ysum(0) = a.ysum();
    score += cs.inverse_gram(a.xty(), a.xsum(), ysum);
  }
  if (surrogate) precision.diagonal().array() += 1.0 / surrogate->beta_var;

  Eigen::LLT<Matrix> llt(precision);
  if (llt.info() != Eigen::Success)
    throw NumericalError("X' S^{-1} X is not positive definite (numerical rank deficiency)");
  const Matrix& l = llt.matrixLLT();
  const double dmax = l.diagonal().maxCoeff();
  const double dmin = l.diagonal().minCoeff();
  if (!(dmin > 1e-10 * dmax))
    throw NumericalError("X' S^{-1} X is numerically singular (Cholesky pivot ratio " +
                         std::to_string(dmin / dmax) + ")");
  Vector mean = llt.solve(score);
  return GaussianLaw(std::move(mean), std::move(llt));
}

}  // namespace

GaussianLaw::GaussianLaw(Vector mean, Eigen::LLT<Matrix> precision)
    : mean_(std::move(mean)), precision_(std::move(precision)) {}

Matrix GaussianLaw::covariance() const {
  return precision_.solve(Matrix::Identity(mean_.size(), mean_.size()));
}

Vector GaussianLaw::draw(Rng& rng) const {
  Vector xi(mean_.size());
  for (Eigen::Index k = 0; k < xi.size(); ++k) xi(k) = rng.normal();
  // precision = L L', so L'^{-1} xi has covariance precision^{-1}.
  return mean_ + precision_.matrixU().solve(xi);
}

NormalLaw v_conditional(bool u_i, const ModelParams& params, const AreaData& area) {
  if (!u_i) return {0.0, 0.0};
  const double n = static_cast<double>(area.n());
  const double total = params.sigma2 + n * params.tau2;
  return {n * params.tau2 * area_residual(params, area) / total,
          params.sigma2 * params.tau2 / total};
}

BetaLaw p_conditional(int z, int m) {
  if (m < 1 || z < 0 || z > m) throw DomainError("p conditional needs 0 <= z <= m, m >= 1");
  return {z + 0.5, m - z + 0.5};
}

GaussianLaw beta_conditional(const Indicators& u, const ModelParams& params,
                             const UnitDataset& data, const ProperSurrogate* surrogate) {
  if (u.size() != data.m()) throw DomainError("indicator vector length does not match m");
  const double tau2 = params.tau2;
  return gls_law(
      data, params.sigma2, [&](std::size_t i) { return u[i] ? tau2 : 0.0; }, surrogate);
}

InvGammaLaw tau2_conditional(const Indicators& u, const Vector& v, const PriorConfig& prior) {
  const int z = count_on(u);
  double ss = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i)
    if (u[i]) ss += v(static_cast<Eigen::Index>(i)) * v(static_cast<Eigen::Index>(i));
  if (z > prior.a) return {0.5 * (z - 1), 0.5 * ss};
  return {0.5 * z + prior.b1, 0.5 * ss + prior.b2};
}

bool tau2_rate_degenerate(const Indicators& u, const Vector& v, const PriorConfig& prior) {
  const int z = count_on(u);
  if (z <= prior.a) return false;
  double ss = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i)
    if (u[i]) ss += v(static_cast<Eigen::Index>(i)) * v(static_cast<Eigen::Index>(i));
  return ss < kDegenerateRate;
}

double residual_sum_of_squares(const Vector& v, const Vector& beta, const UnitDataset& data) {
  Vector r = data.y() - data.x() * beta;
  for (std::size_t i = 0; i < data.m(); ++i) {
    const auto& a = data.area(i);
    r.segment(data.offset(i), a.n()).array() -= v(static_cast<Eigen::Index>(i));
  }
  return r.squaredNorm();
}

InvGammaLaw sigma2_conditional(const Vector& v, const Vector& beta, const UnitDataset& data,
                               const ProperSurrogate* surrogate) {
  const double rss = residual_sum_of_squares(v, beta, data);
  const double n_total = static_cast<double>(data.total_units());
  if (surrogate) return {surrogate->sigma2_shape + 0.5 * n_total, surrogate->sigma2_rate + 0.5 * rss};
  return {0.5 * (n_total - 1.0), 0.5 * rss};
}

NormalLaw v_conditional_ner(const ModelParams& params, const AreaData& area) {
  const double n = static_cast<double>(area.n());
  const double total = params.sigma2 + n * params.tau2;
  return {n * params.tau2 * area_residual(params, area) / total,
          params.sigma2 * params.tau2 / total};
}

GaussianLaw beta_conditional_ner(const ModelParams& params, const UnitDataset& data) {
  const double tau2 = params.tau2;
  return gls_law(
      data, params.sigma2, [&](std::size_t) { return tau2; }, nullptr);
}

InvGammaLaw tau2_conditional_ner(const Vector& v) {
  if (v.size() < 2) throw DomainError("NER tau2 conditional needs m >= 2");
  return {0.5 * (static_cast<double>(v.size()) - 1.0), 0.5 * v.squaredNorm()};
}

double draw(const InvGammaLaw& law, Rng& rng) {
  if (!(law.shape > 0.0) || !(law.rate > 0.0))
    throw NumericalError("inverse gamma with shape " + std::to_string(law.shape) + " and rate " +
                         std::to_string(law.rate));
  return rng.inv_gamma(law.shape, law.rate);
}

double draw(const NormalLaw& law, Rng& rng) {
  if (law.var == 0.0) return law.mean;
  return rng.normal(law.mean, std::sqrt(law.var));
}

Vector draw_v(const Indicators& u, const ModelParams& params, const UnitDataset& data, Rng& rng) {
  Vector v(static_cast<Eigen::Index>(data.m()));
  for (std::size_t i = 0; i < data.m(); ++i)
    v(static_cast<Eigen::Index>(i)) = u[i] ? draw(v_conditional(true, params, data.area(i)), rng) : 0.0;
  return v;
}

Indicators draw_u(const ModelParams& params, const UnitDataset& data, Rng& rng) {
  Indicators u(data.m());
  for (std::size_t i = 0; i < data.m(); ++i)
    u[i] = rng.bernoulli(posterior_prob_u(params, data.area(i))) ? 1 : 0;
  return u;
}

double draw_p(int z, int m, Rng& rng) {
  const BetaLaw law = p_conditional(z, m);
  const double p = rng.beta(law.a, law.b);
  return std::clamp(p, std::numeric_limits<double>::min(), std::nextafter(1.0, 0.0));
}

Vector draw_beta(const Indicators& u, const ModelParams& params, const UnitDataset& data, Rng& rng,
                 const ProperSurrogate* surrogate) {
  return beta_conditional(u, params, data, surrogate).draw(rng);
}

double draw_tau2(const Indicators& u, const Vector& v, const PriorConfig& prior, Rng& rng) {
  if (tau2_rate_degenerate(u, v, prior))
    throw NumericalError("tau2 rate underflow: z > a but sum u_i v_i^2 < 1e-300");
  return draw(tau2_conditional(u, v, prior), rng);
}

double draw_sigma2(const Vector& v, const Vector& beta, const UnitDataset& data, Rng& rng,
                   const ProperSurrogate* surrogate) {
  const InvGammaLaw law = sigma2_conditional(v, beta, data, surrogate);
  if (!surrogate && !(law.rate > 0.0))
    throw DataError("residual sum of squares is zero; sigma2 conditional is degenerate");
  return draw(law, rng);
}

}  // namespace uner
