#pragma once

#include <cstdint>
#include <vector>

#include "uner/random.hpp"
#include "uner/types.hpp"

namespace uner {

// Parameters of each full-conditional law. The draw_* functions sample from
// exactly these; tests compare them directly.
struct NormalLaw {
  double mean = 0.0;
  double var = 0.0;
  bool operator==(const NormalLaw&) const = default;
};

struct InvGammaLaw {
  double shape = 0.0;
  double rate = 0.0;
  bool operator==(const InvGammaLaw&) const = default;
};

struct BetaLaw {
  double a = 0.0;
  double b = 0.0;
  bool operator==(const BetaLaw&) const = default;
};

// N(mean, precision^{-1}), carried as the Cholesky factor of the precision.
class GaussianLaw {
 public:
  GaussianLaw(Vector mean, Eigen::LLT<Matrix> precision);

  const Vector& mean() const noexcept { return mean_; }
  Matrix covariance() const;
  Vector draw(Rng& rng) const;

 private:
  Vector mean_;
  Eigen::LLT<Matrix> precision_;
};

// Proper priors that replace the improper ones on a test-only branch (the
// joint-distribution test needs a proper joint): beta ~ N(0, beta_var I),
// sigma2 ~ IG(sigma2_shape, sigma2_rate).
struct ProperSurrogate {
  double beta_var = 100.0;
  double sigma2_shape = 3.0;
  double sigma2_rate = 3.0;
};

using Indicators = std::vector<std::uint8_t>;

// --- UNER conditionals -----------------------------------------------------

// v_i | u_i, beta, sigma2, tau2, y: point mass at 0 when u_i = 0.
NormalLaw v_conditional(bool u_i, const ModelParams& params, const AreaData& area);

BetaLaw p_conditional(int z, int m);

// beta | u, sigma2, tau2, y with v integrated out: GLS normal under the
// block-diagonal compound-symmetry covariance with common terms u_i tau2.
// Throws NumericalError when X' S_u^{-1} X is not positive definite.
GaussianLaw beta_conditional(const Indicators& u, const ModelParams& params,
                             const UnitDataset& data, const ProperSurrogate* surrogate = nullptr);

// tau2 | u, v: IG((z - I(z > a)) / 2 + b1 I(z <= a), sum u_i v_i^2 / 2 + b2 I(z <= a)).
InvGammaLaw tau2_conditional(const Indicators& u, const Vector& v, const PriorConfig& prior);

// True when z > a and sum u_i v_i^2 has underflowed; the IG rate would be 0.
bool tau2_rate_degenerate(const Indicators& u, const Vector& v, const PriorConfig& prior);

// sigma2 | v, beta, y: IG((N - 1) / 2, RSS / 2) where RSS subtracts v_i from
// every unit of area i. With a surrogate: IG(shape + N / 2, rate + RSS / 2).
InvGammaLaw sigma2_conditional(const Vector& v, const Vector& beta, const UnitDataset& data,
                               const ProperSurrogate* surrogate = nullptr);

double residual_sum_of_squares(const Vector& v, const Vector& beta, const UnitDataset& data);

// --- NER conditionals (Jeffreys prior tau^{-1} sigma^{-1}) ------------------

NormalLaw v_conditional_ner(const ModelParams& params, const AreaData& area);
GaussianLaw beta_conditional_ner(const ModelParams& params, const UnitDataset& data);
// IG((m - 1) / 2, sum v_i^2 / 2).
InvGammaLaw tau2_conditional_ner(const Vector& v);

// --- draws -----------------------------------------------------------------

Vector draw_v(const Indicators& u, const ModelParams& params, const UnitDataset& data, Rng& rng);
Indicators draw_u(const ModelParams& params, const UnitDataset& data, Rng& rng);
// Beta(z + 1/2, m - z + 1/2), kept strictly inside (0, 1).
double draw_p(int z, int m, Rng& rng);
Vector draw_beta(const Indicators& u, const ModelParams& params, const UnitDataset& data, Rng& rng,
                 const ProperSurrogate* surrogate = nullptr);
// Throws NumericalError if the rate is degenerate (see tau2_rate_degenerate).
double draw_tau2(const Indicators& u, const Vector& v, const PriorConfig& prior, Rng& rng);
// Throws DataError if the residual sum of squares is zero.
double draw_sigma2(const Vector& v, const Vector& beta, const UnitDataset& data, Rng& rng,
                   const ProperSurrogate* surrogate = nullptr);

double draw(const InvGammaLaw& law, Rng& rng);
double draw(const NormalLaw& law, Rng& rng);

}  // namespace uner
