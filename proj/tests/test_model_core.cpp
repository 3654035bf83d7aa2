#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include <boost/math/distributions/chi_squared.hpp>

#include "model_checks.hpp"
#include "oracles.hpp"
#include "uner/compound_symmetry.hpp"
#include "uner/conditions.hpp"
#include "uner/error.hpp"
#include "uner/posterior.hpp"
#include "uner/types.hpp"

using namespace uner;
using Catch::Approx;

using checks::area_with_residual;
using checks::params_of;

TEST_CASE("area data caches means and cross-products") {
  Matrix x(3, 2);
  x << 1, 2, 1, 4, 1, 9;
  Vector y(3);
  y << 1.0, 2.0, 6.0;
  const AreaData a("z", y, x);
  CHECK(a.ybar() == Approx(3.0));
  CHECK(a.xbar()(1) == Approx(5.0));
  CHECK((a.xtx() - x.transpose() * x).norm() < 1e-12);
  CHECK((a.xty() - x.transpose() * y).norm() < 1e-12);
  CHECK_THROWS_AS(AreaData("e", Vector(0), Matrix(0, 1)), DataError);
}

TEST_CASE("datasets reject rank-deficient designs and mismatched widths") {
  std::vector<AreaData> areas;
  areas.emplace_back("1", Vector::Ones(2), Matrix::Ones(2, 2));
  CHECK_THROWS_AS(UnitDataset(areas), DataError);
  std::vector<AreaData> mixed;
  mixed.emplace_back("1", Vector::Ones(2), Matrix::Ones(2, 1));
  mixed.emplace_back("2", Vector::Ones(2), Matrix::Ones(2, 2));
  CHECK_THROWS_AS(UnitDataset(mixed), DataError);
}

TEST_CASE("dataset totals and stacking") {
  Rng rng(3);
  Vector beta(2);
  beta << 1.0, 0.5;
  const auto data = oracle::simulate_dataset(rng, 7, 2, 5, beta, 1.0, 0.5, 0.7);
  Eigen::Index total = 0;
  for (std::size_t i = 0; i < data.m(); ++i) {
    const auto& a = data.area(i);
    CHECK(data.offset(i) == total);
    CHECK((data.y().segment(total, a.n()) - a.y()).norm() == 0.0);
    total += a.n();
  }
  CHECK(data.total_units() == total);
  CHECK(data.q() == 2);
}

TEST_CASE("model params and priors validate their domains") {
  auto mp = params_of(0.0, 1.0, 1.0, 0.5);
  CHECK_NOTHROW(mp.validate());
  mp.sigma2 = 0.0;
  CHECK_THROWS_AS(mp.validate(), DomainError);
  mp = params_of(0.0, 1.0, -1.0, 0.5);
  CHECK_THROWS_AS(mp.validate(), DomainError);
  mp = params_of(0.0, 1.0, 1.0, 1.5);
  CHECK_THROWS_AS(mp.validate(), DomainError);
  CHECK_THROWS_AS((PriorConfig{0, 4.0, 2.0, false}.validate()), ConfigError);
  CHECK_THROWS_AS((PriorConfig{5, 3.0, 2.0, false}.validate()), ConfigError);
  CHECK_THROWS_AS((PriorConfig{5, 4.0, 0.0, false}.validate()), ConfigError);
}

TEST_CASE("latent state coupling") {
  LatentState s{{1, 0, 1}, Vector::Zero(3)};
  s.v(0) = 0.3;
  CHECK(s.consistent());
  CHECK(s.z() == 2);
  s.v(1) = 1e-300;
  CHECK_FALSE(s.consistent());
}

TEST_CASE("compound symmetry closed forms") {
  SECTION("identity") {
    const CompoundSymmetry cs(2, 1.0, 0.0);
    Vector rhs(2);
    rhs << 3.0, 4.0;
    const auto r = cs_solve_logdet(cs, rhs);
    CHECK(r.solution(0, 0) == 3.0);
    CHECK(r.solution(1, 0) == 4.0);
    CHECK(r.log_det == 0.0);
  }
  SECTION("unit equicorrelation") {
    CHECK(CompoundSymmetry(3, 1.0, 1.0).log_det() == Approx(std::log(4.0)).epsilon(1e-15));
  }
  SECTION("dense oracle, n = 5") {
    Rng rng(11);
    const CompoundSymmetry cs(5, 0.7, 0.3);
    Matrix rhs(5, 3);
    for (Eigen::Index k = 0; k < rhs.size(); ++k) rhs(k) = rng.normal();
    const Matrix dense = oracle::compound_dense(5, 0.7, 0.3);
    const auto r = cs_solve_logdet(cs, rhs);
    const Matrix ref = dense.llt().solve(rhs);
    CHECK((r.solution - ref).norm() <= 1e-10 * ref.norm());
    CHECK(r.log_det == Approx(std::log(dense.determinant())).epsilon(1e-10));
  }
  SECTION("invalid parameters") {
    CHECK_THROWS_AS(CompoundSymmetry(3, 0.0, 1.0), DomainError);
    CHECK_THROWS_AS(CompoundSymmetry(3, 1.0, -0.1), DomainError);
  }
  SECTION("gram and quadratic helpers") {
    Rng rng(5);
    const int n = 6;
    const CompoundSymmetry cs(n, 1.3, 0.4);
    Matrix a(n, 2);
    Vector b(n);
    for (Eigen::Index k = 0; k < a.size(); ++k) a(k) = rng.normal();
    for (Eigen::Index k = 0; k < n; ++k) b(k) = rng.normal();
    const Matrix inv = oracle::compound_dense(n, 1.3, 0.4).inverse();
    Matrix bm = b;
    const Matrix gram = cs.inverse_gram(a.transpose() * bm, a.colwise().sum().transpose(),
                                        bm.colwise().sum().transpose());
    CHECK((gram - a.transpose() * inv * bm).norm() < 1e-12);
    CHECK(cs.inverse_quadratic(b.squaredNorm(), b.sum()) == Approx(b.dot(inv * b)).epsilon(1e-12));
  }
}

TEST_CASE("compound symmetry matches dense factorization on random cases") {
  const auto c = checks::compound_symmetry_cases(2024, 1000, 1e-10);
  INFO(c.detail);
  CHECK(c.pass);
}

TEST_CASE("posterior indicator probability: limits") {
  const Vector b = Vector::Constant(1, 1.0);
  const auto area = area_with_residual(5, 0.8, b);
  CHECK(posterior_prob_u(params_of(1.0, 1.0, 0.49, 1.0), area) == 1.0);
  CHECK(posterior_prob_u(params_of(1.0, 1.0, 0.49, 0.0), area) == 0.0);
  CHECK(std::abs(posterior_prob_u(params_of(1.0, 1.0, 1e-12, 0.3), area) - 0.3) < 1e-6);
  // Residual^2 = 1e6.
  const auto far = area_with_residual(5, 1e3, b);
  CHECK(posterior_prob_u(params_of(1.0, 1.0, 0.49, 0.3), far) > 1.0 - 1e-9);
  CHECK(std::isfinite(log_odds_u(params_of(1.0, 1.0, 0.49, 0.3), far)));
}

TEST_CASE("posterior indicator probability is monotone in p and in the squared residual") {
  Rng rng(17);
  const Vector b = Vector::Constant(1, 0.0);
  for (int c = 0; c < 200; ++c) {
    const double s2 = std::exp(rng.normal());
    const double t2 = std::exp(rng.normal());
    const int n = 1 + static_cast<int>(rng.uniform() * 10);
    const double r1 = rng.normal(0.0, 2.0);
    const double r2 = std::copysign(std::abs(r1) + rng.uniform(), rng.normal());
    const double p1 = rng.uniform();
    const double p2 = p1 + (1.0 - p1) * rng.uniform();
    const auto a1 = area_with_residual(n, r1, b);
    const auto a2 = area_with_residual(n, r2, b);
    CHECK(posterior_prob_u(params_of(0.0, s2, t2, p1), a1) <=
          posterior_prob_u(params_of(0.0, s2, t2, p2), a1));
    CHECK(posterior_prob_u(params_of(0.0, s2, t2, p1), a1) <=
          posterior_prob_u(params_of(0.0, s2, t2, p1), a2) + 1e-15);
  }
}

TEST_CASE("posterior quantities match quadrature at the reference point") {
  const Vector b = Vector::Constant(1, 0.0);
  const auto area = area_with_residual(5, 0.8, b);
  const auto mp = params_of(0.0, 1.0, 0.49, 0.5);
  const auto ref = oracle::quadrature_posterior(0.5, 1.0, 0.49, 5, 0.8);
  CHECK(std::abs(posterior_prob_u(mp, area) - ref.prob_slab) < 1e-8);
  CHECK(std::abs(posterior_var_mu(mp, area) - ref.var) < 1e-8);
}

TEST_CASE("posterior quantities match quadrature on a random grid") {
  const auto c = checks::quadrature_grid(99, 100, 1e-8);
  INFO(c.detail);
  CHECK(c.pass);
}

TEST_CASE("posterior variance limits") {
  const Vector b = Vector::Constant(1, 0.0);
  const auto area = area_with_residual(4, 1.1, b);
  CHECK(posterior_var_mu(params_of(0.0, 1.0, 0.5, 1.0), area) ==
        Approx(1.0 * 0.5 / (1.0 + 4 * 0.5)).epsilon(1e-14));
  CHECK(posterior_var_mu(params_of(0.0, 1.0, 0.5, 0.0), area) == 0.0);
}

TEST_CASE("marginal likelihood") {
  Rng rng(8);
  Vector beta(2);
  beta << 1.0, -0.5;
  const auto data = oracle::simulate_dataset(rng, 6, 2, 6, beta, 0.8, 0.6, 0.5);
  ModelParams mp;
  mp.beta = beta;
  mp.sigma2 = 0.9;
  mp.tau2 = 0.4;
  mp.p = 0.35;

  SECTION("dense oracle") {
    CHECK(marginal_loglik(mp, data) == Approx(oracle::dense_marginal_loglik(mp, data)).epsilon(1e-12));
  }
  SECTION("degenerate mixtures") {
    ModelParams ner = mp;
    ner.kind = ModelKind::kNer;
    mp.p = 1.0;
    CHECK(std::abs(marginal_loglik(mp, data) - marginal_loglik(ner, data)) < 1e-12 * std::abs(marginal_loglik(ner, data)));
    mp.p = 0.0;
    const double iid = -0.5 * static_cast<double>(data.total_units()) * std::log(2 * std::numbers::pi * mp.sigma2) -
                       0.5 * (data.y() - data.x() * beta).squaredNorm() / mp.sigma2;
    CHECK(std::abs(marginal_loglik(mp, data) - iid) < 1e-12 * std::abs(iid));
  }
  SECTION("single area, two units, bivariate density") {
    Matrix x(2, 1);
    x << 1.0, 1.0;
    Vector y(2);
    y << 0.3, 1.7;
    const UnitDataset one({AreaData("1", y, x)});
    ModelParams p1;
    p1.beta = Vector::Constant(1, 0.5);
    p1.sigma2 = 0.7;
    p1.tau2 = 1.2;
    p1.kind = ModelKind::kNer;
    const double s11 = 0.7 + 1.2, s12 = 1.2;
    const double det = s11 * s11 - s12 * s12;
    const double d1 = 0.3 - 0.5, d2 = 1.7 - 0.5;
    const double quad = (s11 * d1 * d1 - 2 * s12 * d1 * d2 + s11 * d2 * d2) / det;
    const double ref = -std::log(2 * std::numbers::pi) - 0.5 * std::log(det) - 0.5 * quad;
    CHECK(std::abs(marginal_loglik(p1, one) - ref) < 1e-10);
  }
}

TEST_CASE("sampling-variance estimate") {
  SECTION("exact fit plus area constants gives zero") {
    std::vector<AreaData> areas;
    for (int i = 0; i < 4; ++i) {
      Matrix x(3, 2);
      x << 1, 0.1 * i, 1, 0.5 + i, 1, 2.0;
      Vector y = x * Vector::Constant(2, 0.7);
      y.array() += 3.0 * i;
      areas.emplace_back(std::to_string(i), y, x);
    }
    const UnitDataset data(std::move(areas));
    CHECK(std::abs(estimate_sampling_variance(data)) < 1e-24);
  }
  SECTION("too few degrees of freedom") {
    std::vector<AreaData> areas;
    areas.emplace_back("1", Vector::LinSpaced(2, 0.0, 1.0), Matrix::Ones(2, 1));
    areas.emplace_back("2", Vector::LinSpaced(1, 0.0, 1.0), Matrix::Ones(1, 1));
    CHECK_THROWS_AS(estimate_sampling_variance(UnitDataset(std::move(areas))), DataError);
  }
  SECTION("matches an explicit within-area regression") {
    Rng rng(41);
    Vector beta(3);
    beta << 1.0, 0.5, -2.0;
    const auto data = oracle::simulate_dataset(rng, 9, 3, 7, beta, 1.3, 0.5, 0.6);
    // Dummy-variable regression: area indicators plus the two slopes.
    const auto n = data.total_units();
    const auto m = static_cast<Eigen::Index>(data.m());
    Matrix d = Matrix::Zero(n, m + 2);
    for (std::size_t i = 0; i < data.m(); ++i)
      d.block(data.offset(i), static_cast<Eigen::Index>(i), data.area(i).n(), 1).setOnes();
    d.rightCols(2) = data.x().rightCols(2);
    const Vector coef = d.colPivHouseholderQr().solve(data.y());
    const double rss = (data.y() - d * coef).squaredNorm();
    CHECK(estimate_sampling_variance(data) == Approx(rss / static_cast<double>(n - m - 3)).epsilon(1e-10));
  }
  SECTION("scaled chi-square law without effects") {
    // Within-area centring removes the intercept, so with q = 2 the residual
    // has N - m - 1 degrees of freedom and V = sigma2 chi2(N - m - 1) / (N - m - 2).
    const double df = 50.0 * 6.0 - 50.0 - 1.0;
    const double divisor = df - 1.0;
    const boost::math::chi_squared_distribution<double> chi(df);
    const double band = boost::math::cdf(chi, 1.15 * divisor) - boost::math::cdf(chi, 0.85 * divisor);
    const int seeds = 200;
    int inside = 0;
    std::vector<double> vs;
    for (int s = 0; s < seeds; ++s) {
      Rng rng(1000 + s);
      Vector beta(2);
      beta << 1.0, 0.5;
      const auto data = oracle::simulate_dataset(rng, 50, 6, 6, beta, 1.0, 1.0, 0.0);
      vs.push_back(estimate_sampling_variance(data));
      if (std::abs(vs.back() - 1.0) < 0.15) ++inside;
    }
    const double expected = seeds * band;
    CHECK(std::abs(inside - expected) <= 4.0 * std::sqrt(seeds * band * (1.0 - band)));
    const auto moments = oracle::check_moments(vs, df / divisor, 2.0 * df / (divisor * divisor));
    INFO(moments.text());
    CHECK(moments.pass);
  }

}

TEST_CASE("automatic hyperparameters") {
  Rng rng(4);
  Vector beta(2);
  beta << 0.0, 1.0;
  const auto data = oracle::simulate_dataset(rng, 20, 5, 5, beta, 2.0, 0.5, 0.5);
  const double v = estimate_sampling_variance(data);
  const auto resolved = resolve_prior(PriorConfig{5, 0.0, 0.0, true}, data);
  CHECK(resolved.b1 == v + 2.0);
  CHECK(resolved.b2 == v * (v + 1.0));
  CHECK(resolve_prior(PriorConfig{5, 4.5, 1.0, false}, data).b1 == 4.5);
  CHECK_THROWS_AS(resolve_prior(PriorConfig{5, 2.0, 1.0, false}, data), ConfigError);
}

TEST_CASE("propriety and finite-variance conditions") {
  const auto p1 = validate_conditions(10, 2, 8, 5, Strictness::kPropriety);
  const auto f1 = validate_conditions(10, 2, 8, 5, Strictness::kFiniteVariance);
  CHECK(p1.pass);
  CHECK(f1.pass);
  const auto p2 = validate_conditions(5, 3, 6, 5, Strictness::kPropriety);
  CHECK_FALSE(p2.pass);
  REQUIRE(p2.failures.size() == 1);
  CHECK(p2.failures[0].find("N > q + 2") != std::string::npos);
  CHECK(validate_conditions(100, 4, 30, 5, Strictness::kPropriety).pass);
  CHECK(validate_conditions(100, 4, 30, 5, Strictness::kFiniteVariance).pass);
  CHECK_FALSE(validate_conditions(100, 4, 5, 5, Strictness::kPropriety).pass);
  CHECK_FALSE(validate_conditions(100, 4, 30, 0, Strictness::kPropriety).pass);
  const auto f2 = validate_conditions(100, 4, 30, 4, Strictness::kFiniteVariance);
  CHECK_FALSE(f2.pass);
  CHECK(f2.message().find("a >= 5") != std::string::npos);
  CHECK_FALSE(validate_conditions(10, 4, 30, 5, Strictness::kFiniteVariance).pass);
}
