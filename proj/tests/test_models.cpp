#include <doctest.h>

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <numbers>

#include "concur/concurrence.hpp"
#include "concur/errors.hpp"
#include "concur/models.hpp"
#include "concur/specfun.hpp"
#include "test_support.hpp"

using namespace concur;

namespace {

std::vector<ModelSpec> bivariate_models() {
  return {Logistic{0.3},
          Logistic{0.8},
          MaxLinear{{{0.6, 0.1}, {0.3, 0.2}, {0.1, 0.7}}},
          BrownResnick{{1.0 / 3.0, 1.0}},
          BrownResnick{{0.5, 1.5}},
          ExtremalT{{CorrelationFamily::exponential, 10.0, 1.0}, 5.0},
          ExtremalT{{CorrelationFamily::powered_exponential, 2.0, 1.5}, 1.0},
          Smith{CovarianceMatrix(1, {1.5})},
          BallIndicator{1.0, 1},
          BallIndicator{1.0, 3}};
}

SiteSet pair_for(const ModelSpec& model) {
  if (std::holds_alternative<MaxLinear>(model)) {
    const double xs[] = {0.0, 1.0};
    return SiteSet::line(xs);
  }
  if (const auto* ball = std::get_if<BallIndicator>(&model); ball && ball->dim > 1) {
    std::vector<double> coords(2 * ball->dim, 0.0);
    coords[ball->dim] = 0.7;
    return SiteSet(ball->dim, coords);
  }
  const double xs[] = {0.0, 0.7};
  return SiteSet::line(xs);
}

}  // namespace

TEST_SUITE("models") {
  TEST_CASE("validation rejects bad parameters") {
    CHECK_THROWS_AS(validate(Logistic{0.0}), DomainError);
    CHECK_THROWS_AS(validate(Logistic{1.2}), DomainError);
    CHECK_NOTHROW(validate(Logistic{1.0}));
    CHECK_THROWS_AS(validate(MaxLinear{{{0.5, 0.2}, {0.4, 0.8}}}), DomainError);
    CHECK_THROWS_AS(validate(MaxLinear{{{-0.5, 0.2}, {1.5, 0.8}}}), DomainError);
    CHECK_THROWS_AS(validate(ExtremalT{{}, 0.5}), DomainError);
    CHECK_THROWS_AS(validate(BrownResnick{{1.0, 2.5}}), DomainError);
    CHECK_THROWS_AS(validate(BallIndicator{-1.0, 1}), DomainError);
  }

  TEST_CASE("variogram and correlation invariants") {
    const VariogramSpec g{0.7, 1.3};
    const CorrelationSpec r{CorrelationFamily::powered_exponential, 3.0, 1.2};
    CHECK(g(0.0) == 0.0);
    CHECK(r(0.0) == 1.0);
    for (double h = -5.0; h <= 5.0; h += 0.25) {
      CHECK(g(h) >= 0.0);
      CHECK(std::fabs(r(h)) <= 1.0);
      CHECK(g(h) == doctest::Approx(g(-h)));
    }
  }

  TEST_CASE("site sets require distinct points") {
    const double dup[] = {0.0, 1.0, 0.0};
    CHECK_THROWS_AS(SiteSet::line(dup), DomainError);
    const auto grid = SiteSet::regular_grid(0.0, 20.0, 0.5);
    CHECK(grid.size() == 41);
    CHECK(grid[40][0] == doctest::Approx(20.0));
    const auto pts = SiteSet::from_points({{0.0, 0.0}, {1.0, 2.0}});
    CHECK(pts.dim() == 2);
    CHECK(distance(pts[0], pts[1]) == doctest::Approx(std::sqrt(5.0)));
  }

  TEST_CASE("exponent_V reference values") {
    const double one[] = {1.0, 1.0};
    const double xs[] = {0.0, 1.0};
    const auto pair = SiteSet::line(xs);
    CHECK(exponent_V(Logistic{1.0}, pair, one) == doctest::Approx(2.0));
    CHECK(exponent_V(Logistic{0.5}, pair, one) == doctest::Approx(std::sqrt(2.0)));
    CHECK(exponent_V(BrownResnick{{1e6, 1.0}}, pair, one) == doctest::Approx(2.0));
    CHECK(exponent_V(BrownResnick{{0.0 + 1e-300, 1.0}}, pair, one) == doctest::Approx(1.0));
    const double zero[] = {0.0, 1.0};
    CHECK(std::isinf(exponent_V(Logistic{0.5}, pair, zero)));
    const double xs3[] = {0.0, 1.0, 2.0};
    const double one3[] = {1.0, 1.0, 1.0};
    CHECK_THROWS_AS(exponent_V(BrownResnick{}, SiteSet::line(xs3), one3), CapabilityError);
    CHECK_THROWS_AS(exponent_V(ExtremalT{}, SiteSet::line(xs3), one3), CapabilityError);
  }

  TEST_CASE("bivariate Brown-Resnick V against the Husler-Reiss formula") {
    const double xs[] = {0.0, 2.0};
    const auto pair = SiteSet::line(xs);
    const BrownResnick br{{0.4, 1.0}};
    const double a = std::sqrt(2.0 * br.variogram(2.0));
    SeededRng rng(3);
    for (int i = 0; i < 50; ++i) {
      const double z[] = {0.1 + 5.0 * rng.uniform(), 0.1 + 5.0 * rng.uniform()};
      const double l = std::log(z[1] / z[0]);
      const double ref =
          normal_cdf(a / 2 + l / a) / z[0] + normal_cdf(a / 2 - l / a) / z[1];
      CHECK(exponent_V(br, pair, z) == doctest::Approx(ref).epsilon(1e-12));
    }
  }

  TEST_CASE("homogeneity of order -1") {
    SeededRng rng(4);
    auto models = bivariate_models();
    models.push_back(ExtremalProcess{});
    for (const auto& model : models) {
      SiteSet sites = std::holds_alternative<ExtremalProcess>(model)
                          ? SiteSet::line(std::vector<double>{0.2, 0.5})
                          : pair_for(model);
      for (int i = 0; i < 100; ++i) {
        const double z[] = {0.05 + 10.0 * rng.uniform(), 0.05 + 10.0 * rng.uniform()};
        const double c = std::exp(4.0 * rng.uniform() - 2.0);
        const double cz[] = {c * z[0], c * z[1]};
        const double v = exponent_V(model, sites, z);
        CHECK(std::fabs(exponent_V(model, sites, cz) - v / c) <= 1e-10 * v);
      }
    }
    const double xs[] = {0.0, 1.0, 2.0, 3.0};
    const auto four = SiteSet::line(xs);
    for (int i = 0; i < 100; ++i) {
      const double z[] = {rng.uniform() + 0.1, rng.uniform() + 0.1, rng.uniform() + 0.1, rng.uniform() + 0.1};
      const double c = 3.7;
      const double cz[] = {c * z[0], c * z[1], c * z[2], c * z[3]};
      const double v = exponent_V(Logistic{0.4}, four, z);
      CHECK(std::fabs(exponent_V(Logistic{0.4}, four, cz) - v / c) <= 1e-10 * v);
    }
  }

  TEST_CASE("extremal coefficient lies in [1, 2]") {
    for (const auto& model : bivariate_models()) {
      const double theta = extremal_coefficient(model, pair_for(model));
      CHECK(theta >= 1.0 - 1e-12);
      CHECK(theta <= 2.0 + 1e-12);
    }
    const double xs[] = {0.0, 1.0};
    for (double a : {0.1, 0.5, 0.9, 1.0})
      CHECK(extremal_coefficient(Logistic{a}, SiteSet::line(xs)) == doctest::Approx(std::pow(2.0, a)));
  }

  TEST_CASE("Smith reduces to Brown-Resnick with a quadratic variogram") {
    SeededRng rng(5);
    for (int t = 0; t < 20; ++t) {
      const double s11 = 0.5 + rng.uniform(), s22 = 0.5 + rng.uniform();
      const double s12 = 0.8 * (rng.uniform() - 0.5) * std::sqrt(s11 * s22);
      const Smith smith{CovarianceMatrix(2, {s11, s12, s12, s22})};
      const auto sites = SiteSet::from_points({{0.0, 0.0}, {2.0 * rng.uniform(), 2.0 * rng.uniform()}});
      const double g = smith_variogram(smith, sites[0], sites[1]);
      // Inverse of a 2x2 matrix by hand.
      const double det = s11 * s22 - s12 * s12;
      const double hx = sites[1][0], hy = sites[1][1];
      const double quad = (s22 * hx * hx - 2.0 * s12 * hx * hy + s11 * hy * hy) / det;
      CHECK(g == doctest::Approx(quad / 2.0).epsilon(1e-12));
      // BrownResnick with scale g at lag 1 has variogram g.
      const double xs[] = {0.0, 1.0};
      const BrownResnick br{{g, 1.0}};
      for (int i = 0; i < 10; ++i) {
        const double z[] = {0.1 + 3.0 * rng.uniform(), 0.1 + 3.0 * rng.uniform()};
        const double vs = exponent_V(smith, sites, z);
        CHECK(std::fabs(vs - exponent_V(br, SiteSet::line(xs), z)) <= 1e-10 * vs);
      }
    }
  }

  TEST_CASE("ball indicator V matches its overlap fraction") {
    const double xs[] = {0.0, 0.5};
    const double one[] = {1.0, 1.0};
    // theta = 2 - q with q the overlap fraction.
    CHECK(exponent_V(BallIndicator{1.0, 1}, SiteSet::line(xs), one) == doctest::Approx(2.0 - 0.75));
  }

  TEST_CASE("spectral profiles have unit mean at every site") {
    auto models = bivariate_models();
    for (const auto& model : models) {
      const double xs3[] = {0.0, 0.7, 2.5};
      SiteSet sites = pair_for(model);
      if (!std::holds_alternative<MaxLinear>(model) && !std::holds_alternative<BallIndicator>(model))
        sites = SiteSet::line(xs3);
      SpectralSampler sampler(model, sites);
      SeededRng rng(6);
      const int n = 200000;
      const std::size_t k = sites.size();
      std::vector<std::vector<double>> raw(k, std::vector<double>(n)), bounded(k, std::vector<double>(n));
      std::vector<double> y(k);
      for (int i = 0; i < n; ++i) {
        sampler.draw(rng, y);
        for (std::size_t j = 0; j < k; ++j) raw[j][i] = y[j];
        sampler.draw_bounded(rng, y);
        for (std::size_t j = 0; j < k; ++j) {
          bounded[j][i] = y[j];
          CHECK(y[j] <= sampler.bound() * (1.0 + 1e-12));
        }
      }
      for (std::size_t j = 0; j < k; ++j) {
        INFO(model_name(model), " site ", j);
        const double se_raw = std::max(testing::std_error(raw[j]), 1e-12);
        const double se_b = std::max(testing::std_error(bounded[j]), 1e-12);
        // Raw logistic profiles have infinite variance once alpha >= 1/2; their margin is
        // checked by the KS test below instead.
        const auto* logistic = std::get_if<Logistic>(&model);
        if (!logistic || logistic->alpha < 0.5) CHECK(std::fabs(testing::mean(raw[j]) - 1.0) < 3.5 * se_raw);
        CHECK(std::fabs(testing::mean(bounded[j]) - 1.0) < 3.5 * se_b);
      }
    }
  }

  TEST_CASE("extremal-t with nu = 1 has unit mean raw profile") {
    const double xs[] = {0.0, 1.0};
    SpectralSampler sampler(ExtremalT{{CorrelationFamily::exponential, 1.0, 1.0}, 1.0}, SiteSet::line(xs));
    SeededRng rng(7);
    std::vector<double> y(2), first(100000);
    for (auto& f : first) {
      sampler.draw(rng, y);
      f = y[0];
    }
    CHECK(std::fabs(testing::mean(first) - 1.0) < 0.01);
  }

  TEST_CASE("logistic raw profile margin") {
    // P(Y <= y) = exp(-(Gamma(1 - alpha) y)^(-1/alpha)).
    const double alpha = 0.5;
    const double xs[] = {0.0, 1.0};
    SpectralSampler sampler(Logistic{alpha}, SiteSet::line(xs));
    SeededRng rng(8);
    std::vector<double> y(2), first(100000);
    for (auto& f : first) {
      sampler.draw(rng, y);
      f = y[0];
    }
    const double g = std::tgamma(1.0 - alpha);
    const double d = testing::ks_statistic(first, [&](double v) { return std::exp(-std::pow(g * v, -1.0 / alpha)); });
    CHECK(d < testing::ks_critical_01(first.size()));
  }

  TEST_CASE("ball indicator profile is an indicator of a common center") {
    const auto sites = SiteSet::from_points({{0.0, 0.0}, {0.5, 0.0}, {0.0, 1.5}});
    SpectralSampler sampler(BallIndicator{1.0, 2}, sites);
    SeededRng rng(9);
    std::vector<double> y(3);
    bool saw_all = false;
    for (int i = 0; i < 20000; ++i) {
      sampler.draw(rng, y);
      const double top = *std::max_element(y.begin(), y.end());
      for (double v : y) CHECK((v == 0.0 || v == top));
      saw_all = saw_all || (y[0] > 0 && y[1] > 0 && y[2] > 0);
    }
    CHECK(saw_all);
  }

  TEST_CASE("extremal process has no spectral sampler for draw") {
    const double xs[] = {0.2, 0.5};
    SpectralSampler sampler(ExtremalProcess{}, SiteSet::line(xs));
    SeededRng rng(10);
    std::vector<double> y(2);
    CHECK_THROWS_AS(sampler.draw(rng, y), CapabilityError);
    sampler.draw_bounded(rng, y);
    CHECK(y[0] <= y[1] * 0.5 / 0.2 + 1e-12);
  }

  TEST_CASE("kendall_target_p closed forms") {
    const double a[] = {0.0}, b[] = {1.0};
    CHECK(kendall_target_p(Logistic{0.3}, a, b) == doctest::Approx(0.7));
    const double s1[] = {0.2}, s2[] = {0.5};
    CHECK(kendall_target_p(ExtremalProcess{}, s1, s2) == doctest::Approx(0.4));
    for (const auto& model : bivariate_models()) {
      const auto sites = pair_for(model);
      CHECK(kendall_target_p(model, sites[0], sites[0]) == doctest::Approx(1.0));
    }
  }
}
