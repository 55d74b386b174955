#pragma once

#include <cstddef>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "concur/linalg.hpp"
#include "concur/rng.hpp"

namespace concur {

// Fractional semi-variogram gamma(h) = scale * |h|^exponent, 0 < exponent <= 2.
struct VariogramSpec {
  double scale = 1.0;
  double exponent = 1.0;

  double operator()(double h) const;
};

enum class CorrelationFamily { exponential, powered_exponential };

// rho(h) = exp(-(|h| / range)^shape); shape is fixed to 1 for `exponential`.
struct CorrelationSpec {
  CorrelationFamily family = CorrelationFamily::exponential;
  double range = 1.0;
  double shape = 1.0;

  double operator()(double h) const;
};

// k-variate symmetric logistic, alpha in (0, 1]; alpha = 1 is independence.
struct Logistic {
  double alpha = 0.5;
};

// eta(s_j) = max_m phi[m][j] Z_m. Rows are components, columns are sites; a
// SiteSet used with this model holds column indices as 1-d coordinates.
struct MaxLinear {
  std::vector<std::vector<double>> phi;
};

struct BrownResnick {
  VariogramSpec variogram;
};

// Extremal-t with nu >= 1; nu = 1 is the Schlather model.
struct ExtremalT {
  CorrelationSpec correlation;
  double nu = 1.0;
};

// Gaussian moving-maximum storm model with storm covariance sigma.
struct Smith {
  CovarianceMatrix sigma;
};

// Extremal process on (0, 1] with independent stationary max-increments.
struct ExtremalProcess {};

// Moving maximum of the indicator of a Euclidean ball of the given radius.
struct BallIndicator {
  double radius = 1.0;
  int dim = 1;
};

using ModelSpec =
    std::variant<Logistic, MaxLinear, BrownResnick, ExtremalT, Smith, ExtremalProcess, BallIndicator>;

// Throws DomainError when parameters violate the model's invariants.
void validate(const ModelSpec& model);
std::string model_name(const ModelSpec& model);

// Set of k >= 1 pairwise-distinct points in R^d.
class SiteSet {
public:
  SiteSet() = default;
  SiteSet(std::size_t dim, std::vector<double> coords);
  static SiteSet from_points(const std::vector<std::vector<double>>& points);
  static SiteSet line(std::span<const double> xs);
  // Regular 1-d grid start, start + step, ... up to stop (inclusive, with slack).
  static SiteSet regular_grid(double start, double stop, double step);

  std::size_t size() const noexcept { return dim_ == 0 ? 0 : coords_.size() / dim_; }
  std::size_t dim() const noexcept { return dim_; }
  std::span<const double> operator[](std::size_t i) const {
    return {coords_.data() + i * dim_, dim_};
  }
  SiteSet subset(std::span<const std::size_t> indices) const;

private:
  std::size_t dim_ = 0;
  std::vector<double> coords_;
};

double distance(std::span<const double> a, std::span<const double> b);

// Semi-variogram of the Brown-Resnick process equivalent to Smith{sigma}:
// gamma(h) = h' sigma^{-1} h / 2.
double smith_variogram(const Smith& model, std::span<const double> a, std::span<const double> b);

/// Exponent function V with P(eta(s_j) <= z_j, all j) = exp(-V(z)) for unit
/// Frechet margins. Bivariate only for BrownResnick, ExtremalT, Smith and
/// BallIndicator; any k for Logistic, MaxLinear and ExtremalProcess.
/// A zero coordinate gives +infinity.
double exponent_V(const ModelSpec& model, const SiteSet& sites, std::span<const double> z);

/// Spectral profile sampler bound to a (model, sites) pair. Construction does
/// the per-site-set work (Cholesky factors, covariances) once.
///
/// draw() yields the model's textbook spectral process Y with E Y(s) = 1
/// (Brown-Resnick anchored at the first site, extremal-t c_nu max(0, W)^nu,
/// logistic Frechet noise). draw_bounded() yields a profile of the same max-
/// stable process whose supremum is at most bound(): for Logistic,
/// BrownResnick and ExtremalT it is the profile size-biased by the site mean
/// and renormalized to sum to k, so bound() == k. The others are bounded as-is.
class SpectralSampler {
public:
  SpectralSampler(const ModelSpec& model, const SiteSet& sites);
  ~SpectralSampler();
  SpectralSampler(SpectralSampler&&) noexcept;
  SpectralSampler& operator=(SpectralSampler&&) noexcept;

  std::size_t size() const noexcept { return k_; }
  void draw(SeededRng& rng, std::span<double> out) const;
  void draw_bounded(SeededRng& rng, std::span<double> out) const;
  double bound() const noexcept { return bound_; }

  struct Impl;

private:
  std::size_t k_ = 0;
  double bound_ = std::numeric_limits<double>::infinity();
  std::unique_ptr<Impl> impl_;
};

std::vector<double> spectral_sample(const ModelSpec& model, const SiteSet& sites, SeededRng& rng);

/// Pairwise concurrence probability p(s1, s2), which equals Kendall's tau of
/// (eta(s1), eta(s2)). Closed forms where known, adaptive quadrature of the
/// one-dimensional integral for BrownResnick, Smith and ExtremalT.
double kendall_target_p(const ModelSpec& model, std::span<const double> s1,
                        std::span<const double> s2);

} // namespace concur
