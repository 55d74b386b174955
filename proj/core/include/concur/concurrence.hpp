#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "concur/models.hpp"
#include "concur/rng.hpp"

namespace concur {

struct ConcurrenceEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t n_draws = 0;
  // closed_form, quadrature, mc_plain, mc_antithetic or simulation_frequency.
  std::string method;
};

/// prod_{j=1}^{k-1} (1 - alpha / j).
double ecp_logistic(double alpha, std::size_t k);

struct MaxLinearConcurrence {
  double p = 0.0;
  std::vector<double> per_component;
};

/// Concurrence of the max-linear model on the given columns of phi, with the
/// conventions 0/0 = 0, a/0 = inf for a > 0 and 1/inf = 0.
MaxLinearConcurrence ecp_max_linear(const std::vector<std::vector<double>>& phi,
                                    std::span<const std::size_t> columns);

/// s_1 / s_k for 0 < s_1 < ... < s_k <= 1.
double ecp_extremal_process(std::span<const double> sites);

/// |A cap (A + h)| / |A| for a d-dimensional ball A of radius r.
double ball_overlap_fraction(double h, double r, int d);
double ecp_ball_overlap(double h, double r, int d);

struct McOptions {
  std::size_t n_draws = 100000;
  bool antithetic = false;
  // Draws per substream; the result depends on it, not on the thread count.
  std::size_t batch_size = 65536;
};

/// Monte-Carlo mean of 1/V(Y). Brown-Resnick and Smith sample the Gaussian
/// integrand, extremal-t the Student integrand (both bivariate, antithetic
/// pairs available); other models average 1/V over spectral profiles.
/// Degenerate pairs (gamma = 0, rho = 1) return 1 without sampling.
ConcurrenceEstimate ecp_mc(const ModelSpec& model, const SiteSet& sites, const McOptions& options,
                           const SeededRng& rng);

/// Bivariate p(s1, s2) for BrownResnick, Smith and ExtremalT by adaptive
/// Gauss-Kronrod quadrature of the same integrands.
double ecp_quadrature(const ModelSpec& model, std::span<const double> s1, std::span<const double> s2);

/// Exact value where a closed form or quadrature exists, otherwise ecp_mc.
ConcurrenceEstimate ecp(const ModelSpec& model, const SiteSet& sites, const McOptions& options,
                        const SeededRng& rng);

/// theta = V(1, 1) for a pair of sites.
double extremal_coefficient(const ModelSpec& model, const SiteSet& pair);

/// sum_g w_g p(s0, s_g).
double integrated_cp(std::span<const double> pairwise_p, std::span<const double> weights);

/// Rectangle-rule weights for n points of a regular grid with spacing `step`.
std::vector<double> rectangle_weights(std::size_t n, double step);

/// Bisection for h in [lo, hi] with p_of_h(h) = target, p_of_h decreasing.
double solve_lag(const std::function<double(double)>& p_of_h, double target, double lo, double hi,
                 double tol = 1e-8);

} // namespace concur
