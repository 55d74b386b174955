#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "concur/models.hpp"
#include "concur/rng.hpp"

namespace concur {

// n observations of a k-vector, row-major.
class Sample {
public:
  Sample() = default;
  Sample(std::size_t n, std::size_t k, std::vector<double> values, std::vector<std::string> names = {});
  static Sample from_rows(const std::vector<std::vector<double>>& rows,
                          std::vector<std::string> names = {});
  static Sample from_columns(const std::vector<std::vector<double>>& columns,
                             std::vector<std::string> names = {});

  std::size_t n() const noexcept { return n_; }
  std::size_t k() const noexcept { return k_; }
  double operator()(std::size_t i, std::size_t j) const { return values_[i * k_ + j]; }
  std::span<const double> row(std::size_t i) const { return {values_.data() + i * k_, k_}; }
  std::vector<double> column(std::size_t j) const;
  const std::vector<std::string>& names() const noexcept { return names_; }
  const std::vector<double>& values() const noexcept { return values_; }
  Sample select(std::span<const std::size_t> columns) const;
  Sample head(std::size_t rows) const;
  // Index of a named coordinate; DomainError if absent.
  std::size_t index_of(const std::string& name) const;

private:
  std::size_t n_ = 0;
  std::size_t k_ = 0;
  std::vector<double> values_;
  std::vector<std::string> names_;
};

/// d_i = #{l != i : X_l < X_i in every coordinate}.
std::vector<long long> dominance_counts(const Sample& data);

/// Mean over the first floor(n/m) disjoint blocks of the indicator that one
/// observation strictly dominates the rest of its block in every coordinate.
double sample_cp_block(const Sample& data, std::size_t m);

/// Permutation average of the block estimator, sum_i C(d_i, m-1) / C(n, m).
double sample_cp_bootstrap(const Sample& data, std::size_t m);

/// Same, from precomputed dominance counts of an n-sample.
double sample_cp_bootstrap(std::span<const long long> counts, std::size_t m);

struct UnbiasedEstimate {
  double raw = 0.0;      // (m p*_m - 1) / (m - 1), may be negative
  double clipped = 0.0;  // raw clipped to [0, 1]
};

/// Bivariate only (CapabilityError otherwise).
UnbiasedEstimate sample_cp_unbiased(const Sample& data, std::size_t m);

/// Kendall's tau-b: tied comparisons contribute zero to the numerator and are
/// removed from the denominator sqrt((N - T_x)(N - T_y)). Equals tau-a for
/// continuous data; NaN when a coordinate is constant.
double kendall_tau(std::span<const double> x, std::span<const double> y);

struct KendallEstimate {
  double estimate = 0.0;
  double std_error = 0.0;  // delete-one jackknife of tau-b; NaN when n < 3
};

KendallEstimate ecp_kendall(const Sample& pair);

/// Inclusion-exclusion estimator from log empirical CDFs (self-inclusive, <=)
/// on the selected columns. With `jackknife`, returns the delete-one
/// bias-corrected value n p - (n-1) mean(p_(-i)).
double ecp_multivariate_log(const Sample& data, std::span<const std::size_t> subset, bool jackknife);

struct BlockPlan {
  std::size_t m = 0;
  int assumed_r = 1;
  double assumed_c_r = 1.0;
  double assumed_p = 0.5;
  double predicted_mse = 0.0;
};

/// (c_r / m^r)^2 + p_m (1 - p_m) / floor(n / m), p_m = p + c_r / m^r.
double block_mse(std::size_t n, std::size_t m, double p, int r, double c_r);

/// m = round((2 r c_r^2 n / (p (1 - p)))^{1/(2r+1)}), clamped to [2, n].
BlockPlan optimal_block_size(std::size_t n, double p, int r = 1, double c_r = 1.0);

/// n draws from the max-stable law of `model` at `sites` (exact logistic
/// sampler for Logistic, MaxStableSimulator otherwise).
Sample max_stable_sample(const ModelSpec& model, const SiteSet& sites, std::size_t n, SeededRng& rng);

struct BiasRow {
  std::size_t m = 0;
  double mean = 0.0;
  double std_error = 0.0;
  double theory = 0.0;  // p + (1 - p) / m
};

/// Replicate means of the block estimator against p + (1 - p)/m for a pair;
/// replicate r uses rng.substream(r).
std::vector<BiasRow> bias_law_check(const ModelSpec& model, const SiteSet& pair,
                                    std::span<const std::size_t> m_list, std::size_t n,
                                    std::size_t reps, const SeededRng& rng);

bool has_ties(const Sample& data);

/// Adds uniform noise on [-resolution/2, resolution/2] to every value.
Sample jitter_ties(const Sample& data, double resolution, SeededRng& rng);

} // namespace concur
