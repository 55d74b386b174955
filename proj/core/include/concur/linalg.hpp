#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "concur/rng.hpp"

namespace concur {

// Symmetric positive-semidefinite matrix, stored dense and row-major.
class CovarianceMatrix {
public:
  CovarianceMatrix() = default;
  // Throws DomainError unless `entries` is dim*dim and exactly symmetric.
  CovarianceMatrix(std::size_t dim, std::vector<double> entries);
  static CovarianceMatrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t dim() const noexcept { return dim_; }
  double operator()(std::size_t i, std::size_t j) const { return entries_[i * dim_ + j]; }
  const std::vector<double>& entries() const noexcept { return entries_; }

private:
  std::size_t dim_ = 0;
  std::vector<double> entries_;
};

// Lower-triangular factor L with L L^T = cov (+ jitter on the diagonal).
class CholeskyFactor {
public:
  // Semidefinite-tolerant factorization: zero pivots with a vanishing column
  // are accepted as exact rank deficiency. If that fails, the diagonal is
  // jittered by at most 1e-10 before giving up with NumericError.
  explicit CholeskyFactor(const CovarianceMatrix& cov);

  std::size_t dim() const noexcept { return dim_; }
  double jitter() const noexcept { return jitter_; }
  double operator()(std::size_t i, std::size_t j) const { return lower_[i * dim_ + j]; }

  // out = L z with z iid N(0, 1).
  void sample(SeededRng& rng, std::span<double> out) const;

private:
  std::size_t dim_ = 0;
  double jitter_ = 0.0;
  std::vector<double> lower_;
};

inline constexpr double kMaxCholeskyJitter = 1e-10;

std::vector<double> gaussian_vector(const CovarianceMatrix& cov, SeededRng& rng);

// Solves A x = b for symmetric positive-definite A (Cholesky, no jitter).
std::vector<double> solve_spd(const CovarianceMatrix& a, std::span<const double> b);

} // namespace concur
