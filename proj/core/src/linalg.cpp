#include "concur/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "concur/errors.hpp"

namespace concur {

CovarianceMatrix::CovarianceMatrix(std::size_t dim, std::vector<double> entries)
    : dim_(dim), entries_(std::move(entries)) {
  if (dim_ == 0) throw DomainError("CovarianceMatrix: dimension must be positive");
  if (entries_.size() != dim_ * dim_) throw DomainError("CovarianceMatrix: wrong number of entries");
  for (std::size_t i = 0; i < dim_; ++i) {
    if (!(entries_[i * dim_ + i] >= 0.0)) {
      throw DomainError("CovarianceMatrix: negative or NaN variance");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (entries_[i * dim_ + j] != entries_[j * dim_ + i]) {
        throw DomainError("CovarianceMatrix: matrix is not symmetric");
      }
    }
  }
}

CovarianceMatrix CovarianceMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
  std::vector<double> flat;
  flat.reserve(rows.size() * rows.size());
  for (const auto& r : rows) {
    if (r.size() != rows.size()) throw DomainError("CovarianceMatrix: matrix is not square");
    flat.insert(flat.end(), r.begin(), r.end());
  }
  return CovarianceMatrix(rows.size(), std::move(flat));
}

namespace {

std::optional<std::vector<double>> try_cholesky(const CovarianceMatrix& cov, double jitter) {
  const std::size_t n = cov.dim();
  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, cov(i, i));
  const double tol = 1e-13 * std::max(scale, 1.0);

  std::vector<double> l(n * n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    double pivot = cov(j, j) + jitter;
    for (std::size_t k = 0; k < j; ++k) pivot -= l[j * n + k] * l[j * n + k];
    if (pivot < -tol) return std::nullopt;
    if (pivot <= tol) {
      // Rank deficiency: the remainder of column j must vanish as well.
      for (std::size_t i = j + 1; i < n; ++i) {
        double s = cov(i, j);
        for (std::size_t k = 0; k < j; ++k) s -= l[i * n + k] * l[j * n + k];
        if (std::fabs(s) > std::sqrt(tol)) return std::nullopt;
      }
      continue;
    }
    const double ljj = std::sqrt(pivot);
    l[j * n + j] = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = cov(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l[i * n + k] * l[j * n + k];
      l[i * n + j] = s / ljj;
    }
  }
  return l;
}

} // namespace

CholeskyFactor::CholeskyFactor(const CovarianceMatrix& cov) : dim_(cov.dim()) {
  if (auto l = try_cholesky(cov, 0.0)) {
    lower_ = std::move(*l);
    return;
  }
  for (double jitter = 1e-14; jitter <= kMaxCholeskyJitter * (1.0 + 1e-9); jitter *= 10.0) {
    if (auto l = try_cholesky(cov, jitter)) {
      lower_ = std::move(*l);
      jitter_ = jitter;
      return;
    }
  }
  throw NumericError("Cholesky factorization failed after diagonal jitter of 1e-10");
}

void CholeskyFactor::sample(SeededRng& rng, std::span<double> out) const {
  if (out.size() != dim_) throw DomainError("CholeskyFactor::sample: output size mismatch");
  thread_local std::vector<double> z;
  z.resize(dim_);
  for (auto& v : z) v = rng.normal();
  for (std::size_t i = 0; i < dim_; ++i) {
    double s = 0.0;
    const double* row = &lower_[i * dim_];
    for (std::size_t k = 0; k <= i; ++k) s += row[k] * z[k];
    out[i] = s;
  }
}

std::vector<double> gaussian_vector(const CovarianceMatrix& cov, SeededRng& rng) {
  const CholeskyFactor factor(cov);
  std::vector<double> out(cov.dim());
  factor.sample(rng, out);
  return out;
}

std::vector<double> solve_spd(const CovarianceMatrix& a, std::span<const double> b) {
  const std::size_t n = a.dim();
  if (b.size() != n) throw DomainError("solve_spd: size mismatch");
  auto l = try_cholesky(a, 0.0);
  if (!l) throw NumericError("solve_spd: matrix is not positive definite");
  const auto& lo = *l;
  std::vector<double> y(n), x(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= lo[i * n + k] * y[k];
    if (lo[i * n + i] == 0.0) throw NumericError("solve_spd: singular matrix");
    y[i] = s / lo[i * n + i];
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = y[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= lo[k * n + i] * x[k];
    x[i] = s / lo[i * n + i];
  }
  return x;
}

} // namespace concur
