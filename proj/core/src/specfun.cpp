#include "concur/specfun.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "concur/errors.hpp"

namespace concur {

double normal_cdf(double x) {
  if (std::isnan(x)) throw DomainError("normal_cdf: NaN argument");
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

double log_normal_cdf(double x) {
  if (x > -30.0) return std::log(normal_cdf(x));
  // Mills-ratio asymptotic expansion.
  const double x2 = x * x;
  const double series = 1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2);
  return -0.5 * x2 - std::log(-x) - 0.5 * std::log(2.0 * std::numbers::pi) + std::log(series);
}

namespace {

// Continued fraction for I_x(a, b), modified Lentz.
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 10000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  throw NumericError("reg_inc_beta: continued fraction did not converge");
}

} // namespace

double reg_inc_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw DomainError("reg_inc_beta: a and b must be positive");
  if (!(x >= 0.0 && x <= 1.0)) throw DomainError("reg_inc_beta: x must lie in [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_cdf(double x, double dof) {
  if (!(dof > 0.0)) throw DomainError("student_cdf: dof must be positive");
  if (std::isnan(x)) throw DomainError("student_cdf: NaN argument");
  if (std::isinf(x)) return x > 0 ? 1.0 : 0.0;
  if (x == 0.0) return 0.5;
  const double x2 = x * x;
  // Tail mass P(|T| > |x|) = I_{dof/(dof+x^2)}(dof/2, 1/2); for large |x|
  // evaluate through the complementary argument to keep precision.
  double tail = 0.0;
  if (dof < x2) {
    tail = reg_inc_beta(0.5 * dof, 0.5, dof / (dof + x2));
  } else {
    tail = 1.0 - reg_inc_beta(0.5, 0.5 * dof, x2 / (dof + x2));
  }
  return x > 0 ? 1.0 - 0.5 * tail : 0.5 * tail;
}

double log_binom_ratio(long long d, long long m, long long n) {
  if (m < 1 || n < 1 || m > n) throw DomainError("log_binom_ratio: need 1 <= m <= n");
  if (d < 0 || d > n - 1) throw DomainError("log_binom_ratio: need 0 <= d <= n - 1");
  if (d < m - 1) return 0.0;
  auto log_choose = [](double a, double b) {
    return std::lgamma(a + 1.0) - std::lgamma(b + 1.0) - std::lgamma(a - b + 1.0);
  };
  const double log_ratio =
      log_choose(static_cast<double>(d), static_cast<double>(m - 1)) -
      log_choose(static_cast<double>(n), static_cast<double>(m));
  return std::exp(log_ratio);
}

double sample_positive_stable(double alpha, SeededRng& rng) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw DomainError("sample_positive_stable: alpha must lie in (0, 1)");
  }
  const double u = std::numbers::pi * rng.uniform_open();
  const double e = rng.exponential();
  const double a = std::sin(alpha * u) / std::pow(std::sin(u), 1.0 / alpha);
  const double b = std::pow(std::sin((1.0 - alpha) * u) / e, (1.0 - alpha) / alpha);
  return a * b;
}

} // namespace concur
