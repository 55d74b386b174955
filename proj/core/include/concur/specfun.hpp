#pragma once

#include "concur/rng.hpp"

namespace concur {

/// Standard normal CDF. Total function; absolute error below 1e-15.
double normal_cdf(double x);

/// log of the standard normal CDF, accurate far into the lower tail.
double log_normal_cdf(double x);

/// Student-t CDF with `dof` degrees of freedom (any positive real).
double student_cdf(double x, double dof);

/// Regularized incomplete beta I_x(a, b), evaluated by the Lentz continued
/// fraction on whichever tail converges fastest.
double reg_inc_beta(double a, double b, double x);

/// C(d, m-1) / C(n, m), computed in log space. Exactly 0 when d < m - 1.
/// Requires 1 <= m <= n and d <= n - 1.
double log_binom_ratio(long long d, long long m, long long n);

/// One-sided stable variate with Laplace transform E exp(-tS) = exp(-t^alpha),
/// 0 < alpha < 1 (Kanter / Chambers-Mallows-Stuck).
double sample_positive_stable(double alpha, SeededRng& rng);

} // namespace concur
