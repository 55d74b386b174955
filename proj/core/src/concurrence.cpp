#include "concur/concurrence.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <optional>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "concur/errors.hpp"
#include "concur/parallel.hpp"
#include "concur/specfun.hpp"

namespace concur {

double ecp_logistic(double alpha, std::size_t k) {
  if (k < 2) throw DomainError("ecp_logistic: k must be >= 2");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("ecp_logistic: alpha must lie in (0, 1]");
  double p = 1.0;
  for (std::size_t j = 1; j < k; ++j) p *= 1.0 - alpha / static_cast<double>(j);
  return p;
}

MaxLinearConcurrence ecp_max_linear(const std::vector<std::vector<double>>& phi,
                                    std::span<const std::size_t> columns) {
  validate(MaxLinear{phi});
  if (columns.empty()) throw DomainError("ecp_max_linear: no sites");
  const std::size_t cols = phi.front().size();
  for (std::size_t c : columns) {
    if (c >= cols) throw DomainError("ecp_max_linear: column index out of range");
  }
  MaxLinearConcurrence out;
  out.per_component.resize(phi.size(), 0.0);
  for (std::size_t l = 0; l < phi.size(); ++l) {
    double denom = 0.0;
    for (const auto& row : phi) {
      double best = 0.0;
      for (std::size_t c : columns) {
        const double num = row[c];
        const double den = phi[l][c];
        double ratio;
        if (den > 0.0) {
          ratio = num / den;
        } else {
          ratio = num > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
        }
        best = std::max(best, ratio);
      }
      denom += best;
    }
    out.per_component[l] = std::isinf(denom) || denom == 0.0 ? 0.0 : 1.0 / denom;
    out.p += out.per_component[l];
  }
  return out;
}

double ecp_extremal_process(std::span<const double> sites) {
  if (sites.empty()) throw DomainError("ecp_extremal_process: no sites");
  for (std::size_t i = 0; i < sites.size(); ++i) {
    if (!(sites[i] > 0.0 && sites[i] <= 1.0)) {
      throw DomainError("ecp_extremal_process: sites must lie in (0, 1]");
    }
    if (i > 0 && !(sites[i] > sites[i - 1])) {
      throw DomainError("ecp_extremal_process: sites must be strictly increasing");
    }
  }
  return sites.front() / sites.back();
}

double ball_overlap_fraction(double h, double r, int d) {
  if (!(r > 0.0) || d < 1 || !(h >= 0.0)) throw DomainError("ball overlap: bad arguments");
  if (h >= 2.0 * r) return 0.0;
  if (h == 0.0) return 1.0;
  return reg_inc_beta(0.5 * (d + 1), 0.5, 1.0 - h * h / (4.0 * r * r));
}

double ecp_ball_overlap(double h, double r, int d) {
  const double q = ball_overlap_fraction(h, r, d);
  return q / (2.0 - q);
}

namespace {

// One-dimensional integrands of the bivariate models. Brown-Resnick/Smith:
// Z ~ N(0,1); extremal-t: T ~ t_{nu+1}.
struct PairKernel {
  enum class Kind { gaussian, student } kind;
  double gamma = 0.0;
  double rho = 0.0;
  double nu = 1.0;

  bool degenerate() const { return kind == Kind::gaussian ? gamma == 0.0 : rho >= 1.0; }

  double operator()(double x) const {
    if (kind == Kind::gaussian) {
      const double a = std::sqrt(2.0 * gamma);
      const double tail = std::exp(gamma - a * x) * normal_cdf(a - x);
      return 1.0 / (normal_cdf(x) + tail);
    }
    const double sigma = std::sqrt((1.0 - rho * rho) / (nu + 1.0));
    const double r = rho + sigma * x;
    if (!(r > 0.0)) return 0.0;
    const double tail = std::pow(r, -nu) * student_cdf(-rho / sigma + 1.0 / (sigma * r), nu + 1.0);
    return 1.0 / (student_cdf(x, nu + 1.0) + tail);
  }

  double draw(SeededRng& rng) const {
    return kind == Kind::gaussian ? rng.normal() : rng.student_t(nu + 1.0);
  }

  double density(double x) const {
    if (kind == Kind::gaussian) return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
    const double dof = nu + 1.0;
    const double logc = std::lgamma(0.5 * (dof + 1.0)) - std::lgamma(0.5 * dof) -
                        0.5 * std::log(dof * std::numbers::pi);
    return std::exp(logc - 0.5 * (dof + 1.0) * std::log1p(x * x / dof));
  }

  double lower_limit() const {
    if (kind == Kind::gaussian) return -std::numeric_limits<double>::infinity();
    const double sigma = std::sqrt((1.0 - rho * rho) / (nu + 1.0));
    return -rho / sigma;
  }
};

std::optional<PairKernel> pair_kernel(const ModelSpec& model, std::span<const double> s1,
                                      std::span<const double> s2) {
  if (const auto* br = std::get_if<BrownResnick>(&model)) {
    return PairKernel{PairKernel::Kind::gaussian, br->variogram(distance(s1, s2))};
  }
  if (const auto* sm = std::get_if<Smith>(&model)) {
    return PairKernel{PairKernel::Kind::gaussian, smith_variogram(*sm, s1, s2)};
  }
  if (const auto* et = std::get_if<ExtremalT>(&model)) {
    return PairKernel{PairKernel::Kind::student, 0.0, et->correlation(distance(s1, s2)), et->nu};
  }
  return std::nullopt;
}

struct Moments {
  double sum = 0.0;
  double sum_sq = 0.0;
  std::size_t count = 0;
};

template <class Draw>
Moments batched_mean(std::size_t total, std::size_t batch_size, const SeededRng& rng, Draw&& draw) {
  if (batch_size == 0) throw DomainError("ecp_mc: batch_size must be positive");
  const std::size_t batches = (total + batch_size - 1) / batch_size;
  std::vector<Moments> parts(batches);
  parallel_for(batches, [&](std::size_t b) {
    SeededRng local = rng.substream(b);
    const std::size_t n = std::min(batch_size, total - b * batch_size);
    Moments m;
    for (std::size_t i = 0; i < n; ++i) {
      const double v = draw(local);
      m.sum += v;
      m.sum_sq += v * v;
    }
    m.count = n;
    parts[b] = m;
  });
  Moments out;
  for (const auto& m : parts) {
    out.sum += m.sum;
    out.sum_sq += m.sum_sq;
    out.count += m.count;
  }
  return out;
}

ConcurrenceEstimate summarize(const Moments& m, std::size_t n_draws, std::string method) {
  const auto n = static_cast<double>(m.count);
  const double mean = m.sum / n;
  double var = m.count > 1 ? (m.sum_sq - n * mean * mean) / (n - 1.0) : 0.0;
  var = std::max(var, 0.0);
  return {std::clamp(mean, 0.0, 1.0), std::sqrt(var / n), n_draws, std::move(method)};
}

} // namespace

ConcurrenceEstimate ecp_mc(const ModelSpec& model, const SiteSet& sites, const McOptions& options,
                           const SeededRng& rng) {
  validate(model);
  if (options.n_draws == 0) throw DomainError("ecp_mc: n_draws must be positive");
  const std::size_t k = sites.size();
  if (k < 2) throw DomainError("ecp_mc: need at least two sites");

  const bool pairwise_model = std::holds_alternative<BrownResnick>(model) ||
                              std::holds_alternative<Smith>(model) ||
                              std::holds_alternative<ExtremalT>(model);
  if (pairwise_model) {
    if (k != 2) {
      throw CapabilityError("ecp_mc: " + model_name(model) + " is available for two sites only");
    }
    const PairKernel kernel = *pair_kernel(model, sites[0], sites[1]);
    if (kernel.degenerate()) return {1.0, 0.0, 0, "closed_form"};
    if (options.antithetic) {
      const std::size_t pairs = std::max<std::size_t>(1, options.n_draws / 2);
      const auto m = batched_mean(pairs, std::max<std::size_t>(1, options.batch_size / 2), rng,
                                  [&](SeededRng& r) {
                                    const double x = kernel.draw(r);
                                    return 0.5 * (kernel(x) + kernel(-x));
                                  });
      return summarize(m, 2 * pairs, "mc_antithetic");
    }
    const auto m = batched_mean(options.n_draws, options.batch_size, rng,
                                [&](SeededRng& r) { return kernel(kernel.draw(r)); });
    return summarize(m, options.n_draws, "mc_plain");
  }

  // Generic route: E[1 / V(Y)] over a spectral profile of the process.
  if (std::holds_alternative<BallIndicator>(model) && k != 2) {
    throw CapabilityError("ecp_mc: ball_indicator is available for two sites only");
  }
  const SpectralSampler sampler(model, sites);
  std::vector<double> probe(k, 1.0);
  (void)exponent_V(model, sites, probe);
  const auto m = batched_mean(options.n_draws, options.batch_size, rng, [&](SeededRng& r) {
    thread_local std::vector<double> y;
    y.resize(k);
    sampler.draw_bounded(r, y);
    const double v = exponent_V(model, sites, y);
    return std::isinf(v) ? 0.0 : 1.0 / v;
  });
  return summarize(m, options.n_draws, "mc_plain");
}

double ecp_quadrature(const ModelSpec& model, std::span<const double> s1, std::span<const double> s2) {
  validate(model);
  const auto kernel = pair_kernel(model, s1, s2);
  if (!kernel) {
    throw CapabilityError("ecp_quadrature: no one-dimensional integrand for " + model_name(model));
  }
  if (kernel->degenerate()) return 1.0;
  auto f = [&](double x) {
    const double d = kernel->density(x);
    return d == 0.0 ? 0.0 : d * (*kernel)(x);
  };
  using boost::math::quadrature::gauss_kronrod;
  const double lo = kernel->lower_limit();
  double value;
  if (std::isinf(lo)) {
    // Split at 0 so both halves are smooth on semi-infinite ranges.
    value = gauss_kronrod<double, 61>::integrate(f, -std::numeric_limits<double>::infinity(), 0.0, 15, 1e-13) +
            gauss_kronrod<double, 61>::integrate(f, 0.0, std::numeric_limits<double>::infinity(), 15, 1e-13);
  } else {
    const double mid = std::max(lo + 1.0, 0.0);
    value = gauss_kronrod<double, 61>::integrate(f, lo, mid, 15, 1e-13) +
            gauss_kronrod<double, 61>::integrate(f, mid, std::numeric_limits<double>::infinity(), 15, 1e-13);
  }
  return std::clamp(value, 0.0, 1.0);
}

ConcurrenceEstimate ecp(const ModelSpec& model, const SiteSet& sites, const McOptions& options,
                        const SeededRng& rng) {
  validate(model);
  const std::size_t k = sites.size();
  if (k < 2) throw DomainError("ecp: need at least two sites");
  if (const auto* lg = std::get_if<Logistic>(&model)) {
    return {ecp_logistic(lg->alpha, k), 0.0, 0, "closed_form"};
  }
  if (std::holds_alternative<MaxLinear>(model) || std::holds_alternative<ExtremalProcess>(model) ||
      (std::holds_alternative<BallIndicator>(model) && k == 2)) {
    if (k == 2) return {kendall_target_p(model, sites[0], sites[1]), 0.0, 0, "closed_form"};
    if (const auto* ml = std::get_if<MaxLinear>(&model)) {
      std::vector<std::size_t> cols(k);
      for (std::size_t j = 0; j < k; ++j) cols[j] = static_cast<std::size_t>(sites[j][0]);
      (void)SpectralSampler(model, sites);  // validates the column coordinates
      return {ecp_max_linear(ml->phi, cols).p, 0.0, 0, "closed_form"};
    }
    std::vector<double> s(k);
    for (std::size_t j = 0; j < k; ++j) s[j] = sites[j][0];
    std::sort(s.begin(), s.end());
    return {ecp_extremal_process(s), 0.0, 0, "closed_form"};
  }
  if (k == 2 && pair_kernel(model, sites[0], sites[1])) {
    return {ecp_quadrature(model, sites[0], sites[1]), 0.0, 0, "quadrature"};
  }
  return ecp_mc(model, sites, options, rng);
}

double extremal_coefficient(const ModelSpec& model, const SiteSet& pair) {
  if (pair.size() != 2) throw DomainError("extremal_coefficient: needs exactly two sites");
  const std::vector<double> ones{1.0, 1.0};
  return exponent_V(model, pair, ones);
}

double integrated_cp(std::span<const double> pairwise_p, std::span<const double> weights) {
  if (pairwise_p.size() != weights.size()) {
    throw DomainError("integrated_cp: probabilities and weights differ in length");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!(weights[i] >= 0.0)) throw DomainError("integrated_cp: weights must be nonnegative");
    total += weights[i] * pairwise_p[i];
  }
  return total;
}

std::vector<double> rectangle_weights(std::size_t n, double step) {
  if (!(step > 0.0)) throw DomainError("rectangle_weights: step must be positive");
  return std::vector<double>(n, step);
}

double solve_lag(const std::function<double(double)>& p_of_h, double target, double lo, double hi,
                 double tol) {
  if (!(lo < hi)) throw DomainError("solve_lag: empty bracket");
  double plo = p_of_h(lo);
  double phi = p_of_h(hi);
  if (!(plo >= target && phi <= target)) {
    throw DomainError("solve_lag: target not bracketed by p(lo) and p(hi)");
  }
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (p_of_h(mid) >= target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

} // namespace concur
