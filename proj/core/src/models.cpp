#include "concur/models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <optional>

#include "concur/concurrence.hpp"
#include "concur/errors.hpp"
#include "concur/specfun.hpp"

namespace concur {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double VariogramSpec::operator()(double h) const {
  const double a = std::fabs(h);
  if (a == 0.0) return 0.0;
  return scale * std::pow(a, exponent);
}

double CorrelationSpec::operator()(double h) const {
  const double a = std::fabs(h);
  const double power = family == CorrelationFamily::exponential ? 1.0 : shape;
  return std::exp(-std::pow(a / range, power));
}

void validate(const ModelSpec& model) {
  std::visit(
      Overloaded{
          [](const Logistic& m) {
            if (!(m.alpha > 0.0 && m.alpha <= 1.0)) {
              throw DomainError("logistic: alpha must lie in (0, 1]");
            }
          },
          [](const MaxLinear& m) {
            if (m.phi.empty() || m.phi.front().empty()) throw DomainError("max_linear: empty phi");
            const std::size_t cols = m.phi.front().size();
            for (const auto& row : m.phi) {
              if (row.size() != cols) throw DomainError("max_linear: ragged phi");
              for (double v : row) {
                if (!(v >= 0.0)) throw DomainError("max_linear: phi must be nonnegative");
              }
            }
            for (std::size_t j = 0; j < cols; ++j) {
              double s = 0.0;
              for (const auto& row : m.phi) s += row[j];
              if (std::fabs(s - 1.0) > 1e-12) {
                throw DomainError("max_linear: every column of phi must sum to 1");
              }
            }
          },
          [](const BrownResnick& m) {
            if (!(m.variogram.scale > 0.0)) throw DomainError("brown_resnick: scale must be > 0");
            if (!(m.variogram.exponent > 0.0 && m.variogram.exponent <= 2.0)) {
              throw DomainError("brown_resnick: exponent must lie in (0, 2]");
            }
          },
          [](const ExtremalT& m) {
            if (!(m.nu >= 1.0)) throw DomainError("extremal_t: nu must be >= 1");
            if (!(m.correlation.range > 0.0)) throw DomainError("extremal_t: range must be > 0");
            if (m.correlation.family == CorrelationFamily::powered_exponential &&
                !(m.correlation.shape > 0.0 && m.correlation.shape <= 2.0)) {
              throw DomainError("extremal_t: shape must lie in (0, 2]");
            }
          },
          [](const Smith& m) {
            if (m.sigma.dim() == 0) throw DomainError("smith: empty covariance");
            (void)CholeskyFactor(m.sigma);
          },
          [](const ExtremalProcess&) {},
          [](const BallIndicator& m) {
            if (!(m.radius > 0.0)) throw DomainError("ball_indicator: radius must be > 0");
            if (m.dim < 1) throw DomainError("ball_indicator: dim must be >= 1");
          },
      },
      model);
}

std::string model_name(const ModelSpec& model) {
  return std::visit(Overloaded{
                        [](const Logistic&) { return std::string("logistic"); },
                        [](const MaxLinear&) { return std::string("max_linear"); },
                        [](const BrownResnick&) { return std::string("brown_resnick"); },
                        [](const ExtremalT&) { return std::string("extremal_t"); },
                        [](const Smith&) { return std::string("smith"); },
                        [](const ExtremalProcess&) { return std::string("extremal_process"); },
                        [](const BallIndicator&) { return std::string("ball_indicator"); },
                    },
                    model);
}

// ---------------------------------------------------------------------------
// SiteSet

SiteSet::SiteSet(std::size_t dim, std::vector<double> coords) : dim_(dim), coords_(std::move(coords)) {
  if (dim_ == 0) throw DomainError("SiteSet: dimension must be positive");
  if (coords_.empty() || coords_.size() % dim_ != 0) {
    throw DomainError("SiteSet: need at least one site with `dim` coordinates");
  }
  for (double c : coords_) {
    if (!std::isfinite(c)) throw DomainError("SiteSet: non-finite coordinate");
  }
  const std::size_t k = size();
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (std::equal((*this)[i].begin(), (*this)[i].end(), (*this)[j].begin())) {
        throw DomainError("SiteSet: sites must be pairwise distinct");
      }
    }
  }
}

SiteSet SiteSet::from_points(const std::vector<std::vector<double>>& points) {
  if (points.empty()) throw DomainError("SiteSet: no sites");
  const std::size_t d = points.front().size();
  std::vector<double> flat;
  for (const auto& p : points) {
    if (p.size() != d) throw DomainError("SiteSet: inconsistent dimensions");
    flat.insert(flat.end(), p.begin(), p.end());
  }
  return SiteSet(d, std::move(flat));
}

SiteSet SiteSet::line(std::span<const double> xs) {
  return SiteSet(1, std::vector<double>(xs.begin(), xs.end()));
}

SiteSet SiteSet::regular_grid(double start, double stop, double step) {
  if (!(step > 0.0) || !(stop >= start)) throw DomainError("SiteSet::regular_grid: bad range");
  const auto n = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
  std::vector<double> xs(n);
  for (std::size_t i = 0; i < n; ++i) xs[i] = start + static_cast<double>(i) * step;
  return SiteSet(1, std::move(xs));
}

SiteSet SiteSet::subset(std::span<const std::size_t> indices) const {
  std::vector<double> flat;
  flat.reserve(indices.size() * dim_);
  for (std::size_t i : indices) {
    if (i >= size()) throw DomainError("SiteSet::subset: index out of range");
    auto p = (*this)[i];
    flat.insert(flat.end(), p.begin(), p.end());
  }
  return SiteSet(dim_, std::move(flat));
}

double distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DomainError("distance: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

// ---------------------------------------------------------------------------
// Exponent functions

namespace {

double ball_volume(double r, int d) {
  const double half = 0.5 * d;
  return std::pow(std::numbers::pi, half) / std::tgamma(1.0 + half) * std::pow(r, d);
}

std::size_t max_linear_column(const MaxLinear& m, std::span<const double> site) {
  const double c = site[0];
  const auto cols = static_cast<double>(m.phi.front().size());
  if (site.size() != 1 || c != std::floor(c) || c < 0.0 || c >= cols) {
    throw DomainError("max_linear: sites must be 1-d column indices of phi");
  }
  return static_cast<std::size_t>(c);
}

double br_bivariate_V(double gamma, double z1, double z2) {
  if (gamma == 0.0) return std::max(1.0 / z1, 1.0 / z2);
  const double a = std::sqrt(2.0 * gamma);
  const double lr = std::log(z2 / z1);
  return normal_cdf(0.5 * a + lr / a) / z1 + normal_cdf(0.5 * a - lr / a) / z2;
}

double extremal_t_bivariate_V(double rho, double nu, double z1, double z2) {
  if (rho >= 1.0) return std::max(1.0 / z1, 1.0 / z2);
  const double sigma = std::sqrt((1.0 - rho * rho) / (nu + 1.0));
  const double t1 = (-rho + std::pow(z2 / z1, 1.0 / nu)) / sigma;
  const double t2 = (-rho + std::pow(z1 / z2, 1.0 / nu)) / sigma;
  return student_cdf(t1, nu + 1.0) / z1 + student_cdf(t2, nu + 1.0) / z2;
}

} // namespace

double smith_variogram(const Smith& m, std::span<const double> a, std::span<const double> b) {
  if (a.size() != m.sigma.dim()) throw DomainError("smith: site dimension differs from Sigma");
  std::vector<double> h(a.size());
  for (std::size_t i = 0; i < h.size(); ++i) h[i] = b[i] - a[i];
  const auto x = solve_spd(m.sigma, h);
  return 0.5 * std::inner_product(h.begin(), h.end(), x.begin(), 0.0);
}

double exponent_V(const ModelSpec& model, const SiteSet& sites, std::span<const double> z) {
  const std::size_t k = sites.size();
  if (z.size() != k) throw DomainError("exponent_V: z and sites differ in length");
  for (double v : z) {
    if (!(v >= 0.0)) throw DomainError("exponent_V: z must be nonnegative");
    if (v == 0.0) return std::numeric_limits<double>::infinity();
  }
  auto require_pair = [&](const char* name) {
    if (k != 2) {
      throw CapabilityError(std::string("exponent_V: only the bivariate form is available for ") +
                            name);
    }
  };
  return std::visit(
      Overloaded{
          [&](const Logistic& m) {
            if (m.alpha == 1.0) {
              double s = 0.0;
              for (double v : z) s += 1.0 / v;
              return s;
            }
            // (sum z^{-1/alpha})^alpha through log-sum-exp.
            double lmax = -std::numeric_limits<double>::infinity();
            for (double v : z) lmax = std::max(lmax, -std::log(v) / m.alpha);
            double s = 0.0;
            for (double v : z) s += std::exp(-std::log(v) / m.alpha - lmax);
            return std::exp(m.alpha * (lmax + std::log(s)));
          },
          [&](const MaxLinear& m) {
            std::vector<std::size_t> cols(k);
            for (std::size_t j = 0; j < k; ++j) cols[j] = max_linear_column(m, sites[j]);
            double total = 0.0;
            for (const auto& row : m.phi) {
              double best = 0.0;
              for (std::size_t j = 0; j < k; ++j) best = std::max(best, row[cols[j]] / z[j]);
              total += best;
            }
            return total;
          },
          [&](const BrownResnick& m) {
            require_pair("brown_resnick");
            return br_bivariate_V(m.variogram(distance(sites[0], sites[1])), z[0], z[1]);
          },
          [&](const ExtremalT& m) {
            require_pair("extremal_t");
            return extremal_t_bivariate_V(m.correlation(distance(sites[0], sites[1])), m.nu, z[0],
                                          z[1]);
          },
          [&](const Smith& m) {
            require_pair("smith");
            return br_bivariate_V(smith_variogram(m, sites[0], sites[1]), z[0], z[1]);
          },
          [&](const ExtremalProcess&) {
            // Unit-Frechet scaled: V(z) = sum_i (s_(i) - s_(i-1)) / min_{j >= i} s_(j) z_(j).
            std::vector<std::size_t> order(k);
            std::iota(order.begin(), order.end(), 0);
            for (std::size_t j = 0; j < k; ++j) {
              const double s = sites[j][0];
              if (sites.dim() != 1 || !(s > 0.0 && s <= 1.0)) {
                throw DomainError("extremal_process: sites must be reals in (0, 1]");
              }
            }
            std::sort(order.begin(), order.end(),
                      [&](std::size_t a, std::size_t b) { return sites[a][0] < sites[b][0]; });
            std::vector<double> suffix_min(k);
            double running = std::numeric_limits<double>::infinity();
            for (std::size_t i = k; i-- > 0;) {
              const std::size_t j = order[i];
              running = std::min(running, sites[j][0] * z[j]);
              suffix_min[i] = running;
            }
            double total = 0.0, prev = 0.0;
            for (std::size_t i = 0; i < k; ++i) {
              const double s = sites[order[i]][0];
              total += (s - prev) / suffix_min[i];
              prev = s;
            }
            return total;
          },
          [&](const BallIndicator& m) {
            require_pair("ball_indicator");
            const double q = ball_overlap_fraction(distance(sites[0], sites[1]), m.radius, m.dim);
            return (1.0 - q) * (1.0 / z[0] + 1.0 / z[1]) + q * std::max(1.0 / z[0], 1.0 / z[1]);
          },
      },
      model);
}

// ---------------------------------------------------------------------------
// Spectral samplers

namespace {

struct LogisticState {
  double alpha;
  double gamma_1ma;
};

struct MaxLinearState {
  std::size_t components;
  std::vector<double> profile;  // components x k
};

struct BrownResnickState {
  std::vector<double> gamma_anchor;  // gamma(s_j - s_0)
  std::vector<double> gamma_pair;    // k x k
  std::optional<CholeskyFactor> factor;  // increments W(s_j) - W(s_0), j >= 1
};

struct SmithState {
  std::size_t d;
  CovarianceMatrix sigma_inv;
  double density_at_zero;
  std::vector<double> lo, hi;
  double box_volume;
  std::vector<double> coords;
};

struct ExtremalTState {
  double nu;
  double c_nu;
  std::vector<double> corr;  // k x k
  CholeskyFactor factor;
};

struct BallState {
  double radius;
  std::size_t d;
  std::vector<double> lo, hi;
  double scale;  // |box| / |ball|
  std::vector<double> coords;
};

struct ExtremalProcessState {
  std::vector<double> s;
};

std::pair<std::vector<double>, std::vector<double>> bounding_box(const SiteSet& sites, double pad) {
  const std::size_t d = sites.dim();
  std::vector<double> lo(d, std::numeric_limits<double>::infinity());
  std::vector<double> hi(d, -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < sites.size(); ++i) {
    for (std::size_t c = 0; c < d; ++c) {
      lo[c] = std::min(lo[c], sites[i][c] - pad);
      hi[c] = std::max(hi[c], sites[i][c] + pad);
    }
  }
  return {lo, hi};
}

CovarianceMatrix symmetric_inverse(const CovarianceMatrix& a) {
  const std::size_t n = a.dim();
  std::vector<double> inv(n * n);
  std::vector<double> e(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    std::fill(e.begin(), e.end(), 0.0);
    e[j] = 1.0;
    const auto col = solve_spd(a, e);
    for (std::size_t i = 0; i < n; ++i) inv[i * n + j] = col[i];
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      const double v = 0.5 * (inv[i * n + j] + inv[j * n + i]);
      inv[i * n + j] = inv[j * n + i] = v;
    }
  }
  return CovarianceMatrix(n, std::move(inv));
}

double determinant_spd(const CovarianceMatrix& a) {
  const CholeskyFactor l(a);
  double det = 1.0;
  for (std::size_t i = 0; i < a.dim(); ++i) det *= l(i, i) * l(i, i);
  return det;
}

void normalize_to_k(std::span<double> y) {
  const double total = std::accumulate(y.begin(), y.end(), 0.0);
  const double scale = static_cast<double>(y.size()) / total;
  for (auto& v : y) v *= scale;
}

} // namespace

struct SpectralSampler::Impl {
  std::variant<LogisticState, MaxLinearState, BrownResnickState, SmithState, ExtremalTState,
               BallState, ExtremalProcessState>
      state;
};

SpectralSampler::SpectralSampler(const ModelSpec& model, const SiteSet& sites)
    : k_(sites.size()), impl_(std::make_unique<Impl>()) {
  validate(model);
  const std::size_t k = k_;
  if (k == 0) throw DomainError("SpectralSampler: empty site set");
  std::visit(
      Overloaded{
          [&](const Logistic& m) {
            impl_->state = LogisticState{m.alpha, m.alpha < 1.0 ? std::tgamma(1.0 - m.alpha) : 0.0};
            bound_ = static_cast<double>(k);
          },
          [&](const MaxLinear& m) {
            MaxLinearState st{m.phi.size(), std::vector<double>(m.phi.size() * k)};
            double top = 0.0;
            for (std::size_t j = 0; j < k; ++j) {
              const std::size_t col = max_linear_column(m, sites[j]);
              for (std::size_t c = 0; c < st.components; ++c) {
                st.profile[c * k + j] = static_cast<double>(st.components) * m.phi[c][col];
                top = std::max(top, st.profile[c * k + j]);
              }
            }
            impl_->state = std::move(st);
            bound_ = top;
          },
          [&](const BrownResnick& m) {
            BrownResnickState st;
            st.gamma_anchor.resize(k);
            st.gamma_pair.resize(k * k);
            for (std::size_t i = 0; i < k; ++i) {
              st.gamma_anchor[i] = m.variogram(distance(sites[i], sites[0]));
              for (std::size_t j = 0; j < k; ++j) {
                st.gamma_pair[i * k + j] = m.variogram(distance(sites[i], sites[j]));
              }
            }
            if (k > 1) {
              std::vector<double> cov((k - 1) * (k - 1));
              for (std::size_t i = 1; i < k; ++i) {
                for (std::size_t j = 1; j < k; ++j) {
                  cov[(i - 1) * (k - 1) + (j - 1)] =
                      st.gamma_anchor[i] + st.gamma_anchor[j] - st.gamma_pair[i * k + j];
                }
              }
              for (std::size_t i = 0; i + 1 < k; ++i) {
                for (std::size_t j = 0; j < i; ++j) {
                  cov[j * (k - 1) + i] = cov[i * (k - 1) + j];
                }
              }
              st.factor.emplace(CovarianceMatrix(k - 1, std::move(cov)));
            }
            impl_->state = std::move(st);
            bound_ = static_cast<double>(k);
          },
          [&](const Smith& m) {
            const std::size_t d = m.sigma.dim();
            if (sites.dim() != d) throw DomainError("smith: site dimension differs from Sigma");
            double trace = 0.0;
            for (std::size_t i = 0; i < d; ++i) trace += m.sigma(i, i);
            auto [lo, hi] = bounding_box(sites, 7.0 * std::sqrt(trace));
            double vol = 1.0;
            for (std::size_t c = 0; c < d; ++c) vol *= hi[c] - lo[c];
            const double dens0 =
                1.0 / std::sqrt(std::pow(2.0 * std::numbers::pi, static_cast<double>(d)) *
                                determinant_spd(m.sigma));
            std::vector<double> coords;
            for (std::size_t i = 0; i < k; ++i) coords.insert(coords.end(), sites[i].begin(), sites[i].end());
            impl_->state = SmithState{d, symmetric_inverse(m.sigma), dens0, lo, hi, vol, coords};
            bound_ = vol * dens0;
          },
          [&](const ExtremalT& m) {
            std::vector<double> corr(k * k);
            for (std::size_t i = 0; i < k; ++i) {
              for (std::size_t j = 0; j < k; ++j) {
                corr[i * k + j] = i == j ? 1.0 : m.correlation(distance(sites[i], sites[j]));
              }
            }
            const double c_nu = std::sqrt(std::numbers::pi) * std::pow(2.0, -(m.nu - 2.0) / 2.0) /
                                std::tgamma((m.nu + 1.0) / 2.0);
            CholeskyFactor factor{CovarianceMatrix(k, corr)};
            impl_->state = ExtremalTState{m.nu, c_nu, std::move(corr), std::move(factor)};
            bound_ = static_cast<double>(k);
          },
          [&](const ExtremalProcess&) {
            ExtremalProcessState st;
            double smallest = 1.0;
            for (std::size_t i = 0; i < k; ++i) {
              const double s = sites[i][0];
              if (sites.dim() != 1 || !(s > 0.0 && s <= 1.0)) {
                throw DomainError("extremal_process: sites must be reals in (0, 1]");
              }
              st.s.push_back(s);
              smallest = std::min(smallest, s);
            }
            impl_->state = std::move(st);
            bound_ = 1.0 / smallest;
          },
          [&](const BallIndicator& m) {
            if (sites.dim() != static_cast<std::size_t>(m.dim)) {
              throw DomainError("ball_indicator: site dimension differs from model dim");
            }
            auto [lo, hi] = bounding_box(sites, m.radius);
            double vol = 1.0;
            for (std::size_t c = 0; c < sites.dim(); ++c) vol *= hi[c] - lo[c];
            std::vector<double> coords;
            for (std::size_t i = 0; i < k; ++i) coords.insert(coords.end(), sites[i].begin(), sites[i].end());
            const double scale = vol / ball_volume(m.radius, m.dim);
            impl_->state = BallState{m.radius, sites.dim(), lo, hi, scale, coords};
            bound_ = scale;
          },
      },
      model);
}

SpectralSampler::~SpectralSampler() = default;
SpectralSampler::SpectralSampler(SpectralSampler&&) noexcept = default;
SpectralSampler& SpectralSampler::operator=(SpectralSampler&&) noexcept = default;

void SpectralSampler::draw(SeededRng& rng, std::span<double> out) const {
  const std::size_t k = k_;
  if (out.size() != k) throw DomainError("SpectralSampler: output size mismatch");
  std::visit(
      Overloaded{
          [&](const LogisticState& st) {
            if (st.alpha == 1.0) {
              // Independence: all mass on one uniformly chosen site.
              std::fill(out.begin(), out.end(), 0.0);
              out[std::min<std::size_t>(k - 1, static_cast<std::size_t>(rng.uniform() * k))] =
                  static_cast<double>(k);
              return;
            }
            for (auto& v : out) v = std::pow(rng.exponential(), -st.alpha) / st.gamma_1ma;
          },
          [&](const MaxLinearState& st) {
            const auto c = std::min<std::size_t>(st.components - 1,
                                                 static_cast<std::size_t>(rng.uniform() * st.components));
            std::copy_n(st.profile.begin() + static_cast<std::ptrdiff_t>(c * k), k, out.begin());
          },
          [&](const BrownResnickState& st) {
            out[0] = 1.0;
            if (k == 1) return;
            thread_local std::vector<double> g;
            g.resize(k - 1);
            st.factor->sample(rng, g);
            for (std::size_t j = 1; j < k; ++j) out[j] = std::exp(g[j - 1] - st.gamma_anchor[j]);
          },
          [&](const SmithState& st) {
            thread_local std::vector<double> u, diff;
            u.resize(st.d);
            diff.resize(st.d);
            for (std::size_t c = 0; c < st.d; ++c) u[c] = st.lo[c] + (st.hi[c] - st.lo[c]) * rng.uniform();
            for (std::size_t j = 0; j < k; ++j) {
              for (std::size_t c = 0; c < st.d; ++c) diff[c] = st.coords[j * st.d + c] - u[c];
              double q = 0.0;
              for (std::size_t a = 0; a < st.d; ++a) {
                for (std::size_t b = 0; b < st.d; ++b) q += diff[a] * st.sigma_inv(a, b) * diff[b];
              }
              out[j] = st.box_volume * st.density_at_zero * std::exp(-0.5 * q);
            }
          },
          [&](const ExtremalTState& st) {
            st.factor.sample(rng, out);
            for (auto& v : out) v = v > 0.0 ? st.c_nu * std::pow(v, st.nu) : 0.0;
          },
          [&](const BallState& st) {
            thread_local std::vector<double> u;
            u.resize(st.d);
            for (std::size_t c = 0; c < st.d; ++c) u[c] = st.lo[c] + (st.hi[c] - st.lo[c]) * rng.uniform();
            const double r2 = st.radius * st.radius;
            for (std::size_t j = 0; j < k; ++j) {
              double s = 0.0;
              for (std::size_t c = 0; c < st.d; ++c) {
                const double dx = st.coords[j * st.d + c] - u[c];
                s += dx * dx;
              }
              out[j] = s <= r2 ? st.scale : 0.0;
            }
          },
          [&](const ExtremalProcessState&) {
            throw CapabilityError(
                "extremal_process has no mean-one spectral sampler; use simulate_max_stable");
          },
      },
      impl_->state);
}

void SpectralSampler::draw_bounded(SeededRng& rng, std::span<double> out) const {
  const std::size_t k = k_;
  if (out.size() != k) throw DomainError("SpectralSampler: output size mismatch");
  auto pick_site = [&] {
    return std::min<std::size_t>(k - 1, static_cast<std::size_t>(rng.uniform() * static_cast<double>(k)));
  };
  std::visit(
      Overloaded{
          [&](const LogisticState& st) {
            if (st.alpha == 1.0) {
              draw(rng, out);
              return;
            }
            // Size-biasing by Y_J turns Exp(1) into Gamma(1 - alpha) for the chosen site.
            const std::size_t pick = pick_site();
            for (std::size_t j = 0; j < k; ++j) {
              const double e = j == pick ? rng.gamma(1.0 - st.alpha) : rng.exponential();
              out[j] = std::pow(e, -st.alpha);
            }
            normalize_to_k(out);
          },
          [&](const BrownResnickState& st) {
            // Tilting by Y_T shifts the Gaussian so that, after renormalization,
            // log Y_j = W(s_j) - W(s_T) - gamma(s_j - s_T).
            const std::size_t t = pick_site();
            thread_local std::vector<double> g;
            g.assign(k, 0.0);
            if (k > 1) st.factor->sample(rng, std::span<double>(g).subspan(1));
            double top = -std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < k; ++j) {
              out[j] = g[j] - g[t] - st.gamma_pair[j * k + t];
              top = std::max(top, out[j]);
            }
            for (auto& v : out) v = std::exp(v - top);
            normalize_to_k(out);
          },
          [&](const ExtremalTState& st) {
            // Tilting by max(0, W_J)^nu makes W_J^2 ~ chi^2_{nu+1}; the other
            // coordinates follow by Gaussian regression on W_J.
            const std::size_t pick = pick_site();
            st.factor.sample(rng, out);
            const double w = std::sqrt(2.0 * rng.gamma(0.5 * (st.nu + 1.0)));
            const double shift = w - out[pick];
            for (std::size_t j = 0; j < k; ++j) {
              const double v = out[j] + st.corr[j * k + pick] * shift;
              out[j] = v > 0.0 ? std::pow(v, st.nu) : 0.0;
            }
            out[pick] = std::pow(w, st.nu);
            normalize_to_k(out);
          },
          [&](const ExtremalProcessState& st) {
            const double u = rng.uniform_open();
            for (std::size_t j = 0; j < k; ++j) out[j] = u <= st.s[j] ? 1.0 / st.s[j] : 0.0;
          },
          [&](const auto&) { draw(rng, out); },
      },
      impl_->state);
}

std::vector<double> spectral_sample(const ModelSpec& model, const SiteSet& sites, SeededRng& rng) {
  const SpectralSampler sampler(model, sites);
  std::vector<double> out(sites.size());
  sampler.draw(rng, out);
  return out;
}

double kendall_target_p(const ModelSpec& model, std::span<const double> s1,
                        std::span<const double> s2) {
  validate(model);
  if (std::equal(s1.begin(), s1.end(), s2.begin(), s2.end())) return 1.0;
  return std::visit(
      Overloaded{
          [&](const Logistic& m) { return 1.0 - m.alpha; },
          [&](const MaxLinear& m) {
            const std::vector<std::size_t> cols{max_linear_column(m, s1), max_linear_column(m, s2)};
            return ecp_max_linear(m.phi, cols).p;
          },
          [&](const ExtremalProcess&) {
            const double a = std::min(s1[0], s2[0]);
            const double b = std::max(s1[0], s2[0]);
            const std::vector<double> xs{a, b};
            return ecp_extremal_process(xs);
          },
          [&](const BallIndicator& m) { return ecp_ball_overlap(distance(s1, s2), m.radius, m.dim); },
          [&](const auto&) { return ecp_quadrature(model, s1, s2); },
      },
      model);
}

} // namespace concur
