#include "concur/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "concur/concurrence.hpp"
#include "concur/errors.hpp"
#include "concur/parallel.hpp"
#include "concur/simulate.hpp"
#include "concur/specfun.hpp"

namespace concur {

Sample::Sample(std::size_t n, std::size_t k, std::vector<double> values, std::vector<std::string> names)
    : n_(n), k_(k), values_(std::move(values)), names_(std::move(names)) {
  if (n_ < 2 || k_ < 2) throw DomainError("Sample: need n >= 2 observations of k >= 2 coordinates");
  if (values_.size() != n_ * k_) throw DomainError("Sample: value count differs from n * k");
  for (double v : values_) {
    if (std::isnan(v)) throw DomainError("Sample: NaN value");
  }
  if (names_.empty()) {
    for (std::size_t j = 0; j < k_; ++j) names_.push_back("s" + std::to_string(j + 1));
  }
  if (names_.size() != k_) throw DomainError("Sample: one name per coordinate required");
}

Sample Sample::from_rows(const std::vector<std::vector<double>>& rows, std::vector<std::string> names) {
  if (rows.empty()) throw DomainError("Sample: no rows");
  const std::size_t k = rows.front().size();
  std::vector<double> flat;
  flat.reserve(rows.size() * k);
  for (const auto& r : rows) {
    if (r.size() != k) throw DomainError("Sample: ragged rows");
    flat.insert(flat.end(), r.begin(), r.end());
  }
  return Sample(rows.size(), k, std::move(flat), std::move(names));
}

Sample Sample::from_columns(const std::vector<std::vector<double>>& columns,
                            std::vector<std::string> names) {
  if (columns.empty()) throw DomainError("Sample: no columns");
  const std::size_t n = columns.front().size();
  const std::size_t k = columns.size();
  std::vector<double> flat(n * k);
  for (std::size_t j = 0; j < k; ++j) {
    if (columns[j].size() != n) throw DomainError("Sample: columns differ in length");
    for (std::size_t i = 0; i < n; ++i) flat[i * k + j] = columns[j][i];
  }
  return Sample(n, k, std::move(flat), std::move(names));
}

std::vector<double> Sample::column(std::size_t j) const {
  if (j >= k_) throw DomainError("Sample: column out of range");
  std::vector<double> out(n_);
  for (std::size_t i = 0; i < n_; ++i) out[i] = (*this)(i, j);
  return out;
}

Sample Sample::select(std::span<const std::size_t> columns) const {
  std::vector<double> flat;
  flat.reserve(n_ * columns.size());
  std::vector<std::string> names;
  for (std::size_t j : columns) {
    if (j >= k_) throw DomainError("Sample: column out of range");
    names.push_back(names_[j]);
  }
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j : columns) flat.push_back((*this)(i, j));
  }
  return Sample(n_, columns.size(), std::move(flat), std::move(names));
}

Sample Sample::head(std::size_t rows) const {
  if (rows > n_) throw DomainError("Sample::head: more rows than available");
  return Sample(rows, k_, std::vector<double>(values_.begin(), values_.begin() + rows * k_), names_);
}

std::size_t Sample::index_of(const std::string& name) const {
  const auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) throw DomainError("Sample: no coordinate named '" + name + "'");
  return static_cast<std::size_t>(it - names_.begin());
}

namespace {

bool strictly_below(const Sample& s, std::size_t a, std::size_t b) {
  for (std::size_t j = 0; j < s.k(); ++j) {
    if (!(s(a, j) < s(b, j))) return false;
  }
  return true;
}

} // namespace

std::vector<long long> dominance_counts(const Sample& data) {
  const std::size_t n = data.n();
  std::vector<long long> d(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t l = 0; l < n; ++l) {
      if (l != i && strictly_below(data, l, i)) ++d[i];
    }
  }
  return d;
}

double sample_cp_block(const Sample& data, std::size_t m) {
  const std::size_t n = data.n();
  const std::size_t k = data.k();
  if (m < 1 || m > n) throw DomainError("sample_cp_block: block size must lie in [1, n]");
  const std::size_t blocks = n / m;
  std::size_t hits = 0;
  for (std::size_t b = 0; b < blocks; ++b) {
    const std::size_t first = b * m;
    // The dominating observation must be the unique maximum of every coordinate.
    std::size_t leader = first;
    bool ok = true;
    for (std::size_t j = 0; j < k && ok; ++j) {
      std::size_t arg = first;
      bool unique = true;
      for (std::size_t i = first + 1; i < first + m; ++i) {
        if (data(i, j) > data(arg, j)) {
          arg = i;
          unique = true;
        } else if (data(i, j) == data(arg, j)) {
          unique = false;
        }
      }
      if (!unique || (j > 0 && arg != leader)) ok = false;
      leader = arg;
    }
    if (ok) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(blocks);
}

double sample_cp_bootstrap(const Sample& data, std::size_t m) {
  const auto d = dominance_counts(data);
  return sample_cp_bootstrap(d, m);
}

double sample_cp_bootstrap(std::span<const long long> d, std::size_t m) {
  const std::size_t n = d.size();
  if (m < 1 || m > n) throw DomainError("sample_cp_bootstrap: block size must lie in [1, n]");
  double total = 0.0;
  for (long long di : d) {
    total += log_binom_ratio(di, static_cast<long long>(m), static_cast<long long>(n));
  }
  return total;
}

UnbiasedEstimate sample_cp_unbiased(const Sample& data, std::size_t m) {
  if (data.k() != 2) throw CapabilityError("sample_cp_unbiased: defined for two coordinates only");
  if (m < 2) throw DomainError("sample_cp_unbiased: block size must be >= 2");
  const double star = sample_cp_bootstrap(data, m);
  const auto md = static_cast<double>(m);
  UnbiasedEstimate out;
  out.raw = (md * star - 1.0) / (md - 1.0);
  out.clipped = std::clamp(out.raw, 0.0, 1.0);
  return out;
}

namespace {

int sign(double v) { return (v > 0.0) - (v < 0.0); }

} // namespace

namespace {

// Per observation: number of other observations tied with it in `v`.
std::vector<long long> tie_partners(std::span<const double> v) {
  std::vector<double> sorted(v.begin(), v.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<long long> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto [lo, hi] = std::equal_range(sorted.begin(), sorted.end(), v[i]);
    out[i] = (hi - lo) - 1;
  }
  return out;
}

// S / sqrt((N - Tx)(N - Ty)) with N the number of pairs; NaN if a margin is constant.
double tau_b(long long s, double pairs, double tied_x, double tied_y) {
  const double den = (pairs - tied_x) * (pairs - tied_y);
  if (!(den > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  return static_cast<double>(s) / std::sqrt(den);
}

struct KendallParts {
  long long s = 0;
  std::vector<long long> row;  // per-observation concordance sums
  std::vector<long long> tx, ty;
  double tied_x = 0.0, tied_y = 0.0;
};

KendallParts kendall_parts(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  KendallParts k;
  k.row.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const int v = sign(x[i] - x[j]) * sign(y[i] - y[j]);
      k.s += v;
      k.row[i] += v;
      k.row[j] += v;
    }
  }
  k.tx = tie_partners(x);
  k.ty = tie_partners(y);
  k.tied_x = static_cast<double>(std::accumulate(k.tx.begin(), k.tx.end(), 0LL)) / 2.0;
  k.tied_y = static_cast<double>(std::accumulate(k.ty.begin(), k.ty.end(), 0LL)) / 2.0;
  return k;
}

} // namespace

double kendall_tau(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (y.size() != n) throw DomainError("kendall_tau: lengths differ");
  if (n < 2) throw DomainError("kendall_tau: need at least two observations");
  const auto k = kendall_parts(x, y);
  const auto nd = static_cast<double>(n);
  return tau_b(k.s, nd * (nd - 1.0) / 2.0, k.tied_x, k.tied_y);
}

KendallEstimate ecp_kendall(const Sample& pair) {
  if (pair.k() != 2) throw DomainError("ecp_kendall: sample must have exactly two coordinates");
  const std::size_t n = pair.n();
  const auto x = pair.column(0), y = pair.column(1);
  const auto k = kendall_parts(x, y);
  const auto nd = static_cast<double>(n);
  KendallEstimate out;
  out.estimate = tau_b(k.s, nd * (nd - 1.0) / 2.0, k.tied_x, k.tied_y);
  if (n < 3) {
    out.std_error = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  const double pairs = (nd - 1.0) * (nd - 2.0) / 2.0;
  std::vector<double> loo(n);
  for (std::size_t i = 0; i < n; ++i) {
    loo[i] = tau_b(k.s - k.row[i], pairs, k.tied_x - static_cast<double>(k.tx[i]),
                   k.tied_y - static_cast<double>(k.ty[i]));
  }
  const double mean = std::accumulate(loo.begin(), loo.end(), 0.0) / nd;
  double ss = 0.0;
  for (double v : loo) ss += (v - mean) * (v - mean);
  out.std_error = std::sqrt((nd - 1.0) / nd * ss);
  return out;
}

namespace {

// Self-inclusive counts c(i) = #{l : X_l <= X_i on the columns in `cols`}.
std::vector<long long> leq_counts(const Sample& data, const std::vector<std::size_t>& cols) {
  const std::size_t n = data.n();
  std::vector<long long> c(n, 0);
  if (cols.size() == 1) {
    std::vector<double> v = data.column(cols[0]);
    std::vector<double> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < n; ++i) {
      c[i] = std::upper_bound(sorted.begin(), sorted.end(), v[i]) - sorted.begin();
    }
    return c;
  }
  for (std::size_t i = 0; i < n; ++i) {
    long long count = 0;
    for (std::size_t l = 0; l < n; ++l) {
      bool below = true;
      for (std::size_t j : cols) {
        if (data(l, j) > data(i, j)) {
          below = false;
          break;
        }
      }
      count += below;
    }
    c[i] = count;
  }
  return c;
}

} // namespace

double ecp_multivariate_log(const Sample& data, std::span<const std::size_t> subset, bool jackknife) {
  const std::size_t q = subset.size();
  if (q < 2) throw DomainError("ecp_multivariate_log: need at least two sites");
  if (q > 20) throw DomainError("ecp_multivariate_log: too many sites for inclusion-exclusion");
  for (std::size_t j : subset) {
    if (j >= data.k()) throw DomainError("ecp_multivariate_log: site index out of range");
  }
  const std::size_t n = data.n();
  const auto nd = static_cast<double>(n);

  double estimate = 0.0;
  // Per observation i: sum over J of sign_J * (sum_{l != i} log c'_J(l) after deleting i).
  std::vector<double> loo_sum(jackknife ? n : 0, 0.0);
  double loo_constant = 0.0;

  for (std::size_t mask = 1; mask < (std::size_t{1} << q); ++mask) {
    std::vector<std::size_t> cols;
    for (std::size_t b = 0; b < q; ++b) {
      if (mask & (std::size_t{1} << b)) cols.push_back(subset[b]);
    }
    const double sgn = cols.size() % 2 == 0 ? 1.0 : -1.0;
    const auto c = leq_counts(data, cols);
    double total_log = 0.0;
    for (long long v : c) total_log += std::log(static_cast<double>(v));
    estimate += sgn * (total_log / nd - std::log(nd));
    if (!jackknife) continue;

    // Deleting i lowers c(l) by one for every l with X_i <= X_l on J.
    std::vector<double> delta(n);
    for (std::size_t l = 0; l < n; ++l) {
      delta[l] = c[l] >= 2 ? std::log(static_cast<double>(c[l] - 1)) - std::log(static_cast<double>(c[l])) : 0.0;
    }
    std::vector<double> adjust(n, 0.0);
    if (cols.size() == 1) {
      std::vector<std::size_t> order(n);
      std::iota(order.begin(), order.end(), 0);
      const std::size_t col = cols[0];
      std::sort(order.begin(), order.end(),
                [&](std::size_t a, std::size_t b) { return data(a, col) < data(b, col); });
      std::vector<double> suffix(n + 1, 0.0);
      std::vector<double> sorted(n);
      for (std::size_t r = n; r-- > 0;) {
        suffix[r] = suffix[r + 1] + delta[order[r]];
        sorted[r] = data(order[r], col);
      }
      for (std::size_t i = 0; i < n; ++i) {
        const auto first = std::lower_bound(sorted.begin(), sorted.end(), data(i, col)) - sorted.begin();
        adjust[i] = suffix[static_cast<std::size_t>(first)] - delta[i];
      }
    } else {
      for (std::size_t i = 0; i < n; ++i) {
        double a = 0.0;
        for (std::size_t l = 0; l < n; ++l) {
          if (l == i) continue;
          bool below = true;
          for (std::size_t j : cols) {
            if (data(i, j) > data(l, j)) {
              below = false;
              break;
            }
          }
          if (below) a += delta[l];
        }
        adjust[i] = a;
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      loo_sum[i] += sgn * (total_log - std::log(static_cast<double>(c[i])) + adjust[i]);
    }
    loo_constant += sgn;
  }
  if (!jackknife) return estimate;

  double loo_mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    loo_mean += loo_sum[i] / (nd - 1.0) - loo_constant * std::log(nd - 1.0);
  }
  loo_mean /= nd;
  return nd * estimate - (nd - 1.0) * loo_mean;
}

double block_mse(std::size_t n, std::size_t m, double p, int r, double c_r) {
  if (m < 1 || m > n) throw DomainError("block_mse: block size must lie in [1, n]");
  const double bias = c_r / std::pow(static_cast<double>(m), r);
  const double pm = std::clamp(p + bias, 0.0, 1.0);
  return bias * bias + pm * (1.0 - pm) / static_cast<double>(n / m);
}

BlockPlan optimal_block_size(std::size_t n, double p, int r, double c_r) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("optimal_block_size: p must lie in (0, 1)");
  if (r < 1) throw DomainError("optimal_block_size: r must be >= 1");
  if (!(c_r >= 0.0)) throw DomainError("optimal_block_size: c_r must be nonnegative");
  if (n < 2) throw DomainError("optimal_block_size: n must be >= 2");
  const double raw = std::pow(2.0 * r * c_r * c_r * static_cast<double>(n) / (p * (1.0 - p)),
                              1.0 / (2.0 * r + 1.0));
  const auto m = static_cast<std::size_t>(std::clamp(std::round(raw), 2.0, static_cast<double>(n)));
  return {m, r, c_r, p, block_mse(n, m, p, r, c_r)};
}

Sample max_stable_sample(const ModelSpec& model, const SiteSet& sites, std::size_t n, SeededRng& rng) {
  const std::size_t k = sites.size();
  std::vector<double> flat;
  flat.reserve(n * k);
  if (const auto* lg = std::get_if<Logistic>(&model)) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto x = simulate_logistic_exact(lg->alpha, k, rng);
      flat.insert(flat.end(), x.begin(), x.end());
    }
  } else {
    const MaxStableSimulator sim(model, sites);
    for (std::size_t i = 0; i < n; ++i) {
      const auto x = sim.draw(rng).values;
      flat.insert(flat.end(), x.begin(), x.end());
    }
  }
  return Sample(n, k, std::move(flat));
}

std::vector<BiasRow> bias_law_check(const ModelSpec& model, const SiteSet& pair,
                                    std::span<const std::size_t> m_list, std::size_t n,
                                    std::size_t reps, const SeededRng& rng) {
  if (pair.size() != 2) throw DomainError("bias_law_check: needs exactly two sites");
  if (reps < 2) throw DomainError("bias_law_check: needs at least two replicates");
  const double p = ecp(model, pair, McOptions{}, rng.substream(~std::uint64_t{0})).value;
  const std::size_t nm = m_list.size();
  std::vector<double> est(reps * nm);
  parallel_for(reps, [&](std::size_t r) {
    SeededRng local = rng.substream(r);
    const Sample s = max_stable_sample(model, pair, n, local);
    for (std::size_t a = 0; a < nm; ++a) est[r * nm + a] = sample_cp_block(s, m_list[a]);
  });
  std::vector<BiasRow> rows;
  const auto rd = static_cast<double>(reps);
  for (std::size_t a = 0; a < nm; ++a) {
    double sum = 0.0, sq = 0.0;
    for (std::size_t r = 0; r < reps; ++r) {
      sum += est[r * nm + a];
      sq += est[r * nm + a] * est[r * nm + a];
    }
    const double mean = sum / rd;
    const double var = std::max(0.0, (sq - rd * mean * mean) / (rd - 1.0));
    const auto md = static_cast<double>(m_list[a]);
    rows.push_back({m_list[a], mean, std::sqrt(var / rd), p + (1.0 - p) / md});
  }
  return rows;
}

bool has_ties(const Sample& data) {
  for (std::size_t j = 0; j < data.k(); ++j) {
    auto col = data.column(j);
    std::sort(col.begin(), col.end());
    if (std::adjacent_find(col.begin(), col.end()) != col.end()) return true;
  }
  return false;
}

Sample jitter_ties(const Sample& data, double resolution, SeededRng& rng) {
  if (!(resolution > 0.0)) throw DomainError("jitter_ties: resolution must be positive");
  std::vector<double> v = data.values();
  for (auto& x : v) x += (rng.uniform() - 0.5) * resolution;
  return Sample(data.n(), data.k(), std::move(v), data.names());
}

} // namespace concur
