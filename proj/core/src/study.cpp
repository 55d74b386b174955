#include "concur/study.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>
#include <set>

#include "concur/concurrence.hpp"
#include "concur/csv.hpp"
#include "concur/errors.hpp"
#include "concur/estimators.hpp"
#include "concur/parallel.hpp"
#include "concur/simulate.hpp"

namespace concur {

using nlohmann::json;

StudyConfig study_config_from_json(const json& j) {
  StudyConfig c;
  static const std::set<std::string> known{"experiment", "reps",    "seed",       "sample_sizes", "block_sizes",
                                           "n0",         "targets", "lags",       "block_size",   "lag_draws"};
  if (!j.is_object()) throw DomainError("study config: expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw DomainError("study config: unknown key '" + key + "'");
  }
  try {
    c.experiment = j.value("experiment", c.experiment);
    c.reps = j.value("reps", c.reps);
    c.seed = j.value("seed", c.seed);
    c.sample_sizes = j.value("sample_sizes", c.sample_sizes);
    c.block_sizes = j.value("block_sizes", c.block_sizes);
    if (j.contains("n0")) {
      for (const auto& v : j.at("n0")) {
        c.n0_list.push_back(v.is_string() && v.get<std::string>() == "inf" ? 0 : v.get<std::size_t>());
      }
    }
    c.targets = j.value("targets", c.targets);
    c.lags = j.value("lags", c.lags);
    c.block_size = j.value("block_size", c.block_size);
    c.lag_draws = j.value("lag_draws", c.lag_draws);
  } catch (const json::exception& e) {
    throw DomainError(std::string("study config: ") + e.what());
  }
  return c;
}

nlohmann::ordered_json StudyTable::to_json() const {
  nlohmann::ordered_json out;
  out["schema_version"] = 1;
  out["experiment"] = experiment;
  out["columns"] = columns;
  auto rows_json = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    nlohmann::ordered_json obj;
    for (std::size_t c = 0; c < columns.size(); ++c) obj[columns[c]] = r[c];
    rows_json.push_back(std::move(obj));
  }
  out["rows"] = std::move(rows_json);
  return out;
}

void StudyTable::write_csv(std::ostream& out) const {
  for (std::size_t c = 0; c < columns.size(); ++c) out << (c ? "," : "") << columns[c];
  out << '\n';
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < r.size(); ++c) {
      if (c) out << ',';
      if (r[c].is_string()) {
        out << csv_escape(r[c].get<std::string>());
      } else if (r[c].is_number_integer() || r[c].is_number_unsigned()) {
        out << r[c].dump();
      } else {
        out << format_double(r[c].get<double>());
      }
    }
    out << '\n';
  }
}

ModelSpec study_extremal_t() {
  return ExtremalT{CorrelationSpec{CorrelationFamily::exponential, 10.0, 1.0}, 5.0};
}

double lag_for_target(const ModelSpec& model, double target, std::size_t draws, std::uint64_t seed) {
  if (!(target > 0.0 && target < 1.0)) throw DomainError("lag_for_target: target must lie in (0, 1)");
  const SeededRng rng(seed, 0x1a9);
  McOptions opt;
  opt.n_draws = draws;
  opt.antithetic = true;
  auto p_of_h = [&](double h) {
    const double xs[] = {0.0, h};
    return ecp_mc(model, SiteSet::line(xs), opt, rng).value;
  };
  double hi = 1.0;
  while (p_of_h(hi) > target) {
    hi *= 2.0;
    if (hi > 1e6) throw DomainError("lag_for_target: target below the model's long-range limit");
  }
  return solve_lag(p_of_h, target, 1e-9, hi, 1e-5 * hi);
}

namespace {

struct Summary {
  double mean = 0.0;
  double sd = 0.0;
  double rmse = 0.0;
  double q25 = 0.0, median = 0.0, q75 = 0.0;
};

double quantile(std::vector<double> sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

Summary summarize(std::vector<double> v, double truth) {
  Summary s;
  const auto n = static_cast<double>(v.size());
  for (double x : v) {
    s.mean += x;
    s.rmse += (x - truth) * (x - truth);
  }
  s.mean /= n;
  s.rmse = std::sqrt(s.rmse / n);
  for (double x : v) s.sd += (x - s.mean) * (x - s.mean);
  s.sd = v.size() > 1 ? std::sqrt(s.sd / (n - 1.0)) : 0.0;
  std::sort(v.begin(), v.end());
  s.q25 = quantile(v, 0.25);
  s.median = quantile(v, 0.5);
  s.q75 = quantile(v, 0.75);
  return s;
}

// n-samples at two sites, max-stable (n0 = 0) or from n0 partial maxima.
class PairSource {
public:
  PairSource(const ModelSpec& model, const SiteSet& pair, std::size_t n0) : n0_(n0) {
    if (n0 == 0) {
      exact_.emplace(model, pair);
    } else {
      doa_.emplace(model, pair, n0);
    }
  }

  Sample draw(std::size_t n, SeededRng& rng) const {
    std::vector<double> flat;
    flat.reserve(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto x = exact_ ? exact_->draw(rng).values : doa_->draw(rng);
      flat.insert(flat.end(), x.begin(), x.end());
    }
    return Sample(n, 2, std::move(flat));
  }

private:
  std::size_t n0_;
  std::optional<MaxStableSimulator> exact_;
  std::optional<DoaSimulator> doa_;
};

json n0_json(std::size_t n0) { return n0 == 0 ? json("inf") : json(n0); }

SiteSet pair_at(double h) {
  const double xs[] = {0.0, h};
  return SiteSet::line(xs);
}

template <class T>
std::vector<T> or_default(const std::vector<T>& v, std::vector<T> fallback) {
  return v.empty() ? fallback : v;
}

// Per replicate, the three pairwise estimators p*_m, p~*_m and Kendall.
struct Triple {
  std::vector<double> pstar, ptilde, phat;
};

Triple run_triple(const PairSource& src, std::size_t n, std::size_t m, std::size_t reps,
                  const SeededRng& rng) {
  Triple t{std::vector<double>(reps), std::vector<double>(reps), std::vector<double>(reps)};
  parallel_for(reps, [&](std::size_t r) {
    SeededRng local = rng.substream(r);
    const Sample s = src.draw(n, local);
    const auto d = dominance_counts(s);
    const double star = sample_cp_bootstrap(d, m);
    const auto md = static_cast<double>(m);
    t.pstar[r] = star;
    t.ptilde[r] = (md * star - 1.0) / (md - 1.0);
    t.phat[r] = ecp_kendall(s).estimate;
  });
  return t;
}

StudyTable run_table1(const StudyConfig& c) {
  StudyTable t;
  t.experiment = "table1";
  t.columns = {"n", "n0", "p", "h", "pstar_mean", "pstar_sd", "ptilde_mean", "ptilde_sd", "phat_mean", "phat_sd"};
  const ModelSpec model = study_extremal_t();
  std::vector<double> lags;
  for (double p : c.targets) lags.push_back(lag_for_target(model, p, c.lag_draws, c.seed));
  std::uint64_t cell = 0;
  for (std::size_t n : or_default(c.sample_sizes, {20, 50, 100})) {
    for (std::size_t n0 : or_default(c.n0_list, {1, 10, 15, 0})) {
      for (std::size_t a = 0; a < c.targets.size(); ++a) {
        const PairSource src(model, pair_at(lags[a]), n0);
        const auto tr = run_triple(src, n, c.block_size, c.reps, SeededRng(c.seed, ++cell));
        const auto s1 = summarize(tr.pstar, c.targets[a]);
        const auto s2 = summarize(tr.ptilde, c.targets[a]);
        const auto s3 = summarize(tr.phat, c.targets[a]);
        t.rows.push_back({n, n0_json(n0), c.targets[a], lags[a], s1.mean, s1.sd, s2.mean, s2.sd, s3.mean, s3.sd});
      }
    }
  }
  return t;
}

StudyTable run_fig1(const StudyConfig& c) {
  StudyTable t;
  t.experiment = "fig1";
  t.columns = {"n", "m", "rmse_block", "rmse_bootstrap", "predicted_rmse", "optimal_m"};
  const ModelSpec model = BrownResnick{VariogramSpec{1.0 / 1.627, 1.0}};
  const SiteSet pair = pair_at(1.0);
  const double p = ecp(model, pair, McOptions{}, SeededRng(c.seed)).value;
  const PairSource src(model, pair, 0);
  const auto ms = or_default(c.block_sizes, {2, 3, 4, 5, 6, 8, 10, 12, 13, 15, 20, 25, 30, 40, 50});
  std::uint64_t cell = 0;
  for (std::size_t n : or_default(c.sample_sizes, {250, 500, 1000})) {
    std::vector<std::size_t> mv;
    for (std::size_t m : ms) {
      if (m >= 2 && m <= n) mv.push_back(m);
    }
    std::vector<double> block(c.reps * mv.size()), boot(c.reps * mv.size());
    const SeededRng rng(c.seed, ++cell);
    parallel_for(c.reps, [&](std::size_t r) {
      SeededRng local = rng.substream(r);
      const Sample s = src.draw(n, local);
      const auto d = dominance_counts(s);
      for (std::size_t a = 0; a < mv.size(); ++a) {
        block[a * c.reps + r] = sample_cp_block(s, mv[a]);
        boot[a * c.reps + r] = sample_cp_bootstrap(d, mv[a]);
      }
    });
    // Bias law for k = 2: c_r = 1 - p with r = 1.
    const BlockPlan plan = optimal_block_size(n, p, 1, 1.0 - p);
    for (std::size_t a = 0; a < mv.size(); ++a) {
      const auto first = static_cast<std::ptrdiff_t>(a * c.reps);
      const auto last = first + static_cast<std::ptrdiff_t>(c.reps);
      const auto sb = summarize({block.begin() + first, block.begin() + last}, p);
      const auto sp = summarize({boot.begin() + first, boot.begin() + last}, p);
      t.rows.push_back({n, mv[a], sb.rmse, sp.rmse, std::sqrt(block_mse(n, mv[a], p, 1, 1.0 - p)), plan.m});
    }
  }
  return t;
}

StudyTable run_fig2(const StudyConfig& c) {
  StudyTable t;
  t.experiment = "fig2";
  t.columns = {"n", "n0", "p", "h", "phat_mean", "phat_sd", "phat_rmse"};
  const ModelSpec model = study_extremal_t();
  std::vector<double> lags;
  for (double p : c.targets) lags.push_back(lag_for_target(model, p, c.lag_draws, c.seed));
  std::uint64_t cell = 0;
  for (std::size_t n : or_default(c.sample_sizes, {25, 50, 100, 500})) {
    for (std::size_t n0 : or_default(c.n0_list, {1, 10, 15, 0})) {
      for (std::size_t a = 0; a < c.targets.size(); ++a) {
        const PairSource src(model, pair_at(lags[a]), n0);
        std::vector<double> est(c.reps);
        const SeededRng rng(c.seed, ++cell);
        parallel_for(c.reps, [&](std::size_t r) {
          SeededRng local = rng.substream(r);
          est[r] = ecp_kendall(src.draw(n, local)).estimate;
        });
        const auto s = summarize(est, c.targets[a]);
        t.rows.push_back({n, n0_json(n0), c.targets[a], lags[a], s.mean, s.sd, s.rmse});
      }
    }
  }
  return t;
}

StudyTable run_fig3(const StudyConfig& c) {
  StudyTable t;
  t.experiment = "fig3";
  t.columns = {"model", "n", "h", "p", "estimator", "mean", "sd", "q25", "median", "q75"};
  const std::vector<std::pair<std::string, ModelSpec>> models = {
      {"extremal_t", study_extremal_t()},
      {"brown_resnick", BrownResnick{VariogramSpec{1.0 / 3.0, 1.0}}},
  };
  std::uint64_t cell = 0;
  for (const auto& [name, model] : models) {
    for (std::size_t n : or_default(c.sample_sizes, {25, 50, 100, 500})) {
      for (double h : c.lags) {
        const SiteSet pair = pair_at(h);
        const double p = ecp(model, pair, McOptions{}, SeededRng(c.seed)).value;
        const PairSource src(model, pair, 0);
        const auto tr = run_triple(src, n, c.block_size, c.reps, SeededRng(c.seed, ++cell));
        const std::pair<const char*, const std::vector<double>*> ests[] = {
            {"pstar", &tr.pstar}, {"ptilde", &tr.ptilde}, {"phat", &tr.phat}};
        for (const auto& [label, values] : ests) {
          const auto s = summarize(*values, p);
          t.rows.push_back({name, n, h, p, label, s.mean, s.sd, s.q25, s.median, s.q75});
        }
      }
    }
  }
  return t;
}

} // namespace

StudyTable run_study(const StudyConfig& config) {
  if (config.reps < 2) throw DomainError("study: reps must be >= 2");
  if (config.block_size < 2) throw DomainError("study: block_size must be >= 2");
  if (config.experiment == "table1") return run_table1(config);
  if (config.experiment == "fig1") return run_fig1(config);
  if (config.experiment == "fig2") return run_fig2(config);
  if (config.experiment == "fig3") return run_fig3(config);
  throw DomainError("unknown experiment '" + config.experiment + "' (expected fig1, fig2, fig3 or table1)");
}

} // namespace concur
