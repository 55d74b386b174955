#include "concur/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>

#include "concur/csv.hpp"
#include "concur/errors.hpp"
#include "concur/parallel.hpp"
#include "concur/specfun.hpp"

namespace concur {

MaxStableSimulator::MaxStableSimulator(const ModelSpec& model, const SiteSet& sites,
                                       SimControl control)
    : sampler_(model, sites), control_(control), bound_(sampler_.bound()) {
  if (control_.max_atoms < 1) throw DomainError("SimControl: max_atoms must be >= 1");
  if (control_.bound_hint) {
    if (!(*control_.bound_hint > 0.0)) throw DomainError("SimControl: bound_hint must be positive");
    bound_ = *control_.bound_hint;
  }
}

FieldRealization MaxStableSimulator::draw(SeededRng& rng) const {
  const std::size_t k = sampler_.size();
  FieldRealization out;
  out.values.assign(k, 0.0);
  std::vector<std::size_t> hits(k, 0);
  std::vector<double> y(k);
  double gamma_sum = 0.0;
  double floor = 0.0;  // current minimum of eta over the sites
  bool stopped = false;
  for (std::size_t i = 1; i <= control_.max_atoms; ++i) {
    gamma_sum += rng.exponential();
    const double zeta = 1.0 / gamma_sum;
    if (zeta * bound_ < floor) {
      stopped = true;
      break;
    }
    sampler_.draw_bounded(rng, y);
    for (std::size_t j = 0; j < k; ++j) {
      const double v = zeta * y[j];
      if (v > out.values[j]) {
        out.values[j] = v;
        hits[j] = i;
      }
    }
    floor = *std::min_element(out.values.begin(), out.values.end());
    out.atoms_used = i;
  }
  out.truncated = !stopped;
  out.hit_index = std::move(hits);
  return out;
}

FieldRealization simulate_max_stable(const ModelSpec& model, const SiteSet& sites,
                                     const SimControl& control, SeededRng& rng) {
  return MaxStableSimulator(model, sites, control).draw(rng);
}

std::vector<FieldRealization> simulate_many(const ModelSpec& model, const SiteSet& sites,
                                            std::size_t reps, const SimControl& control,
                                            const SeededRng& rng) {
  const MaxStableSimulator sim(model, sites, control);
  std::vector<FieldRealization> out(reps);
  parallel_for(reps, [&](std::size_t r) {
    SeededRng local = rng.substream(r);
    out[r] = sim.draw(local);
  });
  return out;
}

std::vector<double> simulate_logistic_exact(double alpha, std::size_t k, SeededRng& rng) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("simulate_logistic_exact: alpha must lie in (0, 1]");
  if (k < 1) throw DomainError("simulate_logistic_exact: k must be positive");
  std::vector<double> x(k);
  if (alpha == 1.0) {
    for (auto& v : x) v = 1.0 / rng.exponential();
    return x;
  }
  const double s = sample_positive_stable(alpha, rng);
  for (auto& v : x) v = std::pow(s / rng.exponential(), alpha);
  return x;
}

DoaSimulator::DoaSimulator(const ModelSpec& model, const SiteSet& sites, std::size_t n0)
    : sampler_(model, sites), n0_(n0) {
  if (n0 < 1) throw DomainError("simulate_doa: n0 must be positive");
  if (std::holds_alternative<ExtremalProcess>(model)) {
    throw CapabilityError("simulate_doa: extremal_process has no raw spectral profile");
  }
}

std::vector<double> DoaSimulator::draw(SeededRng& rng) const {
  const std::size_t k = sampler_.size();
  std::vector<double> out(k, 0.0);
  std::vector<double> y(k);
  for (std::size_t i = 0; i < n0_; ++i) {
    const double inv_u = 1.0 / rng.uniform_open();
    sampler_.draw(rng, y);
    for (std::size_t j = 0; j < k; ++j) out[j] = std::max(out[j], inv_u * y[j]);
  }
  const double scale = 1.0 / static_cast<double>(n0_);
  for (auto& v : out) v *= scale;
  return out;
}

std::vector<double> simulate_doa(const ModelSpec& model, const SiteSet& sites, std::size_t n0,
                                 SeededRng& rng) {
  return DoaSimulator(model, sites, n0).draw(rng);
}

Partition hitting_scenario(const FieldRealization& realization) {
  if (!realization.hit_index) {
    throw CapabilityError("hitting_scenario: realization carries no hit indices");
  }
  const auto& hits = *realization.hit_index;
  std::map<std::size_t, std::size_t> block_of;
  Partition p;
  for (std::size_t j = 0; j < hits.size(); ++j) {
    auto [it, fresh] = block_of.try_emplace(hits[j], p.blocks.size());
    if (fresh) p.blocks.emplace_back();
    p.blocks[it->second].push_back(j);
  }
  return p;
}

std::vector<std::vector<std::size_t>> simulate_cell_labels(const ModelSpec& model,
                                                           const SiteSet& grid, std::size_t reps,
                                                           const SeededRng& rng,
                                                           const SimControl& control) {
  const MaxStableSimulator sim(model, grid, control);
  std::vector<std::vector<std::size_t>> labels(reps);
  parallel_for(reps, [&](std::size_t r) {
    SeededRng local = rng.substream(r);
    labels[r] = *sim.draw(local).hit_index;
  });
  return labels;
}

ConcurrenceEstimate concurrence_frequency(const ModelSpec& model, const SiteSet& sites,
                                          std::size_t reps, const SeededRng& rng,
                                          const SimControl& control) {
  if (reps == 0) throw DomainError("concurrence_frequency: reps must be positive");
  const MaxStableSimulator sim(model, sites, control);
  std::vector<unsigned char> hit(reps);
  parallel_for(reps, [&](std::size_t r) {
    SeededRng local = rng.substream(r);
    const auto h = *sim.draw(local).hit_index;
    hit[r] = std::all_of(h.begin(), h.end(), [&](std::size_t v) { return v == h.front(); });
  });
  const auto n = static_cast<double>(reps);
  const double p = static_cast<double>(std::count(hit.begin(), hit.end(), 1)) / n;
  return {p, std::sqrt(p * (1.0 - p) / n), reps, "simulation_frequency"};
}

void write_realizations_csv(std::ostream& out, const std::vector<FieldRealization>& reals,
                            bool include_hits) {
  const std::size_t k = reals.empty() ? 0 : reals.front().values.size();
  out << "replicate";
  for (std::size_t j = 0; j < k; ++j) out << ",s" << j + 1;
  if (include_hits) {
    for (std::size_t j = 0; j < k; ++j) out << ",hit_s" << j + 1;
  }
  out << ",truncated\n";
  out.precision(17);
  for (std::size_t r = 0; r < reals.size(); ++r) {
    out << r;
    for (double v : reals[r].values) out << ',' << format_double(v);
    if (include_hits) {
      if (!reals[r].hit_index) throw CapabilityError("write_realizations_csv: no hit indices");
      for (std::size_t h : *reals[r].hit_index) out << ',' << h;
    }
    out << ',' << (reals[r].truncated ? 1 : 0) << '\n';
  }
}

} // namespace concur
