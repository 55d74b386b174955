#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <vector>

#include "concur/concurrence.hpp"
#include "concur/models.hpp"
#include "concur/rng.hpp"

namespace concur {

struct SimControl {
  std::size_t max_atoms = 1000;
  // Almost-sure bound on the spectral profile; defaults to the sampler's bound.
  std::optional<double> bound_hint;
};

struct FieldRealization {
  std::vector<double> values;
  // 1-based ordinal of the Poisson atom attaining the maximum at each site.
  std::optional<std::vector<std::size_t>> hit_index;
  bool truncated = false;
  std::size_t atoms_used = 0;
};

struct Partition {
  // Blocks of 0-based site indices, ordered by their smallest member.
  std::vector<std::vector<std::size_t>> blocks;

  std::size_t size() const noexcept { return blocks.size(); }
  bool single_block() const noexcept { return blocks.size() == 1; }
};

/// eta(s) = max_i zeta_i Y_i(s) with zeta_i = 1 / (E_1 + ... + E_i). Atoms are
/// added until zeta_{i+1} * bound falls below the current minimum of eta, or
/// until max_atoms, in which case the realization is flagged as truncated.
/// Ties in the argmax go to the earlier atom.
class MaxStableSimulator {
public:
  MaxStableSimulator(const ModelSpec& model, const SiteSet& sites, SimControl control = {});

  FieldRealization draw(SeededRng& rng) const;
  double bound() const noexcept { return bound_; }
  std::size_t size() const noexcept { return sampler_.size(); }

private:
  SpectralSampler sampler_;
  SimControl control_;
  double bound_;
};

FieldRealization simulate_max_stable(const ModelSpec& model, const SiteSet& sites,
                                     const SimControl& control, SeededRng& rng);

/// `reps` realizations; replicate r uses rng.substream(r).
std::vector<FieldRealization> simulate_many(const ModelSpec& model, const SiteSet& sites,
                                            std::size_t reps, const SimControl& control,
                                            const SeededRng& rng);

/// Exact k-variate logistic vector X_j = (S / E_j)^alpha with S positive
/// alpha-stable; alpha = 1 gives independent unit Frechet coordinates.
std::vector<double> simulate_logistic_exact(double alpha, std::size_t k, SeededRng& rng);

/// Partial maxima (1/n0) max_{i <= n0} Y_i(s) / U_i built from the model's
/// raw spectral profile; not max-stable for finite n0.
class DoaSimulator {
public:
  DoaSimulator(const ModelSpec& model, const SiteSet& sites, std::size_t n0);
  std::vector<double> draw(SeededRng& rng) const;

private:
  SpectralSampler sampler_;
  std::size_t n0_;
};

std::vector<double> simulate_doa(const ModelSpec& model, const SiteSet& sites, std::size_t n0,
                                 SeededRng& rng);

/// Groups sites by equal hit index. Throws CapabilityError without indices.
Partition hitting_scenario(const FieldRealization& realization);

/// Per replicate, the hit-index label of every grid site.
std::vector<std::vector<std::size_t>> simulate_cell_labels(const ModelSpec& model,
                                                           const SiteSet& grid, std::size_t reps,
                                                           const SeededRng& rng,
                                                           const SimControl& control = {});

/// Fraction of realizations whose hitting scenario is a single block, with
/// its binomial standard error.
ConcurrenceEstimate concurrence_frequency(const ModelSpec& model, const SiteSet& sites,
                                          std::size_t reps, const SeededRng& rng,
                                          const SimControl& control = {});

/// One row per replicate: site values, then optional hit indices, then the
/// truncation flag.
void write_realizations_csv(std::ostream& out, const std::vector<FieldRealization>& reals,
                            bool include_hits);

} // namespace concur
