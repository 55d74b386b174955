#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "concur/models.hpp"

namespace concur {

// Scaled-down reruns of the simulation experiments:
//   fig1   RMSE of the block and permutation estimators against m and n
//          (Brown-Resnick, gamma(h) = h / 1.627 at h = 1, p = 0.5);
//   fig2   RMSE of the Kendall estimator against p, n0 and n (extremal-t);
//   fig3   estimator spread at lags 1..4 for extremal-t and Brown-Resnick h/3;
//   table1 means and SDs of p*_m, p~*_m and Kendall for extremal-t at p in
//          {0.25, 0.5, 0.75}, n0 in {1, 10, 15, inf}.
struct StudyConfig {
  std::string experiment = "table1";
  std::size_t reps = 200;
  std::uint64_t seed = 1;
  std::vector<std::size_t> sample_sizes;   // empty: experiment default
  std::vector<std::size_t> block_sizes;    // fig1
  std::vector<std::size_t> n0_list;        // 0 stands for n0 = infinity
  std::vector<double> targets{0.25, 0.5, 0.75};
  std::vector<double> lags{1.0, 2.0, 3.0, 4.0};
  std::size_t block_size = 10;
  // Draws per ecp_mc evaluation inside the lag bisection.
  std::size_t lag_draws = 200000;
};

StudyConfig study_config_from_json(const nlohmann::json& j);

struct StudyTable {
  std::string experiment;
  std::vector<std::string> columns;
  std::vector<std::vector<nlohmann::json>> rows;

  nlohmann::ordered_json to_json() const;
  void write_csv(std::ostream& out) const;
};

/// Deterministic for a fixed config. Unknown experiment -> DomainError.
StudyTable run_study(const StudyConfig& config);

/// Extremal-t (nu = 5, rho(h) = exp(-h / 10)) used by fig2, fig3 and table1.
ModelSpec study_extremal_t();

/// Lag h with p(h) = target for a pairwise model, by bisection on ecp_mc with
/// common random numbers (seeded by `seed`).
double lag_for_target(const ModelSpec& model, double target, std::size_t draws, std::uint64_t seed);
} // namespace concur
