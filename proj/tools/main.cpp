#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "concur/concurrence.hpp"
#include "concur/csv.hpp"
#include "concur/errors.hpp"
#include "concur/estimators.hpp"
#include "concur/parallel.hpp"
#include "concur/pipeline.hpp"
#include "concur/simulate.hpp"
#include "concur/study.hpp"

using nlohmann::ordered_json;

namespace {

struct Globals {
  std::uint64_t seed = 1;
  unsigned threads = 0;
  std::string out;
};

// Writes to --out when given, stdout otherwise.
class Output {
public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw std::runtime_error("cannot write '" + path + "'");
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

private:
  std::ofstream file_;
};

void emit_json(const Globals& g, ordered_json j) {
  ordered_json out;
  out["schema_version"] = concur::kSchemaVersion;
  for (auto& [k, v] : j.items()) out[k] = v;
  Output o(g.out);
  o.stream() << out.dump(2) << '\n';
}

ordered_json number_or_null(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }

std::ifstream open_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return in;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// "min:max:step"
void parse_range(const std::string& text, double& lo, double& hi, double& step) {
  const auto parts = [&] {
    std::vector<std::string> v;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ':')) v.push_back(item);
    return v;
  }();
  if (parts.size() != 3) throw concur::DomainError("range '" + text + "' must be min:max:step");
  lo = std::stod(parts[0]);
  hi = std::stod(parts[1]);
  step = std::stod(parts[2]);
}

concur::GridSpec parse_grid(const std::string& lat, const std::string& lon) {
  concur::GridSpec g;
  parse_range(lat, g.lat_min, g.lat_max, g.lat_step);
  parse_range(lon, g.lon_min, g.lon_max, g.lon_step);
  return g;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Extremal concurrence probabilities: evaluation, simulation and estimation"};
  app.fallthrough();
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads (0 = all cores)")->capture_default_str();
  app.add_option("--out", g.out, "Output file (default: stdout)");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Validate a station CSV and normalize it");
  std::string ingest_input, ingest_stations, ingest_report;
  concur::CsvSchema schema;
  std::string missing_markers = ",-9999";
  ingest->add_option("--input", ingest_input, "Station CSV")->required();
  ingest->add_option("--station-col", schema.station)->capture_default_str();
  ingest->add_option("--lat-col", schema.lat)->capture_default_str();
  ingest->add_option("--lon-col", schema.lon)->capture_default_str();
  ingest->add_option("--date-col", schema.date)->capture_default_str();
  ingest->add_option("--tmin-col", schema.tmin)->capture_default_str();
  ingest->add_option("--tmax-col", schema.tmax)->capture_default_str();
  ingest->add_option("--missing", missing_markers, "Comma-separated missing-value markers")
      ->capture_default_str();
  ingest->add_option("--stations-out", ingest_stations, "Write station_id,lat,lon here");
  ingest->add_option("--report", ingest_report, "Write a JSON ingest report here");

  // blocks
  auto* blocks = app.add_subcommand("blocks", "Seasonal block extremes from ingested records");
  std::string blocks_input, season = "DJF", polarity = "max";
  double min_coverage = 0.9;
  blocks->add_option("--input", blocks_input, "Records CSV (ingest output or raw station CSV)")->required();
  blocks->add_option("--season", season, "DJF, MAM, JJA or SON")->capture_default_str();
  blocks->add_option("--polarity", polarity, "max or negated_min")->capture_default_str();
  blocks->add_option("--min-coverage", min_coverage)->capture_default_str();

  // matrix
  auto* matrix = app.add_subcommand("matrix", "Pairwise concurrence matrix from seasonal extremes");
  std::string matrix_input, matrix_method = "kendall", matrix_anchor;
  std::size_t matrix_block = 10, min_common = 3;
  matrix->add_option("--input", matrix_input, "Extremes CSV")->required();
  matrix->add_option("--method", matrix_method, "kendall, block, bootstrap, unbiased or mvlog")
      ->capture_default_str();
  matrix->add_option("--block-size", matrix_block)->capture_default_str();
  matrix->add_option("--anchor", matrix_anchor, "Only pairs involving this station");
  matrix->add_option("--min-common", min_common, "Minimum common years per pair")->capture_default_str();

  // map
  auto* map = app.add_subcommand("map", "Interpolate an anchor's concurrence row onto a lat/lon grid");
  std::string map_matrix, map_stations, map_anchor, map_lat, map_lon;
  double map_power = 2.0;
  map->add_option("--matrix", map_matrix, "Matrix CSV")->required();
  map->add_option("--stations", map_stations, "Stations CSV")->required();
  map->add_option("--anchor", map_anchor)->required();
  map->add_option("--lat", map_lat, "min:max:step")->required();
  map->add_option("--lon", map_lon, "min:max:step")->required();
  map->add_option("--power", map_power, "IDW power")->capture_default_str();

  // cells
  auto* cells = app.add_subcommand("cells", "Expected concurrence cell areas");
  std::string cells_extremes, cells_stations, cells_anchors, cells_lat, cells_lon, cells_strata,
      cells_periods, cells_base, cells_method = "kendall", cells_model, cells_sites;
  std::size_t cells_s0 = 0, cells_reps = 1000, cells_block = 10;
  double cells_step = 0.0;
  cells->add_option("--extremes", cells_extremes, "Data mode: extremes CSV");
  cells->add_option("--stations", cells_stations, "Data mode: stations CSV");
  cells->add_option("--anchors", cells_anchors, "Data mode: comma-separated anchor stations");
  cells->add_option("--lat", cells_lat, "Data mode: min:max:step");
  cells->add_option("--lon", cells_lon, "Data mode: min:max:step");
  cells->add_option("--strata", cells_strata, "Data mode: CSV year,label");
  cells->add_option("--periods", cells_periods, "Data mode: comma-separated first years of later periods");
  cells->add_option("--base", cells_base, "Base stratum for anomalies");
  cells->add_option("--method", cells_method)->capture_default_str();
  cells->add_option("--block-size", cells_block)->capture_default_str();
  cells->add_option("--model", cells_model, "Model mode: model JSON");
  cells->add_option("--sites", cells_sites, "Model mode: 1-d regular grid sites CSV");
  cells->add_option("--s0", cells_s0, "Model mode: index of the anchor site")->capture_default_str();
  cells->add_option("--reps", cells_reps, "Model mode: replicates")->capture_default_str();
  cells->add_option("--step", cells_step, "Model mode: grid spacing for rectangle weights");

  // ecp
  auto* ecp = app.add_subcommand("ecp", "Extremal concurrence probability of a model at sites");
  std::string ecp_model, ecp_sites;
  std::size_t ecp_draws = 100000;
  bool ecp_antithetic = false, ecp_exact = false;
  ecp->add_option("--model", ecp_model, "Model JSON")->required();
  ecp->add_option("--sites", ecp_sites, "Sites CSV")->required();
  ecp->add_option("--draws", ecp_draws)->capture_default_str();
  ecp->add_flag("--antithetic", ecp_antithetic, "Antithetic pairs (Brown-Resnick, Smith, extremal-t)");
  ecp->add_flag("--exact", ecp_exact, "Prefer closed form or quadrature when available");

  // estimate
  auto* estimate = app.add_subcommand("estimate", "Estimate concurrence from a data sample");
  std::string est_input, est_method = "kendall", est_pairs;
  std::size_t est_block = 10;
  bool est_jackknife = false;
  double est_jitter = 0.0;
  estimate->add_option("--input", est_input, "Numeric CSV, one column per site")->required();
  estimate->add_option("--method", est_method, "block, bootstrap, unbiased, kendall or mvlog")
      ->capture_default_str();
  estimate->add_option("--block-size", est_block)->capture_default_str();
  estimate->add_option("--pairs", est_pairs, "Comma-separated column names (default: all)");
  estimate->add_flag("--jackknife", est_jackknife, "Jackknife bias correction (mvlog)");
  estimate->add_option("--jitter", est_jitter, "Break ties with seeded uniform noise of this resolution");

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Simulate max-stable fields");
  std::string sim_model, sim_sites;
  std::size_t sim_reps = 100, sim_max_atoms = 1000, sim_doa = 0;
  bool sim_hits = false;
  simulate->add_option("--model", sim_model, "Model JSON")->required();
  simulate->add_option("--sites", sim_sites, "Sites CSV")->required();
  simulate->add_option("--reps", sim_reps)->capture_default_str();
  simulate->add_option("--max-atoms", sim_max_atoms)->capture_default_str();
  simulate->add_option("--doa", sim_doa, "Partial maxima of n0 spectral functions instead");
  simulate->add_flag("--hits", sim_hits, "Include hit-index columns");

  // plan
  auto* plan = app.add_subcommand("plan", "Block size minimizing the asymptotic MSE");
  std::size_t plan_n = 0;
  double plan_p = 0.5, plan_c = 1.0;
  int plan_r = 1;
  plan->add_option("--n", plan_n, "Sample size")->required();
  plan->add_option("--p", plan_p, "Assumed concurrence probability")->capture_default_str();
  plan->add_option("--r", plan_r, "Bias decay order")->capture_default_str();
  plan->add_option("--c-r", plan_c, "Bias constant")->capture_default_str();

  // study
  auto* study = app.add_subcommand("study", "Rerun a simulation experiment");
  std::string study_experiment = "table1", study_config, study_format = "csv";
  std::size_t study_reps = 0;
  study->add_option("--experiment", study_experiment, "fig1, fig2, fig3 or table1")->capture_default_str();
  study->add_option("--config", study_config, "JSON config overriding defaults");
  study->add_option("--reps", study_reps, "Replicates per cell");
  study->add_option("--format", study_format, "csv or json")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    concur::set_thread_count(g.threads);
    concur::SeededRng rng(g.seed);

    if (*ingest) {
      schema.missing_markers.clear();
      std::stringstream ss(missing_markers);
      std::string item;
      while (std::getline(ss, item, ',')) schema.missing_markers.push_back(item);
      if (!missing_markers.empty() && missing_markers.back() == ',') schema.missing_markers.push_back("");
      const auto result = concur::ingest_csv_file(ingest_input, schema);
      for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
      {
        Output o(g.out);
        concur::write_records_csv(o.stream(), result.records);
      }
      if (!ingest_stations.empty()) {
        std::ofstream st(ingest_stations);
        concur::write_stations_csv(st, result.stations);
      }
      if (!ingest_report.empty()) {
        ordered_json rep;
        rep["schema_version"] = concur::kSchemaVersion;
        rep["records"] = result.records.size();
        rep["stations"] = result.stations.size();
        rep["missing_fraction"] = result.missing_fraction;
        rep["warnings"] = result.warnings;
        std::ofstream r(ingest_report);
        r << rep.dump(2) << '\n';
      }
    } else if (*blocks) {
      const auto result = concur::ingest_csv_file(blocks_input);
      const auto ext = concur::seasonal_blocks(result.records, concur::parse_season(season),
                                               concur::parse_polarity(polarity), min_coverage);
      Output o(g.out);
      concur::write_extremes_csv(o.stream(), ext);
    } else if (*matrix) {
      auto in = open_file(matrix_input);
      const auto ext = concur::read_extremes_csv(in);
      concur::PairwiseOptions opt;
      opt.method = concur::parse_pair_method(matrix_method);
      opt.block_size = matrix_block;
      opt.min_common = min_common;
      if (!matrix_anchor.empty()) opt.anchor = matrix_anchor;
      const auto m = concur::pairwise_matrix(ext, opt);
      Output o(g.out);
      concur::write_matrix_csv(o.stream(), m);
    } else if (*map) {
      auto min = open_file(map_matrix);
      auto sin = open_file(map_stations);
      const auto m = concur::read_matrix_csv(min);
      const auto stations = concur::read_stations_csv(sin);
      const auto [st, p] = concur::anchor_row(m, stations, map_anchor);
      const auto values = concur::grid_map(st, p, concur::grid_points(parse_grid(map_lat, map_lon)), map_power);
      Output o(g.out);
      concur::write_grid_csv(o.stream(), values);
    } else if (*cells) {
      if (!cells_model.empty()) {
        if (cells_sites.empty()) throw concur::DomainError("cells: --sites is required with --model");
        const auto model = concur::load_model(cells_model);
        const auto grid = concur::load_sites(cells_sites);
        double step = cells_step;
        if (step <= 0.0) {
          if (grid.size() < 2 || grid.dim() != 1) throw concur::DomainError("cells: give --step for this grid");
          step = std::fabs(grid[1][0] - grid[0][0]);
        }
        const auto w = concur::rectangle_weights(grid.size(), step);
        const auto est = concur::cell_area_model(model, grid, cells_s0, w, cells_reps, rng);
        const double icp = concur::integrated_cp_model(model, grid, cells_s0, w, concur::McOptions{}, rng);
        ordered_json j;
        j["mode"] = "model";
        j["model"] = concur::model_name(model);
        j["s0"] = cells_s0;
        j["mean_cell_area"] = est.mean;
        j["stderr"] = est.std_error;
        j["reps"] = est.reps;
        j["integrated_cp"] = icp;
        emit_json(g, j);
      } else {
        if (cells_extremes.empty() || cells_stations.empty() || cells_anchors.empty() ||
            cells_lat.empty() || cells_lon.empty()) {
          throw concur::DomainError("cells: data mode needs --extremes, --stations, --anchors, --lat, --lon");
        }
        auto ein = open_file(cells_extremes);
        auto sin = open_file(cells_stations);
        const auto ext = concur::read_extremes_csv(ein);
        const auto stations = concur::read_stations_csv(sin);
        std::optional<std::map<int, std::string>> strata;
        if (!cells_strata.empty()) {
          auto tin = open_file(cells_strata);
          strata = concur::read_strata_csv(tin);
        } else if (!cells_periods.empty()) {
          std::vector<int> years, bounds;
          for (const auto& e : ext) years.push_back(e.year);
          for (const auto& b : split_list(cells_periods)) bounds.push_back(std::stoi(b));
          strata = concur::period_strata(years, bounds);
        }
        concur::CellAreaOptions opt;
        opt.pairwise.method = concur::parse_pair_method(cells_method);
        opt.pairwise.block_size = cells_block;
        opt.base = cells_base;
        const auto rows = concur::cell_area_report(ext, stations, split_list(cells_anchors),
                                                   parse_grid(cells_lat, cells_lon),
                                                   strata ? &*strata : nullptr, opt);
        Output o(g.out);
        o.stream() << "anchor,stratum,area,anomaly,n_years\n";
        for (const auto& r : rows) {
          o.stream() << r.anchor << ',' << r.stratum << ',' << concur::format_double(r.area) << ','
                     << concur::format_double(r.anomaly) << ',' << r.n_years << '\n';
        }
      }
    } else if (*ecp) {
      const auto model = concur::load_model(ecp_model);
      const auto sites = concur::load_sites(ecp_sites);
      concur::McOptions opt;
      opt.n_draws = ecp_draws;
      opt.antithetic = ecp_antithetic;
      const auto est = ecp_exact ? concur::ecp(model, sites, opt, rng) : concur::ecp_mc(model, sites, opt, rng);
      ordered_json j;
      j["value"] = est.value;
      j["stderr"] = est.std_error;
      j["method"] = est.method;
      j["n_draws"] = est.n_draws;
      emit_json(g, j);
    } else if (*estimate) {
      auto data = concur::load_sample(est_input);
      std::vector<std::size_t> cols;
      for (const auto& name : split_list(est_pairs)) cols.push_back(data.index_of(name));
      if (!cols.empty()) data = data.select(cols);
      const bool ties = concur::has_ties(data);
      if (est_jitter > 0.0) data = concur::jitter_ties(data, est_jitter, rng);
      const auto method = concur::parse_pair_method(est_method);
      ordered_json j;
      j["method"] = est_method;
      if (method == concur::PairMethod::mvlog) {
        std::vector<std::size_t> all(data.k());
        for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
        j["estimate"] = concur::ecp_multivariate_log(data, all, est_jackknife);
        j["jackknife"] = est_jackknife;
      } else if (method == concur::PairMethod::kendall) {
        const auto k = concur::ecp_kendall(data);
        j["estimate"] = k.estimate;
        j["stderr"] = number_or_null(k.std_error);
      } else if (method == concur::PairMethod::block) {
        j["estimate"] = concur::sample_cp_block(data, est_block);
      } else if (method == concur::PairMethod::bootstrap) {
        j["estimate"] = concur::sample_cp_bootstrap(data, est_block);
      } else {
        const auto u = concur::sample_cp_unbiased(data, est_block);
        j["estimate"] = u.raw;
        j["clipped"] = u.clipped;
      }
      if (method != concur::PairMethod::kendall && method != concur::PairMethod::mvlog) j["m"] = est_block;
      j["n"] = data.n();
      j["k"] = data.k();
      j["ties_detected"] = ties;
      emit_json(g, j);
    } else if (*simulate) {
      const auto model = concur::load_model(sim_model);
      const auto sites = concur::load_sites(sim_sites);
      Output o(g.out);
      if (sim_doa > 0) {
        const concur::DoaSimulator sim(model, sites, sim_doa);
        std::vector<concur::FieldRealization> reals(sim_reps);
        for (std::size_t r = 0; r < sim_reps; ++r) {
          auto local = rng.substream(r);
          reals[r].values = sim.draw(local);
        }
        concur::write_realizations_csv(o.stream(), reals, false);
      } else {
        concur::SimControl ctrl;
        ctrl.max_atoms = sim_max_atoms;
        const auto reals = concur::simulate_many(model, sites, sim_reps, ctrl, rng);
        std::size_t truncated = 0;
        for (const auto& r : reals) truncated += r.truncated;
        if (truncated > 0) {
          std::cerr << "warning: " << truncated << " of " << sim_reps
                    << " realizations hit --max-atoms before the stopping rule was met\n";
        }
        concur::write_realizations_csv(o.stream(), reals, sim_hits);
      }
    } else if (*plan) {
      const auto bp = concur::optimal_block_size(plan_n, plan_p, plan_r, plan_c);
      ordered_json j;
      j["m"] = bp.m;
      j["n"] = plan_n;
      j["assumed_r"] = bp.assumed_r;
      j["assumed_c_r"] = bp.assumed_c_r;
      j["assumed_p"] = bp.assumed_p;
      j["predicted_mse"] = bp.predicted_mse;
      emit_json(g, j);
    } else if (*study) {
      concur::StudyConfig cfg;
      if (!study_config.empty()) {
        auto in = open_file(study_config);
        cfg = concur::study_config_from_json(nlohmann::json::parse(in));
      } else {
        cfg.experiment = study_experiment;
      }
      if (study->count("--experiment")) cfg.experiment = study_experiment;
      if (study_reps > 0) cfg.reps = study_reps;
      if (app.count("--seed")) cfg.seed = g.seed;
      const auto table = concur::run_study(cfg);
      Output o(g.out);
      if (study_format == "json") {
        o.stream() << table.to_json().dump(2) << '\n';
      } else if (study_format == "csv") {
        table.write_csv(o.stream());
      } else {
        throw concur::DomainError("unknown format '" + study_format + "'");
      }
    }
  } catch (const concur::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const concur::DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const concur::CapabilityError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
