#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "concur/concurrence.hpp"
#include "concur/estimators.hpp"
#include "concur/models.hpp"
#include "concur/rng.hpp"

namespace concur {

inline constexpr int kSchemaVersion = 1;

// ---- Model and site files -------------------------------------------------

/// {"model": "logistic", "alpha": 0.5}, {"model": "brown_resnick",
/// "variogram": {"scale": 0.333, "exponent": 1}}, {"model": "extremal_t",
/// "nu": 5, "correlation": {"family": "exponential", "range": 10}}, ...
ModelSpec model_from_json(const nlohmann::json& j);
nlohmann::json model_to_json(const ModelSpec& model);
ModelSpec load_model(const std::string& path);

/// Header row of coordinate names, then one site per row.
SiteSet read_sites_csv(std::istream& in);
SiteSet load_sites(const std::string& path);

/// Numeric CSV with a header; the header names the coordinates.
Sample read_sample_csv(std::istream& in);
Sample load_sample(const std::string& path);

// ---- Station records -------------------------------------------------------

struct Date {
  int year = 0;
  int month = 1;
  int day = 1;

  auto operator<=>(const Date&) const = default;
};

/// Parses YYYY-MM-DD; nullopt if malformed or not a calendar day.
std::optional<Date> parse_date(const std::string& text);
std::string format_date(const Date& d);
bool is_leap_year(int year);
int days_in_month(int year, int month);

struct StationRecord {
  std::string station_id;
  double lat = 0.0;
  double lon = 0.0;
  Date date;
  std::optional<double> tmin;
  std::optional<double> tmax;
};

struct CsvSchema {
  std::string station = "station_id";
  std::string lat = "lat";
  std::string lon = "lon";
  std::string date = "date";
  std::string tmin = "tmin";
  std::string tmax = "tmax";
  std::vector<std::string> missing_markers{"", "-9999"};
};

struct Station {
  std::string id;
  double lat = 0.0;
  double lon = 0.0;
};

struct IngestResult {
  std::vector<StationRecord> records;
  std::vector<Station> stations;
  // Fraction of missing tmin/tmax values per station.
  std::map<std::string, double> missing_fraction;
  std::vector<std::string> warnings;
};

/// Throws ParseError naming the line for malformed rows, out-of-range
/// coordinates and duplicate (station, date) pairs. Stations with more than
/// half of their values missing produce a warning.
IngestResult ingest_csv(std::istream& in, const CsvSchema& schema = {});
IngestResult ingest_csv_file(const std::string& path, const CsvSchema& schema = {});

void write_records_csv(std::ostream& out, const std::vector<StationRecord>& records);
void write_stations_csv(std::ostream& out, const std::vector<Station>& stations);
std::vector<Station> read_stations_csv(std::istream& in);

// ---- Seasonal extremes -----------------------------------------------------

enum class Season { DJF, MAM, JJA, SON };
enum class Polarity { max, negated_min };

std::string to_string(Season s);
std::string to_string(Polarity p);
Season parse_season(const std::string& s);
Polarity parse_polarity(const std::string& s);

struct SeasonalExtreme {
  std::string station_id;
  Season season = Season::DJF;
  int year = 0;
  double value = 0.0;
  double coverage = 0.0;
  Polarity polarity = Polarity::max;
};

/// Season of a date and the year it is attributed to; December belongs to
/// the following year's DJF.
std::pair<Season, int> season_of(const Date& d);
int season_length(Season s, int year);

/// Seasonal maximum of tmax (Polarity::max) or the negated seasonal minimum
/// of tmin (Polarity::negated_min), per station and year. Coverage is the
/// fraction of calendar days with a value; blocks below min_coverage are dropped.
std::vector<SeasonalExtreme> seasonal_blocks(const std::vector<StationRecord>& records, Season season,
                                             Polarity polarity, double min_coverage = 0.9);

void write_extremes_csv(std::ostream& out, const std::vector<SeasonalExtreme>& extremes);
std::vector<SeasonalExtreme> read_extremes_csv(std::istream& in);

// ---- Pairwise matrices -----------------------------------------------------

enum class PairMethod { kendall, block, bootstrap, unbiased, mvlog };
std::string to_string(PairMethod m);
PairMethod parse_pair_method(const std::string& s);

struct PairwiseOptions {
  PairMethod method = PairMethod::kendall;
  std::size_t block_size = 10;
  std::optional<std::string> anchor;
  std::size_t min_common = 3;
};

/// Symmetric matrix with unit diagonal; absent pairs hold NaN and n_pairs 0.
struct ConcurrenceMatrix {
  std::vector<std::string> ids;
  std::vector<double> estimate;
  std::vector<double> std_error;
  std::vector<std::size_t> n_pairs;
  std::string method;

  std::size_t size() const noexcept { return ids.size(); }
  std::size_t index_of(const std::string& id) const;
  double at(std::size_t i, std::size_t j) const { return estimate[i * ids.size() + j]; }
  bool present(std::size_t i, std::size_t j) const { return n_pairs[i * ids.size() + j] > 0; }
};

struct PairEstimate {
  double estimate = 0.0;
  double std_error = 0.0;  // NaN when the method has no standard error
};

/// Estimate for one pair of aligned series with the chosen method.
PairEstimate pair_estimate(const Sample& pair, PairMethod method, std::size_t block_size);

/// Pairwise-complete estimates over years common to both stations; with an
/// anchor only the anchor's row and column are filled.
ConcurrenceMatrix pairwise_matrix(const std::vector<SeasonalExtreme>& extremes,
                                  const PairwiseOptions& options = {});

/// Long form id1,id2,estimate,stderr,n_pairs, one row per present pair i < j.
void write_matrix_csv(std::ostream& out, const ConcurrenceMatrix& matrix);
ConcurrenceMatrix read_matrix_csv(std::istream& in);

// ---- Maps and cell areas ---------------------------------------------------

double haversine_km(double lat1, double lon1, double lat2, double lon2);

struct GridSpec {
  double lat_min = 0.0, lat_max = 0.0, lat_step = 1.0;
  double lon_min = 0.0, lon_max = 0.0, lon_step = 1.0;
};

struct GridPoint {
  double lat = 0.0;
  double lon = 0.0;
};

std::vector<GridPoint> grid_points(const GridSpec& grid);
/// cos(lat)-weighted cell areas in squared degrees (lat_step * lon_step * cos(lat)).
std::vector<double> grid_cell_weights(const GridSpec& grid);

struct GridValue {
  double lat = 0.0;
  double lon = 0.0;
  double value = 0.0;
};

/// Inverse-distance weighting of logit(p) with great-circle distances; a grid
/// point within 1e-9 km of a station takes that station's value.
std::vector<GridValue> grid_map(const std::vector<Station>& stations, const std::vector<double>& p,
                                const std::vector<GridPoint>& grid, double power = 2.0);

/// Anchor row of a matrix joined with station coordinates (anchor included, p = 1).
std::pair<std::vector<Station>, std::vector<double>> anchor_row(const ConcurrenceMatrix& matrix,
                                                                const std::vector<Station>& stations,
                                                                const std::string& anchor);

void write_grid_csv(std::ostream& out, const std::vector<GridValue>& values);

/// year -> label.
std::map<int, std::string> read_strata_csv(std::istream& in);
/// Labels years by period: boundaries {1951} give "..-1950" and "1951-..".
std::map<int, std::string> period_strata(const std::vector<int>& years, const std::vector<int>& boundaries);

struct CellAreaRow {
  std::string anchor;
  std::string stratum;
  double area = 0.0;
  double anomaly = 0.0;  // area minus the base stratum's area
  std::size_t n_years = 0;
};

struct CellAreaOptions {
  PairwiseOptions pairwise;
  double idw_power = 2.0;
  // Base stratum for anomalies; empty means no anomalies (all zero).
  std::string base;
};

/// Data mode: for each anchor and stratum, integrated concurrence probability
/// of the IDW map over the grid with cos(lat) cell weights. Without strata a
/// single stratum "all" is used. Unknown base stratum -> DomainError.
std::vector<CellAreaRow> cell_area_report(const std::vector<SeasonalExtreme>& extremes,
                                          const std::vector<Station>& stations,
                                          const std::vector<std::string>& anchors,
                                          const GridSpec& grid,
                                          const std::map<int, std::string>* strata,
                                          const CellAreaOptions& options = {});

struct CellAreaEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t reps = 0;
};

/// Model mode: mean weighted size of the simulated cell of grid site `s0`.
CellAreaEstimate cell_area_model(const ModelSpec& model, const SiteSet& grid, std::size_t s0,
                                 const std::vector<double>& weights, std::size_t reps,
                                 const SeededRng& rng);

/// Model mode through pairwise probabilities: sum_g w_g p(s0, s_g), with p
/// from ecp_mc when `use_mc`, otherwise from ecp (closed form or quadrature).
double integrated_cp_model(const ModelSpec& model, const SiteSet& grid, std::size_t s0,
                           const std::vector<double>& weights, const McOptions& options,
                           const SeededRng& rng, bool use_mc = false);

} // namespace concur
