#include "concur/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "concur/csv.hpp"
#include "concur/errors.hpp"
#include "concur/parallel.hpp"
#include "concur/simulate.hpp"

namespace concur {

using nlohmann::json;

// ---- Model and site files -------------------------------------------------

namespace {

CorrelationFamily parse_family(const std::string& s) {
  if (s == "exponential") return CorrelationFamily::exponential;
  if (s == "powered_exponential") return CorrelationFamily::powered_exponential;
  throw DomainError("unknown correlation family '" + s + "'");
}

std::vector<std::vector<double>> matrix_from_json(const json& j) {
  return j.get<std::vector<std::vector<double>>>();
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return in;
}

} // namespace

ModelSpec model_from_json(const json& j) {
  ModelSpec model;
  try {
    const std::string name = j.at("model").get<std::string>();
    if (name == "logistic") {
      model = Logistic{j.at("alpha").get<double>()};
    } else if (name == "max_linear") {
      model = MaxLinear{matrix_from_json(j.at("phi"))};
    } else if (name == "brown_resnick") {
      const json& v = j.contains("variogram") ? j.at("variogram") : j;
      model = BrownResnick{VariogramSpec{v.at("scale").get<double>(), v.value("exponent", 1.0)}};
    } else if (name == "extremal_t") {
      const json& c = j.contains("correlation") ? j.at("correlation") : j;
      CorrelationSpec corr;
      corr.family = parse_family(c.value("family", std::string("exponential")));
      corr.range = c.at("range").get<double>();
      corr.shape = c.value("shape", 1.0);
      model = ExtremalT{corr, j.at("nu").get<double>()};
    } else if (name == "smith") {
      model = Smith{CovarianceMatrix::from_rows(matrix_from_json(j.at("sigma")))};
    } else if (name == "extremal_process") {
      model = ExtremalProcess{};
    } else if (name == "ball_indicator") {
      model = BallIndicator{j.at("radius").get<double>(), j.value("dim", 1)};
    } else {
      throw DomainError("unknown model '" + name + "'");
    }
  } catch (const json::exception& e) {
    throw DomainError(std::string("model JSON: ") + e.what());
  }
  validate(model);
  return model;
}

json model_to_json(const ModelSpec& model) {
  json j;
  j["model"] = model_name(model);
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Logistic>) {
          j["alpha"] = m.alpha;
        } else if constexpr (std::is_same_v<T, MaxLinear>) {
          j["phi"] = m.phi;
        } else if constexpr (std::is_same_v<T, BrownResnick>) {
          j["variogram"] = {{"scale", m.variogram.scale}, {"exponent", m.variogram.exponent}};
        } else if constexpr (std::is_same_v<T, ExtremalT>) {
          j["nu"] = m.nu;
          j["correlation"] = {
              {"family", m.correlation.family == CorrelationFamily::exponential ? "exponential"
                                                                                : "powered_exponential"},
              {"range", m.correlation.range},
              {"shape", m.correlation.shape}};
        } else if constexpr (std::is_same_v<T, Smith>) {
          std::vector<std::vector<double>> rows(m.sigma.dim(), std::vector<double>(m.sigma.dim()));
          for (std::size_t a = 0; a < m.sigma.dim(); ++a) {
            for (std::size_t b = 0; b < m.sigma.dim(); ++b) rows[a][b] = m.sigma(a, b);
          }
          j["sigma"] = rows;
        } else if constexpr (std::is_same_v<T, BallIndicator>) {
          j["radius"] = m.radius;
          j["dim"] = m.dim;
        }
      },
      model);
  return j;
}

ModelSpec load_model(const std::string& path) {
  auto in = open_input(path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DomainError("'" + path + "': " + e.what());
  }
  return model_from_json(j);
}

SiteSet read_sites_csv(std::istream& in) {
  CsvReader reader(in);
  const std::size_t d = reader.header().size();
  std::vector<double> coords;
  std::vector<std::string> fields;
  while (reader.next(fields)) {
    for (std::size_t c = 0; c < d; ++c) {
      coords.push_back(parse_double(fields[c], reader.line(), "coordinate"));
    }
  }
  if (coords.empty()) throw ParseError(reader.line(), "no sites");
  return SiteSet(d, std::move(coords));
}

SiteSet load_sites(const std::string& path) {
  auto in = open_input(path);
  return read_sites_csv(in);
}

Sample read_sample_csv(std::istream& in) {
  CsvReader reader(in);
  const std::size_t k = reader.header().size();
  std::vector<double> values;
  std::vector<std::string> fields;
  std::size_t n = 0;
  while (reader.next(fields)) {
    for (std::size_t c = 0; c < k; ++c) values.push_back(parse_double(fields[c], reader.line(), "value"));
    ++n;
  }
  return Sample(n, k, std::move(values), reader.header());
}

Sample load_sample(const std::string& path) {
  auto in = open_input(path);
  return read_sample_csv(in);
}

// ---- Station records -------------------------------------------------------

bool is_leap_year(int year) { return (year % 4 == 0 && year % 100 != 0) || year % 400 == 0; }

int days_in_month(int year, int month) {
  static constexpr int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (month == 2 && is_leap_year(year)) return 29;
  return kDays[month - 1];
}

std::optional<Date> parse_date(const std::string& text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  for (std::size_t i : {0, 1, 2, 3, 5, 6, 8, 9}) {
    if (text[i] < '0' || text[i] > '9') return std::nullopt;
  }
  Date d{std::stoi(text.substr(0, 4)), std::stoi(text.substr(5, 2)), std::stoi(text.substr(8, 2))};
  if (d.month < 1 || d.month > 12 || d.day < 1 || d.day > days_in_month(d.year, d.month)) {
    return std::nullopt;
  }
  return d;
}

std::string format_date(const Date& d) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", d.year, d.month, d.day);
  return buf;
}

IngestResult ingest_csv(std::istream& in, const CsvSchema& schema) {
  CsvReader reader(in);
  const std::size_t c_station = reader.require(schema.station);
  const std::size_t c_lat = reader.require(schema.lat);
  const std::size_t c_lon = reader.require(schema.lon);
  const std::size_t c_date = reader.require(schema.date);
  const auto c_tmin = reader.find(schema.tmin);
  const auto c_tmax = reader.find(schema.tmax);
  if (!c_tmin && !c_tmax) throw ParseError(1, "neither '" + schema.tmin + "' nor '" + schema.tmax + "' present");

  auto is_missing = [&](const std::string& f) {
    return std::find(schema.missing_markers.begin(), schema.missing_markers.end(), f) !=
           schema.missing_markers.end();
  };
  auto read_value = [&](std::optional<std::size_t> col, const std::vector<std::string>& fields,
                        const char* what) -> std::optional<double> {
    if (!col || is_missing(fields[*col])) return std::nullopt;
    return parse_double(fields[*col], reader.line(), what);
  };

  IngestResult out;
  std::set<std::pair<std::string, Date>> seen;
  std::map<std::string, std::pair<std::size_t, std::size_t>> missing;  // id -> (missing, total)
  std::map<std::string, std::size_t> station_index;
  std::vector<std::string> fields;
  while (reader.next(fields)) {
    const std::size_t line = reader.line();
    StationRecord r;
    r.station_id = fields[c_station];
    if (r.station_id.empty()) throw ParseError(line, "empty station id");
    r.lat = parse_double(fields[c_lat], line, "latitude");
    r.lon = parse_double(fields[c_lon], line, "longitude");
    if (r.lat < -90.0 || r.lat > 90.0) throw ParseError(line, "latitude outside [-90, 90]");
    if (r.lon < -180.0 || r.lon > 180.0) throw ParseError(line, "longitude outside [-180, 180]");
    const auto date = parse_date(fields[c_date]);
    if (!date) throw ParseError(line, "invalid date '" + fields[c_date] + "'");
    r.date = *date;
    r.tmin = read_value(c_tmin, fields, "tmin");
    r.tmax = read_value(c_tmax, fields, "tmax");
    if (!seen.emplace(r.station_id, r.date).second) {
      throw ParseError(line, "duplicate date " + fields[c_date] + " for station " + r.station_id);
    }
    auto [it, fresh] = station_index.try_emplace(r.station_id, out.stations.size());
    if (fresh) {
      out.stations.push_back({r.station_id, r.lat, r.lon});
    } else if (out.stations[it->second].lat != r.lat || out.stations[it->second].lon != r.lon) {
      throw ParseError(line, "station " + r.station_id + " changes coordinates");
    }
    auto& m = missing[r.station_id];
    const std::size_t vars = (c_tmin ? 1 : 0) + (c_tmax ? 1 : 0);
    m.first += (c_tmin && !r.tmin ? 1 : 0) + (c_tmax && !r.tmax ? 1 : 0);
    m.second += vars;
    out.records.push_back(std::move(r));
  }
  for (const auto& s : out.stations) {
    const auto [miss, total] = missing[s.id];
    const double frac = total == 0 ? 0.0 : static_cast<double>(miss) / static_cast<double>(total);
    out.missing_fraction[s.id] = frac;
    if (frac > 0.5) {
      std::ostringstream msg;
      msg << "station " << s.id << ": " << frac * 100.0 << "% of values missing";
      out.warnings.push_back(msg.str());
    }
  }
  return out;
}

IngestResult ingest_csv_file(const std::string& path, const CsvSchema& schema) {
  auto in = open_input(path);
  return ingest_csv(in, schema);
}

void write_records_csv(std::ostream& out, const std::vector<StationRecord>& records) {
  out << "station_id,lat,lon,date,tmin,tmax\n";
  for (const auto& r : records) {
    out << csv_escape(r.station_id) << ',' << format_double(r.lat) << ',' << format_double(r.lon)
        << ',' << format_date(r.date) << ',' << (r.tmin ? format_double(*r.tmin) : "") << ','
        << (r.tmax ? format_double(*r.tmax) : "") << '\n';
  }
}

void write_stations_csv(std::ostream& out, const std::vector<Station>& stations) {
  out << "station_id,lat,lon\n";
  for (const auto& s : stations) {
    out << csv_escape(s.id) << ',' << format_double(s.lat) << ',' << format_double(s.lon) << '\n';
  }
}

std::vector<Station> read_stations_csv(std::istream& in) {
  CsvReader reader(in);
  const std::size_t c_id = reader.require("station_id");
  const std::size_t c_lat = reader.require("lat");
  const std::size_t c_lon = reader.require("lon");
  std::vector<Station> out;
  std::vector<std::string> fields;
  while (reader.next(fields)) {
    out.push_back({fields[c_id], parse_double(fields[c_lat], reader.line(), "latitude"),
                   parse_double(fields[c_lon], reader.line(), "longitude")});
  }
  return out;
}

// ---- Seasonal extremes -----------------------------------------------------

std::string to_string(Season s) {
  switch (s) {
    case Season::DJF: return "DJF";
    case Season::MAM: return "MAM";
    case Season::JJA: return "JJA";
    case Season::SON: return "SON";
  }
  return "?";
}

std::string to_string(Polarity p) { return p == Polarity::max ? "max" : "negated_min"; }

Season parse_season(const std::string& s) {
  for (Season v : {Season::DJF, Season::MAM, Season::JJA, Season::SON}) {
    if (to_string(v) == s) return v;
  }
  throw DomainError("unknown season '" + s + "' (expected DJF, MAM, JJA or SON)");
}

Polarity parse_polarity(const std::string& s) {
  if (s == "max") return Polarity::max;
  if (s == "negated_min" || s == "min") return Polarity::negated_min;
  throw DomainError("unknown polarity '" + s + "' (expected max or negated_min)");
}

std::pair<Season, int> season_of(const Date& d) {
  switch (d.month) {
    case 12: return {Season::DJF, d.year + 1};
    case 1:
    case 2: return {Season::DJF, d.year};
    case 3:
    case 4:
    case 5: return {Season::MAM, d.year};
    case 6:
    case 7:
    case 8: return {Season::JJA, d.year};
    default: return {Season::SON, d.year};
  }
}

int season_length(Season s, int year) {
  switch (s) {
    case Season::DJF: return 31 + 31 + days_in_month(year, 2);
    case Season::MAM: return 92;
    case Season::JJA: return 92;
    case Season::SON: return 91;
  }
  return 0;
}

std::vector<SeasonalExtreme> seasonal_blocks(const std::vector<StationRecord>& records, Season season,
                                             Polarity polarity, double min_coverage) {
  if (!(min_coverage >= 0.0 && min_coverage <= 1.0)) {
    throw DomainError("seasonal_blocks: min_coverage must lie in [0, 1]");
  }
  struct Acc {
    double extreme = -std::numeric_limits<double>::infinity();
    int count = 0;
  };
  std::map<std::pair<std::string, int>, Acc> blocks;
  for (const auto& r : records) {
    const auto [s, year] = season_of(r.date);
    if (s != season) continue;
    auto& acc = blocks[{r.station_id, year}];
    const auto& v = polarity == Polarity::max ? r.tmax : r.tmin;
    if (!v) continue;
    acc.extreme = std::max(acc.extreme, polarity == Polarity::max ? *v : -*v);
    ++acc.count;
  }
  std::vector<SeasonalExtreme> out;
  for (const auto& [key, acc] : blocks) {
    const double coverage = static_cast<double>(acc.count) / season_length(season, key.second);
    if (acc.count == 0 || coverage < min_coverage) continue;
    out.push_back({key.first, season, key.second, acc.extreme, coverage, polarity});
  }
  return out;
}

void write_extremes_csv(std::ostream& out, const std::vector<SeasonalExtreme>& extremes) {
  out << "station_id,season,year,value,coverage,polarity\n";
  for (const auto& e : extremes) {
    out << csv_escape(e.station_id) << ',' << to_string(e.season) << ',' << e.year << ','
        << format_double(e.value) << ',' << format_double(e.coverage) << ',' << to_string(e.polarity)
        << '\n';
  }
}

std::vector<SeasonalExtreme> read_extremes_csv(std::istream& in) {
  CsvReader reader(in);
  const std::size_t c_id = reader.require("station_id");
  const std::size_t c_year = reader.require("year");
  const std::size_t c_value = reader.require("value");
  const auto c_season = reader.find("season");
  const auto c_cov = reader.find("coverage");
  const auto c_pol = reader.find("polarity");
  std::vector<SeasonalExtreme> out;
  std::vector<std::string> fields;
  while (reader.next(fields)) {
    const std::size_t line = reader.line();
    SeasonalExtreme e;
    e.station_id = fields[c_id];
    e.year = static_cast<int>(parse_int(fields[c_year], line, "year"));
    e.value = parse_double(fields[c_value], line, "value");
    try {
      if (c_season) e.season = parse_season(fields[*c_season]);
      if (c_pol) e.polarity = parse_polarity(fields[*c_pol]);
    } catch (const DomainError& err) {
      throw ParseError(line, err.what());
    }
    e.coverage = c_cov ? parse_double(fields[*c_cov], line, "coverage") : 1.0;
    out.push_back(std::move(e));
  }
  return out;
}

// ---- Pairwise matrices -----------------------------------------------------

std::string to_string(PairMethod m) {
  switch (m) {
    case PairMethod::kendall: return "kendall";
    case PairMethod::block: return "block";
    case PairMethod::bootstrap: return "bootstrap";
    case PairMethod::unbiased: return "unbiased";
    case PairMethod::mvlog: return "mvlog";
  }
  return "?";
}

PairMethod parse_pair_method(const std::string& s) {
  for (PairMethod m : {PairMethod::kendall, PairMethod::block, PairMethod::bootstrap,
                       PairMethod::unbiased, PairMethod::mvlog}) {
    if (to_string(m) == s) return m;
  }
  throw DomainError("unknown method '" + s + "'");
}

std::size_t ConcurrenceMatrix::index_of(const std::string& id) const {
  const auto it = std::find(ids.begin(), ids.end(), id);
  if (it == ids.end()) throw DomainError("no station '" + id + "' in matrix");
  return static_cast<std::size_t>(it - ids.begin());
}

PairEstimate pair_estimate(const Sample& pair, PairMethod method, std::size_t block_size) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  switch (method) {
    case PairMethod::kendall: {
      const auto k = ecp_kendall(pair);
      return {k.estimate, k.std_error};
    }
    case PairMethod::block: return {sample_cp_block(pair, block_size), nan};
    case PairMethod::bootstrap: return {sample_cp_bootstrap(pair, block_size), nan};
    case PairMethod::unbiased: return {sample_cp_unbiased(pair, block_size).raw, nan};
    case PairMethod::mvlog: {
      const std::size_t both[] = {0, 1};
      return {ecp_multivariate_log(pair, both, false), nan};
    }
  }
  return {nan, nan};
}

ConcurrenceMatrix pairwise_matrix(const std::vector<SeasonalExtreme>& extremes,
                                  const PairwiseOptions& options) {
  ConcurrenceMatrix out;
  out.method = to_string(options.method);
  std::map<std::string, std::size_t> index;
  std::vector<std::map<int, double>> series;
  for (const auto& e : extremes) {
    auto [it, fresh] = index.try_emplace(e.station_id, out.ids.size());
    if (fresh) {
      out.ids.push_back(e.station_id);
      series.emplace_back();
    }
    if (!series[it->second].emplace(e.year, e.value).second) {
      throw DomainError("pairwise_matrix: station " + e.station_id + " has two values for year " +
                        std::to_string(e.year));
    }
  }
  const std::size_t s = out.ids.size();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  out.estimate.assign(s * s, nan);
  out.std_error.assign(s * s, nan);
  out.n_pairs.assign(s * s, 0);
  for (std::size_t i = 0; i < s; ++i) {
    out.estimate[i * s + i] = 1.0;
    out.std_error[i * s + i] = 0.0;
    out.n_pairs[i * s + i] = series[i].size();
  }

  std::vector<std::pair<std::size_t, std::size_t>> todo;
  if (options.anchor) {
    const auto it = index.find(*options.anchor);
    if (it == index.end()) throw DomainError("pairwise_matrix: unknown anchor '" + *options.anchor + "'");
    for (std::size_t j = 0; j < s; ++j) {
      if (j != it->second) todo.emplace_back(std::min(it->second, j), std::max(it->second, j));
    }
  } else {
    for (std::size_t i = 0; i < s; ++i) {
      for (std::size_t j = i + 1; j < s; ++j) todo.emplace_back(i, j);
    }
  }
  const std::size_t min_common = std::max<std::size_t>(options.min_common, 2);
  const bool needs_block = options.method == PairMethod::block ||
                           options.method == PairMethod::bootstrap ||
                           options.method == PairMethod::unbiased;
  parallel_for(todo.size(), [&](std::size_t t) {
    const auto [i, j] = todo[t];
    std::vector<double> a, b;
    for (const auto& [year, v] : series[i]) {
      const auto it = series[j].find(year);
      if (it == series[j].end()) continue;
      a.push_back(v);
      b.push_back(it->second);
    }
    if (a.size() < min_common) return;
    if (needs_block && a.size() < options.block_size) return;
    const auto est = pair_estimate(Sample::from_columns({a, b}), options.method, options.block_size);
    for (const auto& [r, c] : {std::pair{i, j}, std::pair{j, i}}) {
      out.estimate[r * s + c] = est.estimate;
      out.std_error[r * s + c] = est.std_error;
      out.n_pairs[r * s + c] = a.size();
    }
  });
  return out;
}

void write_matrix_csv(std::ostream& out, const ConcurrenceMatrix& matrix) {
  out << "id1,id2,estimate,stderr,n_pairs\n";
  const std::size_t s = matrix.size();
  for (std::size_t i = 0; i < s; ++i) {
    for (std::size_t j = i + 1; j < s; ++j) {
      if (!matrix.present(i, j)) continue;
      out << csv_escape(matrix.ids[i]) << ',' << csv_escape(matrix.ids[j]) << ','
          << format_double(matrix.at(i, j)) << ',' << format_double(matrix.std_error[i * s + j]) << ','
          << matrix.n_pairs[i * s + j] << '\n';
    }
  }
}

ConcurrenceMatrix read_matrix_csv(std::istream& in) {
  CsvReader reader(in);
  const std::size_t c1 = reader.require("id1");
  const std::size_t c2 = reader.require("id2");
  const std::size_t ce = reader.require("estimate");
  const auto cs = reader.find("stderr");
  const auto cn = reader.find("n_pairs");
  struct Entry {
    std::string a, b;
    double est, se;
    std::size_t n;
  };
  std::vector<Entry> entries;
  std::vector<std::string> ids;
  auto add_id = [&](const std::string& id) {
    if (std::find(ids.begin(), ids.end(), id) == ids.end()) ids.push_back(id);
  };
  std::vector<std::string> fields;
  while (reader.next(fields)) {
    const std::size_t line = reader.line();
    Entry e{fields[c1], fields[c2], parse_double(fields[ce], line, "estimate"),
            std::numeric_limits<double>::quiet_NaN(), 1};
    if (cs && fields[*cs] != "NA" && !fields[*cs].empty()) e.se = parse_double(fields[*cs], line, "stderr");
    if (cn) e.n = static_cast<std::size_t>(parse_int(fields[*cn], line, "n_pairs"));
    add_id(e.a);
    add_id(e.b);
    entries.push_back(std::move(e));
  }
  ConcurrenceMatrix m;
  m.ids = ids;
  m.method = "file";
  const std::size_t s = ids.size();
  m.estimate.assign(s * s, std::numeric_limits<double>::quiet_NaN());
  m.std_error.assign(s * s, std::numeric_limits<double>::quiet_NaN());
  m.n_pairs.assign(s * s, 0);
  for (std::size_t i = 0; i < s; ++i) {
    m.estimate[i * s + i] = 1.0;
    m.std_error[i * s + i] = 0.0;
    m.n_pairs[i * s + i] = 1;
  }
  for (const auto& e : entries) {
    const std::size_t i = m.index_of(e.a);
    const std::size_t j = m.index_of(e.b);
    for (const auto& [r, c] : {std::pair{i, j}, std::pair{j, i}}) {
      m.estimate[r * s + c] = e.est;
      m.std_error[r * s + c] = e.se;
      m.n_pairs[r * s + c] = std::max<std::size_t>(e.n, 1);
    }
  }
  return m;
}

// ---- Maps and cell areas ---------------------------------------------------

double haversine_km(double lat1, double lon1, double lat2, double lon2) {
  constexpr double kEarthRadiusKm = 6371.0088;
  constexpr double kRad = std::numbers::pi / 180.0;
  const double dlat = (lat2 - lat1) * kRad;
  const double dlon = (lon2 - lon1) * kRad;
  const double a = std::sin(dlat / 2) * std::sin(dlat / 2) +
                   std::cos(lat1 * kRad) * std::cos(lat2 * kRad) * std::sin(dlon / 2) * std::sin(dlon / 2);
  return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(a)));
}

namespace {

std::vector<double> axis(double lo, double hi, double step) {
  if (!(step > 0.0)) throw DomainError("grid: steps must be positive");
  std::vector<double> out;
  if (hi < lo) return out;
  const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
  for (std::size_t i = 0; i < n; ++i) out.push_back(lo + static_cast<double>(i) * step);
  return out;
}

double logit(double p) {
  constexpr double kEps = 1e-9;
  p = std::clamp(p, kEps, 1.0 - kEps);
  return std::log(p / (1.0 - p));
}

double expit(double x) { return 1.0 / (1.0 + std::exp(-x)); }

} // namespace

std::vector<GridPoint> grid_points(const GridSpec& grid) {
  std::vector<GridPoint> out;
  for (double lat : axis(grid.lat_min, grid.lat_max, grid.lat_step)) {
    for (double lon : axis(grid.lon_min, grid.lon_max, grid.lon_step)) out.push_back({lat, lon});
  }
  return out;
}

std::vector<double> grid_cell_weights(const GridSpec& grid) {
  std::vector<double> w;
  for (const auto& g : grid_points(grid)) {
    w.push_back(grid.lat_step * grid.lon_step * std::cos(g.lat * std::numbers::pi / 180.0));
  }
  return w;
}

std::vector<GridValue> grid_map(const std::vector<Station>& stations, const std::vector<double>& p,
                                const std::vector<GridPoint>& grid, double power) {
  if (grid.empty()) throw DomainError("grid_map: empty grid");
  if (stations.size() != p.size()) throw DomainError("grid_map: one value per station required");
  if (!(power > 0.0)) throw DomainError("grid_map: power must be positive");
  std::vector<std::size_t> use;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!std::isnan(p[i])) use.push_back(i);
  }
  if (use.empty()) throw DomainError("grid_map: no station values");
  std::vector<GridValue> out;
  out.reserve(grid.size());
  for (const auto& g : grid) {
    double num = 0.0, den = 0.0;
    std::optional<double> exact;
    for (std::size_t i : use) {
      const double d = haversine_km(g.lat, g.lon, stations[i].lat, stations[i].lon);
      if (d < 1e-9) {
        exact = p[i];
        break;
      }
      const double w = std::pow(d, -power);
      num += w * logit(p[i]);
      den += w;
    }
    out.push_back({g.lat, g.lon, exact ? *exact : expit(num / den)});
  }
  return out;
}

std::pair<std::vector<Station>, std::vector<double>> anchor_row(const ConcurrenceMatrix& matrix,
                                                                const std::vector<Station>& stations,
                                                                const std::string& anchor) {
  const std::size_t a = matrix.index_of(anchor);
  std::vector<Station> st;
  std::vector<double> p;
  for (const auto& s : stations) {
    const auto it = std::find(matrix.ids.begin(), matrix.ids.end(), s.id);
    if (it == matrix.ids.end()) continue;
    const auto j = static_cast<std::size_t>(it - matrix.ids.begin());
    if (!matrix.present(a, j)) continue;
    st.push_back(s);
    p.push_back(std::clamp(matrix.at(a, j), 0.0, 1.0));
  }
  if (std::none_of(st.begin(), st.end(), [&](const Station& s) { return s.id == anchor; })) {
    throw DomainError("anchor_row: anchor '" + anchor + "' has no coordinates");
  }
  return {st, p};
}

void write_grid_csv(std::ostream& out, const std::vector<GridValue>& values) {
  out << "lat,lon,value\n";
  for (const auto& v : values) {
    out << format_double(v.lat) << ',' << format_double(v.lon) << ',' << format_double(v.value) << '\n';
  }
}

std::map<int, std::string> read_strata_csv(std::istream& in) {
  CsvReader reader(in);
  const std::size_t c_year = reader.require("year");
  const std::size_t c_label = reader.require("label");
  std::map<int, std::string> out;
  std::vector<std::string> fields;
  while (reader.next(fields)) {
    const int year = static_cast<int>(parse_int(fields[c_year], reader.line(), "year"));
    if (fields[c_label].empty()) throw ParseError(reader.line(), "empty stratum label");
    if (!out.emplace(year, fields[c_label]).second) {
      throw ParseError(reader.line(), "year " + std::to_string(year) + " listed twice");
    }
  }
  return out;
}

std::map<int, std::string> period_strata(const std::vector<int>& years, const std::vector<int>& boundaries) {
  std::map<int, std::string> out;
  if (years.empty()) return out;
  std::vector<int> b = boundaries;
  std::sort(b.begin(), b.end());
  const int first = *std::min_element(years.begin(), years.end());
  const int last = *std::max_element(years.begin(), years.end());
  for (int y : years) {
    const auto seg = static_cast<std::size_t>(std::upper_bound(b.begin(), b.end(), y) - b.begin());
    const int lo = seg == 0 ? first : std::max(first, b[seg - 1]);
    const int hi = seg == b.size() ? last : std::min(last, b[seg] - 1);
    out[y] = std::to_string(lo) + "-" + std::to_string(hi);
  }
  return out;
}

std::vector<CellAreaRow> cell_area_report(const std::vector<SeasonalExtreme>& extremes,
                                          const std::vector<Station>& stations,
                                          const std::vector<std::string>& anchors,
                                          const GridSpec& grid,
                                          const std::map<int, std::string>* strata,
                                          const CellAreaOptions& options) {
  const auto points = grid_points(grid);
  if (points.empty()) throw DomainError("cell_area_report: empty grid");
  const auto weights = grid_cell_weights(grid);

  std::vector<std::string> labels;
  auto label_of = [&](int year) -> std::optional<std::string> {
    if (!strata) return std::string("all");
    const auto it = strata->find(year);
    if (it == strata->end()) return std::nullopt;
    return it->second;
  };
  for (const auto& e : extremes) {
    if (const auto l = label_of(e.year); l && std::find(labels.begin(), labels.end(), *l) == labels.end()) {
      labels.push_back(*l);
    }
  }
  std::sort(labels.begin(), labels.end());
  if (!options.base.empty() && std::find(labels.begin(), labels.end(), options.base) == labels.end()) {
    throw DomainError("cell_area_report: unknown stratum '" + options.base + "'");
  }

  std::vector<CellAreaRow> rows;
  for (const auto& label : labels) {
    std::vector<SeasonalExtreme> subset;
    std::set<int> years;
    for (const auto& e : extremes) {
      if (label_of(e.year) == label) {
        subset.push_back(e);
        years.insert(e.year);
      }
    }
    PairwiseOptions po = options.pairwise;
    po.anchor.reset();
    const auto matrix = pairwise_matrix(subset, po);
    for (const auto& anchor : anchors) {
      const auto [st, p] = anchor_row(matrix, stations, anchor);
      const auto map = grid_map(st, p, points, options.idw_power);
      std::vector<double> values(map.size());
      for (std::size_t g = 0; g < map.size(); ++g) values[g] = map[g].value;
      rows.push_back({anchor, label, integrated_cp(values, weights), 0.0, years.size()});
    }
  }
  if (!options.base.empty()) {
    for (auto& r : rows) {
      const auto base = std::find_if(rows.begin(), rows.end(), [&](const CellAreaRow& b) {
        return b.anchor == r.anchor && b.stratum == options.base;
      });
      r.anomaly = r.area - base->area;
    }
  }
  return rows;
}

CellAreaEstimate cell_area_model(const ModelSpec& model, const SiteSet& grid, std::size_t s0,
                                 const std::vector<double>& weights, std::size_t reps,
                                 const SeededRng& rng) {
  if (s0 >= grid.size()) throw DomainError("cell_area_model: s0 out of range");
  if (weights.size() != grid.size()) throw DomainError("cell_area_model: one weight per grid site required");
  if (reps < 2) throw DomainError("cell_area_model: needs at least two replicates");
  const auto labels = simulate_cell_labels(model, grid, reps, rng);
  double sum = 0.0, sq = 0.0;
  for (const auto& l : labels) {
    double area = 0.0;
    for (std::size_t g = 0; g < l.size(); ++g) {
      if (l[g] == l[s0]) area += weights[g];
    }
    sum += area;
    sq += area * area;
  }
  const auto n = static_cast<double>(reps);
  const double mean = sum / n;
  const double var = std::max(0.0, (sq - n * mean * mean) / (n - 1.0));
  return {mean, std::sqrt(var / n), reps};
}

double integrated_cp_model(const ModelSpec& model, const SiteSet& grid, std::size_t s0,
                           const std::vector<double>& weights, const McOptions& options,
                           const SeededRng& rng, bool use_mc) {
  if (s0 >= grid.size()) throw DomainError("integrated_cp_model: s0 out of range");
  std::vector<double> p(grid.size(), 1.0);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    if (g == s0) continue;
    const std::size_t idx[] = {s0, g};
    const SiteSet pair = grid.subset(idx);
    const SeededRng local = rng.substream(g);
    p[g] = use_mc ? ecp_mc(model, pair, options, local).value : ecp(model, pair, options, local).value;
  }
  return integrated_cp(p, weights);
}

} // namespace concur
