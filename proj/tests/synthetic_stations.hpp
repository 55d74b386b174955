#pragma once

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "concur/csv.hpp"
#include "concur/pipeline.hpp"
#include "concur/simulate.hpp"

namespace testing {

struct SyntheticNetwork {
  std::vector<concur::Station> stations;
  std::string csv;
};

// Daily summer (JJA) records whose tmax is log of a max-stable field over the
// stations' (lon, lat) coordinates and whose tmin is minus the log of an
// independent copy. About `missing_rate` of values are written as -9999.
inline SyntheticNetwork synthetic_network(const concur::ModelSpec& model,
                                          const std::vector<concur::Station>& stations, int first_year,
                                          int years, std::uint64_t seed, double missing_rate = 0.02) {
  using namespace concur;
  std::vector<double> coords;
  for (const auto& s : stations) {
    coords.push_back(s.lon);
    coords.push_back(s.lat);
  }
  const SiteSet sites(2, coords);
  MaxStableSimulator sim(model, sites);
  SeededRng rng(seed);
  std::ostringstream out;
  out << "station_id,lat,lon,date,tmin,tmax\n";
  for (int y = first_year; y < first_year + years; ++y) {
    for (int month = 6; month <= 8; ++month) {
      for (int day = 1; day <= days_in_month(y, month); ++day) {
        const auto hot = sim.draw(rng).values;
        const auto cold = sim.draw(rng).values;
        for (std::size_t i = 0; i < stations.size(); ++i) {
          const bool miss_min = rng.uniform() < missing_rate;
          const bool miss_max = rng.uniform() < missing_rate;
          out << stations[i].id << ',' << format_double(stations[i].lat) << ','
              << format_double(stations[i].lon) << ',' << format_date({y, month, day}) << ','
              << (miss_min ? std::string("-9999") : format_double(5.0 - 2.0 * std::log(cold[i]))) << ','
              << (miss_max ? std::string("-9999") : format_double(25.0 + 2.0 * std::log(hot[i]))) << '\n';
        }
      }
    }
  }
  return {stations, out.str()};
}

inline std::vector<concur::Station> synthetic_stations() {
  return {{"A", 40.0, -100.0}, {"B", 40.0, -99.5}, {"C", 40.5, -99.0}, {"D", 41.0, -98.0}, {"E", 39.0, -97.0}};
}

}  // namespace testing
