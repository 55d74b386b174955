#include <doctest.h>

#include <cmath>
#include <sstream>

#include "concur/concurrence.hpp"
#include "concur/csv.hpp"
#include "concur/errors.hpp"
#include "concur/estimators.hpp"
#include "concur/pipeline.hpp"
#include "synthetic_stations.hpp"
#include "test_support.hpp"

using namespace concur;

namespace {

std::vector<StationRecord> full_year(const std::string& id, int year, double base) {
  std::vector<StationRecord> out;
  for (int month = 1; month <= 12; ++month)
    for (int day = 1; day <= days_in_month(year, month); ++day) {
      StationRecord r;
      r.station_id = id;
      r.date = {year, month, day};
      r.tmax = base + month + day / 100.0;
      r.tmin = base - month - day / 100.0;
      out.push_back(r);
    }
  return out;
}

std::vector<SeasonalExtreme> series(const std::string& id, const std::vector<double>& v, int first = 1950) {
  std::vector<SeasonalExtreme> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back({id, Season::JJA, first + int(i), v[i], 1.0, Polarity::max});
  return out;
}

}  // namespace

TEST_SUITE("pipeline") {
  TEST_CASE("model JSON round trip") {
    const std::vector<ModelSpec> models{Logistic{0.4},
                                        MaxLinear{{{0.5, 0.2}, {0.5, 0.8}}},
                                        BrownResnick{{0.333, 1.5}},
                                        ExtremalT{{CorrelationFamily::powered_exponential, 10.0, 1.5}, 5.0},
                                        Smith{CovarianceMatrix(2, {1.0, 0.2, 0.2, 2.0})},
                                        ExtremalProcess{},
                                        BallIndicator{2.0, 3}};
    for (const auto& m : models) {
      const auto j = model_to_json(m);
      CHECK(model_to_json(model_from_json(j)) == j);
    }
    const auto flat = model_from_json(nlohmann::json::parse(R"({"model":"brown_resnick","scale":0.5})"));
    CHECK(std::get<BrownResnick>(flat).variogram.scale == 0.5);
    CHECK_THROWS_AS(model_from_json(nlohmann::json::parse(R"({"model":"nope"})")), DomainError);
    CHECK_THROWS_AS(model_from_json(nlohmann::json::parse(R"({"model":"logistic"})")), DomainError);
    CHECK_THROWS_AS(model_from_json(nlohmann::json::parse(R"({"model":"logistic","alpha":2})")), DomainError);
  }

  TEST_CASE("site and sample files") {
    std::istringstream sites("x,y\n0,0\n1,0.5\n");
    const auto s = read_sites_csv(sites);
    CHECK(s.size() == 2);
    CHECK(s.dim() == 2);
    std::istringstream bad("x\n0\nabc\n");
    CHECK_THROWS_AS(read_sites_csv(bad), ParseError);
    std::istringstream sample("a,b\n1,2\n3,4\n5,6\n");
    const auto d = read_sample_csv(sample);
    CHECK(d.n() == 3);
    CHECK(d.names() == std::vector<std::string>{"a", "b"});
  }

  TEST_CASE("csv helpers") {
    CHECK(split_csv_line("a,\"b,c\",\"d\"\"e\"") == std::vector<std::string>{"a", "b,c", "d\"e"});
    CHECK(csv_escape("x,y") == "\"x,y\"");
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(NAN) == "NA");
    CHECK(parse_double("2.5", 1, "v") == 2.5);
    CHECK_THROWS_AS(parse_double("2.5x", 4, "v"), ParseError);
    CHECK_THROWS_AS(parse_int("1.5", 4, "v"), ParseError);
  }

  TEST_CASE("dates and seasons") {
    CHECK(parse_date("2000-02-29").has_value());
    CHECK_FALSE(parse_date("1900-02-29").has_value());
    CHECK_FALSE(parse_date("2001-13-01").has_value());
    CHECK_FALSE(parse_date("2001-1-01").has_value());
    CHECK(format_date({1999, 3, 7}) == "1999-03-07");
    CHECK(season_of({1999, 12, 5}) == std::pair{Season::DJF, 2000});
    CHECK(season_of({2000, 2, 5}) == std::pair{Season::DJF, 2000});
    CHECK(season_of({2000, 9, 1}) == std::pair{Season::SON, 2000});
    CHECK(season_length(Season::DJF, 2000) == 91);
    CHECK(season_length(Season::DJF, 2001) == 90);
    CHECK(parse_season("JJA") == Season::JJA);
    CHECK_THROWS_AS(parse_season("summer"), DomainError);
  }

  TEST_CASE("ingest") {
    std::istringstream ok(
        "station_id,lat,lon,date,tmin,tmax\n"
        "S1,40.0,-100.0,2000-01-01,-5.0,3.0\n"
        "S1,40.0,-100.0,2000-01-02,-9999,4.0\n"
        "S2,41.0,-101.0,2000-01-01,-6.0,\n");
    const auto r = ingest_csv(ok);
    REQUIRE(r.records.size() == 3);
    CHECK_FALSE(r.records[1].tmin.has_value());
    CHECK(*r.records[1].tmax == 4.0);
    CHECK(r.stations.size() == 2);
    CHECK(r.missing_fraction.at("S1") == doctest::Approx(0.25));
    CHECK(r.warnings.empty());

    std::istringstream sparse("station_id,lat,lon,date,tmin,tmax\nS1,0,0,2000-01-01,-9999,-9999\n");
    CHECK(ingest_csv(sparse).warnings.size() == 1);

    auto fails_on_line = [](const std::string& text, std::size_t line) {
      std::istringstream in(text);
      try {
        ingest_csv(in);
      } catch (const ParseError& e) {
        return e.line() == line;
      }
      return false;
    };
    const std::string head = "station_id,lat,lon,date,tmin,tmax\n";
    CHECK(fails_on_line(head + "S1,40,-100,2000-01-01,1,2\nS1,40,-100,2000-02-30,1,2\n", 3));
    CHECK(fails_on_line(head + "S1,95,-100,2000-01-01,1,2\n", 2));
    CHECK(fails_on_line(head + "S1,40,-190,2000-01-01,1,2\n", 2));
    CHECK(fails_on_line(head + "S1,40,-100,2000-01-01,1,2\nS1,40,-100,2000-01-01,1,2\n", 3));
    CHECK(fails_on_line(head + "S1,40,-100,2000-01-01,x,2\n", 2));
    CHECK(fails_on_line(head + "S1,40,-100,2000-01-01,1\n", 2));
    CHECK(fails_on_line(head + "S1,40,-100,2000-01-01,1,2\nS1,41,-100,2000-01-02,1,2\n", 3));
    CHECK(fails_on_line("id,lat,lon,date,tmin,tmax\n", 1));

    CsvSchema schema;
    schema.station = "id";
    schema.missing_markers = {"NA"};
    std::istringstream custom("id,lat,lon,date,tmax\nX,1,2,2000-01-01,NA\n");
    const auto c = ingest_csv(custom, schema);
    CHECK_FALSE(c.records[0].tmax.has_value());
  }

  TEST_CASE("records and stations round trip") {
    std::istringstream in("station_id,lat,lon,date,tmin,tmax\nS1,40.5,-100.25,2000-01-01,-5.5,\n");
    const auto r = ingest_csv(in);
    std::ostringstream out;
    write_records_csv(out, r.records);
    std::istringstream again(out.str());
    const auto r2 = ingest_csv(again);
    CHECK(r2.records[0].lat == 40.5);
    CHECK(*r2.records[0].tmin == -5.5);
    CHECK_FALSE(r2.records[0].tmax.has_value());
    std::ostringstream st;
    write_stations_csv(st, r.stations);
    std::istringstream st_in(st.str());
    const auto stations = read_stations_csv(st_in);
    CHECK(stations[0].id == "S1");
    CHECK(stations[0].lon == -100.25);
  }

  TEST_CASE("seasonal blocks") {
    auto recs = full_year("S", 2001, 10.0);
    auto prev = full_year("S", 2000, 10.0);
    recs.insert(recs.begin(), prev.begin(), prev.end());
    for (Season s : {Season::MAM, Season::JJA, Season::SON}) {
      const auto b = seasonal_blocks(recs, s, Polarity::max);
      CHECK(b.size() == 2);
      CHECK(b[0].coverage == 1.0);
    }
    const auto jja = seasonal_blocks(recs, Season::JJA, Polarity::max);
    CHECK(jja[0].value == doctest::Approx(10.0 + 8 + 0.31));
    const auto cold = seasonal_blocks(recs, Season::JJA, Polarity::negated_min);
    CHECK(cold[0].value == doctest::Approx(-(10.0 - 8 - 0.31)));
    CHECK(cold[0].polarity == Polarity::negated_min);
    // DJF 2001 = Dec 2000 + Jan/Feb 2001; DJF 2000 and 2002 are partial.
    const auto djf = seasonal_blocks(recs, Season::DJF, Polarity::max);
    REQUIRE(djf.size() == 1);
    CHECK(djf[0].year == 2001);
    CHECK(djf[0].value == doctest::Approx(10.0 + 12 + 0.31));

    // 80% coverage is dropped at 0.9 and kept at 0.75.
    std::vector<StationRecord> partial;
    for (const auto& r : full_year("P", 2001, 0.0))
      if (season_of(r.date).first == Season::JJA) partial.push_back(r);
    for (std::size_t i = 0; i < partial.size(); ++i)
      if (i % 5 == 0) partial[i].tmax.reset();
    CHECK(seasonal_blocks(partial, Season::JJA, Polarity::max, 0.9).empty());
    const auto kept = seasonal_blocks(partial, Season::JJA, Polarity::max, 0.75);
    REQUIRE(kept.size() == 1);
    CHECK(kept[0].coverage == doctest::Approx(73.0 / 92.0));
  }

  TEST_CASE("extremes file round trip") {
    const auto e = series("S1", {1.5, 2.5, -3.0});
    std::ostringstream out;
    write_extremes_csv(out, e);
    CHECK(out.str().rfind("station_id,season,year,value,coverage,polarity\n", 0) == 0);
    std::istringstream in(out.str());
    const auto back = read_extremes_csv(in);
    REQUIRE(back.size() == 3);
    CHECK(back[2].value == -3.0);
    CHECK(back[1].year == 1951);
  }

  TEST_CASE("pairwise matrix structure") {
    SeededRng rng(1);
    std::vector<SeasonalExtreme> all;
    std::vector<double> base(40);
    for (auto& v : base) v = rng.normal();
    for (const char* id : {"A", "B", "C", "D"}) {
      std::vector<double> v(40);
      for (std::size_t i = 0; i < 40; ++i) v[i] = base[i] + 0.5 * rng.normal();
      const auto s = series(id, v);
      all.insert(all.end(), s.begin(), s.end());
    }
    const auto same = series("Z", base);
    all.insert(all.end(), same.begin(), same.end());
    const auto copy = series("Y", base);
    all.insert(all.end(), copy.begin(), copy.end());

    for (auto method : {PairMethod::kendall, PairMethod::block, PairMethod::bootstrap, PairMethod::mvlog}) {
      PairwiseOptions opt;
      opt.method = method;
      opt.block_size = 5;
      const auto m = pairwise_matrix(all, opt);
      REQUIRE(m.size() == 6);
      for (std::size_t i = 0; i < 6; ++i) {
        CHECK(m.at(i, i) == 1.0);
        for (std::size_t j = 0; j < 6; ++j) {
          CHECK(m.present(i, j));
          CHECK(m.at(i, j) == m.at(j, i));
        }
      }
      if (method != PairMethod::mvlog) CHECK(m.at(m.index_of("Y"), m.index_of("Z")) == doctest::Approx(1.0));
    }

    PairwiseOptions anchored;
    anchored.anchor = "A";
    const auto sub = [&] {
      std::vector<SeasonalExtreme> four;
      for (const auto& e : all)
        if (e.station_id < "E") four.push_back(e);
      return pairwise_matrix(four, anchored);
    }();
    std::size_t filled = 0;
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = i + 1; j < 4; ++j) filled += sub.present(i, j);
    CHECK(filled == 3);
    anchored.anchor = "nope";
    CHECK_THROWS_AS(pairwise_matrix(all, anchored), DomainError);
  }

  TEST_CASE("pairs with too few common years are absent") {
    auto a = series("A", {1, 2, 3, 4, 5}, 1950);
    const auto b = series("B", {1, 2, 3, 4, 5}, 1953);
    a.insert(a.end(), b.begin(), b.end());
    const auto m = pairwise_matrix(a);
    CHECK_FALSE(m.present(0, 1));
    CHECK(std::isnan(m.at(0, 1)));
    std::ostringstream out;
    write_matrix_csv(out, m);
    CHECK(out.str() == "id1,id2,estimate,stderr,n_pairs\n");
  }

  TEST_CASE("matrix file round trip") {
    SeededRng rng(2);
    std::vector<SeasonalExtreme> all;
    for (const char* id : {"A", "B", "C"}) {
      std::vector<double> v(30);
      for (auto& x : v) x = rng.normal();
      const auto s = series(id, v);
      all.insert(all.end(), s.begin(), s.end());
    }
    const auto m = pairwise_matrix(all);
    std::ostringstream out;
    write_matrix_csv(out, m);
    std::istringstream in(out.str());
    const auto back = read_matrix_csv(in);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j) {
        CHECK(back.at(i, j) == m.at(i, j));
        CHECK(back.std_error[i * 3 + j] == m.std_error[i * 3 + j]);
      }
  }

  TEST_CASE("polarity flip is a mirror of the comparisons") {
    SeededRng rng(3);
    std::vector<StationRecord> recs;
    for (int y = 1950; y < 1990; ++y)
      for (int d = 1; d <= 30; ++d) {
        const double common = rng.normal();
        for (const char* id : {"A", "B"}) {
          StationRecord r;
          r.station_id = id;
          r.date = {y, 6, d};
          r.tmin = common + rng.normal();
          recs.push_back(r);
        }
      }
    const auto neg = seasonal_blocks(recs, Season::JJA, Polarity::negated_min, 0.3);
    // Direct minima, analysed with reversed comparisons.
    std::map<std::string, std::map<int, double>> mins;
    for (const auto& r : recs) {
      auto [it, fresh] = mins[r.station_id].try_emplace(r.date.year, *r.tmin);
      if (!fresh) it->second = std::min(it->second, *r.tmin);
    }
    std::vector<double> a, b;
    for (const auto& [y, v] : mins["A"]) {
      a.push_back(v);
      b.push_back(mins["B"][y]);
    }
    for (const auto& e : neg) CHECK(e.value == -mins[e.station_id][e.year]);

    // Block estimator with ">" in place of "<".
    const std::size_t m = 5;
    double direct = 0.0;
    const std::size_t blocks = a.size() / m;
    for (std::size_t blk = 0; blk < blocks; ++blk) {
      bool any = false;
      for (std::size_t i = blk * m; i < (blk + 1) * m; ++i) {
        bool all = true;
        for (std::size_t l = blk * m; l < (blk + 1) * m; ++l)
          if (l != i && !(a[l] > a[i] && b[l] > b[i])) all = false;
        any = any || all;
      }
      direct += any;
    }
    PairwiseOptions opt;
    opt.method = PairMethod::block;
    opt.block_size = m;
    const auto mat = pairwise_matrix(neg, opt);
    CHECK(mat.at(0, 1) == doctest::Approx(direct / blocks));
    // Kendall's tau is unchanged by flipping both coordinates.
    opt.method = PairMethod::kendall;
    CHECK(pairwise_matrix(neg, opt).at(0, 1) == doctest::Approx(kendall_tau(a, b)));
  }

  TEST_CASE("grid map") {
    const std::vector<Station> two{{"A", 0.0, 0.0}, {"B", 0.0, 2.0}};
    const std::vector<GridPoint> mid{{0.0, 1.0}, {0.0, 0.0}};
    const auto v = grid_map(two, {0.4, 0.8}, mid);
    const double logit_mid = 0.5 * (std::log(0.4 / 0.6) + std::log(0.8 / 0.2));
    CHECK(v[0].value == doctest::Approx(1.0 / (1.0 + std::exp(-logit_mid))));
    CHECK(v[0].value == doctest::Approx(0.6202).epsilon(1e-4));
    CHECK(v[1].value == 0.4);

    GridSpec g{30.0, 40.0, 2.0, -100.0, -90.0, 2.0};
    const auto pts = grid_points(g);
    CHECK(pts.size() == 36);
    const std::vector<Station> three{{"A", 31.0, -95.0}, {"B", 35.0, -91.0}, {"C", 39.0, -99.0}};
    for (const auto& gv : grid_map(three, {0.6, 0.6, 0.6}, pts)) CHECK(gv.value == doctest::Approx(0.6));
    CHECK_THROWS_AS(grid_map(three, {0.6, 0.6, 0.6}, {}), DomainError);
    const auto w = grid_cell_weights(g);
    CHECK(w[0] == doctest::Approx(4.0 * std::cos(30.0 * std::numbers::pi / 180.0)));
    CHECK(haversine_km(0, 0, 0, 1) == doctest::Approx(111.195).epsilon(1e-4));
    std::ostringstream out;
    write_grid_csv(out, v);
    CHECK(out.str().rfind("lat,lon,value\n", 0) == 0);
  }

  TEST_CASE("strata") {
    std::istringstream in("year,label\n1990,nino\n1991,nina\n");
    const auto s = read_strata_csv(in);
    CHECK(s.at(1991) == "nina");
    std::istringstream dup("year,label\n1990,a\n1990,b\n");
    CHECK_THROWS_AS(read_strata_csv(dup), ParseError);
    const auto p = period_strata({1910, 1930, 1950, 1951, 2010}, {1951});
    CHECK(p.at(1910) == "1910-1950");
    CHECK(p.at(1950) == "1910-1950");
    CHECK(p.at(1951) == "1951-2010");
  }

  TEST_CASE("cell area report") {
    std::vector<SeasonalExtreme> all;
    std::vector<double> v(40);
    SeededRng rng(4);
    for (auto& x : v) x = rng.normal();
    for (const char* id : {"A", "B", "C"}) {
      const auto s = series(id, v, 1950);
      all.insert(all.end(), s.begin(), s.end());
    }
    const std::vector<Station> st{{"A", 0.0, 0.0}, {"B", 0.0, 1.0}, {"C", 1.0, 0.0}};
    // Single point at the equator with unit steps: unit area.
    const GridSpec unit{0.0, 0.0, 1.0, 0.5, 0.5, 1.0};
    const auto rows = cell_area_report(all, st, {"A"}, unit, nullptr);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].area == doctest::Approx(1.0));
    CHECK(rows[0].stratum == "all");

    // Two strata with identical data have zero anomaly.
    std::vector<SeasonalExtreme> twice = all;
    for (auto e : all) {
      e.year += 100;
      twice.push_back(e);
    }
    std::map<int, std::string> strata;
    for (int y = 1950; y < 1990; ++y) {
      strata[y] = "early";
      strata[y + 100] = "late";
    }
    CellAreaOptions opt;
    opt.base = "early";
    const GridSpec g{-1.0, 2.0, 0.5, -1.0, 2.0, 0.5};
    for (auto method : {PairMethod::kendall, PairMethod::bootstrap}) {
      opt.pairwise.method = method;
      for (const auto& r : cell_area_report(twice, st, {"A", "B"}, g, &strata, opt)) CHECK(r.anomaly == 0.0);
    }
    opt.base = "middle";
    CHECK_THROWS_AS(cell_area_report(twice, st, {"A"}, g, &strata, opt), DomainError);
  }

  TEST_CASE("model-mode cell area equals integrated concurrence") {
    const auto grid = SiteSet::regular_grid(0.0, 10.0, 0.5);
    const auto w = rectangle_weights(grid.size(), 0.5);
    const BrownResnick br{{1.0 / 3.0, 1.0}};
    const auto cell = cell_area_model(br, grid, 10, w, 2000, SeededRng(5));
    const double icp = integrated_cp_model(br, grid, 10, w, {}, SeededRng(6));
    CHECK(std::fabs(cell.mean - icp) < 3.0 * cell.std_error);
  }

  TEST_CASE("end to end on synthetic stations is deterministic") {
    auto run = [] {
      const auto net = testing::synthetic_network(Logistic{0.5}, testing::synthetic_stations(), 1980, 12, 7);
      std::istringstream in(net.csv);
      const auto ing = ingest_csv(in);
      const auto ext = seasonal_blocks(ing.records, Season::JJA, Polarity::max);
      std::ostringstream out;
      write_extremes_csv(out, ext);
      write_matrix_csv(out, pairwise_matrix(ext));
      return out.str();
    };
    const auto a = run();
    CHECK(a == run());
    CHECK(a.size() > 100);
  }
}
