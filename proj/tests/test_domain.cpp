#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "pooltrend/csv.hpp"
#include "pooltrend/domain.hpp"
#include "pooltrend/rng.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

using namespace pooltrend;

namespace {

std::string temp_path(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "pooltrend_test_domain";
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

}  // namespace

TEST_CASE("time grid invariants") {
  auto grid = TimeGrid::from_times({0.0, 1.5, 3.0});
  CHECK(grid.size() == 3);
  CHECK(grid.interval_span == 3.0);

  CHECK_THROWS_AS(TimeGrid::from_times({0.0, 1.0, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(TimeGrid::from_times({1.0, 0.5}), std::invalid_argument);
  CHECK_THROWS_AS(TimeGrid::from_times({-1.0, 0.5}), std::invalid_argument);
  CHECK_THROWS_AS(TimeGrid::from_times({0.0, 5.0}, 4.0), std::invalid_argument);
}

TEST_CASE("ideal layout validation") {
  auto grid = TimeGrid::from_times({0.0});

  // k=15, m=3, n=45, y=4 is a valid synthetic-study time point
  auto ok = PooledObservations::make(grid, IdealLayout{{{15, 3, 4}}});
  CHECK(ok.n_per_time == std::vector<int>{45});
  CHECK(validate_dataset(ok).pass());

  auto bad = PooledObservations::make(grid, IdealLayout{{{15, 3, 16}}});
  auto rep = validate_dataset(bad);
  CHECK_FALSE(rep.pass());
  REQUIRE(rep.issues.size() == 1);
  CHECK(rep.issues[0].message == "y exceeds k");
  CHECK(rep.issues[0].time_index == 0);
}

TEST_CASE("efficient-general layout validation") {
  auto grid = TimeGrid::from_times({0.0});

  // n=2 with m_star=3: block empty, the lone pool is the remainder
  auto ok = PooledObservations::make(grid, EfficientGeneralLayout{{{1, 3, 0, 2, 1}}});
  CHECK(ok.n_per_time == std::vector<int>{2});
  CHECK(validate_dataset(ok).pass());

  auto bad_y1 = PooledObservations::make(grid, EfficientGeneralLayout{{{1, 3, 1, 2, 0}}});
  CHECK_FALSE(validate_dataset(bad_y1).pass());

  // m_star | n: remainder absent, y2 must be 0
  auto bad_y2 = PooledObservations::make(grid, EfficientGeneralLayout{{{6, 3, 2, 0, 1}}});
  CHECK_FALSE(validate_dataset(bad_y2).pass());

  auto bad_rem = PooledObservations::make(grid, EfficientGeneralLayout{{{6, 3, 2, 3, 0}}});
  CHECK_FALSE(validate_dataset(bad_rem).pass());
}

TEST_CASE("layout conversions preserve structure") {
  auto grid = TimeGrid::from_times({0.0, 10.0});
  EfficientGeneralLayout eff{{{6, 3, 2, 2, 1}, {5, 3, 1, 0, 0}}};
  auto data = PooledObservations::make(grid, eff);
  CHECK(data.n_per_time == std::vector<int>{17, 12});
  CHECK(pools_per_time(data) == std::vector<int>{6, 4});

  auto gen = expand_to_general(data);
  REQUIRE(gen.pools.size() == 2);
  CHECK(gen.pools[0].size() == 6);
  CHECK(gen.pools[1].size() == 4);
  int n0 = 0;
  for (const auto& p : gen.pools[0]) n0 += p.size;
  CHECK(n0 == 17);

  auto rt = try_efficient(gen);
  REQUIRE(rt.has_value());
  CHECK(rt->rows[0].k == 6);
  CHECK(rt->rows[0].y1 == 2);
  CHECK(rt->rows[0].m_rem == 2);
  CHECK(rt->rows[0].y2 == 1);
  CHECK(rt->rows[1].m_rem == 0);

  // uniform pools compact all the way to ideal
  IdealLayout ideal{{{15, 3, 4}, {15, 3, 0}}};
  auto ideal_data = PooledObservations::make(grid, ideal);
  auto expanded = expand_to_general(ideal_data);
  auto back = try_ideal(expanded);
  REQUIRE(back.has_value());
  CHECK(back->rows[0].k == 15);
  CHECK(back->rows[0].y == 4);

  auto compacted = compact_layout(PooledObservations::make(grid, expanded));
  CHECK(std::holds_alternative<IdealLayout>(compacted.layout));
}

TEST_CASE("pooled csv round trips") {
  Rng rng(42);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> times;
    double t = rng.uniform() * 3.0;
    int n_times = 2 + static_cast<int>(rng.below(6));
    for (int i = 0; i < n_times; ++i) {
      times.push_back(t);
      t += 0.5 + rng.uniform() * 20.0;
    }
    double span = times.back() + rng.uniform();
    // random general layout
    GeneralLayout lay;
    for (int i = 0; i < n_times; ++i) {
      std::vector<Pool> pools;
      int k = 1 + static_cast<int>(rng.below(6));
      for (int j = 0; j < k; ++j)
        pools.push_back(Pool{1 + static_cast<int>(rng.below(9)),
                             rng.uniform() < 0.3 ? 1 : 0});
      lay.pools.push_back(pools);
    }
    auto data =
        PooledObservations::make(TimeGrid::from_times(times, span), std::move(lay));

    auto path = temp_path("general.csv");
    write_pooled_general_csv(path, data);
    auto parsed = read_pooled_general_csv(path);
    CHECK(parsed.grid.times == data.grid.times);
    CHECK(parsed.n_per_time == data.n_per_time);
    const auto& a = std::get<GeneralLayout>(data.layout);
    const auto& b = std::get<GeneralLayout>(parsed.layout);
    REQUIRE(a.pools.size() == b.pools.size());
    for (std::size_t i = 0; i < a.pools.size(); ++i) {
      REQUIRE(a.pools[i].size() == b.pools[i].size());
      for (std::size_t j = 0; j < a.pools[i].size(); ++j) {
        CHECK(a.pools[i][j].size == b.pools[i][j].size);
        CHECK(a.pools[i][j].result == b.pools[i][j].result);
      }
    }
  }
}

TEST_CASE("ideal and efficient csv round trips") {
  auto grid = TimeGrid::from_times({0.0, 41.75, 83.5});
  auto ideal = PooledObservations::make(grid, IdealLayout{{{15, 3, 4}, {15, 3, 0}, {15, 3, 2}}});
  auto p1 = temp_path("ideal.csv");
  write_pooled_ideal_csv(p1, ideal);
  auto ideal_rt = read_pooled_ideal_csv(p1);
  CHECK(ideal_rt.grid.times == ideal.grid.times);
  CHECK(std::get<IdealLayout>(ideal_rt.layout).rows[0].y == 4);

  auto eff = PooledObservations::make(
      grid, EfficientGeneralLayout{{{6, 3, 2, 2, 1}, {1, 3, 0, 2, 0}, {5, 3, 0, 0, 0}}});
  auto p2 = temp_path("eff.csv");
  write_pooled_efficient_csv(p2, eff);
  auto eff_rt = read_pooled_efficient_csv(p2);
  CHECK(eff_rt.n_per_time == eff.n_per_time);
  CHECK(std::get<EfficientGeneralLayout>(eff_rt.layout).rows[1].m_rem == 2);
}

TEST_CASE("records csv parses iso dates") {
  auto path = temp_path("records.csv");
  write_file(path, "site,date,result\nA,2015-08-24,0\nA,2015-08-27,1\nB,2016-01-01,0\n");
  auto records = read_records_csv(path);
  REQUIRE(records.size() == 3);
  CHECK(records[1].day - records[0].day == 3);
  CHECK(records[1].result == 1);
  CHECK(format_iso_date(records[2].day) == "2016-01-01");

  // round trip preserves every record
  auto path_rt = temp_path("records_rt.csv");
  write_records_csv(path_rt, records);
  auto again = read_records_csv(path_rt);
  REQUIRE(again.size() == records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    CHECK(again[i].site == records[i].site);
    CHECK(again[i].day == records[i].day);
    CHECK(again[i].result == records[i].result);
  }

  // leap-day handling
  CHECK(parse_iso_date("2020-02-29") - parse_iso_date("2020-02-28") == 1);
  CHECK_THROWS(parse_iso_date("2021-02-29"));
  CHECK_THROWS(parse_iso_date("2021-13-01"));
  CHECK_THROWS(parse_iso_date("2021/01/01"));
}

TEST_CASE("parsers reject unknown headers and bad fields with line numbers") {
  auto path = temp_path("bad_header.csv");
  write_file(path, "time,k,m,y,extra\n0,1,1,0,9\n");
  CHECK_THROWS_WITH_AS(read_pooled_ideal_csv(path),
                       doctest::Contains("unknown header"), CsvError);

  auto path2 = temp_path("bad_field.csv");
  write_file(path2, "time,k,m,y\n0,1,1,0\n10,two,1,0\n");
  try {
    read_pooled_ideal_csv(path2);
    FAIL("expected CsvError");
  } catch (const CsvError& e) {
    CHECK(e.line() == 3);
    CHECK(std::string(e.what()).find("non-numeric") != std::string::npos);
  }

  auto path3 = temp_path("bad_order.csv");
  write_file(path3, "time,k,m,y\n10,1,1,0\n0,1,1,0\n");
  CHECK_THROWS_AS(read_pooled_ideal_csv(path3), CsvError);

  auto path4 = temp_path("dup_time.csv");
  write_file(path4, "time,k,m,y\n10,1,1,0\n10,1,1,0\n");
  CHECK_THROWS_WITH_AS(read_pooled_ideal_csv(path4), doctest::Contains("duplicate"), CsvError);
}

TEST_CASE("individual csv requires m=1") {
  auto path = temp_path("ind.csv");
  write_file(path, "time,k,m,y\n0,45,1,4\n41.5,45,1,0\n");
  auto data = read_individual_csv(path);
  CHECK(data.counts[0].k == 45);
  CHECK(validate_dataset(data).pass());

  auto path2 = temp_path("ind_bad.csv");
  write_file(path2, "time,k,m,y\n0,45,3,4\n");
  CHECK_THROWS_WITH_AS(read_individual_csv(path2), doctest::Contains("m=1"), CsvError);
}

TEST_CASE("individual observations validation") {
  auto grid = TimeGrid::from_times({0.0, 1.0});
  IndividualObservations obs{grid, {{45, 4}, {45, 46}}};
  auto rep = validate_dataset(obs);
  CHECK_FALSE(rep.pass());
  CHECK(rep.issues[0].time_index == 1);
}
