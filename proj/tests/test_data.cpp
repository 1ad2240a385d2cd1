#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "raildelay/data.hpp"

using namespace raildelay;

namespace {

LogRecord row(const std::string& id, const std::string& station, int seq, StopRole role,
              std::int64_t sched, std::optional<std::int64_t> actual = std::nullopt) {
  LogRecord r;
  r.train_id = id;
  r.train_type = "IC";
  r.station_id = station;
  r.sequence_index = seq;
  r.role = role;
  r.scheduled_time = sched;
  r.actual_time = actual;
  return r;
}

OperationalLog two_train_timetable() {
  OperationalLog tt;
  // leader and follower on the same track, follower scheduled 60 s behind
  tt.records.push_back(row("L1", "A", 1, StopRole::Departure, 1000));
  tt.records.push_back(row("L1", "B", 2, StopRole::Passage, 1240));
  tt.records.push_back(row("L1", "C", 3, StopRole::Arrival, 1480));
  tt.records.push_back(row("F1", "A", 1, StopRole::Departure, 1060));
  tt.records.push_back(row("F1", "B", 2, StopRole::Passage, 1300));
  tt.records.push_back(row("F1", "C", 3, StopRole::Arrival, 1540));
  return tt;
}

}  // namespace

TEST_CASE("default network is embedded-ready and line-covered") {
  RailNetwork net = default_network();
  CHECK(net.size() >= 25);
  CHECK(net.lines.size() == 3);
  spectral_embedding(net);
  for (int i = 0; i < net.size(); ++i) {
    CHECK(net.station_embedding.row(i).norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_FALSE(net.station_line[static_cast<std::size_t>(i)].empty());
  }
}

TEST_CASE("synthetic generator") {
  RailNetwork net = default_network();
  SyntheticConfig cfg;
  cfg.n_days = 2;
  cfg.trains_per_day = 18;
  cfg.seed = 9;

  SUBCASE("no incidents and no propagation: actual equals schedule") {
    SyntheticConfig quiet = cfg;
    quiet.incident_rate_per_hour = 0.0;
    quiet.propagation_factor = 0.0;
    const auto result = generate_synthetic(quiet, net);
    REQUIRE(!result.log.records.empty());
    for (const auto& rec : result.log.records) {
      REQUIRE(rec.actual_time.has_value());
      CHECK(*rec.actual_time == rec.scheduled_time);
    }
  }
  SUBCASE("same seed reproduces the log byte for byte") {
    const auto a = generate_synthetic(cfg, net);
    const auto b = generate_synthetic(cfg, net);
    REQUIRE(a.log.records.size() == b.log.records.size());
    for (std::size_t i = 0; i < a.log.records.size(); ++i) {
      CHECK(a.log.records[i].train_id == b.log.records[i].train_id);
      CHECK(a.log.records[i].actual_time == b.log.records[i].actual_time);
    }
    SyntheticConfig other = cfg;
    other.seed = 10;
    const auto c = generate_synthetic(other, net);
    bool any_diff = false;
    for (std::size_t i = 0; i < a.log.records.size() && i < c.log.records.size(); ++i) {
      if (a.log.records[i].actual_time != c.log.records[i].actual_time) any_diff = true;
    }
    CHECK(any_diff);
  }
  SUBCASE("log passes structural validation and has some delay") {
    const auto result = generate_synthetic(cfg, net);
    const ScheduleData data = structure_log(result.log);
    CHECK(data.trains.size() == 36);
    std::int64_t total_delay = 0;
    for (const auto& rec : result.log.records) {
      total_delay += *rec.actual_time - rec.scheduled_time;
    }
    CHECK(total_delay > 0);
  }
}

TEST_CASE("hand-traced two-train headway propagation") {
  SyntheticConfig cfg;
  cfg.min_headway_seconds = 120;
  cfg.propagation_factor = 1.0;
  cfg.recovery_seconds_per_stop = 0;

  // leader picks up a 300 s primary delay at its departure
  const auto log = simulate_actuals(two_train_timetable(), cfg,
                                    {{{std::string("L1"), 1}, 300}});

  auto actual = [&](const std::string& id, int seq) {
    for (const auto& rec : log.records) {
      if (rec.train_id == id && rec.sequence_index == seq) return *rec.actual_time;
    }
    FAIL("record not found");
    return std::int64_t{0};
  };

  // leader: held 300 s from departure, no recovery
  CHECK(actual("L1", 1) == 1300);
  CHECK(actual("L1", 2) == 1540);
  CHECK(actual("L1", 3) == 1780);
  // follower: natural entry to (A,B) at 1060 violates 1300+120, pushed to
  // 1420; passage times accumulate the full 360 s knock-on
  CHECK(actual("F1", 1) == 1060);        // departure record itself not held
  CHECK(actual("F1", 2) == 1420 + 240);  // 1660: conflict at the first edge
  CHECK(actual("F1", 3) == 1900);        // second edge: 1660 >= 1540+120, no push
}

TEST_CASE("propagation factor scales the knock-on delay") {
  SyntheticConfig cfg;
  cfg.min_headway_seconds = 120;
  cfg.propagation_factor = 0.5;
  cfg.recovery_seconds_per_stop = 0;
  const auto log = simulate_actuals(two_train_timetable(), cfg,
                                    {{{std::string("L1"), 1}, 300}});
  for (const auto& rec : log.records) {
    if (rec.train_id == "F1" && rec.sequence_index == 2) {
      // push halved: entry 1060 + 0.5*(1420-1060) = 1240, arrival 1480
      CHECK(*rec.actual_time == 1480);
    }
  }
}

TEST_CASE("recovery claws back delay at stops") {
  SyntheticConfig cfg;
  cfg.min_headway_seconds = 1;  // effectively off
  cfg.propagation_factor = 0.0;
  cfg.recovery_seconds_per_stop = 50;
  OperationalLog tt;
  tt.records.push_back(row("T1", "A", 1, StopRole::Departure, 1000));
  tt.records.push_back(row("T1", "B", 2, StopRole::Passage, 1240));
  tt.records.push_back(row("T1", "C", 3, StopRole::Arrival, 1480));
  const auto log = simulate_actuals(tt, cfg, {{{std::string("T1"), 1}, 120}});
  // dep 1120 (delay 120), B raw 1360 -> recovered to 1310 (delay 70),
  // C raw 1550 -> recovered to 1500 (delay 20)
  CHECK(*log.records[0].actual_time == 1120);
  CHECK(*log.records[1].actual_time == 1310);
  CHECK(*log.records[2].actual_time == 1500);
}

TEST_CASE("csv ingest") {
  SUBCASE("clean two-train file") {
    std::stringstream ss;
    write_csv(two_train_timetable(), ss, {"seed=1"});
    IngestReport report;
    const auto log = ingest_csv_stream(ss, &report);
    CHECK(log.records.size() == 6);
    CHECK(report.total_trains == 2);
    CHECK(report.discard_fraction == 0.0);
    CHECK_FALSE(report.suspicious);
  }
  SUBCASE("train with decreasing actual is dropped, others kept") {
    OperationalLog log = two_train_timetable();
    for (auto& rec : log.records) {
      rec.actual_time = rec.scheduled_time;
    }
    log.records[1].actual_time = 900;  // before the departure's actual
    std::stringstream ss;
    write_csv(log, ss);
    IngestReport report;
    const auto back = ingest_csv_stream(ss, &report);
    CHECK(report.dropped_trains == 1);
    CHECK(report.dropped_ids == std::vector<std::string>{"L1"});
    CHECK(back.records.size() == 3);
    CHECK(back.records[0].train_id == "F1");
    CHECK(report.suspicious);  // 50% > 20%
  }
  SUBCASE("non-contiguous sequence is dropped") {
    OperationalLog log;
    log.records.push_back(row("T1", "A", 1, StopRole::Departure, 1000));
    log.records.push_back(row("T1", "C", 3, StopRole::Arrival, 1480));
    std::stringstream ss;
    write_csv(log, ss);
    IngestReport report;
    const auto back = ingest_csv_stream(ss, &report);
    CHECK(back.records.empty());
    CHECK(report.dropped_trains == 1);
  }
  SUBCASE("gap in the realised prefix is dropped") {
    OperationalLog log = two_train_timetable();
    for (auto& rec : log.records) rec.actual_time = rec.scheduled_time;
    log.records[1].actual_time.reset();  // L1 missing B but realised C
    std::stringstream ss;
    write_csv(log, ss);
    IngestReport report;
    ingest_csv_stream(ss, &report);
    CHECK(report.dropped_ids == std::vector<std::string>{"L1"});
  }
  SUBCASE("empty data section gives an empty log") {
    std::stringstream ss("train_id,train_type,station_id,sequence_index,role,scheduled_time,"
                         "actual_time\n");
    IngestReport report;
    const auto log = ingest_csv_stream(ss, &report);
    CHECK(log.records.empty());
    CHECK(report.total_trains == 0);
  }
  SUBCASE("malformed header") {
    std::stringstream ss("nope,nope\n");
    CHECK_THROWS(ingest_csv_stream(ss));
  }
  SUBCASE("missing file") { CHECK_THROWS(ingest_csv("/nonexistent/file.csv")); }
  SUBCASE("ingest is idempotent through re-serialisation") {
    RailNetwork net = default_network();
    SyntheticConfig cfg;
    cfg.n_days = 1;
    cfg.trains_per_day = 12;
    cfg.seed = 21;
    const auto result = generate_synthetic(cfg, net);
    std::stringstream first;
    write_csv(result.log, first);
    const auto once = ingest_csv_stream(first);
    std::stringstream second;
    write_csv(once, second);
    const auto twice = ingest_csv_stream(second);
    REQUIRE(once.records.size() == twice.records.size());
    for (std::size_t i = 0; i < once.records.size(); ++i) {
      CHECK(once.records[i].train_id == twice.records[i].train_id);
      CHECK(once.records[i].station_id == twice.records[i].station_id);
      CHECK(once.records[i].scheduled_time == twice.records[i].scheduled_time);
      CHECK(once.records[i].actual_time == twice.records[i].actual_time);
    }
  }
}

TEST_CASE("temporal split") {
  OperationalLog log;
  log.records.push_back(row("T1", "A", 1, StopRole::Departure, 1000));
  log.records.push_back(row("T1", "B", 2, StopRole::Arrival, 1200));
  log.records.push_back(row("T2", "A", 1, StopRole::Departure, 2000));
  log.records.push_back(row("T2", "B", 2, StopRole::Arrival, 2200));
  log.records.push_back(row("T3", "A", 1, StopRole::Departure, 3000));
  log.records.push_back(row("T3", "B", 2, StopRole::Arrival, 3200));

  SUBCASE("all departures before the boundary go to training") {
    const auto splits = temporal_split(log, {5000, 6000});
    CHECK(splits[0].records.size() == 6);
    CHECK(splits[1].records.empty());
    CHECK(splits[2].records.empty());
  }
  SUBCASE("boundary departure lands in the later split (half-open)") {
    const auto splits = temporal_split(log, {2000, 3000});
    CHECK(splits[0].records.size() == 2);  // T1
    CHECK(splits[1].records.size() == 2);  // T2 at the boundary -> validation
    CHECK(splits[2].records.size() == 2);  // T3 at val_end -> test
  }
  SUBCASE("no train appears in two splits") {
    const auto splits = temporal_split(log, {2100, 3100});
    std::set<std::string> seen;
    for (const auto& part : splits) {
      std::set<std::string> ids;
      for (const auto& rec : part.records) ids.insert(rec.train_id);
      for (const auto& id : ids) CHECK(seen.insert(id).second);
    }
  }
  SUBCASE("whole trains move together") {
    const auto splits = temporal_split(log, {1100, 3000});
    CHECK(splits[0].records.size() == 2);  // both T1 rows despite B at 1200
  }
}

TEST_CASE("snapshot dataset grid") {
  // active period exactly 10 minutes: open 700, close 1000+300
  OperationalLog log;
  log.records.push_back(row("T1", "A", 1, StopRole::Departure, 1000, 950));
  log.records.push_back(row("T1", "B", 2, StopRole::Arrival, 1200, 1000));
  const auto data = structure_log(log);
  REQUIRE(data.active_begin() == 700);
  REQUIRE(data.active_end() == 1300);

  SUBCASE("full grid has span/dt points") {
    Rng rng(1);
    const auto ds = build_snapshot_dataset(data, 30, 1.0, rng);
    CHECK(ds.anchors.size() == 20);
    CHECK(ds.anchors.front() == 700);
    CHECK(ds.anchors.back() == 700 + 19 * 30);
    for (std::size_t i = 1; i < ds.anchors.size(); ++i) {
      CHECK(ds.anchors[i] - ds.anchors[i - 1] == 30);
    }
  }
  SUBCASE("binomial subsample count and per-seed reproducibility") {
    RailNetwork net = default_network();
    SyntheticConfig cfg;
    cfg.n_days = 4;
    cfg.trains_per_day = 30;
    cfg.seed = 2;
    const auto result = generate_synthetic(cfg, net);
    const auto big = structure_log(result.log);

    Rng rng_count(5);
    const auto full = build_snapshot_dataset(big, 30, 1.0, rng_count);
    const double n = static_cast<double>(full.anchors.size());
    REQUIRE(n > 5000);

    Rng rng_a(5);
    const auto a = build_snapshot_dataset(big, 30, 0.1, rng_a);
    Rng rng_b(5);
    const auto b = build_snapshot_dataset(big, 30, 0.1, rng_b);
    CHECK(a.anchors == b.anchors);

    const double sigma = std::sqrt(n * 0.1 * 0.9);
    CHECK(std::abs(static_cast<double>(a.anchors.size()) - 0.1 * n) < 5.0 * sigma);
  }
  SUBCASE("input validation") {
    Rng rng(1);
    CHECK_THROWS(build_snapshot_dataset(ScheduleData{}, 30, 1.0, rng));
    CHECK_THROWS(build_snapshot_dataset(data, 0, 1.0, rng));
    CHECK_THROWS(build_snapshot_dataset(data, 30, 0.0, rng));
  }
}

TEST_CASE("structure_log rejects malformed input outright") {
  OperationalLog bad;
  bad.records.push_back(row("T1", "A", 1, StopRole::Departure, 1000));
  CHECK_THROWS(structure_log(bad));  // single stop

  OperationalLog gap;
  gap.records.push_back(row("T1", "A", 1, StopRole::Departure, 1000, 1000));
  gap.records.push_back(row("T1", "B", 2, StopRole::Passage, 1200, 1100));
  gap.records.push_back(row("T1", "C", 3, StopRole::Arrival, 1400, 1090));
  CHECK_THROWS(structure_log(gap));  // non-increasing actual
}

TEST_CASE("infeasible timetable is reported") {
  RailNetwork net = default_network();
  SyntheticConfig cfg;
  cfg.n_days = 1;
  cfg.trains_per_day = 12;
  cfg.min_headway_seconds = 100000;  // no scheduled gap can satisfy this
  CHECK_THROWS(generate_synthetic(cfg, net));
}
