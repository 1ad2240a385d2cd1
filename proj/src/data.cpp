#include "raildelay/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace raildelay {

namespace {

constexpr std::int64_t kDaySeconds = 86400;

const char* kCsvHeader =
    "train_id,train_type,station_id,sequence_index,role,scheduled_time,actual_time";

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

/// Daily departure offsets for one service series: a morning cluster, a
/// midday spread and an evening cluster.
std::vector<std::int64_t> series_offsets(int n) {
  const int a = (n + 2) / 3;
  const int b = n / 3;
  const int c = n - a - b;
  std::vector<std::int64_t> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < a; ++i) out.push_back(7 * 3600 + i * 600);
  for (int i = 0; i < b; ++i) out.push_back(11 * 3600 + i * 3600);
  for (int i = 0; i < c; ++i) out.push_back(17 * 3600 + i * 600);
  return out;
}

double type_run_factor(int type_index) {
  switch (type_index) {
    case 0: return 0.85;  // IC
    case 1: return 1.0;   // L
    case 2: return 1.15;  // S
    default: return 1.0;
  }
}

struct TimetabledTrain {
  std::string train_id;
  std::string train_type;
  std::vector<std::string> stations;
  std::vector<std::int64_t> scheduled;
};

}  // namespace

void SyntheticConfig::validate() const {
  if (n_days < 1) throw std::invalid_argument("synthetic: n_days must be >= 1");
  if (trains_per_day < 1) throw std::invalid_argument("synthetic: trains_per_day must be >= 1");
  if (base_run_seconds < 1) throw std::invalid_argument("synthetic: base_run_seconds must be >= 1");
  if (min_headway_seconds <= 0) throw std::invalid_argument("synthetic: headway must be positive");
  if (propagation_factor < 0.0 || propagation_factor > 1.0) {
    throw std::invalid_argument("synthetic: propagation factor outside [0,1]");
  }
  if (incident_rate_per_hour < 0.0) throw std::invalid_argument("synthetic: negative incident rate");
  if (recovery_seconds_per_stop < 0) throw std::invalid_argument("synthetic: negative recovery");
}

RailNetwork default_network() {
  std::vector<std::string> stations;
  for (int i = 1; i <= 13; ++i) stations.push_back("R" + std::string(i < 10 ? "0" : "") + std::to_string(i));
  for (int i = 1; i <= 7; ++i) stations.push_back("B0" + std::to_string(i));
  for (int i = 1; i <= 7; ++i) stations.push_back("G0" + std::to_string(i));

  std::map<std::string, std::vector<std::string>> lines;
  lines["RED"] = {"R01", "R02", "R03", "R04", "R05", "R06", "R07",
                  "R08", "R09", "R10", "R11", "R12", "R13"};
  // BLUE and GREEN run along part of RED's track, so headway conflicts cross lines
  lines["BLUE"] = {"B01", "B02", "B03", "B04", "R05", "R06", "R07", "B05", "B06", "B07"};
  lines["GREEN"] = {"G01", "G02", "G03", "G04", "R09", "R10", "R11", "G05", "G06", "G07"};

  std::vector<std::pair<std::string, std::string>> edges;
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& [id, members] : lines) {
    for (std::size_t i = 0; i + 1 < members.size(); ++i) {
      auto key = std::minmax(members[i], members[i + 1]);
      if (seen.insert(key).second) edges.emplace_back(key.first, key.second);
    }
  }
  return build_network(stations, edges, lines);
}

OperationalLog simulate_actuals(
    const OperationalLog& timetable, const SyntheticConfig& config,
    const std::vector<std::pair<std::pair<std::string, int>, std::int64_t>>& primary_delays) {
  config.validate();
  std::map<std::pair<std::string, int>, std::int64_t> primary(primary_delays.begin(),
                                                              primary_delays.end());

  // group rows per train, keep row order within a train
  std::map<std::string, std::vector<const LogRecord*>> by_train;
  for (const auto& rec : timetable.records) by_train[rec.train_id].push_back(&rec);
  std::vector<std::pair<std::string, std::vector<const LogRecord*>>> trains(by_train.begin(),
                                                                            by_train.end());
  for (auto& [id, rows] : trains) {
    std::sort(rows.begin(), rows.end(), [](const LogRecord* a, const LogRecord* b) {
      return a->sequence_index < b->sequence_index;
    });
  }
  // trains run in scheduled-departure order; ties resolved by id
  std::stable_sort(trains.begin(), trains.end(), [](const auto& a, const auto& b) {
    return a.second.front()->scheduled_time < b.second.front()->scheduled_time;
  });

  std::map<std::pair<std::string, std::string>, std::int64_t> last_entry;
  std::map<std::pair<std::string, int>, std::int64_t> actual_of;

  for (const auto& [train_id, rows] : trains) {
    const std::size_t m = rows.size();
    std::vector<std::int64_t> actual(m);
    actual[0] = rows[0]->scheduled_time;
    if (auto it = primary.find({train_id, rows[0]->sequence_index}); it != primary.end()) {
      actual[0] += it->second;
    }
    for (std::size_t j = 1; j < m; ++j) {
      const std::int64_t seg = rows[j]->scheduled_time - rows[j - 1]->scheduled_time;
      std::int64_t entry = actual[j - 1];
      const auto edge = std::make_pair(rows[j - 1]->station_id, rows[j]->station_id);
      if (auto it = last_entry.find(edge); it != last_entry.end()) {
        const std::int64_t required = it->second + config.min_headway_seconds;
        if (entry < required) {
          entry += static_cast<std::int64_t>(
              std::llround(config.propagation_factor * static_cast<double>(required - entry)));
        }
      }
      last_entry[edge] = entry;
      std::int64_t arrival = entry + seg;
      if (arrival > rows[j]->scheduled_time) {
        arrival = std::max(rows[j]->scheduled_time, arrival - config.recovery_seconds_per_stop);
      }
      if (auto it = primary.find({train_id, rows[j]->sequence_index}); it != primary.end()) {
        arrival += it->second;
      }
      arrival = std::max(arrival, actual[j - 1] + 1);  // strictly increasing
      actual[j] = arrival;
    }
    for (std::size_t j = 0; j < m; ++j) {
      actual_of[{train_id, rows[j]->sequence_index}] = actual[j];
    }
  }

  OperationalLog out = timetable;
  for (auto& rec : out.records) {
    rec.actual_time = actual_of.at({rec.train_id, rec.sequence_index});
  }
  return out;
}

SyntheticResult generate_synthetic(const SyntheticConfig& config, const RailNetwork& network) {
  config.validate();

  // series = (line, direction) pairs in id order
  std::vector<std::pair<std::string, bool>> series;
  for (const auto& [line_id, members] : network.lines) {
    if (members.size() < 2) continue;
    series.emplace_back(line_id, false);
    series.emplace_back(line_id, true);
  }
  if (series.empty()) throw std::invalid_argument("generate_synthetic: network has no usable lines");

  const int per_series =
      (config.trains_per_day + static_cast<int>(series.size()) - 1) / static_cast<int>(series.size());
  const auto offsets = series_offsets(per_series);

  OperationalLog timetable;
  int counter = 0;
  int emitted_today = 0;
  for (int day = 0; day < config.n_days; ++day) {
    emitted_today = 0;
    for (int slot = 0; slot < per_series && emitted_today < config.trains_per_day; ++slot) {
      for (std::size_t s = 0; s < series.size() && emitted_today < config.trains_per_day; ++s) {
        const auto& [line_id, reversed] = series[s];
        std::vector<std::string> stations = network.lines.at(line_id);
        if (reversed) std::reverse(stations.begin(), stations.end());

        ++counter;
        ++emitted_today;
        char id[16];
        std::snprintf(id, sizeof(id), "T%05d", counter);
        const int type_index = counter % 3;  // IC, L, S
        const std::string type_name(kTrainTypes[static_cast<std::size_t>(type_index)]);
        // reverse direction staggered to avoid symmetric meets
        const std::int64_t depart = config.day0_epoch + day * kDaySeconds + offsets[slot] +
                                    (reversed ? 300 : 0) + static_cast<std::int64_t>(s) * 60;
        const std::int64_t seg = std::max<std::int64_t>(
            30, std::llround(type_run_factor(type_index) * config.base_run_seconds));

        std::int64_t t = depart;
        for (std::size_t j = 0; j < stations.size(); ++j) {
          LogRecord rec;
          rec.train_id = id;
          rec.train_type = type_name;
          rec.station_id = stations[j];
          rec.sequence_index = static_cast<int>(j) + 1;
          rec.role = j == 0                    ? StopRole::Departure
                     : j + 1 == stations.size() ? StopRole::Arrival
                                                 : StopRole::Passage;
          rec.scheduled_time = t;
          timetable.records.push_back(std::move(rec));
          t += seg;
        }
      }
    }
  }
  std::sort(timetable.records.begin(), timetable.records.end(),
            [](const LogRecord& a, const LogRecord& b) {
              return std::tie(a.train_id, a.sequence_index) < std::tie(b.train_id, b.sequence_index);
            });

  // feasibility: some same-edge scheduled gap must respect the headway
  {
    std::map<std::pair<std::string, std::string>, std::vector<std::int64_t>> entries;
    std::map<std::string, const LogRecord*> prev_row;
    for (const auto& rec : timetable.records) {
      auto it = prev_row.find(rec.train_id);
      if (it != prev_row.end()) {
        entries[{it->second->station_id, rec.station_id}].push_back(it->second->scheduled_time);
      }
      prev_row[rec.train_id] = &rec;
    }
    bool any_ok = false;
    bool any_gap = false;
    for (auto& [edge, times] : entries) {
      std::sort(times.begin(), times.end());
      for (std::size_t i = 1; i < times.size(); ++i) {
        any_gap = true;
        if (times[i] - times[i - 1] >= config.min_headway_seconds) any_ok = true;
      }
    }
    if (any_gap && !any_ok) {
      throw std::runtime_error("generate_synthetic: infeasible timetable, every scheduled "
                               "same-edge gap violates the minimum headway");
    }
  }

  // primary incidents: Poisson count per train over its journey, lognormal sizes
  Rng rng(derive_seed(config.seed, "synthetic"));
  std::vector<std::pair<std::pair<std::string, int>, std::int64_t>> primaries;
  std::map<std::string, std::pair<std::int64_t, int>> journey;  // id -> (span, stops)
  for (const auto& rec : timetable.records) {
    auto& j = journey[rec.train_id];
    j.first = rec.scheduled_time;  // last scheduled time wins; first handled below
    j.second = std::max(j.second, rec.sequence_index);
  }
  std::map<std::string, std::int64_t> first_time;
  for (const auto& rec : timetable.records) {
    if (rec.sequence_index == 1) first_time[rec.train_id] = rec.scheduled_time;
  }
  for (const auto& [train_id, info] : journey) {
    const double hours =
        static_cast<double>(info.first - first_time[train_id]) / 3600.0;
    const int incidents = poisson_sample(rng, config.incident_rate_per_hour * hours);
    for (int i = 0; i < incidents; ++i) {
      const int stop = 1 + static_cast<int>(uniform_index(rng, static_cast<std::size_t>(info.second)));
      const std::int64_t magnitude = std::max<std::int64_t>(
          1, std::llround(lognormal_sample(rng, config.delay_lognormal_mu,
                                           config.delay_lognormal_sigma)));
      primaries.push_back({{train_id, stop}, magnitude});
    }
  }

  SyntheticResult result;
  result.timetable = timetable;
  result.log = simulate_actuals(timetable, config, primaries);
  return result;
}

// ---------------------------------------------------------------------------

void write_csv(const OperationalLog& log, std::ostream& out,
               const std::vector<std::string>& comments) {
  for (const auto& c : comments) out << "# " << c << "\n";
  out << kCsvHeader << "\n";
  for (const auto& rec : log.records) {
    out << rec.train_id << "," << rec.train_type << "," << rec.station_id << ","
        << rec.sequence_index << "," << stop_role_name(rec.role) << "," << rec.scheduled_time
        << ",";
    if (rec.actual_time) out << *rec.actual_time;
    out << "\n";
  }
}

void write_csv_file(const OperationalLog& log, const std::string& path,
                    const std::vector<std::string>& comments) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write csv: " + path);
  write_csv(log, out, comments);
  if (!out) throw std::runtime_error("failed writing csv: " + path);
}

OperationalLog ingest_csv_stream(std::istream& in, IngestReport* report) {
  std::string line;
  // skip comments and blank lines before the header
  bool have_header = false;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    if (t != kCsvHeader) throw std::runtime_error("ingest: malformed header: " + t);
    have_header = true;
    break;
  }
  if (!have_header) throw std::runtime_error("ingest: missing header");

  struct Row {
    LogRecord rec;
    bool parsed = false;
  };
  std::vector<LogRecord> rows;
  std::set<std::string> bad_trains;
  std::vector<std::string> train_order;
  std::set<std::string> seen_trains;

  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    std::vector<std::string> cols;
    std::stringstream ss(t);
    std::string item;
    while (std::getline(ss, item, ',')) cols.push_back(trim(item));
    if (t.back() == ',') cols.push_back("");
    if (cols.size() != 7) {
      if (!cols.empty() && !cols[0].empty()) bad_trains.insert(cols[0]);
      continue;
    }
    LogRecord rec;
    rec.train_id = cols[0];
    rec.train_type = cols[1];
    rec.station_id = cols[2];
    try {
      rec.sequence_index = std::stoi(cols[3]);
      rec.role = parse_stop_role(cols[4]);
      rec.scheduled_time = std::stoll(cols[5]);
      if (!cols[6].empty()) rec.actual_time = std::stoll(cols[6]);
    } catch (const std::exception&) {
      bad_trains.insert(rec.train_id);
      continue;
    }
    if (seen_trains.insert(rec.train_id).second) train_order.push_back(rec.train_id);
    rows.push_back(std::move(rec));
  }

  // group, sort by sequence, validate per train
  std::map<std::string, std::vector<LogRecord>> by_train;
  for (auto& rec : rows) by_train[rec.train_id].push_back(std::move(rec));
  for (auto& [id, recs] : by_train) {
    std::sort(recs.begin(), recs.end(), [](const LogRecord& a, const LogRecord& b) {
      return a.sequence_index < b.sequence_index;
    });
    bool ok = recs.size() >= 2;
    bool seen_missing = false;
    for (std::size_t j = 0; ok && j < recs.size(); ++j) {
      if (recs[j].sequence_index != static_cast<int>(j) + 1) ok = false;
      if (j > 0 && recs[j].scheduled_time <= recs[j - 1].scheduled_time) ok = false;
      if (recs[j].actual_time) {
        if (seen_missing) ok = false;  // realised times must form a prefix
        if (j > 0 && recs[j - 1].actual_time &&
            *recs[j].actual_time <= *recs[j - 1].actual_time) {
          ok = false;
        }
      } else {
        seen_missing = true;
      }
      const StopRole want = j == 0                  ? StopRole::Departure
                            : j + 1 == recs.size()   ? StopRole::Arrival
                                                     : StopRole::Passage;
      if (recs[j].role != want) ok = false;
    }
    if (!ok) bad_trains.insert(id);
  }

  OperationalLog out;
  for (const auto& id : train_order) {
    if (bad_trains.count(id)) continue;
    for (const auto& rec : by_train[id]) out.records.push_back(rec);
  }

  if (report) {
    report->total_trains = train_order.size();
    report->dropped_trains = 0;
    for (const auto& id : train_order) {
      if (bad_trains.count(id)) {
        ++report->dropped_trains;
        report->dropped_ids.push_back(id);
      }
    }
    report->discard_fraction =
        train_order.empty()
            ? 0.0
            : static_cast<double>(report->dropped_trains) / static_cast<double>(train_order.size());
    report->suspicious = report->discard_fraction > 0.20;
  }
  return out;
}

OperationalLog ingest_csv(const std::string& path, IngestReport* report) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("ingest: cannot open file: " + path);
  return ingest_csv_stream(in, report);
}

std::array<OperationalLog, 3> temporal_split(const OperationalLog& log, SplitBoundaries bounds) {
  if (bounds.train_end > bounds.val_end) {
    throw std::invalid_argument("temporal_split: boundaries out of order");
  }
  std::map<std::string, std::int64_t> departure;
  for (const auto& rec : log.records) {
    if (rec.sequence_index == 1) departure[rec.train_id] = rec.scheduled_time;
  }
  std::array<OperationalLog, 3> out;
  for (const auto& rec : log.records) {
    auto it = departure.find(rec.train_id);
    if (it == departure.end()) continue;  // train lacks its first stop; unsplittable
    const std::int64_t dep = it->second;
    const int split = dep < bounds.train_end ? 0 : dep < bounds.val_end ? 1 : 2;
    out[static_cast<std::size_t>(split)].records.push_back(rec);
  }
  return out;
}

ScheduleData structure_log(const OperationalLog& log) {
  std::map<std::string, std::vector<LogRecord>> by_train;
  for (const auto& rec : log.records) by_train[rec.train_id].push_back(rec);

  ScheduleData data;
  data.trains.reserve(by_train.size());
  for (auto& [id, recs] : by_train) {
    std::sort(recs.begin(), recs.end(), [](const LogRecord& a, const LogRecord& b) {
      return a.sequence_index < b.sequence_index;
    });
    const int m = static_cast<int>(recs.size());
    if (m < 2) throw std::invalid_argument("structure_log: train " + id + " has fewer than 2 stops");

    RealizedTrain train;
    Itinerary& it = train.itinerary;
    it.train_id = id;
    it.train_type = train_type_index(recs.front().train_type);
    it.stations.resize(static_cast<std::size_t>(m) + 2);
    it.roles.assign(static_cast<std::size_t>(m) + 2, StopRole::Placeholder);
    it.scheduled_times.resize(static_cast<std::size_t>(m) + 2);
    train.actuals.assign(static_cast<std::size_t>(m) + 2, 0);

    for (int j = 0; j < m; ++j) {
      const auto& rec = recs[static_cast<std::size_t>(j)];
      if (rec.sequence_index != j + 1) {
        throw std::invalid_argument("structure_log: train " + id + " has gaps in sequence");
      }
      it.stations[static_cast<std::size_t>(j) + 1] = rec.station_id;
      it.roles[static_cast<std::size_t>(j) + 1] = rec.role;
      it.scheduled_times[static_cast<std::size_t>(j) + 1] = rec.scheduled_time;
    }
    it.scheduled_times.front() = it.scheduled_times[1] - kPlaceholderWindowSeconds;
    it.scheduled_times.back() =
        it.scheduled_times[static_cast<std::size_t>(m)] + kPlaceholderWindowSeconds;
    it.validate();

    int realized = 0;
    for (int j = 0; j < m; ++j) {
      const auto& rec = recs[static_cast<std::size_t>(j)];
      if (!rec.actual_time) break;
      if (j > 0 && *rec.actual_time <= train.actuals[static_cast<std::size_t>(j)]) {
        throw std::invalid_argument("structure_log: train " + id + " has non-increasing actuals");
      }
      train.actuals[static_cast<std::size_t>(j) + 1] = *rec.actual_time;
      realized = j + 1;
    }
    train.realized_count = realized;
    data.trains.push_back(std::move(train));
  }
  std::sort(data.trains.begin(), data.trains.end(), [](const RealizedTrain& a, const RealizedTrain& b) {
    return a.itinerary.train_id < b.itinerary.train_id;
  });
  for (std::size_t i = 0; i < data.trains.size(); ++i) {
    data.by_id[data.trains[i].itinerary.train_id] = i;
  }
  return data;
}

SnapshotDataset build_snapshot_dataset(const ScheduleData& data, std::int64_t dt,
                                       double subsample_fraction, Rng& rng) {
  if (data.trains.empty()) throw std::invalid_argument("build_snapshot_dataset: empty log");
  if (dt <= 0) throw std::invalid_argument("build_snapshot_dataset: dt must be positive");
  if (subsample_fraction <= 0.0 || subsample_fraction > 1.0) {
    throw std::invalid_argument("build_snapshot_dataset: fraction outside (0,1]");
  }
  SnapshotDataset ds;
  ds.dt = dt;
  ds.grid_begin = data.active_begin();
  ds.grid_end = data.active_end();
  if (ds.grid_end <= ds.grid_begin) {
    throw std::invalid_argument("build_snapshot_dataset: log has no realised activity");
  }
  for (std::int64_t t = ds.grid_begin; t < ds.grid_end; t += dt) {
    if (subsample_fraction >= 1.0 || uniform_unit(rng) < subsample_fraction) {
      ds.anchors.push_back(t);
    }
  }
  return ds;
}

}  // namespace raildelay
