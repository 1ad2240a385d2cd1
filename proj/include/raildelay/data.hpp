#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "raildelay/network.hpp"
#include "raildelay/rng.hpp"
#include "raildelay/schedule.hpp"

namespace raildelay {

/// One stop event of the flat operation log (CSV row).
struct LogRecord {
  std::string train_id;
  std::string train_type;
  std::string station_id;
  int sequence_index = 0;  // contiguous from 1 within a train
  StopRole role = StopRole::Passage;
  std::int64_t scheduled_time = 0;
  std::optional<std::int64_t> actual_time;
};

struct OperationalLog {
  std::vector<LogRecord> records;
};

/// Parameters of the synthetic timetable-plus-delay generator. Primary delays
/// hit random stops; knock-on delays propagate through shared-edge headway
/// conflicts; dwell recovery claws seconds back at every stop.
struct SyntheticConfig {
  int n_days = 18;
  int trains_per_day = 42;
  std::int64_t base_run_seconds = 240;
  double incident_rate_per_hour = 0.30;
  double delay_lognormal_mu = 5.48;  // ln seconds
  double delay_lognormal_sigma = 0.9;
  std::int64_t min_headway_seconds = 120;
  double propagation_factor = 0.8;
  std::int64_t recovery_seconds_per_stop = 30;
  std::int64_t day0_epoch = 1735689600;  // day boundary the service pattern hangs off
  std::uint64_t seed = 0;

  void validate() const;
};

/// The default desk-scale network: three intersecting lines sharing track
/// segments, ~29 stations.
RailNetwork default_network();

struct SyntheticResult {
  OperationalLog log;        // full schedule + realised times
  OperationalLog timetable;  // same rows without actual times
};

SyntheticResult generate_synthetic(const SyntheticConfig& config, const RailNetwork& network);

/// Exposed for the hand-traced propagation tests: realises actual times over
/// an explicit scheduled log given per-train primary delays keyed by
/// (train_id, sequence_index).
OperationalLog simulate_actuals(
    const OperationalLog& timetable, const SyntheticConfig& config,
    const std::vector<std::pair<std::pair<std::string, int>, std::int64_t>>& primary_delays);

// -- CSV --------------------------------------------------------------------
// Schema: train_id,train_type,station_id,sequence_index,role,scheduled_time,
// actual_time. Epoch-second integers; empty actual_time for unrealised stops.
// '#' comment lines before the header are allowed and carry seed/config hash.

struct IngestReport {
  std::size_t total_trains = 0;
  std::size_t dropped_trains = 0;
  double discard_fraction = 0.0;
  bool suspicious = false;  // discard fraction above 20%
  std::vector<std::string> dropped_ids;
};

OperationalLog ingest_csv(const std::string& path, IngestReport* report = nullptr);
OperationalLog ingest_csv_stream(std::istream& in, IngestReport* report = nullptr);
void write_csv(const OperationalLog& log, std::ostream& out,
               const std::vector<std::string>& comments = {});
void write_csv_file(const OperationalLog& log, const std::string& path,
                    const std::vector<std::string>& comments = {});

// -- splits and snapshot grids ------------------------------------------------

struct SplitBoundaries {
  std::int64_t train_end = 0;  // trains with departure < train_end go to training
  std::int64_t val_end = 0;    // [train_end, val_end) validation, rest test
};

/// Assigns every train to exactly one split by scheduled departure time;
/// half-open intervals, so a boundary departure lands in the later split.
std::array<OperationalLog, 3> temporal_split(const OperationalLog& log, SplitBoundaries bounds);

/// Validates and groups a log into itineraries with realised prefixes. Trains
/// violating the invariants throw here; use ingest_csv for drop semantics.
ScheduleData structure_log(const OperationalLog& log);

/// Anchor clocks of the 30 s snapshot grid over the log's active period,
/// uniformly thinned to `subsample_fraction` (Bernoulli per grid point).
struct SnapshotDataset {
  std::vector<std::int64_t> anchors;
  std::int64_t dt = kStepSeconds;
  std::int64_t grid_begin = 0;
  std::int64_t grid_end = 0;  // exclusive
};

SnapshotDataset build_snapshot_dataset(const ScheduleData& data, std::int64_t dt,
                                       double subsample_fraction, Rng& rng);

}  // namespace raildelay
