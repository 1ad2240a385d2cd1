#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace raildelay {

inline constexpr std::int64_t kStepSeconds = 30;
inline constexpr std::int64_t kPlaceholderWindowSeconds = 300;

inline constexpr std::array<std::string_view, 4> kTrainTypes = {"IC", "L", "S", "OTHER"};
int train_type_index(std::string_view type);  // unknown types map to OTHER

enum class StopRole : int { Departure = 0, Arrival = 1, Passage = 2, Placeholder = 3 };
std::string_view stop_role_name(StopRole role);
StopRole parse_stop_role(std::string_view name);  // throws on unknown

/// A train's ordered station sequence with scheduled passage times. Index 0 is
/// the pre-departure placeholder, index m+1 the post-arrival placeholder; real
/// stations live at 1..m. Placeholder times are departure-300s / arrival+300s.
struct Itinerary {
  std::string train_id;
  int train_type = 3;
  std::vector<std::string> stations;        // placeholders hold an empty id
  std::vector<StopRole> roles;
  std::vector<std::int64_t> scheduled_times;

  int last_real() const { return static_cast<int>(stations.size()) - 2; }
  int post_placeholder() const { return static_cast<int>(stations.size()) - 1; }
  bool is_real(int index) const { return index >= 1 && index <= last_real(); }
  void validate() const;  // throws on broken invariants
};

/// Position and realised passage times of one train. actual_times covers
/// indices 0..position_index; realised delays are derived, never stored.
struct TrainState {
  const Itinerary* itinerary = nullptr;
  int position_index = 0;
  std::vector<std::int64_t> actual_times;

  std::int64_t last_known_delay() const;
  bool finished() const { return position_index == itinerary->post_placeholder(); }
};

/// Realised delay at a passed station, seconds: positive late, negative early.
std::int64_t delay_at(const TrainState& state, int index);

struct Snapshot {
  std::int64_t clock = 0;
  std::vector<TrainState> trains;  // sorted by train_id

  const TrainState* find(std::string_view train_id) const;  // nullptr if absent
};

/// One train of a validated operation log: its itinerary plus the realised
/// prefix of actual passage times (realized_count real stations observed).
struct RealizedTrain {
  Itinerary itinerary;
  std::vector<std::int64_t> actuals;  // indexed like the itinerary; valid 1..realized_count
  int realized_count = 0;

  bool fully_realized() const { return realized_count == itinerary.last_real(); }
  std::int64_t window_open() const { return itinerary.scheduled_times.front(); }
  std::int64_t window_close() const {
    if (!fully_realized()) return std::numeric_limits<std::int64_t>::max();
    return actuals[static_cast<std::size_t>(itinerary.last_real())] + kPlaceholderWindowSeconds;
  }
};

/// Validated, structured view over an operation log, ready for snapshot
/// assembly and rollout injection. Trains sorted by id.
struct ScheduleData {
  std::vector<RealizedTrain> trains;
  std::map<std::string, std::size_t> by_id;

  const RealizedTrain* find(std::string_view train_id) const;
  std::int64_t active_begin() const;  // earliest window open
  std::int64_t active_end() const;    // latest window close (realised trains only)
};

/// Network state at `clock`: every train whose activity window contains the
/// clock, positioned at the last station it passed (placeholders included).
Snapshot build_snapshot(const ScheduleData& data, std::int64_t clock);

/// State of a single train at `clock`, placed per the same rules.
TrainState realized_state_at(const RealizedTrain& train, std::int64_t clock);

}  // namespace raildelay
