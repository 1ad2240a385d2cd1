#include "raildelay/schedule.hpp"

#include <algorithm>
#include <stdexcept>

namespace raildelay {

int train_type_index(std::string_view type) {
  for (std::size_t i = 0; i < kTrainTypes.size(); ++i) {
    if (kTrainTypes[i] == type) return static_cast<int>(i);
  }
  return static_cast<int>(kTrainTypes.size()) - 1;
}

std::string_view stop_role_name(StopRole role) {
  switch (role) {
    case StopRole::Departure: return "departure";
    case StopRole::Arrival: return "arrival";
    case StopRole::Passage: return "passage";
    case StopRole::Placeholder: return "placeholder";
  }
  return "?";
}

StopRole parse_stop_role(std::string_view name) {
  if (name == "departure") return StopRole::Departure;
  if (name == "arrival") return StopRole::Arrival;
  if (name == "passage") return StopRole::Passage;
  if (name == "placeholder") return StopRole::Placeholder;
  throw std::invalid_argument("unknown stop role: " + std::string(name));
}

void Itinerary::validate() const {
  const auto n = stations.size();
  if (n < 3 || roles.size() != n || scheduled_times.size() != n) {
    throw std::invalid_argument("itinerary " + train_id + ": inconsistent arrays");
  }
  if (roles.front() != StopRole::Placeholder || roles.back() != StopRole::Placeholder) {
    throw std::invalid_argument("itinerary " + train_id + ": missing placeholders");
  }
  int departures = 0;
  int arrivals = 0;
  for (int j = 1; j <= last_real(); ++j) {
    if (roles[static_cast<std::size_t>(j)] == StopRole::Departure) ++departures;
    if (roles[static_cast<std::size_t>(j)] == StopRole::Arrival) ++arrivals;
    if (roles[static_cast<std::size_t>(j)] == StopRole::Placeholder) {
      throw std::invalid_argument("itinerary " + train_id + ": interior placeholder");
    }
  }
  if (departures != 1 || arrivals != 1) {
    throw std::invalid_argument("itinerary " + train_id +
                                ": needs exactly one departure and one arrival");
  }
  for (std::size_t j = 1; j < n; ++j) {
    if (scheduled_times[j] <= scheduled_times[j - 1]) {
      throw std::invalid_argument("itinerary " + train_id +
                                  ": scheduled times not strictly increasing");
    }
  }
}

std::int64_t delay_at(const TrainState& state, int index) {
  if (index < 0 || index > state.position_index) {
    throw std::out_of_range("delay_at: station index not yet passed");
  }
  return state.actual_times[static_cast<std::size_t>(index)] -
         state.itinerary->scheduled_times[static_cast<std::size_t>(index)];
}

std::int64_t TrainState::last_known_delay() const { return delay_at(*this, position_index); }

const TrainState* Snapshot::find(std::string_view train_id) const {
  for (const auto& t : trains) {
    if (t.itinerary->train_id == train_id) return &t;
  }
  return nullptr;
}

const RealizedTrain* ScheduleData::find(std::string_view train_id) const {
  auto it = by_id.find(std::string(train_id));
  return it == by_id.end() ? nullptr : &trains[it->second];
}

std::int64_t ScheduleData::active_begin() const {
  std::int64_t begin = std::numeric_limits<std::int64_t>::max();
  for (const auto& t : trains) begin = std::min(begin, t.window_open());
  return begin;
}

std::int64_t ScheduleData::active_end() const {
  std::int64_t end = std::numeric_limits<std::int64_t>::min();
  for (const auto& t : trains) {
    if (t.fully_realized()) end = std::max(end, t.window_close());
  }
  return end;
}

TrainState realized_state_at(const RealizedTrain& train, std::int64_t clock) {
  const Itinerary& it = train.itinerary;
  TrainState state;
  state.itinerary = &it;
  state.actual_times.reserve(static_cast<std::size_t>(it.post_placeholder()) + 1);
  state.actual_times.push_back(it.scheduled_times.front());  // on time at the placeholder
  int pos = 0;
  for (int j = 1; j <= train.realized_count; ++j) {
    if (train.actuals[static_cast<std::size_t>(j)] > clock) break;
    state.actual_times.push_back(train.actuals[static_cast<std::size_t>(j)]);
    pos = j;
  }
  if (pos == it.last_real()) {
    // finished: the train sits at the post-arrival placeholder, carrying the
    // final station's delay (close time = final actual + 300 s)
    state.actual_times.push_back(state.actual_times.back() + kPlaceholderWindowSeconds);
    pos = it.post_placeholder();
  }
  state.position_index = pos;
  return state;
}

Snapshot build_snapshot(const ScheduleData& data, std::int64_t clock) {
  Snapshot snap;
  snap.clock = clock;
  for (const auto& train : data.trains) {  // already sorted by id
    if (clock < train.window_open() || clock > train.window_close()) continue;
    snap.trains.push_back(realized_state_at(train, clock));
  }
  return snap;
}

}  // namespace raildelay
