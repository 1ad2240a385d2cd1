#include "raildelay/mdp.hpp"

#include <algorithm>
#include <cstdlib>
#include <stdexcept>

namespace raildelay {

Action::Action(int v) : value(v) {
  if (v < 0 || v >= kNumActions) {
    throw std::invalid_argument("action out of range: " + std::to_string(v));
  }
}

int advanced_position(const TrainState& state, Action action) {
  const int room = state.itinerary->post_placeholder() - state.position_index;
  return state.position_index + std::min(action.value, room);
}

TrainState apply_action(const TrainState& state, Action action, std::int64_t new_clock) {
  TrainState next = state;
  const int target = advanced_position(state, action);
  for (int j = state.position_index + 1; j <= target; ++j) {
    next.actual_times.push_back(new_clock);
  }
  next.position_index = target;
  return next;
}

Snapshot step_snapshot(const Snapshot& snapshot, const JointAction& joint,
                       const ScheduleData& timetable) {
  const std::int64_t new_clock = snapshot.clock + kStepSeconds;
  Snapshot next;
  next.clock = new_clock;
  next.trains.reserve(snapshot.trains.size());

  for (const auto& state : snapshot.trains) {
    auto it = joint.actions.find(state.itinerary->train_id);
    if (it == joint.actions.end()) {
      throw std::invalid_argument("joint action missing train: " + state.itinerary->train_id);
    }
    TrainState moved = apply_action(state, it->second, new_clock);
    // window closes 5 min after the simulated final arrival
    const int last = moved.itinerary->last_real();
    if (moved.position_index >= last) {
      const std::int64_t final_arrival = moved.actual_times[static_cast<std::size_t>(last)];
      if (new_clock > final_arrival + kPlaceholderWindowSeconds) continue;
    }
    next.trains.push_back(std::move(moved));
  }

  // inject trains whose window opened during this step
  for (const auto& train : timetable.trains) {
    const std::int64_t open = train.window_open();
    if (open > snapshot.clock && open <= new_clock) {
      TrainState fresh;
      fresh.itinerary = &train.itinerary;
      fresh.position_index = 0;
      fresh.actual_times = {train.itinerary.scheduled_times.front()};
      next.trains.push_back(std::move(fresh));
    }
  }
  std::sort(next.trains.begin(), next.trains.end(),
            [](const TrainState& a, const TrainState& b) {
              return a.itinerary->train_id < b.itinerary->train_id;
            });
  return next;
}

int itinerary_distance(const TrainState& reference, const TrainState& other) {
  if (reference.itinerary->train_id != other.itinerary->train_id) {
    throw std::invalid_argument("itinerary_distance: mismatched trains");
  }
  return std::abs(reference.position_index - other.position_index);
}

Action derive_expert_action(const TrainState& prev, const TrainState& next) {
  if (prev.itinerary->train_id != next.itinerary->train_id) {
    throw std::invalid_argument("derive_expert_action: mismatched trains");
  }
  const int advance = next.position_index - prev.position_index;
  if (advance < 0) {
    throw std::runtime_error("derive_expert_action: negative advance in log for train " +
                             prev.itinerary->train_id);
  }
  return Action(std::min(advance, kNumActions - 1));
}

}  // namespace raildelay
