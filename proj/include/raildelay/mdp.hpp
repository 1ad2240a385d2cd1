#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "raildelay/schedule.hpp"

namespace raildelay {

inline constexpr int kNumActions = 3;

/// Stations advanced in one 30 s step; capped at 2.
struct Action {
  int value = 0;
  Action() = default;
  explicit Action(int v);
  bool operator==(const Action&) const = default;
};

/// One action per active train; keys must match the snapshot exactly.
struct JointAction {
  std::map<std::string, Action> actions;
};

/// Position after applying `action` to `state`, clipped so the train never
/// moves past the post-arrival placeholder.
int advanced_position(const TrainState& state, Action action);

/// Per-train transition: advances the position, stamping every newly passed
/// station with new_clock. Action 0 leaves the state untouched.
TrainState apply_action(const TrainState& state, Action action, std::int64_t new_clock);

/// Snapshot-level transition: clock moves 30 s, every train moves per the
/// joint action, trains whose activity window opens are injected at their
/// placeholder and trains whose window closed are dropped.
Snapshot step_snapshot(const Snapshot& snapshot, const JointAction& joint,
                       const ScheduleData& timetable);

/// Station count separating two states of the same train along its itinerary.
int itinerary_distance(const TrainState& reference, const TrainState& other);

/// Observed station advance between two consecutive logged states, capped at 2.
Action derive_expert_action(const TrainState& prev, const TrainState& next);

}  // namespace raildelay
