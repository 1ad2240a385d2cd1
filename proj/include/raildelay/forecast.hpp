#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "raildelay/features.hpp"
#include "raildelay/policy.hpp"
#include "raildelay/schedule.hpp"

namespace raildelay {

struct ForecastConfig {
  int n_trajectories = 50;
  std::int64_t horizon_seconds = 1800;
  std::int64_t dt = kStepSeconds;
  int k_stations = 15;
  bool bc_stall_clamp = false;  // BC evaluation rollouts only

  int n_steps() const {  // 10% extra steps beyond the horizon
    return static_cast<int>((11 * horizon_seconds + 10 * dt - 1) / (10 * dt));
  }
};

/// Per-trajectory samples for one future station of one train. arrival_clock
/// is -1 until the rollout reached the station or copy-forward filled it in.
struct ForecastCell {
  int station_index = 0;
  std::string station_id;
  std::int64_t scheduled_time = 0;
  std::vector<std::int64_t> delays;
  std::vector<std::int64_t> arrival_clocks;
};

struct TrainForecast {
  std::string train_id;
  int start_position = 0;
  std::int64_t last_known_delay = 0;
  std::vector<ForecastCell> cells;  // itinerary order
  std::vector<std::int64_t> trajectory_last_delay;  // most recent delay per trajectory
};

struct ForecastEnsemble {
  std::int64_t reference_clock = 0;
  int n_trajectories = 0;
  int n_steps = 0;
  std::int64_t last_step_clock = 0;
  bool completed = false;  // copy-forward applied
  std::vector<TrainForecast> trains;  // sorted by id

  const TrainForecast* find(std::string_view train_id) const;
};

/// Monte Carlo rollout of the policy from `snapshot`: n_trajectories
/// independent runs of n_steps 30 s transitions, per-train sampled actions,
/// per-trajectory stall floors when bc_stall_clamp is on. Arrival clocks are
/// recorded for every real station passed. Trajectory t draws from a stream
/// seeded hash(seed, snapshot_tag, t) so results are worker-order free.
ForecastEnsemble monte_carlo_forecast(const MlpPolicy& policy, const Snapshot& snapshot,
                                      const ScheduleData& timetable, const RailNetwork& network,
                                      const NormalizationStats& stats,
                                      const ForecastConfig& config, std::uint64_t seed,
                                      std::uint64_t snapshot_tag = 0);

/// Completes the ensemble: keeps at most k future stations per train and fills
/// every unreached (trajectory, station) with the trajectory's most recent
/// known delay, enlarged so the implied arrival never precedes the last
/// simulated step.
void extract_delays(ForecastEnsemble& ensemble, int k_stations = 15);

/// Median; an even count averages the two middle order statistics.
double point_forecast(std::vector<std::int64_t> samples);

}  // namespace raildelay
