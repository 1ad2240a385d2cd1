#include "raildelay/forecast.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

#include "raildelay/mdp.hpp"

namespace raildelay {

const TrainForecast* ForecastEnsemble::find(std::string_view train_id) const {
  for (const auto& t : trains) {
    if (t.train_id == train_id) return &t;
  }
  return nullptr;
}

ForecastEnsemble monte_carlo_forecast(const MlpPolicy& policy, const Snapshot& snapshot,
                                      const ScheduleData& timetable, const RailNetwork& network,
                                      const NormalizationStats& stats,
                                      const ForecastConfig& config, std::uint64_t seed,
                                      std::uint64_t snapshot_tag) {
  if (policy.head() != Head::Softmax3) {
    throw std::invalid_argument("monte_carlo_forecast: policy must have a softmax head");
  }
  const int n_traj = config.n_trajectories;
  const int n_steps = config.n_steps();

  ForecastEnsemble ens;
  ens.reference_clock = snapshot.clock;
  ens.n_trajectories = n_traj;
  ens.n_steps = n_steps;
  ens.last_step_clock = snapshot.clock + static_cast<std::int64_t>(n_steps) * config.dt;

  // cells for every remaining real station of every reference train;
  // extract_delays trims to the station cap afterwards
  std::map<std::string, std::size_t> train_slot;
  for (const auto& state : snapshot.trains) {
    TrainForecast tf;
    tf.train_id = state.itinerary->train_id;
    tf.start_position = state.position_index;
    tf.last_known_delay = state.last_known_delay();
    tf.trajectory_last_delay.assign(static_cast<std::size_t>(n_traj), tf.last_known_delay);
    for (int idx = state.position_index + 1; idx <= state.itinerary->last_real(); ++idx) {
      ForecastCell cell;
      cell.station_index = idx;
      cell.station_id = state.itinerary->stations[static_cast<std::size_t>(idx)];
      cell.scheduled_time = state.itinerary->scheduled_times[static_cast<std::size_t>(idx)];
      cell.delays.assign(static_cast<std::size_t>(n_traj), 0);
      cell.arrival_clocks.assign(static_cast<std::size_t>(n_traj), -1);
      tf.cells.push_back(std::move(cell));
    }
    train_slot[tf.train_id] = ens.trains.size();
    ens.trains.push_back(std::move(tf));
  }

  for (int traj = 0; traj < n_traj; ++traj) {
    Rng rng(hash_combine(hash_combine(seed, snapshot_tag), static_cast<std::uint64_t>(traj)));
    std::map<std::string, double> stall_floor;  // per-trajectory running floors
    Snapshot current = snapshot;

    for (int step = 0; step < n_steps; ++step) {
      JointAction joint;
      for (const auto& state : current.trains) {
        const std::string& id = state.itinerary->train_id;
        Eigen::VectorXd dist = policy.forward(
            encode_features(current, id, network, EncodeMode::Simulation, stats));
        if (config.bc_stall_clamp) {
          double& floor = stall_floor[id];
          floor = std::max(floor, dist(1));
          dist = stall_clamp(dist, floor);
        }
        joint.actions[id] = sample_action(dist, rng);
      }
      Snapshot next = step_snapshot(current, joint, timetable);

      for (const auto& state : next.trains) {
        auto slot = train_slot.find(state.itinerary->train_id);
        const TrainState* before = current.find(state.itinerary->train_id);
        const bool advanced = before && state.position_index > before->position_index;
        if (config.bc_stall_clamp && advanced) {
          stall_floor[state.itinerary->train_id] = 0.0;
        }
        if (slot == train_slot.end() || !advanced) continue;
        TrainForecast& tf = ens.trains[slot->second];
        for (int idx = before->position_index + 1; idx <= state.position_index; ++idx) {
          if (idx > state.itinerary->last_real()) break;  // post-arrival placeholder
          const std::int64_t arrival = state.actual_times[static_cast<std::size_t>(idx)];
          const std::int64_t delay =
              arrival - state.itinerary->scheduled_times[static_cast<std::size_t>(idx)];
          const std::size_t cell_idx = static_cast<std::size_t>(idx - tf.start_position - 1);
          tf.cells[cell_idx].delays[static_cast<std::size_t>(traj)] = delay;
          tf.cells[cell_idx].arrival_clocks[static_cast<std::size_t>(traj)] = arrival;
          tf.trajectory_last_delay[static_cast<std::size_t>(traj)] = delay;
        }
      }
      current = std::move(next);
      if (current.trains.empty()) break;
    }
  }
  return ens;
}

void extract_delays(ForecastEnsemble& ensemble, int k_stations) {
  for (auto& tf : ensemble.trains) {
    if (static_cast<int>(tf.cells.size()) > k_stations) {
      tf.cells.resize(static_cast<std::size_t>(k_stations));
    }
    for (auto& cell : tf.cells) {
      for (std::size_t traj = 0; traj < cell.delays.size(); ++traj) {
        if (cell.arrival_clocks[traj] >= 0) continue;
        // copy the trajectory's most recent known delay forward, enlarged so
        // the implied arrival does not precede the last simulated step
        const std::int64_t base = tf.trajectory_last_delay[traj];
        const std::int64_t floor_delay = ensemble.last_step_clock - cell.scheduled_time;
        const std::int64_t delay = std::max(base, floor_delay);
        cell.delays[traj] = delay;
        cell.arrival_clocks[traj] = cell.scheduled_time + delay;
      }
    }
  }
  ensemble.completed = true;
}

double point_forecast(std::vector<std::int64_t> samples) {
  if (samples.empty()) throw std::invalid_argument("point_forecast: empty sample set");
  std::sort(samples.begin(), samples.end());
  const std::size_t n = samples.size();
  if (n % 2 == 1) return static_cast<double>(samples[n / 2]);
  return 0.5 * (static_cast<double>(samples[n / 2 - 1]) + static_cast<double>(samples[n / 2]));
}

}  // namespace raildelay
