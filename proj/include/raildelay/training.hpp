#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "raildelay/data.hpp"
#include "raildelay/features.hpp"
#include "raildelay/policy.hpp"
#include "raildelay/replay_buffer.hpp"

namespace raildelay {

struct RegressionSample {
  Eigen::VectorXd features;
  Eigen::VectorXd target;  // delta-delay per future station, seconds
  Eigen::VectorXd mask;    // 1 = station exists, 0 = beyond itinerary
};

struct TrainLogEntry {
  int epoch = 0;
  double loss = 0.0;
  double val_loss = 0.0;        // NaN when no validation split applies
  std::size_t buffer_size = 0;  // DCIL only
  double mean_weight = 0.0;     // DCIL only
  double wall_seconds = 0.0;
};
using TrainLog = std::vector<TrainLogEntry>;

void write_train_log(const TrainLog& log, const std::string& path);

struct BcConfig {
  std::vector<int> hidden_dims = {64, 128, 64};
  int epochs = 60;
  int batch = 32;
  double lr = 1e-3;
  double weight_decay = kDefaultWeightDecay;
  double val_fraction = 0.1;
  std::uint64_t seed = 0;
};

struct RegressionConfig {
  std::vector<int> hidden_dims = {64, 128, 64};
  int k_stations = 15;
  int epochs = 60;
  int batch = 32;
  double lr = 1e-4;
  double weight_decay = kDefaultWeightDecay;
  double val_fraction = 0.1;
  std::uint64_t seed = 0;
};

struct DcilConfig {
  std::vector<int> hidden_dims = {64, 128, 64};
  int epochs = 30;
  std::size_t buffer_capacity = 30000;
  std::size_t samples_per_epoch = 10000;
  int trajectory_length = 5;
  int batch = 16;
  double lr = 5e-5;
  double alpha = 0.5;
  double beta = 1.0;
  double weight_decay = kDefaultWeightDecay;
  bool greedy_rollouts = false;  // ablation; default samples like the rollout
  std::uint64_t seed = 0;

  void validate() const;
};

/// Expert snapshot trajectories for DCIL: anchors into the snapshot grid from
/// which T+1 consecutive snapshots can be built.
struct TrajectoryDataset {
  const ScheduleData* data = nullptr;
  const RailNetwork* network = nullptr;
  const NormalizationStats* stats = nullptr;
  std::vector<std::int64_t> anchors;
  std::int64_t dt = kStepSeconds;
  std::int64_t grid_end = 0;  // exclusive
};

/// (features, expert action) pairs over consecutive snapshot pairs.
std::vector<TrainingSample> make_bc_dataset(const ScheduleData& data,
                                            const std::vector<std::int64_t>& anchors,
                                            std::int64_t dt, const RailNetwork& network,
                                            const NormalizationStats& stats);

/// (features, delta-delay target, mask) tuples; trains with no future station
/// are skipped rather than emitted all-masked.
std::vector<RegressionSample> make_regression_dataset(const ScheduleData& data,
                                                      const std::vector<std::int64_t>& anchors,
                                                      const RailNetwork& network,
                                                      const NormalizationStats& stats,
                                                      int k_stations);

/// Synthetic corrective label and drift weight for one train: the action whose
/// successor position lands closest to the expert's next state (smallest
/// action on ties), weighted by 1 / (1 + alpha * psi^beta).
std::pair<Action, double> synth_label(const TrainState& expert_next,
                                      const TrainState& policy_current, double alpha,
                                      double beta);

MlpPolicy bc_train(const std::vector<TrainingSample>& demos, const BcConfig& config,
                   TrainLog* log = nullptr);

MlpPolicy regression_train(const std::vector<RegressionSample>& dataset,
                           const RegressionConfig& config, TrainLog* log = nullptr);

/// Algorithm: per epoch, roll the current policy out from expert starts for T
/// steps, push (state, synthetic action, weight) triples until
/// samples_per_epoch new entries landed in the FIFO buffer, then run one full
/// pass of weighted Adam mini-batches over the buffer.
MlpPolicy dcil_train(const TrajectoryDataset& demos, const DcilConfig& config, MlpPolicy policy,
                     TrainLog* log = nullptr);

}  // namespace raildelay
