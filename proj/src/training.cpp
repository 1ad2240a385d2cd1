#include "raildelay/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "raildelay/mdp.hpp"

namespace raildelay {

namespace {

double elapsed_seconds(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::vector<std::size_t> shuffled_indices(std::size_t n, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) {
    std::swap(idx[i - 1], idx[uniform_index(rng, i)]);
  }
  return idx;
}

/// Shared early-stopped epoch loop for the supervised trainers. train_pass
/// runs one epoch and returns the mean training loss; val_loss evaluates the
/// held-out set. Keeps the best parameters seen.
template <typename TrainPass, typename ValLoss>
void supervised_loop(MlpPolicy& policy, int max_epochs, TrainPass&& train_pass,
                     ValLoss&& val_loss, bool has_val, TrainLog* log) {
  const int patience = std::max(1, (max_epochs + 3) / 4);  // 25% of the epoch budget
  double best_val = std::numeric_limits<double>::infinity();
  int since_best = 0;
  std::vector<Eigen::MatrixXd> best_w;
  std::vector<Eigen::VectorXd> best_b;
  const auto start = std::chrono::steady_clock::now();

  for (int epoch = 1; epoch <= max_epochs; ++epoch) {
    const double train_loss = train_pass(epoch);
    double vloss = std::numeric_limits<double>::quiet_NaN();
    if (has_val) {
      vloss = val_loss();
      if (vloss < best_val) {
        best_val = vloss;
        since_best = 0;
        best_w = policy.weights();
        best_b = policy.biases();
      } else {
        ++since_best;
      }
    }
    if (log) {
      log->push_back({epoch, train_loss, vloss, 0, 0.0, elapsed_seconds(start)});
    }
    if (has_val && since_best >= patience) break;
  }
  if (has_val && !best_w.empty()) {
    policy.weights() = best_w;
    policy.biases() = best_b;
  }
}

}  // namespace

void write_train_log(const TrainLog& log, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write training log: " + path);
  out << "epoch loss val_loss buffer_size mean_weight wall_seconds\n";
  for (const auto& e : log) {
    out << e.epoch << " " << e.loss << " " << e.val_loss << " " << e.buffer_size << " "
        << e.mean_weight << " " << e.wall_seconds << "\n";
  }
}

void DcilConfig::validate() const {
  if (trajectory_length < 1) throw std::invalid_argument("dcil: trajectory_length must be >= 1");
  if (samples_per_epoch > buffer_capacity) {
    throw std::invalid_argument("dcil: samples_per_epoch must not exceed buffer capacity");
  }
  if (alpha <= 0.0) throw std::invalid_argument("dcil: alpha must be positive");
  if (beta < 1.0) throw std::invalid_argument("dcil: beta must be >= 1");
  if (epochs < 1 || batch < 1) throw std::invalid_argument("dcil: epochs and batch must be >= 1");
}

std::vector<TrainingSample> make_bc_dataset(const ScheduleData& data,
                                            const std::vector<std::int64_t>& anchors,
                                            std::int64_t dt, const RailNetwork& network,
                                            const NormalizationStats& stats) {
  std::vector<TrainingSample> out;
  for (const std::int64_t anchor : anchors) {
    const Snapshot now = build_snapshot(data, anchor);
    if (now.trains.empty()) continue;
    const Snapshot next = build_snapshot(data, anchor + dt);
    for (const auto& state : now.trains) {
      const TrainState* after = next.find(state.itinerary->train_id);
      if (!after) continue;  // window closed during the step
      TrainingSample sample;
      sample.features =
          encode_features(now, state.itinerary->train_id, network, EncodeMode::Simulation, stats);
      sample.action = derive_expert_action(state, *after);
      sample.weight = 1.0;
      out.push_back(std::move(sample));
    }
  }
  return out;
}

std::vector<RegressionSample> make_regression_dataset(const ScheduleData& data,
                                                      const std::vector<std::int64_t>& anchors,
                                                      const RailNetwork& network,
                                                      const NormalizationStats& stats,
                                                      int k_stations) {
  std::vector<RegressionSample> out;
  for (const std::int64_t anchor : anchors) {
    const Snapshot snap = build_snapshot(data, anchor);
    for (const auto& state : snap.trains) {
      const Itinerary& it = *state.itinerary;
      if (state.position_index + 1 > it.last_real()) continue;  // nothing left to predict
      const RealizedTrain* realized = data.find(it.train_id);
      const double last_delay = static_cast<double>(state.last_known_delay());

      RegressionSample sample;
      sample.target = Eigen::VectorXd::Zero(k_stations);
      sample.mask = Eigen::VectorXd::Zero(k_stations);
      bool any = false;
      for (int k = 0; k < k_stations; ++k) {
        const int idx = state.position_index + 1 + k;
        if (!it.is_real(idx) || idx > realized->realized_count) break;
        const double delay =
            static_cast<double>(realized->actuals[static_cast<std::size_t>(idx)] -
                                it.scheduled_times[static_cast<std::size_t>(idx)]);
        sample.target(k) = delay - last_delay;
        sample.mask(k) = 1.0;
        any = true;
      }
      if (!any) continue;
      sample.features =
          encode_features(snap, it.train_id, network, EncodeMode::Regression, stats);
      out.push_back(std::move(sample));
    }
  }
  return out;
}

std::pair<Action, double> synth_label(const TrainState& expert_next,
                                      const TrainState& policy_current, double alpha,
                                      double beta) {
  if (expert_next.itinerary->train_id != policy_current.itinerary->train_id) {
    throw std::invalid_argument("synth_label: mismatched trains");
  }
  int best_action = 0;
  int best_dist = std::numeric_limits<int>::max();
  for (int a = 0; a < kNumActions; ++a) {
    const int pos = advanced_position(policy_current, Action(a));
    const int dist = std::abs(expert_next.position_index - pos);
    if (dist < best_dist) {  // ties keep the smallest action
      best_dist = dist;
      best_action = a;
    }
  }
  const int psi = itinerary_distance(expert_next, policy_current);
  const double weight = 1.0 / (1.0 + alpha * std::pow(static_cast<double>(psi), beta));
  return {Action(best_action), weight};
}

MlpPolicy bc_train(const std::vector<TrainingSample>& demos, const BcConfig& config,
                   TrainLog* log) {
  if (demos.empty()) throw std::invalid_argument("bc_train: empty dataset");
  const int d = static_cast<int>(demos.front().features.size());
  std::vector<int> dims;
  dims.push_back(d);
  dims.insert(dims.end(), config.hidden_dims.begin(), config.hidden_dims.end());
  dims.push_back(kNumActions);
  MlpPolicy policy(dims, Head::Softmax3, derive_seed(config.seed, "bc-init"));

  Rng rng(derive_seed(config.seed, "bc-train"));
  auto order = shuffled_indices(demos.size(), rng);
  const std::size_t n_val =
      std::min(demos.size() - 1,
               static_cast<std::size_t>(std::llround(config.val_fraction *
                                                     static_cast<double>(demos.size()))));
  const std::size_t n_train = demos.size() - n_val;
  std::vector<std::size_t> train_idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> val_idx(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());

  auto eval_val = [&]() {
    double total = 0.0;
    for (std::size_t i : val_idx) {
      const Eigen::VectorXd p = policy.forward(demos[i].features);
      total += -std::log(std::max(p(demos[i].action.value), 1e-300));
    }
    return val_idx.empty() ? 0.0 : total / static_cast<double>(val_idx.size());
  };

  supervised_loop(
      policy, config.epochs,
      [&](int) {
        auto epoch_order = shuffled_indices(train_idx.size(), rng);
        double loss_sum = 0.0;
        std::size_t batches = 0;
        std::vector<TrainingSample> batch;
        for (std::size_t k = 0; k < epoch_order.size();) {
          batch.clear();
          for (int b = 0; b < config.batch && k < epoch_order.size(); ++b, ++k) {
            batch.push_back(demos[train_idx[epoch_order[k]]]);
          }
          loss_sum += train_step(policy, batch, config.lr, config.weight_decay);
          ++batches;
        }
        return batches ? loss_sum / static_cast<double>(batches) : 0.0;
      },
      eval_val, !val_idx.empty(), log);
  return policy;
}

MlpPolicy regression_train(const std::vector<RegressionSample>& dataset,
                           const RegressionConfig& config, TrainLog* log) {
  if (dataset.empty()) throw std::invalid_argument("regression_train: empty dataset");
  for (const auto& s : dataset) {
    if (s.mask.sum() == 0.0) throw std::invalid_argument("regression_train: all-masked sample");
  }
  const int d = static_cast<int>(dataset.front().features.size());
  std::vector<int> dims;
  dims.push_back(d);
  dims.insert(dims.end(), config.hidden_dims.begin(), config.hidden_dims.end());
  dims.push_back(config.k_stations);
  MlpPolicy policy(dims, Head::LinearK, derive_seed(config.seed, "reg-init"));

  Rng rng(derive_seed(config.seed, "reg-train"));
  auto order = shuffled_indices(dataset.size(), rng);
  const std::size_t n_val =
      std::min(dataset.size() - 1,
               static_cast<std::size_t>(std::llround(config.val_fraction *
                                                     static_cast<double>(dataset.size()))));
  const std::size_t n_train = dataset.size() - n_val;
  std::vector<std::size_t> train_idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> val_idx(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());

  auto run_batch = [&](const std::vector<std::size_t>& idx, std::size_t begin, std::size_t end,
                       bool update) {
    const Eigen::Index cols = static_cast<Eigen::Index>(end - begin);
    Eigen::MatrixXd x(d, cols), y(config.k_stations, cols), mask(config.k_stations, cols);
    for (Eigen::Index c = 0; c < cols; ++c) {
      const auto& s = dataset[idx[begin + static_cast<std::size_t>(c)]];
      x.col(c) = s.features;
      y.col(c) = s.target;
      mask.col(c) = s.mask;
    }
    auto grads = policy.zero_gradients();
    const double loss = policy.l2_gradient(x, y, mask, grads);
    if (update) policy.adam_step(grads, config.lr, config.weight_decay);
    return loss;
  };

  auto eval_val = [&]() {
    if (val_idx.empty()) return 0.0;
    double total = 0.0;
    std::size_t batches = 0;
    for (std::size_t b = 0; b < val_idx.size(); b += 256) {
      total += run_batch(val_idx, b, std::min(val_idx.size(), b + 256), false);
      ++batches;
    }
    return total / static_cast<double>(batches);
  };

  supervised_loop(
      policy, config.epochs,
      [&](int) {
        auto epoch_order = shuffled_indices(train_idx.size(), rng);
        std::vector<std::size_t> shuffled(train_idx.size());
        for (std::size_t i = 0; i < shuffled.size(); ++i) shuffled[i] = train_idx[epoch_order[i]];
        double loss_sum = 0.0;
        std::size_t batches = 0;
        for (std::size_t b = 0; b < shuffled.size(); b += static_cast<std::size_t>(config.batch)) {
          loss_sum += run_batch(shuffled, b,
                                std::min(shuffled.size(), b + static_cast<std::size_t>(config.batch)),
                                true);
          ++batches;
        }
        return batches ? loss_sum / static_cast<double>(batches) : 0.0;
      },
      eval_val, !val_idx.empty(), log);
  return policy;
}

MlpPolicy dcil_train(const TrajectoryDataset& demos, const DcilConfig& config, MlpPolicy policy,
                     TrainLog* log) {
  config.validate();
  if (!demos.data || !demos.network || !demos.stats) {
    throw std::invalid_argument("dcil_train: incomplete dataset");
  }
  const int horizon = config.trajectory_length;
  std::vector<std::int64_t> starts;
  for (const std::int64_t anchor : demos.anchors) {
    if (anchor + horizon * demos.dt < demos.grid_end) starts.push_back(anchor);
  }
  if (starts.empty()) {
    throw std::invalid_argument("dcil_train: no trajectory of length T+1 fits the grid");
  }

  ReplayBuffer buffer(config.buffer_capacity);
  const auto t0 = std::chrono::steady_clock::now();

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    // fresh per-epoch stream so reruns of an epoch are self-contained
    Rng rng(hash_combine(derive_seed(config.seed, "dcil-epoch"), static_cast<std::uint64_t>(epoch)));

    std::size_t pushed = 0;
    double weight_sum = 0.0;
    while (pushed < config.samples_per_epoch) {
      const std::int64_t start = starts[uniform_index(rng, starts.size())];
      Snapshot rolled = build_snapshot(*demos.data, start);
      if (rolled.trains.empty()) continue;
      for (int t = 0; t < horizon && pushed < config.samples_per_epoch; ++t) {
        const Snapshot expert_next = build_snapshot(*demos.data, start + (t + 1) * demos.dt);
        JointAction joint;
        for (const auto& state : rolled.trains) {
          Eigen::VectorXd x = encode_features(rolled, state.itinerary->train_id, *demos.network,
                                              EncodeMode::Simulation, *demos.stats);
          const Eigen::VectorXd dist = policy.forward(x);
          joint.actions[state.itinerary->train_id] =
              config.greedy_rollouts ? greedy_action(dist) : sample_action(dist, rng);
          // labels only exist where the expert still tracks the train
          const TrainState* expert = expert_next.find(state.itinerary->train_id);
          if (!expert) continue;
          auto [label, weight] = synth_label(*expert, state, config.alpha, config.beta);
          buffer.push({std::move(x), label, weight});
          weight_sum += weight;
          ++pushed;
        }
        rolled = step_snapshot(rolled, joint, *demos.data);
        if (rolled.trains.empty()) break;
      }
    }

    if (buffer.empty()) throw std::runtime_error("dcil_train: empty buffer at update time");
    auto order = shuffled_indices(buffer.size(), rng);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    std::vector<TrainingSample> batch;
    for (std::size_t k = 0; k < order.size();) {
      batch.clear();
      for (int b = 0; b < config.batch && k < order.size(); ++b, ++k) {
        batch.push_back(buffer[order[k]]);
      }
      loss_sum += train_step(policy, batch, config.lr, config.weight_decay);
      ++batches;
    }

    if (log) {
      log->push_back({epoch, batches ? loss_sum / static_cast<double>(batches) : 0.0,
                      std::numeric_limits<double>::quiet_NaN(), buffer.size(),
                      pushed ? weight_sum / static_cast<double>(pushed) : 0.0,
                      elapsed_seconds(t0)});
    }
  }
  return policy;
}

}  // namespace raildelay
