#include "raildelay/app.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

#include "raildelay/checkpoint.hpp"
#include "raildelay/config.hpp"
#include "raildelay/data.hpp"
#include "raildelay/forecast.hpp"
#include "raildelay/metrics.hpp"
#include "raildelay/training.hpp"

namespace raildelay {

namespace {

namespace fs = std::filesystem;

template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) break;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const int n_threads = std::min<int>(workers, static_cast<int>(n));
  pool.reserve(static_cast<std::size_t>(n_threads));
  for (int w = 0; w < n_threads; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

struct CommonOptions {
  std::string config_file;
  std::vector<std::string> overrides;
  std::string out_dir;
  std::int64_t seed_override = -1;
  int workers_override = -1;
};

RunConfig resolve_config(const CommonOptions& opt) {
  RunConfig cfg;
  if (!opt.config_file.empty()) cfg.load_file(opt.config_file);
  for (const auto& kv : opt.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("--set expects key=value, got: " + kv);
    }
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (opt.seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(opt.seed_override);
  if (opt.workers_override > 0) cfg.workers = opt.workers_override;
  return cfg;
}

fs::path prepare_out_dir(const CommonOptions& opt, const RunConfig& cfg) {
  if (opt.out_dir.empty()) throw std::invalid_argument("--out is required");
  fs::path dir(opt.out_dir);
  fs::create_directories(dir);
  std::ofstream resolved(dir / "config_resolved.txt");
  if (!resolved) throw std::runtime_error("cannot write resolved config");
  resolved << "# config_hash=" << cfg.config_hash() << "\n" << cfg.resolved_text();
  return dir;
}

std::vector<std::string> artifact_comments(const RunConfig& cfg) {
  return {"seed=" + std::to_string(cfg.seed), "config_hash=" + std::to_string(cfg.config_hash())};
}

SyntheticConfig synthetic_config(const RunConfig& cfg) {
  SyntheticConfig sc;
  sc.n_days = cfg.gen_n_days;
  sc.trains_per_day = cfg.gen_trains_per_day;
  sc.base_run_seconds = cfg.gen_base_run_seconds;
  sc.incident_rate_per_hour = cfg.gen_incident_rate_per_hour;
  sc.delay_lognormal_mu = cfg.gen_delay_lognormal_mu;
  sc.delay_lognormal_sigma = cfg.gen_delay_lognormal_sigma;
  sc.min_headway_seconds = cfg.gen_min_headway_seconds;
  sc.propagation_factor = cfg.gen_propagation_factor;
  sc.recovery_seconds_per_stop = cfg.gen_recovery_seconds_per_stop;
  sc.day0_epoch = cfg.gen_day0_epoch;
  sc.seed = derive_seed(cfg.seed, "gen");
  return sc;
}

int cmd_gen_data(const CommonOptions& opt) {
  const RunConfig cfg = resolve_config(opt);
  const fs::path dir = prepare_out_dir(opt, cfg);

  RailNetwork network = default_network();
  const SyntheticResult result = generate_synthetic(synthetic_config(cfg), network);

  SplitBoundaries bounds;
  bounds.train_end = cfg.gen_day0_epoch + static_cast<std::int64_t>(cfg.split_train_days) * 86400;
  bounds.val_end = bounds.train_end + static_cast<std::int64_t>(cfg.split_val_days) * 86400;
  const auto splits = temporal_split(result.log, bounds);

  const auto comments = artifact_comments(cfg);
  save_network_file(network, (dir / "network.txt").string());
  write_csv_file(result.timetable, (dir / "timetable.csv").string(), comments);
  write_csv_file(splits[0], (dir / "train.csv").string(), comments);
  write_csv_file(splits[1], (dir / "val.csv").string(), comments);
  write_csv_file(splits[2], (dir / "test.csv").string(), comments);
  std::cout << "gen-data: " << splits[0].records.size() << "/" << splits[1].records.size() << "/"
            << splits[2].records.size() << " train/val/test records under " << dir << "\n";
  return 0;
}

struct LoadedData {
  RailNetwork network;
  ScheduleData data;
};

LoadedData load_inputs(const std::string& network_path, const std::string& csv_path) {
  if (network_path.empty()) throw std::invalid_argument("--network is required");
  if (csv_path.empty()) throw std::invalid_argument("missing input csv path");
  LoadedData loaded;
  loaded.network = load_network_file(network_path);
  spectral_embedding(loaded.network);
  IngestReport report;
  const OperationalLog log = ingest_csv(csv_path, &report);
  if (report.suspicious) {
    std::cerr << "warning: ingest discarded " << report.dropped_trains << "/"
              << report.total_trains << " trains from " << csv_path << "\n";
  }
  loaded.data = structure_log(log);
  return loaded;
}

int cmd_train(const CommonOptions& opt, const std::string& method, const std::string& data_csv,
              const std::string& network_path) {
  if (method != "regression" && method != "bc" && method != "dcil") {
    throw std::invalid_argument("--method must be regression, bc or dcil");
  }
  const RunConfig cfg = resolve_config(opt);
  const fs::path dir = prepare_out_dir(opt, cfg);
  const LoadedData loaded = load_inputs(network_path, data_csv);

  Rng snap_rng(derive_seed(cfg.seed, "snapshots"));
  const SnapshotDataset ds = build_snapshot_dataset(loaded.data, cfg.data_dt_seconds,
                                                    cfg.data_subsample_fraction, snap_rng);
  const NormalizationStats stats = fit_normalization(loaded.data, ds.anchors, loaded.network);

  TrainLog tlog;
  Checkpoint ckpt;
  ckpt.stats = stats;
  ckpt.method = method;
  ckpt.seed = cfg.seed;
  ckpt.config_hash = cfg.config_hash();

  if (method == "regression") {
    const auto dataset = make_regression_dataset(loaded.data, ds.anchors, loaded.network, stats,
                                                 cfg.forecast_k_stations);
    RegressionConfig rc;
    rc.hidden_dims = cfg.hidden_dims();
    rc.k_stations = cfg.forecast_k_stations;
    rc.epochs = cfg.reg_epochs;
    rc.batch = cfg.reg_batch;
    rc.lr = cfg.reg_lr;
    rc.weight_decay = cfg.policy_weight_decay;
    rc.val_fraction = cfg.reg_val_fraction;
    rc.seed = derive_seed(cfg.seed, "regression");
    ckpt.policy = regression_train(dataset, rc, &tlog);
  } else if (method == "bc") {
    const auto demos =
        make_bc_dataset(loaded.data, ds.anchors, ds.dt, loaded.network, stats);
    BcConfig bc;
    bc.hidden_dims = cfg.hidden_dims();
    bc.epochs = cfg.bc_epochs;
    bc.batch = cfg.bc_batch;
    bc.lr = cfg.bc_lr;
    bc.weight_decay = cfg.policy_weight_decay;
    bc.val_fraction = cfg.bc_val_fraction;
    bc.seed = derive_seed(cfg.seed, "bc");
    ckpt.policy = bc_train(demos, bc, &tlog);
  } else {
    TrajectoryDataset td;
    td.data = &loaded.data;
    td.network = &loaded.network;
    td.stats = &stats;
    td.anchors = ds.anchors;
    td.dt = ds.dt;
    td.grid_end = ds.grid_end;
    DcilConfig dc;
    dc.hidden_dims = cfg.hidden_dims();
    dc.epochs = cfg.dcil_epochs;
    dc.buffer_capacity = static_cast<std::size_t>(cfg.dcil_buffer_capacity);
    dc.samples_per_epoch = static_cast<std::size_t>(cfg.dcil_samples_per_epoch);
    dc.trajectory_length = cfg.dcil_trajectory_length;
    dc.batch = cfg.dcil_batch;
    dc.lr = cfg.dcil_lr;
    dc.alpha = cfg.dcil_alpha;
    dc.beta = cfg.dcil_beta;
    dc.weight_decay = cfg.policy_weight_decay;
    dc.greedy_rollouts = cfg.dcil_greedy_rollouts;
    dc.seed = derive_seed(cfg.seed, "dcil");

    std::vector<int> dims;
    dims.push_back(feature_dimension(EncodeMode::Simulation));
    for (int h : dc.hidden_dims) dims.push_back(h);
    dims.push_back(kNumActions);
    MlpPolicy fresh(dims, Head::Softmax3, derive_seed(cfg.seed, "dcil-init"));
    ckpt.policy = dcil_train(td, dc, std::move(fresh), &tlog);
  }

  save_checkpoint_file(ckpt, (dir / "checkpoint.txt").string());
  write_train_log(tlog, (dir / "training_log.txt").string());
  std::cout << "train: wrote " << (dir / "checkpoint.txt") << "\n";
  return 0;
}

/// Anchors of non-empty snapshots, uniformly thinned to n via a seeded
/// shuffle, returned sorted.
std::vector<std::int64_t> eval_anchors(const ScheduleData& data, const RunConfig& cfg) {
  Rng rng(derive_seed(cfg.seed, "eval"));
  SnapshotDataset grid = build_snapshot_dataset(data, cfg.data_dt_seconds, 1.0, rng);
  std::vector<std::int64_t> eligible;
  for (std::int64_t anchor : grid.anchors) {
    if (!build_snapshot(data, anchor).trains.empty()) eligible.push_back(anchor);
  }
  if (eligible.empty()) throw std::runtime_error("no non-empty snapshots in the input");
  for (std::size_t i = eligible.size(); i > 1; --i) {
    std::swap(eligible[i - 1], eligible[uniform_index(rng, i)]);
  }
  const std::size_t keep = std::min<std::size_t>(eligible.size(),
                                                 static_cast<std::size_t>(cfg.eval_n_snapshots));
  eligible.resize(keep);
  std::sort(eligible.begin(), eligible.end());
  return eligible;
}

struct SnapshotPredictions {
  std::vector<PredictionRecord> records;
  std::vector<CalibrationEvent> calibration;
};

SnapshotPredictions predict_snapshot(const Checkpoint& ckpt, const LoadedData& loaded,
                                     const RunConfig& cfg, std::int64_t anchor,
                                     bool want_calibration) {
  SnapshotPredictions out;
  const Snapshot snapshot = build_snapshot(loaded.data, anchor);
  const std::int64_t horizon = cfg.forecast_horizon_seconds;

  auto observed_of = [&](const TrainState& state, int idx) -> const std::int64_t* {
    const RealizedTrain* realized = loaded.data.find(state.itinerary->train_id);
    if (!realized || idx > realized->realized_count) return nullptr;
    return &realized->actuals[static_cast<std::size_t>(idx)];
  };

  if (ckpt.policy.head() == Head::LinearK) {
    for (const auto& state : snapshot.trains) {
      const Itinerary& it = *state.itinerary;
      if (state.position_index + 1 > it.last_real()) continue;
      const Eigen::VectorXd features =
          encode_features(snapshot, it.train_id, loaded.network, EncodeMode::Regression, ckpt.stats);
      const Eigen::VectorXd delta = ckpt.policy.forward(features);
      const double last = static_cast<double>(state.last_known_delay());
      for (int k = 0; k < ckpt.policy.output_dim(); ++k) {
        const int idx = state.position_index + 1 + k;
        if (!it.is_real(idx)) break;
        const std::int64_t* actual = observed_of(state, idx);
        if (!actual) break;
        PredictionRecord rec;
        rec.train_id = it.train_id;
        rec.station_id = it.stations[static_cast<std::size_t>(idx)];
        rec.station_index = idx;
        rec.predicted_delay = delta(k) + last;
        rec.observed_arrival = *actual;
        rec.observed_delay = *actual - it.scheduled_times[static_cast<std::size_t>(idx)];
        rec.reference_clock = anchor;
        out.records.push_back(std::move(rec));
      }
    }
    return out;
  }

  ForecastConfig fc;
  fc.n_trajectories = cfg.forecast_n_trajectories;
  fc.horizon_seconds = horizon;
  fc.dt = cfg.data_dt_seconds;
  fc.k_stations = cfg.forecast_k_stations;
  fc.bc_stall_clamp = ckpt.method == "bc";
  ForecastEnsemble ens =
      monte_carlo_forecast(ckpt.policy, snapshot, loaded.data, loaded.network, ckpt.stats, fc,
                           derive_seed(cfg.seed, "forecast"), static_cast<std::uint64_t>(anchor));
  extract_delays(ens, fc.k_stations);

  for (const auto& tf : ens.trains) {
    const TrainState* state = snapshot.find(tf.train_id);
    for (const auto& cell : tf.cells) {
      const std::int64_t* actual = observed_of(*state, cell.station_index);
      if (!actual) break;
      PredictionRecord rec;
      rec.train_id = tf.train_id;
      rec.station_id = cell.station_id;
      rec.station_index = cell.station_index;
      rec.predicted_delay = point_forecast(cell.delays);
      rec.observed_arrival = *actual;
      rec.observed_delay = *actual - cell.scheduled_time;
      rec.reference_clock = anchor;
      out.records.push_back(std::move(rec));
      if (want_calibration) {
        const std::int64_t lead = *actual - anchor;
        if (lead > 0 && lead <= horizon) {
          CalibrationEvent ev;
          ev.samples.reserve(cell.delays.size());
          for (std::int64_t d : cell.delays) ev.samples.push_back(static_cast<double>(d));
          ev.observed = static_cast<double>(rec.observed_delay);
          out.calibration.push_back(std::move(ev));
        }
      }
    }
  }
  return out;
}

SnapshotPredictions predict_all(const Checkpoint& ckpt, const LoadedData& loaded,
                                const RunConfig& cfg, bool want_calibration) {
  const auto anchors = eval_anchors(loaded.data, cfg);
  std::vector<SnapshotPredictions> per_anchor(anchors.size());
  parallel_for(anchors.size(), cfg.workers, [&](std::size_t i) {
    per_anchor[i] = predict_snapshot(ckpt, loaded, cfg, anchors[i], want_calibration);
  });
  SnapshotPredictions all;
  for (auto& part : per_anchor) {
    all.records.insert(all.records.end(), part.records.begin(), part.records.end());
    all.calibration.insert(all.calibration.end(), part.calibration.begin(),
                           part.calibration.end());
  }
  return all;
}

int cmd_evaluate(const CommonOptions& opt, const std::string& checkpoint_path,
                 const std::string& test_csv, const std::string& network_path) {
  const RunConfig cfg = resolve_config(opt);
  const fs::path dir = prepare_out_dir(opt, cfg);
  const Checkpoint ckpt = load_checkpoint_file(checkpoint_path);
  const LoadedData loaded = load_inputs(network_path, test_csv);

  const auto predictions = predict_all(ckpt, loaded, cfg, false);
  const EvaluationReport report = evaluate(predictions.records, cfg.forecast_horizon_seconds);
  write_report_text(report, (dir / "report.txt").string(), cfg.seed, cfg.config_hash());
  write_report_csv(report, (dir / "report.csv").string(), cfg.seed, cfg.config_hash());
  std::cout << "evaluate: mae=" << report.mae << "s rmse=" << report.rmse << "s over "
            << report.n_predictions << " events\n";
  return 0;
}

int cmd_calibrate(const CommonOptions& opt, const std::string& checkpoint_path,
                  const std::string& test_csv, const std::string& network_path) {
  const RunConfig cfg = resolve_config(opt);
  const fs::path dir = prepare_out_dir(opt, cfg);
  const Checkpoint ckpt = load_checkpoint_file(checkpoint_path);
  if (ckpt.policy.head() != Head::Softmax3) {
    throw std::invalid_argument("calibrate needs a simulation checkpoint (softmax head)");
  }
  const LoadedData loaded = load_inputs(network_path, test_csv);

  const auto predictions = predict_all(ckpt, loaded, cfg, true);
  const auto levels = default_calibration_levels();
  const auto curve = calibration_curve(predictions.calibration, levels);
  write_calibration_csv(curve, (dir / "calibration.csv").string(), cfg.seed, cfg.config_hash());
  std::cout << "calibrate: " << predictions.calibration.size() << " events\n";
  return 0;
}

int cmd_simulate(const CommonOptions& opt, const std::string& checkpoint_path,
                 const std::string& test_csv, const std::string& network_path,
                 std::int64_t clock) {
  const RunConfig cfg = resolve_config(opt);
  const fs::path dir = prepare_out_dir(opt, cfg);
  const Checkpoint ckpt = load_checkpoint_file(checkpoint_path);
  if (ckpt.policy.head() != Head::Softmax3) {
    throw std::invalid_argument("simulate needs a simulation checkpoint (softmax head)");
  }
  const LoadedData loaded = load_inputs(network_path, test_csv);

  std::int64_t anchor = clock;
  if (anchor < 0) anchor = eval_anchors(loaded.data, cfg).front();
  const Snapshot snapshot = build_snapshot(loaded.data, anchor);
  if (snapshot.trains.empty()) throw std::runtime_error("simulate: snapshot has no trains");

  ForecastConfig fc;
  fc.n_trajectories = cfg.forecast_n_trajectories;
  fc.horizon_seconds = cfg.forecast_horizon_seconds;
  fc.dt = cfg.data_dt_seconds;
  fc.k_stations = cfg.forecast_k_stations;
  fc.bc_stall_clamp = ckpt.method == "bc";
  const ForecastEnsemble ens =
      monte_carlo_forecast(ckpt.policy, snapshot, loaded.data, loaded.network, ckpt.stats, fc,
                           derive_seed(cfg.seed, "forecast"), static_cast<std::uint64_t>(anchor));

  std::ofstream out(dir / "trajectories.csv");
  if (!out) throw std::runtime_error("cannot write trajectories.csv");
  out << "# seed=" << cfg.seed << " config_hash=" << cfg.config_hash()
      << " reference_clock=" << ens.reference_clock << " steps=" << ens.n_steps << "\n";
  out << "trajectory,train_id,station_index,station_id,scheduled_time,arrival_clock,delay\n";
  for (const auto& tf : ens.trains) {
    for (const auto& cell : tf.cells) {
      for (int traj = 0; traj < ens.n_trajectories; ++traj) {
        out << traj << "," << tf.train_id << "," << cell.station_index << "," << cell.station_id
            << "," << cell.scheduled_time << ",";
        if (cell.arrival_clocks[static_cast<std::size_t>(traj)] >= 0) {
          out << cell.arrival_clocks[static_cast<std::size_t>(traj)] << ","
              << cell.delays[static_cast<std::size_t>(traj)];
        } else {
          out << ",";  // never reached within the simulated steps
        }
        out << "\n";
      }
    }
  }
  std::cout << "simulate: wrote " << (dir / "trajectories.csv") << "\n";
  return 0;
}

}  // namespace

int run_command(const std::vector<std::string>& args) {
  CLI::App app{"stochastic rail-network delay simulation and forecasting"};
  app.require_subcommand(1);

  CommonOptions opt;
  std::string method, data_csv, network_path, checkpoint_path, test_csv;
  std::int64_t clock = -1;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config_file, "key=value config file");
    sub->add_option("--set", opt.overrides, "override a config key (key=value)");
    sub->add_option("--seed", opt.seed_override, "master seed override");
    sub->add_option("--workers", opt.workers_override, "worker thread count");
    sub->add_option("--out", opt.out_dir, "run output directory")->required();
  };

  CLI::App* gen = app.add_subcommand("gen-data", "generate a synthetic dataset");
  add_common(gen);

  CLI::App* train = app.add_subcommand("train", "train a policy or regression model");
  add_common(train);
  train->add_option("--method", method, "regression | bc | dcil")->required();
  train->add_option("--data", data_csv, "training csv")->required();
  train->add_option("--network", network_path, "network definition file")->required();

  CLI::App* eval = app.add_subcommand("evaluate", "evaluate a checkpoint on test data");
  add_common(eval);
  eval->add_option("--checkpoint", checkpoint_path, "checkpoint file")->required();
  eval->add_option("--test", test_csv, "test csv")->required();
  eval->add_option("--network", network_path, "network definition file")->required();

  CLI::App* calib = app.add_subcommand("calibrate", "prediction-interval calibration curve");
  add_common(calib);
  calib->add_option("--checkpoint", checkpoint_path, "checkpoint file")->required();
  calib->add_option("--test", test_csv, "test csv")->required();
  calib->add_option("--network", network_path, "network definition file")->required();

  CLI::App* sim = app.add_subcommand("simulate", "dump one ensemble's raw trajectories");
  add_common(sim);
  sim->add_option("--checkpoint", checkpoint_path, "checkpoint file")->required();
  sim->add_option("--test", test_csv, "snapshot source csv")->required();
  sim->add_option("--network", network_path, "network definition file")->required();
  sim->add_option("--clock", clock, "snapshot clock (epoch seconds); default first eligible");

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  try {
    app.parse(argv_rev);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (gen->parsed()) return cmd_gen_data(opt);
    if (train->parsed()) return cmd_train(opt, method, data_csv, network_path);
    if (eval->parsed()) return cmd_evaluate(opt, checkpoint_path, test_csv, network_path);
    if (calib->parsed()) return cmd_calibrate(opt, checkpoint_path, test_csv, network_path);
    if (sim->parsed()) return cmd_simulate(opt, checkpoint_path, test_csv, network_path, clock);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace raildelay
