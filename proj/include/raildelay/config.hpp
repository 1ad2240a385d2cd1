#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace raildelay {

/// Flat key=value run configuration with section-prefixed keys
/// (e.g. dcil.alpha=0.5). Unknown keys are rejected; file values are applied
/// first, CLI overrides second; every run logs the fully resolved text.
struct RunConfig {
  std::uint64_t seed = 7;
  int workers = 4;

  // synthetic generator
  int gen_n_days = 18;
  int gen_trains_per_day = 42;
  std::int64_t gen_base_run_seconds = 240;
  double gen_incident_rate_per_hour = 0.30;
  double gen_delay_lognormal_mu = 5.48;
  double gen_delay_lognormal_sigma = 0.9;
  std::int64_t gen_min_headway_seconds = 120;
  double gen_propagation_factor = 0.8;
  std::int64_t gen_recovery_seconds_per_stop = 30;
  std::int64_t gen_day0_epoch = 1735689600;

  // temporal split, in whole days from day0
  int split_train_days = 14;
  int split_val_days = 2;
  int split_test_days = 2;

  // snapshot dataset
  std::int64_t data_dt_seconds = 30;
  double data_subsample_fraction = 0.1;

  // policy architecture
  std::string policy_hidden_dims = "64,128,64";
  double policy_weight_decay = 0.001;

  // trainers
  int bc_epochs = 60;
  int bc_batch = 32;
  double bc_lr = 1e-3;
  double bc_val_fraction = 0.1;

  int reg_epochs = 60;
  int reg_batch = 32;
  double reg_lr = 1e-4;
  double reg_val_fraction = 0.1;

  int dcil_epochs = 30;
  int dcil_batch = 16;
  double dcil_lr = 5e-5;
  double dcil_alpha = 0.5;
  double dcil_beta = 1.0;
  int dcil_buffer_capacity = 30000;
  int dcil_samples_per_epoch = 10000;
  int dcil_trajectory_length = 5;
  bool dcil_greedy_rollouts = false;

  // forecasting and evaluation
  int forecast_n_trajectories = 50;
  std::int64_t forecast_horizon_seconds = 1800;
  int forecast_k_stations = 15;
  int eval_n_snapshots = 40;

  void set(const std::string& key, const std::string& value);  // throws on unknown key
  void load_file(const std::string& path);
  std::string resolved_text() const;  // canonical, sorted dump
  std::uint64_t config_hash() const;
  std::vector<int> hidden_dims() const;
};

}  // namespace raildelay
