#include "raildelay/config.hpp"

#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

#include "raildelay/rng.hpp"

namespace raildelay {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct Entry {
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

template <typename T>
T parse_number(const std::string& raw);

template <>
long long parse_number<long long>(const std::string& raw) {
  std::size_t used = 0;
  const long long v = std::stoll(raw, &used);
  if (used != raw.size()) throw std::invalid_argument(raw);
  return v;
}

template <>
double parse_number<double>(const std::string& raw) {
  std::size_t used = 0;
  const double v = std::stod(raw, &used);
  if (used != raw.size()) throw std::invalid_argument(raw);
  return v;
}

const std::map<std::string, Entry>& registry() {
  static const std::map<std::string, Entry> table = [] {
    std::map<std::string, Entry> t;
    auto add_int = [&t](const std::string& key, auto member) {
      t[key] = {[member](const RunConfig& c) { return std::to_string(c.*member); },
                [member, key](RunConfig& c, const std::string& v) {
                  c.*member = static_cast<std::decay_t<decltype(std::declval<RunConfig>().*member)>>(
                      parse_number<long long>(v));
                }};
    };
    auto add_double = [&t](const std::string& key, auto member) {
      t[key] = {[member](const RunConfig& c) { return fmt_double(c.*member); },
                [member](RunConfig& c, const std::string& v) { c.*member = parse_number<double>(v); }};
    };
    auto add_bool = [&t](const std::string& key, auto member) {
      t[key] = {[member](const RunConfig& c) { return std::string(c.*member ? "true" : "false"); },
                [member, key](RunConfig& c, const std::string& v) {
                  if (v == "true" || v == "1") {
                    c.*member = true;
                  } else if (v == "false" || v == "0") {
                    c.*member = false;
                  } else {
                    throw std::invalid_argument("bad boolean for " + key + ": " + v);
                  }
                }};
    };
    auto add_string = [&t](const std::string& key, auto member) {
      t[key] = {[member](const RunConfig& c) { return c.*member; },
                [member](RunConfig& c, const std::string& v) { c.*member = v; }};
    };

    add_int("seed", &RunConfig::seed);
    add_int("workers", &RunConfig::workers);
    add_int("gen.n_days", &RunConfig::gen_n_days);
    add_int("gen.trains_per_day", &RunConfig::gen_trains_per_day);
    add_int("gen.base_run_seconds", &RunConfig::gen_base_run_seconds);
    add_double("gen.incident_rate_per_hour", &RunConfig::gen_incident_rate_per_hour);
    add_double("gen.delay_lognormal_mu", &RunConfig::gen_delay_lognormal_mu);
    add_double("gen.delay_lognormal_sigma", &RunConfig::gen_delay_lognormal_sigma);
    add_int("gen.min_headway_seconds", &RunConfig::gen_min_headway_seconds);
    add_double("gen.propagation_factor", &RunConfig::gen_propagation_factor);
    add_int("gen.recovery_seconds_per_stop", &RunConfig::gen_recovery_seconds_per_stop);
    add_int("gen.day0_epoch", &RunConfig::gen_day0_epoch);
    add_int("split.train_days", &RunConfig::split_train_days);
    add_int("split.val_days", &RunConfig::split_val_days);
    add_int("split.test_days", &RunConfig::split_test_days);
    add_int("data.dt_seconds", &RunConfig::data_dt_seconds);
    add_double("data.subsample_fraction", &RunConfig::data_subsample_fraction);
    add_string("policy.hidden_dims", &RunConfig::policy_hidden_dims);
    add_double("policy.weight_decay", &RunConfig::policy_weight_decay);
    add_int("bc.epochs", &RunConfig::bc_epochs);
    add_int("bc.batch", &RunConfig::bc_batch);
    add_double("bc.lr", &RunConfig::bc_lr);
    add_double("bc.val_fraction", &RunConfig::bc_val_fraction);
    add_int("reg.epochs", &RunConfig::reg_epochs);
    add_int("reg.batch", &RunConfig::reg_batch);
    add_double("reg.lr", &RunConfig::reg_lr);
    add_double("reg.val_fraction", &RunConfig::reg_val_fraction);
    add_int("dcil.epochs", &RunConfig::dcil_epochs);
    add_int("dcil.batch", &RunConfig::dcil_batch);
    add_double("dcil.lr", &RunConfig::dcil_lr);
    add_double("dcil.alpha", &RunConfig::dcil_alpha);
    add_double("dcil.beta", &RunConfig::dcil_beta);
    add_int("dcil.buffer_capacity", &RunConfig::dcil_buffer_capacity);
    add_int("dcil.samples_per_epoch", &RunConfig::dcil_samples_per_epoch);
    add_int("dcil.trajectory_length", &RunConfig::dcil_trajectory_length);
    add_bool("dcil.greedy_rollouts", &RunConfig::dcil_greedy_rollouts);
    add_int("forecast.n_trajectories", &RunConfig::forecast_n_trajectories);
    add_int("forecast.horizon_seconds", &RunConfig::forecast_horizon_seconds);
    add_int("forecast.k_stations", &RunConfig::forecast_k_stations);
    add_int("eval.n_snapshots", &RunConfig::eval_n_snapshots);
    return t;
  }();
  return table;
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  auto it = registry().find(key);
  if (it == registry().end()) {
    throw std::invalid_argument("unknown config key: " + key);
  }
  try {
    it->second.set(*this, value);
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument("bad value for " + key + ": " + value);
  }
}

void RunConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("config file " + path + ": missing '=' at line " +
                               std::to_string(lineno));
    }
    set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
}

std::string RunConfig::resolved_text() const {
  std::ostringstream out;
  for (const auto& [key, entry] : registry()) {  // std::map keeps keys sorted
    out << key << "=" << entry.get(*this) << "\n";
  }
  return out.str();
}

std::uint64_t RunConfig::config_hash() const {
  // workers is an execution detail; outputs must not depend on it
  std::ostringstream out;
  for (const auto& [key, entry] : registry()) {
    if (key == "workers") continue;
    out << key << "=" << entry.get(*this) << "\n";
  }
  return fnv1a64(out.str());
}

std::vector<int> RunConfig::hidden_dims() const {
  std::vector<int> dims;
  std::stringstream ss(policy_hidden_dims);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const std::string t = trim(item);
    if (t.empty()) continue;
    dims.push_back(static_cast<int>(parse_number<long long>(t)));
    if (dims.back() <= 0) throw std::invalid_argument("policy.hidden_dims entries must be positive");
  }
  if (dims.empty()) throw std::invalid_argument("policy.hidden_dims must not be empty");
  return dims;
}

}  // namespace raildelay
