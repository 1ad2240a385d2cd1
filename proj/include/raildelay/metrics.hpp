#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace raildelay {

inline constexpr std::int64_t kDefaultHorizonSeconds = 1800;
inline constexpr std::int64_t kBinSeconds = 300;
inline constexpr int kNumBins = 6;

/// One evaluated station event. lead time = observed_arrival - reference_clock.
struct PredictionRecord {
  std::string train_id;
  std::string station_id;
  int station_index = 0;
  double predicted_delay = 0.0;
  std::int64_t observed_delay = 0;
  std::int64_t observed_arrival = 0;
  std::int64_t reference_clock = 0;
};

struct EvaluationReport {
  double mae = 0.0;
  double rmse = 0.0;
  std::array<double, kNumBins> mae_by_bin{};
  std::array<std::size_t, kNumBins> n_by_bin{};
  std::size_t n_predictions = 0;
  std::vector<std::pair<double, double>> calibration;  // (nominal, empirical)
};

/// Keeps events with lead time in (0, horizon], computes MAE/RMSE in seconds
/// and the per-bin MAE over 5-minute lead-time bins. Throws if the filter
/// leaves nothing.
EvaluationReport evaluate(std::span<const PredictionRecord> predictions,
                          std::int64_t horizon = kDefaultHorizonSeconds);

/// Linear interpolation between order statistics; q in [0,1], samples sorted.
double percentile_linear(std::span<const double> sorted, double q);

/// One matched forecast cell: the rollout samples plus the observation.
struct CalibrationEvent {
  std::vector<double> samples;
  double observed = 0.0;
};

/// Empirical coverage of central prediction intervals at each nominal level:
/// the level-p interval spans the (1-p)/2 and (1+p)/2 sample percentiles.
std::vector<std::pair<double, double>> calibration_curve(
    std::span<const CalibrationEvent> events, std::span<const double> levels);

std::vector<double> default_calibration_levels();  // 0.1 .. 0.9

// report files: line-oriented key=value text plus {metric,bin,value} CSV
void write_report_text(const EvaluationReport& report, const std::string& path,
                       std::uint64_t seed, std::uint64_t config_hash);
void write_report_csv(const EvaluationReport& report, const std::string& path,
                      std::uint64_t seed, std::uint64_t config_hash);
void write_calibration_csv(const std::vector<std::pair<double, double>>& curve,
                           const std::string& path, std::uint64_t seed,
                           std::uint64_t config_hash);

}  // namespace raildelay
