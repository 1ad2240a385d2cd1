#include "raildelay/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace raildelay {

EvaluationReport evaluate(std::span<const PredictionRecord> predictions, std::int64_t horizon) {
  EvaluationReport report;
  double abs_sum = 0.0;
  double sq_sum = 0.0;
  std::array<double, kNumBins> bin_abs{};

  for (const auto& p : predictions) {
    const std::int64_t lead = p.observed_arrival - p.reference_clock;
    if (lead <= 0 || lead > horizon) continue;
    const double err = p.predicted_delay - static_cast<double>(p.observed_delay);
    abs_sum += std::abs(err);
    sq_sum += err * err;
    const int bin = std::min<int>(kNumBins - 1, static_cast<int>(lead / kBinSeconds));
    bin_abs[static_cast<std::size_t>(bin)] += std::abs(err);
    ++report.n_by_bin[static_cast<std::size_t>(bin)];
    ++report.n_predictions;
  }
  if (report.n_predictions == 0) {
    throw std::runtime_error("evaluate: no events inside the horizon");
  }
  report.mae = abs_sum / static_cast<double>(report.n_predictions);
  report.rmse = std::sqrt(sq_sum / static_cast<double>(report.n_predictions));
  for (int b = 0; b < kNumBins; ++b) {
    report.mae_by_bin[static_cast<std::size_t>(b)] =
        report.n_by_bin[static_cast<std::size_t>(b)] > 0
            ? bin_abs[static_cast<std::size_t>(b)] /
                  static_cast<double>(report.n_by_bin[static_cast<std::size_t>(b)])
            : 0.0;
  }
  return report;
}

double percentile_linear(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw std::invalid_argument("percentile: empty sample set");
  if (q <= 0.0) return sorted.front();
  if (q >= 1.0) return sorted.back();
  const double h = q * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(h);
  const double frac = h - static_cast<double>(lo);
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

std::vector<std::pair<double, double>> calibration_curve(
    std::span<const CalibrationEvent> events, std::span<const double> levels) {
  if (events.empty()) throw std::invalid_argument("calibration_curve: no events");
  std::vector<std::vector<double>> sorted;
  sorted.reserve(events.size());
  for (const auto& e : events) {
    if (e.samples.size() < 2) {
      throw std::invalid_argument("calibration_curve: need at least 2 samples per cell");
    }
    auto s = e.samples;
    std::sort(s.begin(), s.end());
    sorted.push_back(std::move(s));
  }
  std::vector<std::pair<double, double>> curve;
  curve.reserve(levels.size());
  for (double level : levels) {
    const double q_lo = (1.0 - level) / 2.0;
    const double q_hi = (1.0 + level) / 2.0;
    std::size_t covered = 0;
    for (std::size_t i = 0; i < events.size(); ++i) {
      const double lo = percentile_linear(sorted[i], q_lo);
      const double hi = percentile_linear(sorted[i], q_hi);
      if (events[i].observed >= lo && events[i].observed <= hi) ++covered;
    }
    curve.emplace_back(level, static_cast<double>(covered) / static_cast<double>(events.size()));
  }
  return curve;
}

std::vector<double> default_calibration_levels() {
  std::vector<double> levels;
  for (int i = 1; i <= 9; ++i) levels.push_back(0.1 * i);
  return levels;
}

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::ofstream open_or_throw(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  return out;
}

}  // namespace

void write_report_text(const EvaluationReport& report, const std::string& path,
                       std::uint64_t seed, std::uint64_t config_hash) {
  auto out = open_or_throw(path);
  out << "seed=" << seed << "\n";
  out << "config_hash=" << config_hash << "\n";
  out << "n_predictions=" << report.n_predictions << "\n";
  out << "mae_seconds=" << fmt(report.mae) << "\n";
  out << "rmse_seconds=" << fmt(report.rmse) << "\n";
  for (int b = 0; b < kNumBins; ++b) {
    out << "mae_bin_" << b * 5 << "_" << (b + 1) * 5 << "_min="
        << fmt(report.mae_by_bin[static_cast<std::size_t>(b)]) << "\n";
    out << "n_bin_" << b * 5 << "_" << (b + 1) * 5 << "_min="
        << report.n_by_bin[static_cast<std::size_t>(b)] << "\n";
  }
  for (const auto& [nominal, empirical] : report.calibration) {
    out << "coverage_" << fmt(nominal) << "=" << fmt(empirical) << "\n";
  }
}

void write_report_csv(const EvaluationReport& report, const std::string& path,
                      std::uint64_t seed, std::uint64_t config_hash) {
  auto out = open_or_throw(path);
  out << "# seed=" << seed << " config_hash=" << config_hash << "\n";
  out << "metric,bin,value\n";
  out << "n_predictions,," << report.n_predictions << "\n";
  out << "mae,," << fmt(report.mae) << "\n";
  out << "rmse,," << fmt(report.rmse) << "\n";
  for (int b = 0; b < kNumBins; ++b) {
    out << "mae," << b << "," << fmt(report.mae_by_bin[static_cast<std::size_t>(b)]) << "\n";
    out << "n," << b << "," << report.n_by_bin[static_cast<std::size_t>(b)] << "\n";
  }
}

void write_calibration_csv(const std::vector<std::pair<double, double>>& curve,
                           const std::string& path, std::uint64_t seed,
                           std::uint64_t config_hash) {
  auto out = open_or_throw(path);
  out << "# seed=" << seed << " config_hash=" << config_hash << "\n";
  out << "nominal,empirical\n";
  for (const auto& [nominal, empirical] : curve) {
    out << fmt(nominal) << "," << fmt(empirical) << "\n";
  }
}

}  // namespace raildelay
