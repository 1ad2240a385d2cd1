#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

#include "raildelay/network.hpp"
#include "raildelay/schedule.hpp"

namespace raildelay {

/// Bump when the encoded layout changes; checkpoints reject mismatches.
inline constexpr int kLayoutVersion = 1;

inline constexpr int kPastSlots = 5;
inline constexpr std::array<double, 5> kNeighborhoodRadii = {0.1, 0.3, 0.6, 1.0, 2.0};
inline constexpr int kNeighborhoodDim = 10;

enum class EncodeMode { Simulation, Regression };

inline constexpr int future_slots(EncodeMode mode) {
  return mode == EncodeMode::Simulation ? 5 : 15;
}

/// Emergent layout constant; asserted at startup and stored in checkpoints.
int feature_dimension(EncodeMode mode);

/// Min-max bounds of the neighborhood counts, fitted once on the training
/// snapshots and frozen; inference values are clamped into [0,1].
struct NormalizationStats {
  bool fitted = false;
  std::array<double, 5> count_min{};
  std::array<double, 5> count_max{};
};

/// Raw neighborhood summary of one train: per radius, the count of other
/// trains whose current-station embedding lies within that distance, and the
/// mean of those neighbors' last realised delays in seconds (0 if none).
/// Placeholder positions embed as the zero vector.
struct NeighborhoodRaw {
  std::array<int, 5> counts{};
  std::array<double, 5> mean_delays{};
};
NeighborhoodRaw neighborhood_raw(const Snapshot& snapshot, std::string_view train_id,
                                 const RailNetwork& network);

/// The ten scalars appended to the base feature vector: per radius the
/// min-max-normalised count (clamped to [0,1]) and the raw mean delay.
std::array<double, kNeighborhoodDim> neighborhood_features(const Snapshot& snapshot,
                                                           std::string_view train_id,
                                                           const RailNetwork& network,
                                                           const NormalizationStats& norm);

/// Deterministic fixed-layout encoding of one train in a snapshot:
///   [type one-hot 4]
///   [past station embeddings 5x8][past line embeddings 5x8]
///   [future station embeddings Fx8][future line embeddings Fx8]
///   [role one-hots (5+F)x4]
///   [scheduled times relative to clock, /3600, 5+F]
///   [realised past delays /600, 5]
///   [hour-of-day sin cos, day-of-week sin cos]
///   [neighborhood scalars 10]
///   [slot validity bits 5+F]
/// Past slots cover real stations at indices position, position-1, ...;
/// future slots the next scheduled real stations. Missing slots are
/// zero-filled with validity 0.
Eigen::VectorXd encode_features(const Snapshot& snapshot, std::string_view train_id,
                                const RailNetwork& network, EncodeMode mode,
                                const NormalizationStats& norm);

/// Fits the count min-max bounds over every train of the given snapshots.
NormalizationStats fit_normalization(const ScheduleData& data,
                                     const std::vector<std::int64_t>& anchors,
                                     const RailNetwork& network);

}  // namespace raildelay
