#include "raildelay/features.hpp"

#include <cmath>
#include <stdexcept>

namespace raildelay {

namespace {

constexpr int kRoleDim = 4;
constexpr double kTimeScale = 1.0 / 3600.0;
constexpr double kDelayScale = 1.0 / 600.0;
constexpr std::int64_t kDaySeconds = 86400;

const TrainState& find_or_throw(const Snapshot& snapshot, std::string_view train_id) {
  const TrainState* state = snapshot.find(train_id);
  if (!state) throw std::invalid_argument("unknown train in snapshot: " + std::string(train_id));
  return *state;
}

Eigen::RowVectorXd current_position_embedding(const TrainState& state,
                                              const RailNetwork& network) {
  const Itinerary& it = *state.itinerary;
  if (!it.is_real(state.position_index)) {
    return Eigen::RowVectorXd::Zero(kEmbeddingDim);  // placeholder
  }
  return network.station_embedding.row(
      network.index_of(it.stations[static_cast<std::size_t>(state.position_index)]));
}

}  // namespace

int feature_dimension(EncodeMode mode) {
  const int f = future_slots(mode);
  const int slots = kPastSlots + f;
  return static_cast<int>(kTrainTypes.size()) + (kPastSlots + f) * 2 * kEmbeddingDim +
         slots * kRoleDim + slots + kPastSlots + 4 + kNeighborhoodDim + slots;
}

NeighborhoodRaw neighborhood_raw(const Snapshot& snapshot, std::string_view train_id,
                                 const RailNetwork& network) {
  const TrainState& subject = find_or_throw(snapshot, train_id);
  const Eigen::RowVectorXd center = current_position_embedding(subject, network);

  NeighborhoodRaw raw;
  std::array<double, 5> delay_sums{};
  for (const auto& other : snapshot.trains) {
    if (other.itinerary->train_id == subject.itinerary->train_id) continue;
    const double dist = (current_position_embedding(other, network) - center).norm();
    const double d = static_cast<double>(other.last_known_delay());
    for (std::size_t r = 0; r < kNeighborhoodRadii.size(); ++r) {
      if (dist <= kNeighborhoodRadii[r]) {
        ++raw.counts[r];
        delay_sums[r] += d;
      }
    }
  }
  for (std::size_t r = 0; r < kNeighborhoodRadii.size(); ++r) {
    raw.mean_delays[r] = raw.counts[r] > 0 ? delay_sums[r] / raw.counts[r] : 0.0;
  }
  return raw;
}

std::array<double, kNeighborhoodDim> neighborhood_features(const Snapshot& snapshot,
                                                           std::string_view train_id,
                                                           const RailNetwork& network,
                                                           const NormalizationStats& norm) {
  if (!norm.fitted) throw std::logic_error("neighborhood_features: stats not fitted");
  const NeighborhoodRaw raw = neighborhood_raw(snapshot, train_id, network);
  std::array<double, kNeighborhoodDim> out{};
  for (std::size_t r = 0; r < kNeighborhoodRadii.size(); ++r) {
    const double span = norm.count_max[r] - norm.count_min[r];
    double scaled = span > 0.0 ? (raw.counts[r] - norm.count_min[r]) / span : 0.0;
    scaled = std::clamp(scaled, 0.0, 1.0);
    out[2 * r] = scaled;
    out[2 * r + 1] = raw.mean_delays[r];
  }
  return out;
}

Eigen::VectorXd encode_features(const Snapshot& snapshot, std::string_view train_id,
                                const RailNetwork& network, EncodeMode mode,
                                const NormalizationStats& norm) {
  if (!network.embedded) throw std::logic_error("encode_features: network not embedded");
  if (!norm.fitted) throw std::logic_error("encode_features: stats not fitted");
  const TrainState& state = find_or_throw(snapshot, train_id);
  const Itinerary& it = *state.itinerary;

  const int f = future_slots(mode);
  const int slots = kPastSlots + f;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(feature_dimension(mode));

  // slot -> itinerary index; -1 marks a missing slot. Past slots run from the
  // current position backwards over real stations only.
  std::vector<int> slot_index(static_cast<std::size_t>(slots), -1);
  for (int p = 0; p < kPastSlots; ++p) {
    const int idx = state.position_index - p;
    if (it.is_real(idx)) slot_index[static_cast<std::size_t>(p)] = idx;
  }
  for (int q = 0; q < f; ++q) {
    const int idx = state.position_index + 1 + q;
    if (it.is_real(idx)) slot_index[static_cast<std::size_t>(kPastSlots + q)] = idx;
  }

  int off = 0;
  x(off + it.train_type) = 1.0;
  off += static_cast<int>(kTrainTypes.size());

  auto write_embeddings = [&](int slot_begin, int slot_end) {
    // station block, then the matching line block
    for (int s = slot_begin; s < slot_end; ++s) {
      const int idx = slot_index[static_cast<std::size_t>(s)];
      if (idx >= 0) {
        const int st = network.index_of(it.stations[static_cast<std::size_t>(idx)]);
        x.segment(off, kEmbeddingDim) = network.station_embedding.row(st).transpose();
      }
      off += kEmbeddingDim;
    }
    for (int s = slot_begin; s < slot_end; ++s) {
      const int idx = slot_index[static_cast<std::size_t>(s)];
      if (idx >= 0) {
        const int st = network.index_of(it.stations[static_cast<std::size_t>(idx)]);
        const std::string& line = network.station_line[static_cast<std::size_t>(st)];
        auto le = network.line_embeddings.find(line);
        if (le != network.line_embeddings.end()) {
          x.segment(off, kEmbeddingDim) = le->second.transpose();
        }
      }
      off += kEmbeddingDim;
    }
  };
  write_embeddings(0, kPastSlots);
  write_embeddings(kPastSlots, slots);

  for (int s = 0; s < slots; ++s) {
    const int idx = slot_index[static_cast<std::size_t>(s)];
    if (idx >= 0) x(off + static_cast<int>(it.roles[static_cast<std::size_t>(idx)])) = 1.0;
    off += kRoleDim;
  }

  for (int s = 0; s < slots; ++s) {
    const int idx = slot_index[static_cast<std::size_t>(s)];
    if (idx >= 0) {
      x(off) = static_cast<double>(it.scheduled_times[static_cast<std::size_t>(idx)] -
                                   snapshot.clock) *
               kTimeScale;
    }
    ++off;
  }

  for (int p = 0; p < kPastSlots; ++p) {
    const int idx = slot_index[static_cast<std::size_t>(p)];
    if (idx >= 0) x(off) = static_cast<double>(delay_at(state, idx)) * kDelayScale;
    ++off;
  }

  const double day_frac =
      static_cast<double>(((snapshot.clock % kDaySeconds) + kDaySeconds) % kDaySeconds) /
      static_cast<double>(kDaySeconds);
  const int dow = static_cast<int>(((snapshot.clock / kDaySeconds) % 7 + 7) % 7);
  x(off++) = std::sin(2.0 * M_PI * day_frac);
  x(off++) = std::cos(2.0 * M_PI * day_frac);
  x(off++) = std::sin(2.0 * M_PI * dow / 7.0);
  x(off++) = std::cos(2.0 * M_PI * dow / 7.0);

  const auto hood = neighborhood_features(snapshot, train_id, network, norm);
  for (double v : hood) x(off++) = v;

  for (int s = 0; s < slots; ++s) {
    x(off++) = slot_index[static_cast<std::size_t>(s)] >= 0 ? 1.0 : 0.0;
  }

  if (off != x.size()) throw std::logic_error("encode_features: layout mismatch");
  return x;
}

NormalizationStats fit_normalization(const ScheduleData& data,
                                     const std::vector<std::int64_t>& anchors,
                                     const RailNetwork& network) {
  NormalizationStats stats;
  bool any = false;
  for (std::int64_t clock : anchors) {
    const Snapshot snap = build_snapshot(data, clock);
    for (const auto& train : snap.trains) {
      const auto raw = neighborhood_raw(snap, train.itinerary->train_id, network);
      for (std::size_t r = 0; r < kNeighborhoodRadii.size(); ++r) {
        const double c = raw.counts[r];
        if (!any) {
          stats.count_min[r] = c;
          stats.count_max[r] = c;
        } else {
          stats.count_min[r] = std::min(stats.count_min[r], c);
          stats.count_max[r] = std::max(stats.count_max[r], c);
        }
      }
      any = true;
    }
  }
  stats.fitted = true;
  return stats;
}

}  // namespace raildelay
