#pragma once

#include <iosfwd>
#include <string>

#include "raildelay/features.hpp"
#include "raildelay/policy.hpp"

namespace raildelay {

inline constexpr int kCheckpointFormatVersion = 1;

/// Everything needed to run a trained model: parameters, head kind, the
/// training method (decides whether rollouts clamp stalls) and the frozen
/// normalisation stats, tagged with the encoder layout version.
struct Checkpoint {
  MlpPolicy policy;
  NormalizationStats stats;
  std::string method;  // "regression" | "bc" | "dcil"
  int layout_version = kLayoutVersion;
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
};

/// Self-describing text container; doubles are written with 17 significant
/// digits so the round trip is bit-exact.
void save_checkpoint(const Checkpoint& ckpt, std::ostream& out);
void save_checkpoint_file(const Checkpoint& ckpt, const std::string& path);

/// Rejects truncated files, unknown versions, a layout_version different from
/// expected_layout, and parameter blocks inconsistent with the declared dims.
Checkpoint load_checkpoint(std::istream& in, int expected_layout = kLayoutVersion);
Checkpoint load_checkpoint_file(const std::string& path, int expected_layout = kLayoutVersion);

}  // namespace raildelay
