#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "persel/matcher.hpp"

namespace persel::harness {

enum class CheckpointDtype : std::uint8_t { f64 = 0, f32 = 1 };

struct CheckpointMeta {
  std::int64_t step = 0;
  double best_hits1 = 0.0;
  std::uint64_t seed = 0;
  std::string persona_side = "self";
  std::string persona_version = "original";
  bool ablate_context = false;
};

/// Binary checkpoint: magic + version, canonical config text, the full
/// vocabulary (token and character lists plus both frozen matrices), the
/// named parameter tensors with little-endian extents and values, training
/// metadata, and a per-tensor CRC plus a whole-file length + CRC trailer.
/// Round trips are bit-identical for the f64 dtype.
void save_checkpoint(const matchers::Matcher& matcher, const CheckpointMeta& meta,
                     const std::string& path, CheckpointDtype dtype = CheckpointDtype::f64);

struct LoadedCheckpoint {
  std::unique_ptr<matchers::Matcher> matcher;
  CheckpointMeta meta;
};

/// Verifies magic, version, checksums and tensor shapes; any mismatch or
/// truncation is an error, never silent corruption.
LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace persel::harness
