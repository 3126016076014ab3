#pragma once

#include <cstdint>
#include <filesystem>

#include "nhdp/global_model.hpp"

namespace nhdp {

/// Everything needed to resume training: the model and the stream origin.
/// All random streams are derived from (seed, step), so no generator state
/// beyond the seed has to be stored.
struct Checkpoint {
  GlobalModel model;
  std::uint64_t seed = 0;
  std::int64_t docs_seen = 0;
};

/// Binary layout, all integers and doubles little-endian:
///   char[8]  magic "NHDPCKPT"
///   u32      format version (1)
///   u32      include_root (0/1)
///   u32      L, then L x u32 widths
///   f64 x 5  alpha, beta, gamma1, gamma2, lambda0
///   u32      vocabulary size V
///   i64      step count
///   u64      seed
///   i64      documents seen
///   f64 x (nodes * V)  lambda, node-major
///   f64 x nodes        tau1
///   f64 x nodes        tau2
void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);  // throws IoError / ParseError

}  // namespace nhdp
