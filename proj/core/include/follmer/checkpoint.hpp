#pragma once

#include "follmer/mlp.hpp"
#include "follmer/synthdata.hpp"
#include "follmer/types.hpp"

#include <cstdint>
#include <string>

namespace follmer::cli {

enum class ModelKind : std::uint8_t { velocity = 0, generator = 1 };

/// Binary layout, all integers and floats little-endian:
///
///   "CFFM"  u32 version  u64 payload_size  payload  u32 crc32(payload)
///
/// payload = kind, DataSpec, ScalingRecord, MlpConfig, training T, seed,
/// parameter count and the parameters in layer order (weight row-major, then
/// bias) as 64-bit floats. Optimizer moments are not stored.
struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  ModelKind kind = ModelKind::velocity;
  DataSpec spec;
  synth::ScalingRecord scaling;
  nn::Mlp net{nn::MlpConfig{}};
  double stop_time = 0.99;
  std::uint64_t seed = 0;
};

std::string encode_checkpoint(const Checkpoint& ck);
Checkpoint decode_checkpoint(const std::string& bytes, const std::string& name = "<checkpoint>");

void save_checkpoint(const Checkpoint& ck, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

std::uint32_t crc32(const std::string& bytes);

} // namespace follmer::cli
