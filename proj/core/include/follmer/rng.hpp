#pragma once

#include "follmer/types.hpp"

#include <array>
#include <cstdint>

namespace follmer {

//! Philox4x32-10 counter-based block function (Salmon et al., SC'11).
//! Maps a 128-bit counter and a 64-bit key to 128 random bits.
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter block(Counter counter, Key key);
};

//! SplitMix64 finalizer; used only to spread seeds and stream ids over the key.
std::uint64_t mix64(std::uint64_t z);

/// Reproducible random stream.
///
/// A stream is identified by (seed, stream_id). Draws come from Philox4x32-10
/// with
///   key     = mix64(seed ^ mix64(stream_id ^ kStreamSalt))   (split rule)
///   counter = (block_lo, block_hi, stream_lo, stream_hi)
/// so two streams never share a (key, counter) pair even if their keys
/// collide. Gaussians use the Marsaglia polar method, which needs only
/// sqrt and log.
///
/// A stream is single-owner. Copying it forks an identical sequence.
class RngStream {
public:
  static constexpr std::uint64_t kStreamSalt = 0x632be59bd9b4e019ULL;

  explicit RngStream(std::uint64_t seed, std::uint64_t stream_id = 0);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  std::uint64_t next_u64();
  //! Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  //! Uniform integer in [0, n), unbiased (rejection).
  std::uint64_t below(std::uint64_t n);
  double gaussian();

  //! Child stream with the same seed and id mix64(stream_id ^ mix64(index + 1)).
  //! Used for per-row streams so results do not depend on batching.
  RngStream substream(std::uint64_t index) const;

private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  Philox4x32::Key key_{};
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int buffered_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

//! d independent standard normal draws.
Vector gauss_vector(RngStream& rng, std::size_t d);

//! rows x cols standard normal draws, filled row by row.
Matrix gauss_matrix(RngStream& rng, std::size_t rows, std::size_t cols);

} // namespace follmer
