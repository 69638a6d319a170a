#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace qsgd {

/// Philox4x32-10 counter-based generator (Salmon et al., "Parallel random
/// numbers: as easy as 1, 2, 3", SC'11).
///
/// The 128-bit counter is split into a 64-bit block index (words 0-1) and a
/// 64-bit stream id (words 2-3); the 64-bit seed is the key. Distinct
/// (seed, stream) pairs give non-overlapping sequences, so parallel
/// replications can each own a stream derived from their index without any
/// coordination. Each block yields four 32-bit outputs.
class Philox4x32 {
 public:
  using result_type = std::uint32_t;
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  explicit Philox4x32(std::uint64_t seed = 0, std::uint64_t stream = 0) noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept {
    if (index_ == 4) refill();
    return buffer_[index_++];
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() noexcept;
  /// Uniform double in the open interval (0, 1); safe for inverse-CDF and log.
  double uniform_open() noexcept;

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }

  /// The raw ten-round bijection.
  static Counter block(Counter counter, Key key) noexcept;

 private:
  void refill() noexcept;

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t block_index_ = 0;
  Counter buffer_{};
  unsigned index_ = 4;
};

/// Stream id used for replication `replication` of grid cell `cell`.
constexpr std::uint64_t replication_stream(std::uint32_t cell,
                                           std::uint32_t replication) noexcept {
  return (static_cast<std::uint64_t>(cell) << 32) | replication;
}

}  // namespace qsgd
