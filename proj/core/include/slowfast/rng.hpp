#pragma once

#include <array>
#include <cstdint>

namespace slowfast {

/// Philox4x32-10 counter-based bijection (Salmon et al., SC'11). Stateless:
/// the same (counter, key) always yields the same block.
using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

PhiloxCounter philox4x32(PhiloxCounter counter, PhiloxKey key) noexcept;

/// Equation tags keep the slow and fast Brownian drivers of a path disjoint.
enum class StreamTag : std::uint32_t {
  slow = 0,
  fast = 1,
  auxiliary = 2,
};

/// Standard-normal draws addressed by (seed, stream, tag, draw index).
///
/// Draws are produced two at a time (Box-Muller on one Philox block), so the
/// n-th value of a stream never depends on how many workers exist or in which
/// order paths are scheduled.
class NormalStream {
 public:
  NormalStream(std::uint64_t seed, std::uint64_t stream, StreamTag tag) noexcept;

  double next() noexcept;

  /// Index of the next draw; equals the number of values consumed so far.
  std::uint64_t position() const noexcept { return position_; }

 private:
  void refill() noexcept;

  PhiloxKey key_;
  std::uint32_t stream_lo_;
  std::uint32_t stream_hi_tag_;
  std::uint64_t position_ = 0;
  double cached_[2] = {0.0, 0.0};
};

/// SplitMix64 finalizer; used to derive independent sub-seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) noexcept;

}  // namespace slowfast
