#pragma once

#include <array>
#include <cstdint>

namespace kinopax {

/// Philox4x32-10 block function (Salmon et al., SC'11).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                         std::array<std::uint32_t, 2> key) noexcept;

/// What a stream is used for. Part of the stream key so the draws of
/// different planner phases never alias.
enum class RngPhase : std::uint8_t { Sample = 1, Accept = 2, Demote = 3, Promote = 4, Rrt = 5, Test = 6 };

struct RngKey {
  std::uint64_t seed = 0;
  std::uint64_t iteration = 0;
  std::uint32_t slot = 0;
  std::uint32_t extension = 0;
  RngPhase phase = RngPhase::Test;
};

/// Counter-based random stream. Identical keys give identical sequences no
/// matter which thread draws them or in what order streams are created.
class RngStream {
 public:
  explicit RngStream(const RngKey& key) noexcept;
  RngStream(std::uint64_t seed, std::uint64_t iteration, std::uint32_t slot, std::uint32_t extension,
            RngPhase phase) noexcept
      : RngStream(RngKey{seed, iteration, slot, extension, phase}) {}

  std::uint32_t next_u32() noexcept;
  std::uint64_t next_u64() noexcept;
  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  /// Uniform on [lo, hi); returns lo when lo == hi.
  double uniform(double lo, double hi) noexcept;

 private:
  void refill() noexcept;

  std::array<std::uint32_t, 2> key_{};
  std::array<std::uint32_t, 4> counter_{};
  std::array<std::uint32_t, 4> block_{};
  unsigned used_ = 4;
};

}  // namespace kinopax
