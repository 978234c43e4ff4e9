#include "kinopax/rng.hpp"

namespace kinopax {
namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& lo, std::uint32_t& hi) noexcept {
  const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
  lo = static_cast<std::uint32_t>(product);
  hi = static_cast<std::uint32_t>(product >> 32);
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                         std::array<std::uint32_t, 2> key) noexcept {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t lo0, hi0, lo1, hi1;
    mulhilo(kPhiloxM0, ctr[0], lo0, hi0);
    mulhilo(kPhiloxM1, ctr[2], lo1, hi1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kPhiloxW0;
    key[1] += kPhiloxW1;
  }
  return ctr;
}

// Counter words: slot, low 32 bits of the iteration, extension | phase << 24,
// and (iteration >> 32) << 16 with the block index in the low 16 bits.
// The 64-bit seed is the key.
RngStream::RngStream(const RngKey& k) noexcept {
  key_ = {static_cast<std::uint32_t>(k.seed), static_cast<std::uint32_t>(k.seed >> 32)};
  const auto iter_hi = static_cast<std::uint32_t>(k.iteration >> 32);
  counter_ = {k.slot, static_cast<std::uint32_t>(k.iteration),
              (k.extension & 0x00FFFFFFu) | (static_cast<std::uint32_t>(k.phase) << 24),
              iter_hi << 16};
}

void RngStream::refill() noexcept {
  block_ = philox4x32(counter_, key_);
  ++counter_[3];
  used_ = 0;
}

std::uint32_t RngStream::next_u32() noexcept {
  if (used_ == 4) refill();
  return block_[used_++];
}

std::uint64_t RngStream::next_u64() noexcept {
  const std::uint64_t hi = next_u32();
  return (hi << 32) | next_u32();
}

double RngStream::uniform() noexcept {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) noexcept {
  if (!(hi > lo)) return lo;
  return lo + (hi - lo) * uniform();
}

}  // namespace kinopax
