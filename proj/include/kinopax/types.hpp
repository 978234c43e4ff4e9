#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace kinopax {

inline constexpr std::size_t kMaxStateDim = 12;
inline constexpr std::size_t kMaxControlDim = 4;
inline constexpr std::size_t kWorkspaceDim = 3;

using Vec3 = std::array<double, 3>;

enum class ErrorKind { Config, Environment, Io, Dynamics, Internal };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Inline-storage real vector. State and control vectors get distinct
// capacities so the two never convert into each other silently.
template <std::size_t Capacity>
class FixedVec {
 public:
  static constexpr std::size_t kCapacity = Capacity;

  FixedVec() = default;
  explicit FixedVec(std::size_t n, double fill = 0.0) : size_(checked(n)) {
    std::fill_n(values_.begin(), size_, fill);
  }
  FixedVec(std::initializer_list<double> init) : size_(checked(init.size())) {
    std::copy(init.begin(), init.end(), values_.begin());
  }
  static FixedVec from(std::span<const double> src) {
    FixedVec v(src.size());
    std::copy(src.begin(), src.end(), v.values_.begin());
    return v;
  }

  std::size_t size() const noexcept { return size_; }
  bool empty() const noexcept { return size_ == 0; }
  double& operator[](std::size_t i) noexcept { return values_[i]; }
  double operator[](std::size_t i) const noexcept { return values_[i]; }
  double* data() noexcept { return values_.data(); }
  const double* data() const noexcept { return values_.data(); }
  double* begin() noexcept { return values_.data(); }
  double* end() noexcept { return values_.data() + size_; }
  const double* begin() const noexcept { return values_.data(); }
  const double* end() const noexcept { return values_.data() + size_; }
  std::span<double> span() noexcept { return {values_.data(), size_}; }
  std::span<const double> span() const noexcept { return {values_.data(), size_}; }

  friend bool operator==(const FixedVec& a, const FixedVec& b) noexcept {
    return a.size_ == b.size_ && std::equal(a.begin(), a.end(), b.begin());
  }

 private:
  static std::size_t checked(std::size_t n) {
    if (n > Capacity) throw Error(ErrorKind::Internal, "vector exceeds inline capacity");
    return n;
  }

  std::array<double, Capacity> values_{};
  std::size_t size_ = 0;
};

using StateVec = FixedVec<kMaxStateDim>;
using ControlVec = FixedVec<kMaxControlDim>;

/// A constant control held for `dt` seconds from `start_state`.
/// `sampled_states` holds every integrator substep endpoint; its last entry
/// equals `end_state`.
struct TrajectorySegment {
  ControlVec control;
  double dt = 0.0;
  StateVec start_state;
  StateVec end_state;
  std::vector<StateVec> sampled_states;
};

enum class PlanStatus { Solved, Timeout, CapacityExhausted, Error };

std::string_view to_string(PlanStatus status) noexcept;
PlanStatus plan_status_from_string(std::string_view name);

struct PlanStats {
  std::uint64_t iterations = 0;
  std::uint64_t tree_size = 0;
  double wall_time_ms = 0.0;
  double solution_duration_s = 0.0;
};

struct PlanResult {
  PlanStatus status = PlanStatus::Error;
  std::vector<TrajectorySegment> trajectory;
  PlanStats stats;
  std::string message;
};

}  // namespace kinopax
