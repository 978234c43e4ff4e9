#include "kinopax/validity.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "kinopax/dynamics.hpp"

namespace kinopax {
namespace {

Vec3 position_of(std::span<const double> x) noexcept { return {x[0], x[1], x[2]}; }

}  // namespace

bool in_goal(std::span<const double> x, const GoalBall& goal) noexcept {
  const double dx = x[0] - goal.center[0];
  const double dy = x[1] - goal.center[1];
  const double dz = x[2] - goal.center[2];
  return dx * dx + dy * dy + dz * dz <= goal.radius * goal.radius;
}

ValidityChecker::ValidityChecker(const Environment& env, const DynamicsModel& model, double check_resolution)
    : env_(&env), model_(&model), bounds_(effective_state_bounds(env, model)), resolution_(check_resolution) {
  if (!(check_resolution > 0.0) || !std::isfinite(check_resolution))
    throw Error(ErrorKind::Config, "check resolution must be positive");
  const std::size_t n = model.state_dim();
  tight_ = bounds_;
  for (std::size_t i = 0; i < n; ++i) {
    const double lo = i < 3 ? std::max(bounds_.lo[i], env.workspace_lo[i]) : bounds_.lo[i];
    const double hi = i < 3 ? std::min(bounds_.hi[i], env.workspace_hi[i]) : bounds_.hi[i];
    const bool full_circle = model.dim_kinds()[i] == DimKind::Angle && hi - lo >= 2.0 * std::numbers::pi - 1e-9;
    const double m = i < 3 ? kRolloutClearance : full_circle ? 0.0 : kRolloutBoundFraction * (hi - lo);
    tight_.lo[i] = lo + m;
    tight_.hi[i] = hi - m;
  }
  grown_.reserve(env.obstacles.size());
  for (const Aabb& box : env.obstacles) {
    Aabb g = box;
    for (int d = 0; d < 3; ++d) {
      g.min[d] -= kRolloutClearance;
      g.max[d] += kRolloutClearance;
    }
    grown_.push_back(g);
  }
}

bool ValidityChecker::tight_box_valid(std::span<const double> x) const noexcept {
  for (std::size_t i = 0; i < x.size(); ++i)
    if (!(x[i] >= tight_.lo[i] && x[i] <= tight_.hi[i])) return false;
  return true;
}

bool ValidityChecker::tight_motion_valid(std::span<const double> from, std::span<const double> to) const noexcept {
  if (!tight_box_valid(to)) return false;
  const Vec3 a = position_of(from);
  const Vec3 b = position_of(to);
  for (const Aabb& box : grown_)
    if (box.intersects_segment(a, b)) return false;
  // The box constraints are convex and the chord test is exact, so valid
  // endpoints already imply a valid chord; no interpolated samples needed.
  return true;
}

bool ValidityChecker::in_obstacle(const Vec3& p) const noexcept {
  for (const Aabb& box : env_->obstacles)
    if (box.contains(p)) return true;
  return false;
}

bool ValidityChecker::state_valid(std::span<const double> x) const noexcept {
  const std::size_t n = model_->state_dim();
  if (x.size() != n) return false;
  for (std::size_t i = 0; i < n; ++i)
    if (!(x[i] >= bounds_.lo[i] && x[i] <= bounds_.hi[i])) return false;
  for (std::size_t i = 0; i < 3; ++i)
    if (!(x[i] >= env_->workspace_lo[i] && x[i] <= env_->workspace_hi[i])) return false;
  return !in_obstacle(position_of(x));
}

bool ValidityChecker::motion_valid(std::span<const double> from, std::span<const double> to) const noexcept {
  if (!state_valid(to)) return false;
  const Vec3 a = position_of(from);
  const Vec3 b = position_of(to);
  for (const Aabb& box : env_->obstacles)
    if (box.intersects_segment(a, b)) return false;

  const double dist = std::sqrt((b[0] - a[0]) * (b[0] - a[0]) + (b[1] - a[1]) * (b[1] - a[1]) +
                                (b[2] - a[2]) * (b[2] - a[2]));
  const auto pieces = static_cast<int>(std::ceil(dist / resolution_));
  if (pieces <= 1) return true;

  const std::size_t n = model_->state_dim();
  const auto kinds = model_->dim_kinds();
  std::array<double, kMaxStateDim> mid{};
  for (int k = 1; k < pieces; ++k) {
    const double t = static_cast<double>(k) / pieces;
    for (std::size_t i = 0; i < n; ++i) {
      if (kinds[i] == DimKind::Angle)
        mid[i] = wrap_angle(from[i] + t * wrap_angle(to[i] - from[i]));
      else
        mid[i] = from[i] + t * (to[i] - from[i]);
    }
    if (!state_valid(std::span<const double>(mid.data(), n))) return false;
  }
  return true;
}

bool ValidityChecker::segment_valid(const TrajectorySegment& seg) const noexcept {
  if (seg.sampled_states.empty()) return false;
  const StateVec* prev = nullptr;
  if (!seg.start_state.empty()) {
    if (!state_valid(seg.start_state)) return false;
    prev = &seg.start_state;
  }
  for (const StateVec& s : seg.sampled_states) {
    if (prev == nullptr) {
      if (!state_valid(s)) return false;
    } else if (!motion_valid(prev->span(), s.span())) {
      return false;
    }
    prev = &s;
  }
  return true;
}

bool ValidityChecker::rollout(std::span<const double> start, std::span<const double> u, double dt,
                              std::span<double> last) const noexcept {
  const std::size_t n = model_->state_dim();
  const int substeps = default_substeps(dt);
  const double h = dt / substeps;
  std::array<double, 5 * kMaxStateDim> scratch{};
  std::array<double, kMaxStateDim> prev{};
  std::copy(start.begin(), start.end(), last.begin());
  for (int s = 0; s < substeps; ++s) {
    std::copy(last.begin(), last.end(), prev.begin());
    rk4_step(*model_, last, u, h, scratch);
    for (std::size_t i = 0; i < n; ++i)
      if (!std::isfinite(last[i])) return false;
    if (!tight_motion_valid(std::span<const double>(prev.data(), n), last)) return false;
  }
  return true;
}

}  // namespace kinopax
