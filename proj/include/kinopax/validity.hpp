#pragma once

#include <span>
#include <vector>

#include "kinopax/environment.hpp"
#include "kinopax/types.hpp"

namespace kinopax {

class DynamicsModel;

/// Clearance kept by rollout() so the true curve between integrator substeps
/// stays valid: obstacles grow and the workspace shrinks by kRolloutClearance
/// metres, and every other state bound tightens by kRolloutBoundFraction of
/// its range.
inline constexpr double kRolloutClearance = 1e-3;
inline constexpr double kRolloutBoundFraction = 2e-3;

/// True iff the workspace projection of x lies in the closed goal ball.
bool in_goal(std::span<const double> x, const GoalBall& goal) noexcept;
inline bool in_goal(const StateVec& x, const GoalBall& goal) noexcept { return in_goal(x.span(), goal); }

/// Point-robot validity over an environment: state box, workspace bounds and
/// closed AABB obstacles. Read-only after construction.
class ValidityChecker {
 public:
  ValidityChecker(const Environment& env, const DynamicsModel& model, double check_resolution = 0.05);

  const Environment& environment() const noexcept { return *env_; }
  const DynamicsModel& model() const noexcept { return *model_; }
  const StateBounds& bounds() const noexcept { return bounds_; }
  double check_resolution() const noexcept { return resolution_; }

  bool state_valid(std::span<const double> x) const noexcept;
  bool state_valid(const StateVec& x) const noexcept { return state_valid(x.span()); }

  /// Checks the straight motion from `from` (assumed valid) to `to`: states
  /// are sampled by linear interpolation so consecutive checked positions are
  /// at most check_resolution apart, and every chord between consecutive
  /// samples is tested against the obstacles.
  bool motion_valid(std::span<const double> from, std::span<const double> to) const noexcept;

  /// Validates a propagated segment: its start (when present), every
  /// sampled state and the densified motions between them.
  bool segment_valid(const TrajectorySegment& seg) const noexcept;

  /// Integrates (u, dt) from `start` with the default substep count, checking
  /// each substep motion against the clearance-tightened constraints and
  /// stopping at the first violation.
  /// `last` receives the final state when valid, or the first offending
  /// state otherwise.
  bool rollout(std::span<const double> start, std::span<const double> u, double dt,
               std::span<double> last) const noexcept;

 private:
  bool in_obstacle(const Vec3& p) const noexcept;
  bool tight_box_valid(std::span<const double> x) const noexcept;
  bool tight_motion_valid(std::span<const double> from, std::span<const double> to) const noexcept;

  const Environment* env_;
  const DynamicsModel* model_;
  StateBounds bounds_;
  StateBounds tight_;
  std::vector<Aabb> grown_;
  double resolution_;
};

}  // namespace kinopax
