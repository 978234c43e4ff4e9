#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "kinopax/dynamics.hpp"
#include "kinopax/environment.hpp"
#include "kinopax/types.hpp"

namespace kptest {

// Largest allowed gap between a stored planner state and the finer
// re-integration; integration error compounds along long trajectories, so
// this only catches a wrong control or duration.
inline constexpr double kMaxDrift = 1e-3;

struct FineReport {
  std::size_t violations = 0;
  std::size_t checked_points = 0;
  bool reaches_goal = false;
  bool continuous = true;  // stored segments chain from the start without gaps
  double max_drift = 0.0;
  std::string first_problem;

  bool ok() const { return violations == 0 && reaches_goal && continuous && max_drift <= kMaxDrift; }
};

// Re-integrates every segment from the chained start state with `refine`
// times more RK4 substeps than the planner used, and checks points spaced at
// most resolution / refine apart against the raw environment: state box,
// workspace and closed obstacles. Shares no code with the planner's checker.
// The goal test applies to the re-integrated end state.
FineReport fine_check(const kinopax::Environment& env, const kinopax::DynamicsModel& model,
                      std::span<const kinopax::TrajectorySegment> trajectory, double resolution, int refine = 10);

}  // namespace kptest
