#pragma once

#include <atomic>
#include <cstdint>
#include <span>
#include <vector>

#include "kinopax/config.hpp"
#include "kinopax/environment.hpp"
#include "kinopax/types.hpp"

namespace kinopax {

class DynamicsModel;

inline constexpr double kRrtGoalBias = 0.05;
inline constexpr double kPositionWeight = 1.0;
inline constexpr double kVelocityWeight = 0.1;
inline constexpr double kAngleWeight = 0.3;

/// Growable kinodynamic RRT tree with flat state storage.
class RrtTree {
 public:
  RrtTree(std::size_t state_dim, std::size_t control_dim);

  std::size_t size() const noexcept { return parent_.size(); }
  std::size_t add(std::span<const double> state, std::uint32_t parent, std::span<const double> control, double dt);
  std::span<const double> state(std::size_t i) const noexcept { return {states_.data() + i * n_, n_}; }
  std::span<const double> control(std::size_t i) const noexcept { return {controls_.data() + i * m_, m_}; }
  std::uint32_t parent(std::size_t i) const noexcept { return parent_[i]; }
  double dt(std::size_t i) const noexcept { return dt_[i]; }

 private:
  std::size_t n_;
  std::size_t m_;
  std::vector<double> states_;
  std::vector<double> controls_;
  std::vector<std::uint32_t> parent_;
  std::vector<double> dt_;
};

/// Weighted Euclidean distance: positions weight 1, velocities 0.1, angles
/// 0.3 using the wrapped difference.
double weighted_distance(const DynamicsModel& model, std::span<const double> a, std::span<const double> b) noexcept;

/// Index of the closest node by weighted_distance; lowest index on ties.
std::size_t nearest(const RrtTree& tree, std::span<const double> x, const DynamicsModel& model);

/// Single-tree kinodynamic RRT with random (u, dt) extension. `instance`
/// selects an independent random stream; `stop` lets a sibling instance end
/// the search early (reported as Timeout).
PlanResult rrt_plan_single(const CheckedConfig& cfg, const Environment& env, const DynamicsModel& model,
                           std::uint32_t instance = 0, const std::atomic<bool>* stop = nullptr);

/// cfg.threads independent trees on worker threads; the first solution wins.
/// With one thread this is deterministic for a given seed.
PlanResult rrt_plan(const CheckedConfig& cfg, const Environment& env, const DynamicsModel& model);

}  // namespace kinopax
