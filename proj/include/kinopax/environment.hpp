#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "kinopax/types.hpp"

namespace kinopax {

class DynamicsModel;

/// Closed axis-aligned box; contact with the boundary counts as inside.
struct Aabb {
  Vec3 min{};
  Vec3 max{};

  bool contains(const Vec3& p) const noexcept;
  /// True if any point of the closed segment [a, b] lies in the box.
  bool intersects_segment(const Vec3& a, const Vec3& b) const noexcept;

  friend bool operator==(const Aabb&, const Aabb&) = default;
};

struct GoalBall {
  Vec3 center{};
  double radius = 0.0;

  friend bool operator==(const GoalBall&, const GoalBall&) = default;
};

struct StateBounds {
  StateVec lo;
  StateVec hi;

  friend bool operator==(const StateBounds&, const StateBounds&) = default;
};

struct Environment {
  std::string name;
  Vec3 workspace_lo{};
  Vec3 workspace_hi{};
  std::optional<StateBounds> state_bounds;
  std::vector<Aabb> obstacles;
  StateVec start;
  GoalBall goal;

  friend bool operator==(const Environment&, const Environment&) = default;
};

/// Model-independent content of an environment file. `start` may hold either
/// a workspace position (3 values) or a full model state.
struct EnvironmentSpec {
  std::string name;
  Vec3 workspace_lo{};
  Vec3 workspace_hi{};
  std::optional<std::pair<std::vector<double>, std::vector<double>>> state_bounds;
  std::vector<Aabb> obstacles;
  std::vector<double> start;
  GoalBall goal;
};

EnvironmentSpec parse_environment_spec(const nlohmann::json& doc);
nlohmann::json environment_spec_to_json(const EnvironmentSpec& spec);

/// Schema checks that do not need a dynamics model: bounds ordering, obstacle
/// containment, goal intersecting the workspace, start position not in
/// collision. Throws Error(Environment).
void check_environment_spec(const EnvironmentSpec& spec);

/// Binds a spec to a model: completes a position-only start, checks the
/// state-bounds length and verifies the start is a valid state.
Environment resolve_environment(const EnvironmentSpec& spec, const DynamicsModel& model);

Environment load_environment(const std::filesystem::path& path, const DynamicsModel& model);
EnvironmentSpec load_environment_spec(const std::filesystem::path& path);
void save_environment(const Environment& env, const std::filesystem::path& path);
void save_environment_spec(const EnvironmentSpec& spec, const std::filesystem::path& path);

/// Effective state box: explicit state_bounds when present, otherwise the
/// model box with position dimensions taken from the workspace.
StateBounds effective_state_bounds(const Environment& env, const DynamicsModel& model);

}  // namespace kinopax
