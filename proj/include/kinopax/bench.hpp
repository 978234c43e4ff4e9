#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "kinopax/config.hpp"
#include "kinopax/environment.hpp"
#include "kinopax/planner.hpp"
#include "kinopax/types.hpp"

namespace kinopax {

class DynamicsModel;

enum class PlannerKind { KinoPax, Rrt };

std::string_view to_string(PlannerKind kind) noexcept;
PlannerKind planner_kind_from_string(std::string_view name);

/// Runs the selected planner once.
PlanResult run_planner(PlannerKind kind, const CheckedConfig& cfg, const Environment& env,
                       const DynamicsModel& model, PlannerOptions options = {});

struct TrialRecord {
  std::uint32_t trial = 0;
  std::uint64_t seed = 0;
  PlanStatus status = PlanStatus::Error;
  double wall_time_ms = 0.0;
  std::uint64_t tree_size = 0;
  std::uint64_t iterations = 0;
  double solution_duration_s = 0.0;
};

/// Everything but the wall time; equal for repeated runs of a deterministic
/// planner.
bool same_outcome(const TrialRecord& a, const TrialRecord& b) noexcept;
nlohmann::json outcome_json(const TrialRecord& rec);

struct StatsRow {
  std::string planner;
  std::string model;
  std::string environment;
  std::size_t trials = 0;
  std::size_t solved = 0;
  double success_pct = 0.0;
  double mean_ms = 0.0;    // over solved trials; NaN when none solved
  double median_ms = 0.0;  // over solved trials; NaN when none solved
  std::optional<double> ratio_to_kinopax;
};

StatsRow summarize(std::span<const TrialRecord> records, std::string planner, std::string model,
                   std::string environment);

struct StatsTable {
  std::vector<StatsRow> rows;

  /// Fills t_alg / t_kinopax (mean times over solved trials) for every row
  /// that shares a model and environment with a Kino-PAX row.
  void compute_ratios();
  void print(std::ostream& out) const;
  nlohmann::json to_json() const;
};

struct TrialBatch {
  std::vector<TrialRecord> records;
  StatsRow stats;
};

using TrialObserver = std::function<void(const TrialRecord&, const PlanResult&)>;
using TrialOptions = std::function<PlannerOptions(std::uint32_t trial)>;

/// Trial i uses seed cfg.seed + i. Trials run one after another unless
/// `parallel_trials` is set for the baseline, in which case cfg.threads
/// single-tree RRT trials run concurrently. Records are always in trial order.
TrialBatch run_trials(const CheckedConfig& cfg, const Environment& env, const DynamicsModel& model,
                      PlannerKind planner, std::uint32_t n_trials, const TrialObserver& observer = {},
                      bool parallel_trials = false, const TrialOptions& options = {});

struct SweepRow {
  std::uint64_t t_e = 0;
  std::size_t trials = 0;
  std::size_t failures = 0;
  double mean_ms = 0.0;
  double variance_ms2 = 0.0;
};

/// Repeats run_trials for each expected tree size. `te_values` must be
/// strictly increasing.
std::vector<SweepRow> sweep_te(const PlannerConfig& base, const Environment& env, const DynamicsModel& model,
                               std::span<const std::uint64_t> te_values, std::uint32_t n_trials,
                               const TrialObserver& observer = {});
void write_sweep_report(std::ostream& out, std::span<const SweepRow> rows);

/// Table of cumulative time, state and control, one row per integrator
/// substep, followed by a "# duration_s=... segments=..." summary line.
void write_trajectory(std::ostream& out, const PlanResult& result, const DynamicsModel& model);
void export_trajectory(const PlanResult& result, const DynamicsModel& model, const std::filesystem::path& path);

enum class EnvironmentKind { Forest, Narrow, Building };
EnvironmentKind environment_kind_from_string(std::string_view name);

struct EnvironmentParams {
  Vec3 workspace_lo{0.0, 0.0, 0.0};
  Vec3 workspace_hi{10.0, 10.0, 4.0};
  Vec3 start{1.0, 1.0, 2.0};
  Vec3 goal{9.0, 9.0, 2.0};
  double goal_radius = 0.75;
  // forest
  std::size_t pillars = 30;
  double pillar_min_width = 0.4;
  double pillar_max_width = 0.8;
  double clearance = 1.0;
  // narrow passage
  double gap = 0.4;
  double wall_x = 5.0;
  double wall_thickness = 0.4;
  // building
  int rooms_x = 2;
  int rooms_y = 2;
  double door_width = 1.2;
  double door_height = 3.0;
  double interior_wall_thickness = 0.2;
};

/// Builds a checked environment spec; throws Error(Environment) when the
/// parameters leave the start or goal blocked.
EnvironmentSpec generate_environment(EnvironmentKind kind, const EnvironmentParams& params, std::uint64_t seed);
void gen_environment(EnvironmentKind kind, const EnvironmentParams& params, std::uint64_t seed,
                     const std::filesystem::path& path);

}  // namespace kinopax
