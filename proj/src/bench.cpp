#include "kinopax/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

#include "kinopax/dynamics.hpp"
#include "kinopax/rng.hpp"
#include "kinopax/rrt.hpp"

namespace kinopax {

std::string_view to_string(PlannerKind kind) noexcept { return kind == PlannerKind::KinoPax ? "kinopax" : "rrt"; }

PlannerKind planner_kind_from_string(std::string_view name) {
  if (name == "kinopax") return PlannerKind::KinoPax;
  if (name == "rrt") return PlannerKind::Rrt;
  throw Error(ErrorKind::Config, "unknown planner '" + std::string(name) + "' (expected kinopax or rrt)");
}

PlanResult run_planner(PlannerKind kind, const CheckedConfig& cfg, const Environment& env,
                       const DynamicsModel& model, PlannerOptions options) {
  if (kind == PlannerKind::KinoPax) return plan(cfg, env, model, options);
  return rrt_plan(cfg, env, model);
}

// ---------------------------------------------------------------------------
// Trial records and statistics

bool same_outcome(const TrialRecord& a, const TrialRecord& b) noexcept {
  return a.trial == b.trial && a.seed == b.seed && a.status == b.status && a.tree_size == b.tree_size &&
         a.iterations == b.iterations && a.solution_duration_s == b.solution_duration_s;
}

nlohmann::json outcome_json(const TrialRecord& rec) {
  return {{"trial", rec.trial},
          {"seed", rec.seed},
          {"status", std::string(to_string(rec.status))},
          {"tree_size", rec.tree_size},
          {"iterations", rec.iterations},
          {"solution_duration_s", rec.solution_duration_s}};
}

namespace {

double median_of(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

nlohmann::json number_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

}  // namespace

StatsRow summarize(std::span<const TrialRecord> records, std::string planner, std::string model,
                   std::string environment) {
  StatsRow row;
  row.planner = std::move(planner);
  row.model = std::move(model);
  row.environment = std::move(environment);
  row.trials = records.size();
  std::vector<double> times;
  for (const TrialRecord& r : records)
    if (r.status == PlanStatus::Solved) times.push_back(r.wall_time_ms);
  row.solved = times.size();
  row.success_pct = row.trials ? 100.0 * static_cast<double>(row.solved) / static_cast<double>(row.trials) : 0.0;
  row.mean_ms = times.empty() ? std::numeric_limits<double>::quiet_NaN()
                              : std::accumulate(times.begin(), times.end(), 0.0) / static_cast<double>(times.size());
  row.median_ms = median_of(std::move(times));
  return row;
}

void StatsTable::compute_ratios() {
  for (StatsRow& row : rows) {
    row.ratio_to_kinopax.reset();
    for (const StatsRow& ref : rows) {
      if (ref.planner != "kinopax" || ref.model != row.model || ref.environment != row.environment) continue;
      if (std::isfinite(row.mean_ms) && std::isfinite(ref.mean_ms) && ref.mean_ms > 0.0)
        row.ratio_to_kinopax = row.mean_ms / ref.mean_ms;
    }
  }
}

void StatsTable::print(std::ostream& out) const {
  const auto flags = out.flags();
  out << std::left << std::setw(9) << "planner" << std::setw(9) << "model" << std::setw(16) << "environment"
      << std::right << std::setw(7) << "trials" << std::setw(9) << "succ%" << std::setw(13) << "mean_ms"
      << std::setw(13) << "median_ms" << std::setw(10) << "t/t_kpx" << '\n';
  out << std::fixed;
  for (const StatsRow& r : rows) {
    out << std::left << std::setw(9) << r.planner << std::setw(9) << r.model << std::setw(16) << r.environment
        << std::right << std::setw(7) << r.trials << std::setw(9) << std::setprecision(1) << r.success_pct
        << std::setw(13) << std::setprecision(2) << r.mean_ms << std::setw(13) << r.median_ms;
    if (r.ratio_to_kinopax)
      out << std::setw(10) << std::setprecision(2) << *r.ratio_to_kinopax;
    else
      out << std::setw(10) << "-";
    out << '\n';
  }
  out.flags(flags);
}

nlohmann::json StatsTable::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const StatsRow& r : rows) {
    arr.push_back({{"planner", r.planner},
                   {"model", r.model},
                   {"environment", r.environment},
                   {"trials", r.trials},
                   {"solved", r.solved},
                   {"success_pct", r.success_pct},
                   {"mean_ms", number_or_null(r.mean_ms)},
                   {"median_ms", number_or_null(r.median_ms)},
                   {"ratio_to_kinopax", r.ratio_to_kinopax ? nlohmann::json(*r.ratio_to_kinopax) : nullptr}});
  }
  return arr;
}

// ---------------------------------------------------------------------------
// Trial batches

namespace {

TrialRecord run_one(PlannerKind planner, const CheckedConfig& base, const Environment& env,
                    const DynamicsModel& model, std::uint32_t trial, PlanResult& result,
                    const TrialOptions& options) {
  CheckedConfig cfg = base;
  cfg.config.seed = base.config.seed + trial;
  result = run_planner(planner, cfg, env, model, options ? options(trial) : PlannerOptions{});
  TrialRecord rec;
  rec.trial = trial;
  rec.seed = cfg.config.seed;
  rec.status = result.status;
  rec.wall_time_ms = result.stats.wall_time_ms;
  rec.tree_size = result.stats.tree_size;
  rec.iterations = result.stats.iterations;
  rec.solution_duration_s = result.stats.solution_duration_s;
  return rec;
}

}  // namespace

TrialBatch run_trials(const CheckedConfig& cfg, const Environment& env, const DynamicsModel& model,
                      PlannerKind planner, std::uint32_t n_trials, const TrialObserver& observer,
                      bool parallel_trials, const TrialOptions& options) {
  if (n_trials == 0) throw Error(ErrorKind::Config, "at least one trial is required");
  TrialBatch batch;
  batch.records.resize(n_trials);

  if (parallel_trials && planner == PlannerKind::Rrt && cfg.config.threads > 1) {
    CheckedConfig single = cfg;
    single.config.threads = 1;
    std::vector<PlanResult> results(n_trials);
    std::atomic<std::uint32_t> next{0};
    {
      std::vector<std::jthread> workers;
      const auto worker_count = std::min<std::uint32_t>(static_cast<std::uint32_t>(cfg.config.threads), n_trials);
      for (std::uint32_t w = 0; w < worker_count; ++w) {
        workers.emplace_back([&] {
          for (std::uint32_t t = next++; t < n_trials; t = next++)
            batch.records[t] = run_one(planner, single, env, model, t, results[t], options);
        });
      }
    }
    if (observer)
      for (std::uint32_t t = 0; t < n_trials; ++t) observer(batch.records[t], results[t]);
  } else {
    for (std::uint32_t t = 0; t < n_trials; ++t) {
      PlanResult result;
      batch.records[t] = run_one(planner, cfg, env, model, t, result, options);
      if (observer) observer(batch.records[t], result);
    }
  }
  batch.stats = summarize(batch.records, std::string(to_string(planner)), std::string(model.name()), env.name);
  return batch;
}

std::vector<SweepRow> sweep_te(const PlannerConfig& base, const Environment& env, const DynamicsModel& model,
                               std::span<const std::uint64_t> te_values, std::uint32_t n_trials,
                               const TrialObserver& observer) {
  for (std::size_t i = 1; i < te_values.size(); ++i)
    if (te_values[i] <= te_values[i - 1]) throw Error(ErrorKind::Config, "t_e values must be strictly increasing");

  std::vector<SweepRow> rows;
  for (std::uint64_t te : te_values) {
    PlannerConfig cfg = base;
    cfg.t_e = te;
    const TrialBatch batch = run_trials(validate_config(cfg, model), env, model, PlannerKind::KinoPax, n_trials,
                                        observer);
    SweepRow row;
    row.t_e = te;
    row.trials = batch.records.size();
    double sum = 0.0;
    for (const TrialRecord& r : batch.records) {
      if (r.status != PlanStatus::Solved) ++row.failures;
      sum += r.wall_time_ms;
    }
    row.mean_ms = sum / static_cast<double>(row.trials);
    double sq = 0.0;
    for (const TrialRecord& r : batch.records) sq += (r.wall_time_ms - row.mean_ms) * (r.wall_time_ms - row.mean_ms);
    row.variance_ms2 = row.trials > 1 ? sq / static_cast<double>(row.trials - 1) : 0.0;
    rows.push_back(row);
  }
  return rows;
}

void write_sweep_report(std::ostream& out, std::span<const SweepRow> rows) {
  out << "t_e,trials,failures,mean_ms,variance_ms2\n";
  for (const SweepRow& r : rows)
    out << r.t_e << ',' << r.trials << ',' << r.failures << ',' << r.mean_ms << ',' << r.variance_ms2 << '\n';
}

// ---------------------------------------------------------------------------
// Trajectory export

void write_trajectory(std::ostream& out, const PlanResult& result, const DynamicsModel& model) {
  if (result.status != PlanStatus::Solved) throw Error(ErrorKind::Internal, "only solved results can be exported");
  const auto old_precision = out.precision(17);
  out << 't';
  for (std::size_t i = 0; i < model.state_dim(); ++i) out << ",x" << i;
  for (std::size_t i = 0; i < model.control_dim(); ++i) out << ",u" << i;
  out << '\n';

  double t0 = 0.0;
  for (const TrajectorySegment& seg : result.trajectory) {
    const auto substeps = seg.sampled_states.size();
    for (std::size_t k = 0; k < substeps; ++k) {
      out << t0 + seg.dt * static_cast<double>(k + 1) / static_cast<double>(substeps);
      for (double v : seg.sampled_states[k]) out << ',' << v;
      for (double v : seg.control) out << ',' << v;
      out << '\n';
    }
    t0 += seg.dt;
  }
  out << "# duration_s=" << t0 << " segments=" << result.trajectory.size() << '\n';
  out.precision(old_precision);
}

void export_trajectory(const PlanResult& result, const DynamicsModel& model, const std::filesystem::path& path) {
  if (result.status != PlanStatus::Solved) throw Error(ErrorKind::Internal, "only solved results can be exported");
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write trajectory file " + path.string());
  write_trajectory(out, result, model);
  if (!out) throw Error(ErrorKind::Io, "failed writing " + path.string());
}

// ---------------------------------------------------------------------------
// Environment generation

EnvironmentKind environment_kind_from_string(std::string_view name) {
  if (name == "forest") return EnvironmentKind::Forest;
  if (name == "narrow") return EnvironmentKind::Narrow;
  if (name == "building") return EnvironmentKind::Building;
  throw Error(ErrorKind::Config, "unknown environment kind '" + std::string(name) + "'");
}

namespace {

double xy_distance_to_box(const Aabb& box, const Vec3& p) {
  const double dx = std::max({box.min[0] - p[0], 0.0, p[0] - box.max[0]});
  const double dy = std::max({box.min[1] - p[1], 0.0, p[1] - box.max[1]});
  return std::sqrt(dx * dx + dy * dy);
}

void forest(EnvironmentSpec& spec, const EnvironmentParams& p, std::uint64_t seed) {
  const double keep_out_start = p.clearance;
  const double keep_out_goal = p.clearance + p.goal_radius;
  std::uint64_t attempt = 0;
  while (spec.obstacles.size() < p.pillars) {
    if (attempt > 1000 * (p.pillars + 1)) throw Error(ErrorKind::Environment, "cannot place forest pillars");
    RngStream rng(seed, attempt++, 0, 0, RngPhase::Test);
    const double w = rng.uniform(p.pillar_min_width, p.pillar_max_width);
    const double cx = rng.uniform(p.workspace_lo[0] + w / 2, p.workspace_hi[0] - w / 2);
    const double cy = rng.uniform(p.workspace_lo[1] + w / 2, p.workspace_hi[1] - w / 2);
    Aabb box{{cx - w / 2, cy - w / 2, p.workspace_lo[2]}, {cx + w / 2, cy + w / 2, p.workspace_hi[2]}};
    if (xy_distance_to_box(box, p.start) < keep_out_start || xy_distance_to_box(box, p.goal) < keep_out_goal)
      continue;
    spec.obstacles.push_back(box);
  }
}

void narrow(EnvironmentSpec& spec, const EnvironmentParams& p) {
  const double y_lo = p.workspace_lo[1];
  const double y_hi = p.workspace_hi[1];
  const double mid = 0.5 * (y_lo + y_hi);
  if (!(p.gap > 0.0) || p.gap >= y_hi - y_lo)
    throw Error(ErrorKind::Environment, "narrow passage gap must be positive and smaller than the workspace");
  const double x0 = p.wall_x - p.wall_thickness / 2;
  const double x1 = p.wall_x + p.wall_thickness / 2;
  spec.obstacles.push_back({{x0, y_lo, p.workspace_lo[2]}, {x1, mid - p.gap / 2, p.workspace_hi[2]}});
  spec.obstacles.push_back({{x0, mid + p.gap / 2, p.workspace_lo[2]}, {x1, y_hi, p.workspace_hi[2]}});
}

// Interior wall along one axis, split into per-room panels each with a
// doorway (and a lintel above it when the doorway is shorter than the room).
void wall_with_doors(EnvironmentSpec& spec, const EnvironmentParams& p, int axis, double at, int panels) {
  const int along = axis == 0 ? 1 : 0;  // wall normal is `axis`; it runs along `along`
  const double lo = p.workspace_lo[along];
  const double len = (p.workspace_hi[along] - lo) / panels;
  const double half_t = p.interior_wall_thickness / 2;
  const double z0 = p.workspace_lo[2];
  const double z1 = p.workspace_hi[2];
  auto box = [&](double a0, double a1, double zlo, double zhi) {
    Aabb b;
    b.min[axis] = at - half_t;
    b.max[axis] = at + half_t;
    b.min[along] = a0;
    b.max[along] = a1;
    b.min[2] = zlo;
    b.max[2] = zhi;
    spec.obstacles.push_back(b);
  };
  for (int k = 0; k < panels; ++k) {
    const double a0 = lo + k * len;
    const double a1 = a0 + len;
    const double mid = 0.5 * (a0 + a1);
    box(a0, mid - p.door_width / 2, z0, z1);
    box(mid + p.door_width / 2, a1, z0, z1);
    if (z0 + p.door_height < z1) box(mid - p.door_width / 2, mid + p.door_width / 2, z0 + p.door_height, z1);
  }
}

void building(EnvironmentSpec& spec, const EnvironmentParams& p) {
  if (p.rooms_x < 1 || p.rooms_y < 1 || !(p.door_width > 0.0) || !(p.door_height > 0.0))
    throw Error(ErrorKind::Environment, "building needs at least one room and positive door dimensions");
  const double room_w = (p.workspace_hi[0] - p.workspace_lo[0]) / p.rooms_x;
  const double room_h = (p.workspace_hi[1] - p.workspace_lo[1]) / p.rooms_y;
  if (p.door_width >= std::min(room_w, room_h))
    throw Error(ErrorKind::Environment, "door width must be smaller than a room");
  for (int i = 1; i < p.rooms_x; ++i) wall_with_doors(spec, p, 0, p.workspace_lo[0] + i * room_w, p.rooms_y);
  for (int j = 1; j < p.rooms_y; ++j) wall_with_doors(spec, p, 1, p.workspace_lo[1] + j * room_h, p.rooms_x);
}

}  // namespace

EnvironmentSpec generate_environment(EnvironmentKind kind, const EnvironmentParams& params, std::uint64_t seed) {
  EnvironmentSpec spec;
  spec.workspace_lo = params.workspace_lo;
  spec.workspace_hi = params.workspace_hi;
  spec.start.assign(params.start.begin(), params.start.end());
  spec.goal = GoalBall{params.goal, params.goal_radius};
  switch (kind) {
    case EnvironmentKind::Forest:
      spec.name = "forest";
      forest(spec, params, seed);
      break;
    case EnvironmentKind::Narrow:
      spec.name = "narrow";
      narrow(spec, params);
      break;
    case EnvironmentKind::Building:
      spec.name = "building";
      building(spec, params);
      break;
  }
  check_environment_spec(spec);
  for (const Aabb& box : spec.obstacles)
    if (box.contains(params.goal)) throw Error(ErrorKind::Environment, "goal center lies inside an obstacle");
  return spec;
}

void gen_environment(EnvironmentKind kind, const EnvironmentParams& params, std::uint64_t seed,
                     const std::filesystem::path& path) {
  save_environment_spec(generate_environment(kind, params, seed), path);
}

}  // namespace kinopax
