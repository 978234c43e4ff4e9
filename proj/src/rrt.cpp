#include "kinopax/rrt.hpp"

#include <chrono>
#include <cmath>
#include <mutex>
#include <optional>
#include <thread>

#include "kinopax/dynamics.hpp"
#include "kinopax/rng.hpp"
#include "kinopax/validity.hpp"

namespace kinopax {

RrtTree::RrtTree(std::size_t state_dim, std::size_t control_dim) : n_(state_dim), m_(control_dim) {}

std::size_t RrtTree::add(std::span<const double> state, std::uint32_t parent, std::span<const double> control,
                         double dt) {
  states_.insert(states_.end(), state.begin(), state.end());
  controls_.insert(controls_.end(), control.begin(), control.end());
  parent_.push_back(parent);
  dt_.push_back(dt);
  return parent_.size() - 1;
}

namespace {

double dim_weight(DimKind kind) noexcept {
  switch (kind) {
    case DimKind::Position: return kPositionWeight;
    case DimKind::Velocity: return kVelocityWeight;
    case DimKind::Angle: return kAngleWeight;
  }
  return 1.0;
}

double weighted_distance_sq(std::span<const DimKind> kinds, std::span<const double> a,
                            std::span<const double> b) noexcept {
  double sum = 0.0;
  for (std::size_t i = 0; i < kinds.size(); ++i) {
    const double diff = kinds[i] == DimKind::Angle ? wrap_angle(a[i] - b[i]) : a[i] - b[i];
    const double w = dim_weight(kinds[i]);
    sum += w * w * diff * diff;
  }
  return sum;
}

constexpr std::uint32_t kRootParent = 0xFFFFFFFFu;

}  // namespace

double weighted_distance(const DynamicsModel& model, std::span<const double> a, std::span<const double> b) noexcept {
  return std::sqrt(weighted_distance_sq(model.dim_kinds(), a, b));
}

std::size_t nearest(const RrtTree& tree, std::span<const double> x, const DynamicsModel& model) {
  if (tree.size() == 0) throw Error(ErrorKind::Internal, "nearest query on an empty tree");
  const auto kinds = model.dim_kinds();
  std::size_t best = 0;
  double best_d = weighted_distance_sq(kinds, tree.state(0), x);
  for (std::size_t i = 1; i < tree.size(); ++i) {
    const double d = weighted_distance_sq(kinds, tree.state(i), x);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

PlanResult rrt_plan_single(const CheckedConfig& cfg, const Environment& env, const DynamicsModel& model,
                           std::uint32_t instance, const std::atomic<bool>* stop) {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  auto elapsed_s = [&] { return std::chrono::duration<double>(clock::now() - t0).count(); };

  PlanResult result;
  const ValidityChecker checker(env, model, cfg.config.check_resolution);
  if (env.start.size() != model.state_dim() || !checker.state_valid(env.start)) {
    result.status = PlanStatus::Error;
    result.message = "start state is not valid";
    return result;
  }
  const StateBounds& box = checker.bounds();
  const std::size_t n = model.state_dim();

  RrtTree tree(n, model.control_dim());
  const ControlVec no_control(model.control_dim(), 0.0);
  tree.add(env.start.span(), kRootParent, no_control.span(), 0.0);

  std::optional<std::size_t> goal_node;
  if (in_goal(env.start, env.goal)) goal_node = 0;

  std::uint64_t iter = 0;
  StateVec target(n);
  StateVec reached(n);
  while (!goal_node) {
    if (elapsed_s() >= cfg.config.t_max || (stop && stop->load(std::memory_order_relaxed))) {
      result.status = PlanStatus::Timeout;
      break;
    }
    if (tree.size() >= cfg.config.t_e) {
      result.status = PlanStatus::CapacityExhausted;
      break;
    }
    ++iter;
    RngStream rng(cfg.config.seed, iter, instance, 0, RngPhase::Rrt);
    for (std::size_t i = 0; i < n; ++i) target[i] = rng.uniform(box.lo[i], box.hi[i]);
    if (rng.uniform() < kRrtGoalBias) {
      // Uniform point of the goal ball by rejection from its bounding cube.
      for (;;) {
        Vec3 offset{};
        double r2 = 0.0;
        for (int d = 0; d < 3; ++d) {
          offset[d] = rng.uniform(-1.0, 1.0);
          r2 += offset[d] * offset[d];
        }
        if (r2 > 1.0) continue;
        for (int d = 0; d < 3; ++d) target[d] = env.goal.center[d] + env.goal.radius * offset[d];
        break;
      }
    }

    const std::size_t near = nearest(tree, target.span(), model);
    const ControlVec u = sample_control(model, rng);
    const double dt = sample_duration(rng, cfg.t_prop);
    if (!checker.rollout(tree.state(near), u.span(), dt, reached.span())) continue;
    const std::size_t added = tree.add(reached.span(), static_cast<std::uint32_t>(near), u.span(), dt);
    if (in_goal(reached, env.goal)) goal_node = added;
  }

  if (goal_node) {
    result.status = PlanStatus::Solved;
    std::vector<std::size_t> chain;
    for (std::size_t s = *goal_node; s != 0; s = tree.parent(s)) chain.push_back(s);
    for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
      const std::size_t s = *it;
      result.trajectory.push_back(propagate_ode(model, StateVec::from(tree.state(tree.parent(s))),
                                                ControlVec::from(tree.control(s)), tree.dt(s)));
      result.stats.solution_duration_s += tree.dt(s);
    }
  }
  result.stats.iterations = iter;
  result.stats.tree_size = tree.size();
  result.stats.wall_time_ms = elapsed_s() * 1000.0;
  return result;
}

PlanResult rrt_plan(const CheckedConfig& cfg, const Environment& env, const DynamicsModel& model) {
  const int instances = cfg.config.threads;
  if (instances <= 1) return rrt_plan_single(cfg, env, model, 0, nullptr);

  const auto t0 = std::chrono::steady_clock::now();
  std::atomic<bool> stop{false};
  std::mutex mutex;
  std::optional<PlanResult> winner;
  std::vector<PlanResult> results(static_cast<std::size_t>(instances));
  {
    std::vector<std::jthread> workers;
    workers.reserve(results.size());
    for (int i = 0; i < instances; ++i) {
      workers.emplace_back([&, i] {
        PlanResult r = rrt_plan_single(cfg, env, model, static_cast<std::uint32_t>(i), &stop);
        if (r.status == PlanStatus::Solved) {
          const std::lock_guard lock(mutex);
          if (!winner) {
            winner = r;
            stop.store(true);
          }
        }
        results[static_cast<std::size_t>(i)] = std::move(r);
      });
    }
  }
  PlanResult out = winner ? *winner : results.front();
  out.stats.wall_time_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

}  // namespace kinopax
