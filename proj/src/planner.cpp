#include "kinopax/planner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <ostream>

#include "kinopax/dynamics.hpp"
#include "kinopax/rng.hpp"

namespace kinopax {

// ---------------------------------------------------------------------------
// TreeArena

TreeArena::TreeArena(std::size_t capacity, std::size_t state_dim, std::size_t control_dim)
    : capacity_(capacity), n_(state_dim), m_(control_dim) {
  states_.reserve(capacity_ * n_);
  controls_.reserve(capacity_ * m_);
  dt_.reserve(capacity_);
  parent_.reserve(capacity_);
  region_.reserve(capacity_);
  tag_.reserve(capacity_);
}

Slot TreeArena::append(std::span<const double> state, Slot parent, std::span<const double> control, double dt,
                       RegionId region, NodeTag tag) {
  if (full()) throw Error(ErrorKind::Internal, "tree arena is full");
  if (state.size() != n_ || control.size() != m_) throw Error(ErrorKind::Internal, "arena dimension mismatch");
  const auto slot = static_cast<Slot>(size());
  if (slot == 0 ? parent != kNoParent : parent >= slot)
    throw Error(ErrorKind::Internal, "parent must precede child in the arena");
  states_.insert(states_.end(), state.begin(), state.end());
  controls_.insert(controls_.end(), control.begin(), control.end());
  dt_.push_back(dt);
  parent_.push_back(parent);
  region_.push_back(region);
  tag_.push_back(tag);
  return slot;
}

std::size_t TreeArena::count(NodeTag t) const noexcept {
  return static_cast<std::size_t>(std::count(tag_.begin(), tag_.end(), t));
}

// ---------------------------------------------------------------------------

std::uint32_t compute_branching_factor(std::uint64_t t_e, std::uint64_t tree_size, std::uint64_t ve_size,
                                       std::uint32_t lambda_max) noexcept {
  if (ve_size == 0) return std::max<std::uint32_t>(1, lambda_max);
  const std::uint64_t room = t_e > tree_size ? (t_e - tree_size) / ve_size : 0;
  const std::uint64_t lambda = std::min<std::uint64_t>(lambda_max, room);
  return static_cast<std::uint32_t>(std::max<std::uint64_t>(1, lambda));
}

std::vector<TrajectorySegment> extract_trajectory(const TreeArena& arena, Slot slot, const DynamicsModel& model) {
  if (slot >= arena.size()) throw Error(ErrorKind::Internal, "trajectory slot out of range");
  std::vector<Slot> chain;
  for (Slot s = slot; s != 0; s = arena.parent(s)) {
    const Slot p = arena.parent(s);
    if (p == kNoParent || p >= s || chain.size() > arena.size())
      throw Error(ErrorKind::Internal, "corrupted parent chain in tree arena");
    chain.push_back(s);
  }
  std::reverse(chain.begin(), chain.end());

  std::vector<TrajectorySegment> segments;
  segments.reserve(chain.size());
  for (Slot s : chain) {
    const StateVec from = StateVec::from(arena.state(arena.parent(s)));
    const ControlVec u = ControlVec::from(arena.control(s));
    segments.push_back(propagate_ode(model, from, u, arena.dt(s)));
  }
  return segments;
}

// ---------------------------------------------------------------------------
// KinoPaxPlanner

KinoPaxPlanner::KinoPaxPlanner(const CheckedConfig& cfg, const Environment& env, const DynamicsModel& model,
                               PlannerOptions options)
    : cfg_(cfg),
      env_(&env),
      model_(&model),
      options_(options),
      checker_(env, model, cfg.config.check_resolution),
      decomposition_(checker_.bounds(), cfg.cells_per_dim, cfg.config.subcells_per_dim),
      arena_(cfg.config.t_e, model.state_dim(), model.control_dim()),
      executor_(cfg.config.threads) {
  if (env.start.size() != model.state_dim() || !checker_.state_valid(env.start))
    throw Error(ErrorKind::Environment, "start state is not valid");

  const RegionId root_region = decomposition_.region_index(env.start.span());
  const ControlVec no_control(model.control_dim(), 0.0);
  arena_.append(env.start.span(), kNoParent, no_control.span(), 0.0, root_region, NodeTag::Expand);
  decomposition_.mark_available(root_region);
  decomposition_.try_mark_subregion_visited(root_region,
                                            decomposition_.subregion_index(env.start.span(), root_region));
  started_ = std::chrono::steady_clock::now();
}

IterationState KinoPaxPlanner::state() const {
  IterationState st;
  st.iteration = iteration_;
  st.lambda = lambda_;
  st.expand_count = arena_.count(NodeTag::Expand);
  st.open_count = arena_.count(NodeTag::Open);
  st.unexplored_count = staged_.size();
  st.elapsed_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();
  return st;
}

std::uint32_t KinoPaxPlanner::begin_iteration() {
  ++iteration_;
  expand_list_.clear();
  for (Slot s = 0; s < arena_.size(); ++s)
    if (arena_.tag(s) == NodeTag::Expand) expand_list_.push_back(s);
  lambda_ = compute_branching_factor(cfg_.config.t_e, arena_.size(), expand_list_.size(), cfg_.config.lambda_max);
  return lambda_;
}

void KinoPaxPlanner::run_extension(Extension& ext, Slot parent, std::uint32_t j) const {
  const std::uint64_t seed = cfg_.config.seed;
  RngStream rng(seed, iteration_, parent, j, RngPhase::Sample);
  ext.parent = parent;
  ext.extension = j;
  ext.control = sample_control(*model_, rng);
  ext.dt = sample_duration(rng, cfg_.t_prop);
  ext.end_state = StateVec(model_->state_dim());
  ext.valid = checker_.rollout(arena_.state(parent), ext.control.span(), ext.dt, ext.end_state.span());

  if (ext.valid) {
    ext.region = decomposition_.region_index(ext.end_state.span());
    ext.subregion = decomposition_.subregion_index(ext.end_state.span(), ext.region);
    ext.accept_draw = RngStream(seed, iteration_, parent, j, RngPhase::Accept).uniform();
  } else {
    // Invalid motions are charged to the region of the first offending
    // state (clamped into the grid), or the parent's when it diverged.
    const bool finite = std::all_of(ext.end_state.begin(), ext.end_state.end(),
                                    [](double v) { return std::isfinite(v); });
    ext.region = finite ? decomposition_.region_index(ext.end_state.span()) : arena_.region(parent);
    ext.subregion = 0;
    ext.accept_draw = 1.0;
  }
}

std::size_t KinoPaxPlanner::propagate_pass(std::uint32_t lambda) {
  lambda_ = lambda;
  const std::size_t work = expand_list_.size() * lambda;
  if (extensions_.size() < work) extensions_.resize(work);
  extension_count_ = work;

  auto* decomposition = &decomposition_;
  executor_.parallel_for(work, 16, [&](std::size_t k0, std::size_t k1) {
    for (std::size_t k = k0; k < k1; ++k) {
      Extension& ext = extensions_[k];
      run_extension(ext, expand_list_[k / lambda], static_cast<std::uint32_t>(k % lambda));
      decomposition->record_outcome(ext.region, ext.valid);
    }
  });

  // Staging walks work items in (parent slot, extension) order, so which
  // candidate claims a fresh sub-region never depends on scheduling.
  staged_.clear();
  const std::size_t room = arena_.capacity() - arena_.size();
  for (std::size_t k = 0; k < work && staged_.size() < room; ++k) {
    const Extension& ext = extensions_[k];
    if (!ext.valid) continue;
    if (decomposition_.try_mark_subregion_visited(ext.region, ext.subregion) ||
        ext.accept_draw < decomposition_.p_accept(ext.region))
      staged_.push_back(static_cast<std::uint32_t>(k));
  }
  return staged_.size();
}

void KinoPaxPlanner::update_estimates_pass() {
  decomposition_.update_estimates(cfg_.config.delta, cfg_.config.epsilon, executor_);
}

NodeSetOutcome KinoPaxPlanner::update_node_sets_pass() {
  NodeSetOutcome outcome;
  const std::uint64_t seed = cfg_.config.seed;

  // Phase A: keep each E-node with probability p_accept of its region.
  std::atomic<std::size_t> demoted{0};
  executor_.parallel_for(expand_list_.size(), 256, [&](std::size_t i0, std::size_t i1) {
    std::size_t local = 0;
    for (std::size_t i = i0; i < i1; ++i) {
      const Slot s = expand_list_[i];
      const double draw = RngStream(seed, iteration_, s, 0, RngPhase::Demote).uniform();
      if (draw >= decomposition_.p_accept(arena_.region(s))) {
        arena_.set_tag(s, NodeTag::Open);
        ++local;
      }
    }
    demoted.fetch_add(local, std::memory_order_relaxed);
  });
  outcome.demoted = demoted.load();

  // Phase B: staged candidates join the tree as E-nodes.
  for (std::uint32_t k : staged_) {
    const Extension& ext = extensions_[k];
    if (arena_.full()) {
      ++outcome.dropped;
      continue;
    }
    const Slot slot =
        arena_.append(ext.end_state.span(), ext.parent, ext.control.span(), ext.dt, ext.region, NodeTag::Expand);
    decomposition_.mark_available(ext.region);
    ++outcome.appended;
    if (in_goal(ext.end_state.span(), env_->goal)) {
      outcome.goal_slot = slot;
      return outcome;
    }
  }

  // Phase C: re-activate O-nodes with probability p_accept.
  std::atomic<std::size_t> promoted{0};
  executor_.parallel_for(arena_.size(), 1024, [&](std::size_t i0, std::size_t i1) {
    std::size_t local = 0;
    for (std::size_t i = i0; i < i1; ++i) {
      const auto s = static_cast<Slot>(i);
      if (arena_.tag(s) != NodeTag::Open) continue;
      const double draw = RngStream(seed, iteration_, s, 0, RngPhase::Promote).uniform();
      if (draw < decomposition_.p_accept(arena_.region(s))) {
        arena_.set_tag(s, NodeTag::Expand);
        ++local;
      }
    }
    promoted.fetch_add(local, std::memory_order_relaxed);
  });
  outcome.promoted = promoted.load();

  // An empty expansion set would stall the search: revive the most promising
  // O-node (lowest slot on ties).
  if (arena_.count(NodeTag::Expand) == 0) {
    std::optional<Slot> best;
    for (Slot s = 0; s < arena_.size(); ++s) {
      if (arena_.tag(s) != NodeTag::Open) continue;
      if (!best || decomposition_.p_accept(arena_.region(s)) > decomposition_.p_accept(arena_.region(*best)))
        best = s;
    }
    if (best) {
      arena_.set_tag(*best, NodeTag::Expand);
      outcome.rescued = true;
    }
  }
  return outcome;
}

PlanResult KinoPaxPlanner::solve() {
  using clock = std::chrono::steady_clock;
  started_ = clock::now();
  auto elapsed_s = [&] { return std::chrono::duration<double>(clock::now() - started_).count(); };

  PlanResult result;
  std::optional<Slot> goal_slot;
  if (in_goal(env_->start.span(), env_->goal)) goal_slot = Slot{0};

  while (!goal_slot) {
    if (elapsed_s() >= cfg_.config.t_max) {
      result.status = PlanStatus::Timeout;
      break;
    }
    if (arena_.full()) {
      result.status = PlanStatus::CapacityExhausted;
      break;
    }
    const std::uint32_t lambda = begin_iteration();
    const std::size_t expand_count = expand_list_.size();
    propagate_pass(lambda);
    update_estimates_pass();
    const NodeSetOutcome outcome = update_node_sets_pass();
    if (options_.trace) {
      *options_.trace << "iter " << iteration_ << " |V_E| " << expand_count << " lambda " << lambda << " staged "
                      << staged_.size() << " tree " << arena_.size() << '\n';
    }
    goal_slot = outcome.goal_slot;
  }

  if (goal_slot) {
    result.status = PlanStatus::Solved;
    result.trajectory = extract_trajectory(arena_, *goal_slot, *model_);
    for (const TrajectorySegment& seg : result.trajectory) result.stats.solution_duration_s += seg.dt;
  }
  result.stats.iterations = iteration_;
  result.stats.tree_size = arena_.size();
  result.stats.wall_time_ms = elapsed_s() * 1000.0;
  if (options_.region_dump) decomposition_.dump(*options_.region_dump);
  return result;
}

PlanResult plan(const CheckedConfig& cfg, const Environment& env, const DynamicsModel& model,
                PlannerOptions options) {
  const auto t0 = std::chrono::steady_clock::now();
  try {
    KinoPaxPlanner planner(cfg, env, model, options);
    PlanResult result = planner.solve();
    result.stats.wall_time_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return result;
  } catch (const Error& e) {
    PlanResult failed;
    failed.status = PlanStatus::Error;
    failed.message = e.what();
    return failed;
  }
}

}  // namespace kinopax
