#pragma once

#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "kinopax/config.hpp"
#include "kinopax/decomposition.hpp"
#include "kinopax/environment.hpp"
#include "kinopax/executor.hpp"
#include "kinopax/types.hpp"
#include "kinopax/validity.hpp"

namespace kinopax {

class DynamicsModel;

using Slot = std::uint32_t;
inline constexpr Slot kNoParent = std::numeric_limits<Slot>::max();

/// Node-set membership. Unexplored (V_U) candidates live in the staging
/// buffer until Phase B appends them, so arena slots only ever carry Expand
/// or Open.
enum class NodeTag : std::uint8_t { Empty = 0, Unexplored, Expand, Open };

/// Fixed-capacity node store. Slot 0 is the root; parents always precede
/// their children.
class TreeArena {
 public:
  TreeArena(std::size_t capacity, std::size_t state_dim, std::size_t control_dim);

  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t size() const noexcept { return parent_.size(); }
  bool full() const noexcept { return size() >= capacity_; }
  std::size_t state_dim() const noexcept { return n_; }
  std::size_t control_dim() const noexcept { return m_; }

  Slot append(std::span<const double> state, Slot parent, std::span<const double> control, double dt,
              RegionId region, NodeTag tag);

  std::span<const double> state(Slot s) const noexcept { return {states_.data() + std::size_t{s} * n_, n_}; }
  std::span<const double> control(Slot s) const noexcept { return {controls_.data() + std::size_t{s} * m_, m_}; }
  double dt(Slot s) const noexcept { return dt_[s]; }
  Slot parent(Slot s) const noexcept { return parent_[s]; }
  RegionId region(Slot s) const noexcept { return region_[s]; }
  NodeTag tag(Slot s) const noexcept { return tag_[s]; }
  void set_tag(Slot s, NodeTag t) noexcept { tag_[s] = t; }
  std::size_t count(NodeTag t) const noexcept;

 private:
  std::size_t capacity_;
  std::size_t n_;
  std::size_t m_;
  std::vector<double> states_;
  std::vector<double> controls_;
  std::vector<double> dt_;
  std::vector<Slot> parent_;
  std::vector<RegionId> region_;
  std::vector<NodeTag> tag_;
};

/// lambda = max(1, min(lambda_max, floor((t_e - tree_size) / ve_size))).
std::uint32_t compute_branching_factor(std::uint64_t t_e, std::uint64_t tree_size, std::uint64_t ve_size,
                                       std::uint32_t lambda_max) noexcept;

/// One work item of the propagate pass: extension `extension` of E-node
/// `parent`.
struct Extension {
  Slot parent = kNoParent;
  std::uint32_t extension = 0;
  bool valid = false;
  RegionId region = 0;
  SubregionId subregion = 0;
  double accept_draw = 1.0;
  double dt = 0.0;
  ControlVec control;
  StateVec end_state;
};

struct IterationState {
  std::uint64_t iteration = 0;
  std::uint32_t lambda = 0;
  std::size_t expand_count = 0;
  std::size_t unexplored_count = 0;
  std::size_t open_count = 0;
  double elapsed_s = 0.0;
};

struct NodeSetOutcome {
  std::optional<Slot> goal_slot;
  std::size_t appended = 0;
  std::size_t dropped = 0;
  std::size_t demoted = 0;
  std::size_t promoted = 0;
  bool rescued = false;
};

struct PlannerOptions {
  std::ostream* trace = nullptr;        // one line per iteration
  std::ostream* region_dump = nullptr;  // decomposition CSV at the end of solve()
};

/// Root-to-slot segments, re-propagated from the stored (control, dt) pairs.
std::vector<TrajectorySegment> extract_trajectory(const TreeArena& arena, Slot slot, const DynamicsModel& model);

/// Parallel kinodynamic tree planner: per iteration, a propagate pass over
/// every (E-node, extension) pair, a region-estimate pass and a node-set
/// pass, each separated from the next by a barrier. All randomness comes
/// from counter-based streams keyed by (seed, iteration, slot, extension,
/// phase) and staging follows (parent slot, extension) order, so results do
/// not depend on the worker count.
class KinoPaxPlanner {
 public:
  KinoPaxPlanner(const CheckedConfig& cfg, const Environment& env, const DynamicsModel& model,
                 PlannerOptions options = {});

  PlanResult solve();

  // Individual passes, exposed for inspection. A full iteration is
  // begin_iteration, propagate_pass, update_estimates_pass,
  // update_node_sets_pass.
  std::uint32_t begin_iteration();
  std::size_t propagate_pass(std::uint32_t lambda);
  void update_estimates_pass();
  NodeSetOutcome update_node_sets_pass();

  const TreeArena& arena() const noexcept { return arena_; }
  const Decomposition& decomposition() const noexcept { return decomposition_; }
  const ValidityChecker& checker() const noexcept { return checker_; }
  std::span<const Extension> extensions() const noexcept { return {extensions_.data(), extension_count_}; }
  std::span<const std::uint32_t> staged() const noexcept { return staged_; }
  std::span<const Slot> expand_list() const noexcept { return expand_list_; }
  std::uint64_t iteration() const noexcept { return iteration_; }
  IterationState state() const;

 private:
  void run_extension(Extension& ext, Slot parent, std::uint32_t j) const;

  CheckedConfig cfg_;
  const Environment* env_;
  const DynamicsModel* model_;
  PlannerOptions options_;
  ValidityChecker checker_;
  Decomposition decomposition_;
  TreeArena arena_;
  Executor executor_;

  std::uint64_t iteration_ = 0;
  std::uint32_t lambda_ = 0;
  std::vector<Slot> expand_list_;
  std::vector<Extension> extensions_;
  std::size_t extension_count_ = 0;
  std::vector<std::uint32_t> staged_;
  std::chrono::steady_clock::time_point started_;
};

PlanResult plan(const CheckedConfig& cfg, const Environment& env, const DynamicsModel& model,
                PlannerOptions options = {});

}  // namespace kinopax
