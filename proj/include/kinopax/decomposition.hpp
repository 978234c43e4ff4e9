#pragma once

#include <atomic>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "kinopax/environment.hpp"

namespace kinopax {

class Executor;

using RegionId = std::uint32_t;
using SubregionId = std::uint32_t;

/// Plain snapshot of one region's counters and metrics.
struct RegionRecord {
  std::uint64_t n_valid = 0;
  std::uint64_t n_invalid = 0;
  std::uint32_t cov = 0;
  double free_vol = 0.0;
  double score = 0.0;
  double p_accept = 1.0;
  double vol = 0.0;
  bool available = false;
};

/// Uniform grid over the state box. Each region is refined along the three
/// workspace dimensions into subcells^3 sub-regions used for first-visit
/// detection.
///
/// Concurrency: record_outcome and try_mark_subregion_visited may be called
/// from any number of threads at once. update_region_estimates touches only
/// its own region. mark_available, update_accept and update_estimates must
/// not overlap with any other call.
class Decomposition {
 public:
  Decomposition(const StateBounds& bounds, std::vector<int> cells_per_dim, int subcells_per_dim);

  std::size_t state_dim() const noexcept { return cells_.size(); }
  std::size_t region_count() const noexcept { return region_count_; }
  std::uint32_t subregions_per_region() const noexcept { return subs_per_region_; }
  std::span<const int> cells_per_dim() const noexcept { return cells_; }
  /// Workspace volume of one cell; the same for every region of a uniform grid.
  double region_volume() const noexcept { return vol_; }

  /// Grid cell containing x. Coordinates on an upper cell face belong to the
  /// next cell; the state box's upper face clamps into the last cell.
  RegionId region_index(std::span<const double> x) const noexcept;
  SubregionId subregion_index(std::span<const double> x, RegionId region) const noexcept;

  void record_outcome(RegionId region, bool valid) noexcept;
  /// True exactly once per (region, sub) pair; bumps the region's coverage.
  bool try_mark_subregion_visited(RegionId region, SubregionId sub) noexcept;
  bool subregion_visited(RegionId region, SubregionId sub) const noexcept;

  /// Adds the region to the available set; returns false if already there.
  bool mark_available(RegionId region);
  bool is_available(RegionId region) const noexcept { return available_flag_[region] != 0; }
  std::span<const RegionId> available_regions() const noexcept { return available_; }

  /// Free volume and score of one region from a single counter snapshot.
  void update_region_estimates(RegionId region, double delta) noexcept;
  /// Acceptance probabilities of every available region from the current
  /// scores. The score sum is reduced in fixed-size blocks so the result does
  /// not depend on the worker count.
  void update_accept(double epsilon, const Executor* executor = nullptr);
  /// Both loops of the estimate pass, separated by a barrier.
  void update_estimates(double delta, double epsilon, const Executor& executor);

  double p_accept(RegionId region) const noexcept { return p_accept_[region]; }
  RegionRecord record(RegionId region) const noexcept;

  /// CSV of the available regions' counters and metrics.
  void dump(std::ostream& out) const;

 private:
  StateBounds bounds_;
  std::vector<int> cells_;
  std::vector<double> width_;
  std::vector<double> inv_width_;
  std::vector<std::uint64_t> stride_;
  int subcells_;
  std::uint32_t subs_per_region_;
  std::size_t region_count_;
  double vol_;

  std::vector<std::atomic<std::uint64_t>> n_valid_;
  std::vector<std::atomic<std::uint64_t>> n_invalid_;
  std::vector<std::atomic<std::uint32_t>> cov_;
  std::vector<std::atomic<std::uint64_t>> visited_bits_;
  std::vector<double> free_vol_;
  std::vector<double> score_;
  std::vector<double> p_accept_;
  std::vector<std::uint8_t> available_flag_;
  std::vector<RegionId> available_;
};

}  // namespace kinopax
