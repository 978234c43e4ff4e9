#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "kinopax/types.hpp"

namespace kinopax {

class DynamicsModel;

inline constexpr std::uint64_t kDefaultRegionCap = 2'000'000;
inline constexpr std::uint64_t kMaxSubregionBits = std::uint64_t{1} << 30;

struct PlannerConfig {
  std::uint64_t t_e = 200'000;       // expected tree size = arena capacity
  std::uint32_t lambda_max = 32;
  std::optional<double> t_prop;      // unset: model default
  double epsilon = 0.005;
  double delta = 1.0;
  std::vector<int> cells_per_dim;    // empty: model default; one entry: uniform
  int subcells_per_dim = 4;
  double t_max = 60.0;
  std::uint64_t seed = 1;
  int threads = 1;
  double check_resolution = 0.05;
  std::uint64_t region_cap = kDefaultRegionCap;
};

/// A config whose invariants have been verified against a model, with every
/// defaulted value filled in.
struct CheckedConfig {
  PlannerConfig config;
  double t_prop = 1.0;
  std::vector<int> cells_per_dim;
  std::uint64_t region_count = 0;
  std::uint64_t subregions_per_region = 0;
  std::uint64_t subregion_count = 0;
};

/// Throws Error(Config) naming the offending field.
CheckedConfig validate_config(const PlannerConfig& cfg, const DynamicsModel& model);

/// Largest uniform cells-per-dimension whose region count fits under `cap`.
int max_uniform_cells(std::size_t dims, std::uint64_t cap) noexcept;

}  // namespace kinopax
