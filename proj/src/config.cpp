#include "kinopax/config.hpp"

#include <cmath>
#include <string>

#include "kinopax/dynamics.hpp"

namespace kinopax {
namespace {

[[noreturn]] void fail(const std::string& what) { throw Error(ErrorKind::Config, what); }

// Saturating product; returns cap + 1 once the product exceeds cap.
std::uint64_t bounded_product(const std::vector<int>& cells, std::uint64_t cap) {
  std::uint64_t total = 1;
  for (int c : cells) {
    total *= static_cast<std::uint64_t>(c);
    if (total > cap) return cap + 1;
  }
  return total;
}

}  // namespace

int max_uniform_cells(std::size_t dims, std::uint64_t cap) noexcept {
  int best = 1;
  for (int c = 2;; ++c) {
    std::uint64_t total = 1;
    bool over = false;
    for (std::size_t d = 0; d < dims && !over; ++d) {
      total *= static_cast<std::uint64_t>(c);
      over = total > cap;
    }
    if (over) return best;
    best = c;
    if (dims == 0) return best;
  }
}

CheckedConfig validate_config(const PlannerConfig& cfg, const DynamicsModel& model) {
  CheckedConfig out;
  out.config = cfg;

  if (cfg.t_e == 0) fail("t_e must be at least 1");
  if (cfg.t_e > std::uint64_t{0x7FFFFFFF}) fail("t_e exceeds the addressable arena size");
  if (cfg.lambda_max == 0) fail("lambda_max must be at least 1");
  if (!(cfg.epsilon > 0.0 && cfg.epsilon < 1.0)) fail("epsilon must lie in (0, 1)");
  if (!(cfg.delta > 0.0) || !std::isfinite(cfg.delta)) fail("delta must be positive");
  if (!(cfg.t_max >= 0.0) || std::isnan(cfg.t_max)) fail("t_max must be non-negative");
  if (cfg.threads < 1) fail("threads must be at least 1");
  if (!(cfg.check_resolution > 0.0) || !std::isfinite(cfg.check_resolution))
    fail("check resolution must be positive");
  if (cfg.subcells_per_dim < 1) fail("subcells_per_dim must be at least 1");
  if (cfg.subcells_per_dim > 64) fail("subcells_per_dim must be at most 64");

  out.t_prop = cfg.t_prop.value_or(model.default_t_prop());
  if (!(out.t_prop > 0.0) || !std::isfinite(out.t_prop)) fail("t_prop must be positive");

  const std::size_t n = model.state_dim();
  if (cfg.cells_per_dim.empty()) {
    out.cells_per_dim = model.default_cells_per_dim();
  } else if (cfg.cells_per_dim.size() == 1) {
    out.cells_per_dim.assign(n, cfg.cells_per_dim.front());
  } else if (cfg.cells_per_dim.size() == n) {
    out.cells_per_dim = cfg.cells_per_dim;
  } else {
    fail("cells_per_dim needs 1 or " + std::to_string(n) + " entries");
  }
  for (int c : out.cells_per_dim)
    if (c < 1) fail("cells_per_dim entries must be at least 1");

  out.region_count = bounded_product(out.cells_per_dim, cfg.region_cap);
  if (out.region_count > cfg.region_cap) {
    fail("region count exceeds cap of " + std::to_string(cfg.region_cap) +
         "; try cells_per_dim=" + std::to_string(max_uniform_cells(n, cfg.region_cap)));
  }
  const auto sub = static_cast<std::uint64_t>(cfg.subcells_per_dim);
  out.subregions_per_region = sub * sub * sub;
  out.subregion_count = out.region_count * out.subregions_per_region;
  if (out.subregion_count > kMaxSubregionBits) {
    fail("sub-region count " + std::to_string(out.subregion_count) + " exceeds cap of " +
         std::to_string(kMaxSubregionBits) + "; lower subcells_per_dim or cells_per_dim");
  }
  return out;
}

}  // namespace kinopax
