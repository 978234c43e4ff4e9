#include "kinopax/decomposition.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "kinopax/executor.hpp"

namespace kinopax {
namespace {

constexpr std::size_t kReductionBlock = 4096;

inline int cell_of(double t, int cells) noexcept {
  // NaN and negative offsets land in cell 0.
  if (t >= static_cast<double>(cells)) return cells - 1;
  if (!(t > 0.0)) return 0;
  return std::min(static_cast<int>(t), cells - 1);
}

}  // namespace

Decomposition::Decomposition(const StateBounds& bounds, std::vector<int> cells_per_dim, int subcells_per_dim)
    : bounds_(bounds), cells_(std::move(cells_per_dim)), subcells_(subcells_per_dim) {
  const std::size_t n = cells_.size();
  if (n != bounds_.lo.size() || n != bounds_.hi.size() || n < 3)
    throw Error(ErrorKind::Config, "grid needs one cell count per state dimension (at least 3)");
  if (subcells_ < 1) throw Error(ErrorKind::Config, "subcells_per_dim must be at least 1");

  width_.resize(n);
  inv_width_.resize(n);
  stride_.resize(n);
  std::uint64_t count = 1;
  for (std::size_t d = 0; d < n; ++d) {
    if (cells_[d] < 1) throw Error(ErrorKind::Config, "cells_per_dim entries must be at least 1");
    const double span = bounds_.hi[d] - bounds_.lo[d];
    if (!std::isfinite(span) || !(span > 0.0))
      throw Error(ErrorKind::Config, "state box must be finite with lo < hi in dimension " + std::to_string(d));
    width_[d] = span / cells_[d];
    inv_width_[d] = cells_[d] / span;
    stride_[d] = count;
    count *= static_cast<std::uint64_t>(cells_[d]);
    if (count > std::uint64_t{0xFFFFFFFF}) throw Error(ErrorKind::Config, "too many grid regions");
  }
  region_count_ = static_cast<std::size_t>(count);
  subs_per_region_ = static_cast<std::uint32_t>(subcells_ * subcells_ * subcells_);
  vol_ = width_[0] * width_[1] * width_[2];

  n_valid_ = std::vector<std::atomic<std::uint64_t>>(region_count_);
  n_invalid_ = std::vector<std::atomic<std::uint64_t>>(region_count_);
  cov_ = std::vector<std::atomic<std::uint32_t>>(region_count_);
  const std::uint64_t bits = static_cast<std::uint64_t>(region_count_) * subs_per_region_;
  visited_bits_ = std::vector<std::atomic<std::uint64_t>>((bits + 63) / 64);
  free_vol_.assign(region_count_, 0.0);
  score_.assign(region_count_, 0.0);
  p_accept_.assign(region_count_, 1.0);
  available_flag_.assign(region_count_, 0);
}

RegionId Decomposition::region_index(std::span<const double> x) const noexcept {
  std::uint64_t index = 0;
  for (std::size_t d = 0; d < cells_.size(); ++d)
    index += stride_[d] * static_cast<std::uint64_t>(cell_of((x[d] - bounds_.lo[d]) * inv_width_[d], cells_[d]));
  return static_cast<RegionId>(index);
}

SubregionId Decomposition::subregion_index(std::span<const double> x, RegionId region) const noexcept {
  SubregionId sub = 0;
  SubregionId scale = 1;
  for (std::size_t d = 0; d < 3; ++d) {
    const auto cell = static_cast<int>((region / stride_[d]) % static_cast<std::uint64_t>(cells_[d]));
    const double cell_lo = bounds_.lo[d] + cell * width_[d];
    const double t = (x[d] - cell_lo) * inv_width_[d] * subcells_;
    sub += scale * static_cast<SubregionId>(cell_of(t, subcells_));
    scale *= static_cast<SubregionId>(subcells_);
  }
  return sub;
}

void Decomposition::record_outcome(RegionId region, bool valid) noexcept {
  auto& counter = valid ? n_valid_[region] : n_invalid_[region];
  counter.fetch_add(1, std::memory_order_relaxed);
}

bool Decomposition::try_mark_subregion_visited(RegionId region, SubregionId sub) noexcept {
  const std::uint64_t bit = static_cast<std::uint64_t>(region) * subs_per_region_ + sub;
  const std::uint64_t mask = std::uint64_t{1} << (bit % 64);
  const std::uint64_t before = visited_bits_[bit / 64].fetch_or(mask, std::memory_order_relaxed);
  if (before & mask) return false;
  cov_[region].fetch_add(1, std::memory_order_relaxed);
  return true;
}

bool Decomposition::subregion_visited(RegionId region, SubregionId sub) const noexcept {
  const std::uint64_t bit = static_cast<std::uint64_t>(region) * subs_per_region_ + sub;
  return (visited_bits_[bit / 64].load(std::memory_order_relaxed) >> (bit % 64)) & 1u;
}

bool Decomposition::mark_available(RegionId region) {
  if (available_flag_[region]) return false;
  available_flag_[region] = 1;
  available_.push_back(region);
  return true;
}

void Decomposition::update_region_estimates(RegionId region, double delta) noexcept {
  const auto valid = static_cast<double>(n_valid_[region].load(std::memory_order_relaxed));
  const auto invalid = static_cast<double>(n_invalid_[region].load(std::memory_order_relaxed));
  const auto cov = static_cast<double>(cov_[region].load(std::memory_order_relaxed));
  const double total = valid + invalid;

  const double free_vol = (delta + valid) * vol_ / (delta + total);
  const double fv2 = free_vol * free_vol;
  free_vol_[region] = free_vol;
  score_[region] = fv2 * fv2 / ((1.0 + cov) * (1.0 + total * total));
}

void Decomposition::update_accept(double epsilon, const Executor* executor) {
  const std::size_t count = available_.size();
  if (count == 0) return;
  const std::size_t blocks = (count + kReductionBlock - 1) / kReductionBlock;
  std::vector<double> partial(blocks, 0.0);
  auto block_sum = [&](std::size_t b0, std::size_t b1) {
    for (std::size_t b = b0; b < b1; ++b) {
      double s = 0.0;
      const std::size_t end = std::min(count, (b + 1) * kReductionBlock);
      for (std::size_t i = b * kReductionBlock; i < end; ++i) s += score_[available_[i]];
      partial[b] = s;
    }
  };
  if (executor)
    executor->parallel_for(blocks, 1, block_sum);
  else
    block_sum(0, blocks);
  double total = 0.0;
  for (double s : partial) total += s;

  auto assign = [&](std::size_t i0, std::size_t i1) {
    for (std::size_t i = i0; i < i1; ++i) {
      const RegionId r = available_[i];
      // An all-zero score sum leaves only the epsilon floor.
      const double ratio = total > 0.0 ? score_[r] / total : 0.0;
      p_accept_[r] = std::min(1.0, ratio + epsilon);
    }
  };
  if (executor)
    executor->parallel_for(count, 1024, assign);
  else
    assign(0, count);
}

void Decomposition::update_estimates(double delta, double epsilon, const Executor& executor) {
  executor.parallel_for(available_.size(), 256, [&](std::size_t i0, std::size_t i1) {
    for (std::size_t i = i0; i < i1; ++i) update_region_estimates(available_[i], delta);
  });
  update_accept(epsilon, &executor);
}

RegionRecord Decomposition::record(RegionId region) const noexcept {
  RegionRecord rec;
  rec.n_valid = n_valid_[region].load(std::memory_order_relaxed);
  rec.n_invalid = n_invalid_[region].load(std::memory_order_relaxed);
  rec.cov = cov_[region].load(std::memory_order_relaxed);
  rec.free_vol = free_vol_[region];
  rec.score = score_[region];
  rec.p_accept = p_accept_[region];
  rec.vol = vol_;
  rec.available = available_flag_[region] != 0;
  return rec;
}

void Decomposition::dump(std::ostream& out) const {
  out << "region,n_valid,n_invalid,cov,free_vol,score,p_accept\n";
  const auto old_precision = out.precision(17);
  for (RegionId r : available_) {
    const RegionRecord rec = record(r);
    out << r << ',' << rec.n_valid << ',' << rec.n_invalid << ',' << rec.cov << ',' << rec.free_vol << ','
        << rec.score << ',' << rec.p_accept << '\n';
  }
  out.precision(old_precision);
}

}  // namespace kinopax
