#include <doctest.h>

#include <cmath>
#include <sstream>
#include <thread>
#include <vector>

#include "kinopax/decomposition.hpp"
#include "kinopax/executor.hpp"
#include "kinopax/rng.hpp"

using namespace kinopax;

namespace {

StateBounds box(std::vector<double> lo, std::vector<double> hi) {
  return StateBounds{StateVec::from(lo), StateVec::from(hi)};
}

}  // namespace

TEST_CASE("region index corners and clamping") {
  const Decomposition d(box({0, 0, 0, -1, -1, -1}, {4, 4, 4, 1, 1, 1}), {4, 4, 4, 2, 2, 2}, 4);
  CHECK(d.region_count() == 512);
  CHECK(d.region_index(StateVec{0, 0, 0, -1, -1, -1}.span()) == 0);
  CHECK(d.region_index(StateVec{4, 4, 4, 1, 1, 1}.span()) == 511);
  // Dimension 0 is the least significant digit of the flattened index.
  CHECK(d.region_index(StateVec{2.5, 0, 0, -1, -1, -1}.span()) == 2);
  CHECK(d.region_index(StateVec{0, 1.0, 0, -1, -1, -1}.span()) == 4);
  CHECK(d.region_index(StateVec{0, 0, 0, -1, -1, 0.5}.span()) == 256);
}

TEST_CASE("1D slice cell arithmetic") {
  const Decomposition d(box({0, 0, 0}, {4, 1, 1}), {4, 1, 1}, 2);
  CHECK(d.region_index(StateVec{2.5, 0.5, 0.5}.span()) == 2);
  CHECK(d.region_index(StateVec{0.999, 0.5, 0.5}.span()) == 0);
  CHECK(d.region_index(StateVec{1.0, 0.5, 0.5}.span()) == 1);
}

TEST_CASE("sub-region indices") {
  const Decomposition d(box({0, 0, 0}, {2, 2, 2}), {2, 2, 2}, 2);
  CHECK(d.subregions_per_region() == 8);
  const StateVec lower{1, 1, 1};
  const RegionId r = d.region_index(lower.span());
  CHECK(d.subregion_index(lower.span(), r) == 0);
  const StateVec center{1.5, 1.5, 1.5};
  CHECK(d.region_index(center.span()) == r);
  CHECK(d.subregion_index(center.span(), r) == 7);
  RngStream rng(1, 0, 0, 0, RngPhase::Test);
  for (int i = 0; i < 1000; ++i) {
    const StateVec x{rng.uniform(0, 2), rng.uniform(0, 2), rng.uniform(0, 2)};
    CHECK(d.subregion_index(x.span(), d.region_index(x.span())) < 8);
  }
}

TEST_CASE("region mapping partitions the box") {
  const Decomposition d(box({0, 0, 0, -2, -2, -2}, {3, 3, 3, 2, 2, 2}), {3, 3, 3, 4, 4, 4}, 4);
  RngStream rng(2, 0, 0, 0, RngPhase::Test);
  for (int i = 0; i < 20000; ++i) {
    StateVec x(6);
    for (int k = 0; k < 3; ++k) x[k] = rng.uniform(0, 3);
    for (int k = 3; k < 6; ++k) x[k] = rng.uniform(-2, 2);
    const RegionId r = d.region_index(x.span());
    REQUIRE(r < d.region_count());
    // Oracle: per-dimension floor with the last cell closed.
    std::uint64_t expect = 0, stride = 1;
    const double lo[] = {0, 0, 0, -2, -2, -2};
    const double w[] = {1, 1, 1, 1, 1, 1};
    const int cells[] = {3, 3, 3, 4, 4, 4};
    for (int k = 0; k < 6; ++k) {
      const int c = std::min(cells[k] - 1, static_cast<int>(std::floor((x[k] - lo[k]) / w[k])));
      expect += stride * static_cast<std::uint64_t>(c);
      stride *= static_cast<std::uint64_t>(cells[k]);
    }
    CHECK(r == expect);
  }
}

TEST_CASE("invalid grids are rejected") {
  CHECK_THROWS_AS(Decomposition(box({0, 0, 0}, {1, 1, 1}), {1, 1}, 2), Error);
  CHECK_THROWS_AS(Decomposition(box({0, 0, 0}, {1, 1, 1}), {1, 0, 1}, 2), Error);
  CHECK_THROWS_AS(Decomposition(box({0, 0, 0}, {1, 1, 1}), {1, 1, 1}, 0), Error);
  CHECK_THROWS_AS(Decomposition(box({0, 0, 0}, {1, INFINITY, 1}), {1, 1, 1}, 2), Error);
  CHECK_THROWS_AS(Decomposition(box({0, 0, 0}, {1, 0, 1}), {1, 1, 1}, 2), Error);
}

TEST_CASE("outcome counters") {
  Decomposition d(box({0, 0, 0}, {1, 1, 1}), {1, 1, 1}, 2);
  d.record_outcome(0, true);
  CHECK(d.record(0).n_valid == 1);
  CHECK(d.record(0).n_invalid == 0);

  Decomposition c(box({0, 0, 0}, {1, 1, 1}), {1, 1, 1}, 2);
  {
    std::vector<std::jthread> pool;
    for (int t = 0; t < 8; ++t)
      pool.emplace_back([&] {
        for (int i = 0; i < 125; ++i) c.record_outcome(0, true);
      });
  }
  CHECK(c.record(0).n_valid == 1000);

  Decomposition m(box({0, 0, 0}, {1, 1, 1}), {1, 1, 1}, 2);
  {
    std::vector<std::jthread> pool;
    for (int t = 0; t < 10; ++t)
      pool.emplace_back([&, t] {
        for (int i = 0; i < 100; ++i) m.record_outcome(0, (t + i) % 2 == 0);
      });
  }
  CHECK(m.record(0).n_valid == 500);
  CHECK(m.record(0).n_invalid == 500);
}

TEST_CASE("first visit detection") {
  Decomposition d(box({0, 0, 0}, {2, 2, 2}), {2, 2, 2}, 4);
  CHECK(d.try_mark_subregion_visited(3, 5));
  CHECK_FALSE(d.try_mark_subregion_visited(3, 5));
  CHECK(d.try_mark_subregion_visited(3, 6));
  CHECK(d.try_mark_subregion_visited(4, 5));
  CHECK(d.record(3).cov == 2);
  CHECK(d.subregion_visited(3, 5));
  CHECK_FALSE(d.subregion_visited(2, 5));

  for (int round = 0; round < 20; ++round) {
    Decomposition s(box({0, 0, 0}, {2, 2, 2}), {2, 2, 2}, 4);
    std::atomic<int> wins{0};
    {
      std::vector<std::jthread> pool;
      for (int t = 0; t < 64; ++t)
        pool.emplace_back([&] {
          if (s.try_mark_subregion_visited(7, 63)) ++wins;
        });
    }
    CHECK(wins.load() == 1);
    CHECK(s.record(7).cov == 1);
  }
}

TEST_CASE("free volume and score") {
  Decomposition d(box({0, 0, 0}, {1, 1, 1}), {1, 1, 1}, 2);
  d.mark_available(0);
  d.update_region_estimates(0, 1.0);
  CHECK(d.record(0).free_vol == 1.0);

  Decomposition e(box({0, 0, 0}, {2, 2, 2}), {1, 1, 1}, 2);
  CHECK(e.region_volume() == 8.0);
  for (int i = 0; i < 3; ++i) e.record_outcome(0, true);
  e.record_outcome(0, false);
  e.update_region_estimates(0, 1.0);
  CHECK(e.record(0).free_vol == doctest::Approx(6.4).epsilon(1e-15));

  // vol 2, counters (2,0): free_vol = 2; cov 3, n_total 2 -> 16 / (4 * 5).
  Decomposition f(box({0, 0, 0}, {2, 1, 1}), {1, 1, 1}, 2);
  f.record_outcome(0, true);
  f.record_outcome(0, true);
  for (SubregionId s = 0; s < 3; ++s) f.try_mark_subregion_visited(0, s);
  f.update_region_estimates(0, 1.0);
  CHECK(f.record(0).free_vol == 2.0);
  CHECK(f.record(0).score == doctest::Approx(0.8).epsilon(1e-15));
}

TEST_CASE("acceptance probabilities") {
  Decomposition one(box({0, 0, 0}, {2, 2, 2}), {2, 2, 2}, 2);
  one.mark_available(0);
  one.update_region_estimates(0, 1.0);
  one.update_accept(0.01);
  CHECK(one.p_accept(0) == 1.0);

  Decomposition two(box({0, 0, 0}, {2, 2, 2}), {2, 2, 2}, 2);
  two.mark_available(0);
  two.mark_available(5);
  two.update_region_estimates(0, 1.0);
  two.update_region_estimates(5, 1.0);
  two.update_accept(0.01);
  CHECK(two.p_accept(0) == doctest::Approx(0.51).epsilon(1e-15));
  CHECK(two.p_accept(5) == doctest::Approx(0.51).epsilon(1e-15));
  CHECK(two.p_accept(1) == 1.0);

  // A region whose counters are all invalid has zero free volume and score.
  Decomposition zero(box({0, 0, 0}, {2, 2, 2}), {2, 2, 2}, 2);
  for (RegionId r : {0u, 1u, 2u}) zero.mark_available(r);
  for (int i = 0; i < 5; ++i) zero.record_outcome(2, false);
  for (RegionId r : {0u, 1u, 2u}) zero.update_region_estimates(r, 1e-300);
  zero.update_accept(0.02);
  CHECK(zero.record(2).score == 0.0);
  CHECK(zero.p_accept(2) == doctest::Approx(0.02).epsilon(1e-15));
}

TEST_CASE("all-zero scores fall back to epsilon") {
  Decomposition d(box({0, 0, 0}, {2, 2, 2}), {2, 2, 2}, 2);
  d.mark_available(0);
  d.mark_available(1);
  d.update_accept(0.03);
  CHECK(d.p_accept(0) == 0.03);
  CHECK(d.p_accept(1) == 0.03);
}

TEST_CASE("estimate pass gives the same result for any worker count") {
  auto run = [](int threads) {
    Decomposition d(box({0, 0, 0, 0}, {8, 8, 8, 8}), {8, 8, 8, 8}, 2);
    RngStream rng(9, 0, 0, 0, RngPhase::Test);
    for (int i = 0; i < 20000; ++i) {
      const auto r = static_cast<RegionId>(rng.next_u32() % d.region_count());
      d.mark_available(r);
      d.record_outcome(r, rng.uniform() < 0.7);
      d.try_mark_subregion_visited(r, rng.next_u32() % 8);
    }
    const Executor ex(threads);
    d.update_estimates(1.0, 0.005, ex);
    std::vector<double> p;
    for (RegionId r = 0; r < d.region_count(); ++r) p.push_back(d.p_accept(r));
    return p;
  };
  const auto base = run(1);
  CHECK(run(2) == base);
  CHECK(run(8) == base);
}

TEST_CASE("dump lists available regions") {
  Decomposition d(box({0, 0, 0}, {2, 2, 2}), {2, 2, 2}, 2);
  d.mark_available(3);
  d.mark_available(1);
  CHECK_FALSE(d.mark_available(3));
  std::ostringstream out;
  d.dump(out);
  const std::string text = out.str();
  CHECK(text.rfind("region,n_valid,n_invalid,cov,free_vol,score,p_accept\n", 0) == 0);
  CHECK(text.find("\n3,") != std::string::npos);
  CHECK(text.find("\n1,") != std::string::npos);
  CHECK(std::count(text.begin(), text.end(), '\n') == 3);
}
