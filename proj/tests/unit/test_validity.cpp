#include <doctest.h>

#include <cmath>

#include "fine_checker.hpp"
#include "kinopax/dynamics.hpp"
#include "kinopax/rng.hpp"
#include "kinopax/validity.hpp"

using namespace kinopax;

namespace {

Environment box_env(std::vector<Aabb> obstacles = {}) {
  Environment env;
  env.name = "box";
  env.workspace_lo = {0, 0, 0};
  env.workspace_hi = {10, 10, 10};
  env.obstacles = std::move(obstacles);
  env.start = StateVec{1, 1, 1, 0, 0, 0};
  env.goal = GoalBall{{9, 9, 9}, 0.5};
  return env;
}

TrajectorySegment straight(const StateVec& a, const StateVec& b) {
  TrajectorySegment seg;
  seg.control = ControlVec{0, 0, 0};
  seg.dt = 1.0;
  seg.start_state = a;
  seg.sampled_states = {b};
  seg.end_state = b;
  return seg;
}

}  // namespace

TEST_CASE("state validity") {
  const DoubleIntegrator6D model;
  const Environment empty = box_env();
  const ValidityChecker free_checker(empty, model);
  CHECK(free_checker.state_valid(StateVec{5, 5, 5, 1, -1, 0}));

  const Environment env = box_env({Aabb{{4, 4, 4}, {6, 6, 6}}});
  const ValidityChecker checker(env, model);
  CHECK_FALSE(checker.state_valid(StateVec{4, 4, 4, 0, 0, 0}));
  CHECK_FALSE(checker.state_valid(StateVec{6, 5, 5, 0, 0, 0}));
  CHECK(checker.state_valid(StateVec{6.000001, 5, 5, 0, 0, 0}));
  CHECK_FALSE(checker.state_valid(StateVec{1, 1, 1, 5.0001, 0, 0}));
  CHECK(checker.state_valid(StateVec{1, 1, 1, 5.0, 0, 0}));
  CHECK_FALSE(checker.state_valid(StateVec{-0.001, 1, 1, 0, 0, 0}));
  CHECK(checker.state_valid(StateVec{0, 0, 10, 0, 0, 0}));
  CHECK_FALSE(checker.state_valid(StateVec{1, 1, 1, NAN, 0, 0}));
  CHECK_FALSE(checker.state_valid(StateVec{1, 1, 1, 0, 0}));
}

TEST_CASE("segment validity") {
  const DoubleIntegrator6D model;
  const Environment empty = box_env();
  const ValidityChecker free_checker(empty, model);
  TrajectorySegment zero;
  zero.control = ControlVec{0, 0, 0};
  zero.dt = 1.0;
  zero.sampled_states = {StateVec(6, 0.0)};
  zero.end_state = StateVec(6, 0.0);
  CHECK(free_checker.segment_valid(zero));

  const Environment env = box_env({Aabb{{4.9, 4.9, 4.9}, {5.1, 5.1, 5.1}}});
  const ValidityChecker checker(env, model);
  // Both ends clear of the box; the midpoint (5,5,5) is its center.
  const TrajectorySegment through = straight(StateVec{3, 5, 5, 0, 0, 0}, StateVec{7, 5, 5, 0, 0, 0});
  CHECK(env.obstacles[0].contains({5, 5, 5}));
  CHECK_FALSE(checker.segment_valid(through));
  CHECK(checker.segment_valid(straight(StateVec{3, 3, 5, 0, 0, 0}, StateVec{7, 3, 5, 0, 0, 0})));
  CHECK_FALSE(checker.segment_valid(straight(StateVec{9, 3, 5, 0, 0, 0}, StateVec{10.5, 3, 5, 0, 0, 0})));

  TrajectorySegment empty_seg;
  CHECK_FALSE(checker.segment_valid(empty_seg));
}

TEST_CASE("goal ball is closed") {
  const GoalBall goal{{1, 2, 3}, 0.5};
  CHECK(in_goal(StateVec{1, 2, 3, 0, 0, 0}, goal));
  CHECK(in_goal(StateVec{1.5, 2, 3, 0, 0, 0}, goal));
  CHECK_FALSE(in_goal(StateVec{1.5 + 1e-9, 2, 3, 0, 0, 0}, goal));
}

TEST_CASE("resolution must be positive") {
  const DoubleIntegrator6D model;
  const Environment env = box_env();
  CHECK_THROWS_AS(ValidityChecker(env, model, 0.0), Error);
  CHECK_THROWS_AS(ValidityChecker(env, model, -1.0), Error);
}

TEST_CASE("finer resolution never turns an invalid segment valid") {
  const DubinsAirplane6D model;
  Environment env = box_env();
  RngStream layout(21, 0, 0, 0, RngPhase::Test);
  for (int i = 0; i < 40; ++i) {
    const double x = layout.uniform(1, 9), y = layout.uniform(1, 9), z = layout.uniform(1, 9);
    const double w = layout.uniform(0.05, 0.4);
    env.obstacles.push_back(Aabb{{x, y, z}, {x + w, y + w, z + w}});
  }
  env.start = model.state_at({0.5, 0.5, 0.5});
  const double resolutions[] = {0.4, 0.2, 0.1, 0.05, 0.01};
  RngStream rng(22, 0, 0, 0, RngPhase::Test);
  int invalid_seen = 0;
  for (int trial = 0; trial < 400; ++trial) {
    StateVec x = model.state_at({rng.uniform(0.5, 9.5), rng.uniform(0.5, 9.5), rng.uniform(0.5, 9.5)});
    x[4] = rng.uniform(-3, 3);
    const TrajectorySegment seg = propagate_ode(model, x, sample_control(model, rng), rng.uniform(0.2, 3.0), 4);
    bool previous_valid = true;
    for (double res : resolutions) {
      const bool valid = ValidityChecker(env, model, res).segment_valid(seg);
      if (!previous_valid) CHECK_FALSE(valid);
      previous_valid = valid;
    }
    invalid_seen += previous_valid ? 0 : 1;
  }
  CHECK(invalid_seen > 0);
}

TEST_CASE("state validity is total over random inputs") {
  const Quadcopter12D model;
  Environment env = box_env({Aabb{{2, 2, 2}, {3, 3, 3}}});
  env.start = StateVec(12, 1.0);
  const ValidityChecker checker(env, model);
  RngStream rng(31, 0, 0, 0, RngPhase::Test);
  std::size_t valid = 0;
  StateVec x(12);
  for (int i = 0; i < 1'000'000; ++i) {
    for (std::size_t d = 0; d < 12; ++d) x[d] = rng.uniform(-12, 12);
    valid += checker.state_valid(x) ? 1 : 0;
  }
  CHECK(valid < 1'000'000);
}

TEST_CASE("rollouts accepted by the checker survive the fine re-check") {
  for (const auto& model : {make_model("di6"), make_model("dubins6"), make_model("quad12")}) {
    Environment env = box_env();
    RngStream layout(41, 0, 0, 0, RngPhase::Test);
    for (int i = 0; i < 30; ++i) {
      const double x = layout.uniform(0.5, 9), y = layout.uniform(0.5, 9);
      env.obstacles.push_back(Aabb{{x, y, 0}, {x + 0.5, y + 0.5, 10}});
    }
    env.start = model->state_at({0.1, 0.1, 5});
    const ValidityChecker checker(env, *model);
    RngStream rng(42, 0, 0, 0, RngPhase::Test);
    int accepted = 0;
    for (int trial = 0; trial < 3000; ++trial) {
      StateVec x = model->state_at({rng.uniform(0, 10), rng.uniform(0, 10), rng.uniform(0, 10)});
      for (std::size_t d = 3; d < model->state_dim(); ++d)
        x[d] = rng.uniform(0.9 * checker.bounds().lo[d], 0.9 * checker.bounds().hi[d]);
      if (!checker.state_valid(x)) continue;
      const ControlVec u = sample_control(*model, rng);
      const double dt = sample_duration(rng, 1.0);
      StateVec end(model->state_dim());
      if (!checker.rollout(x.span(), u.span(), dt, end.span())) continue;
      ++accepted;
      const TrajectorySegment seg = propagate_ode(*model, x, u, dt);
      CHECK(seg.end_state == end);
      CHECK(checker.segment_valid(seg));
      Environment local = env;
      local.start = x;
      local.goal = GoalBall{{end[0], end[1], end[2]}, 1e-3};
      const kptest::FineReport rep = kptest::fine_check(local, *model, std::span(&seg, 1), 0.05);
      CAPTURE(rep.first_problem);
      CHECK(rep.ok());
    }
    CHECK(accepted > 100);
  }
}

TEST_CASE("fine re-check flags broken trajectories") {
  const DoubleIntegrator6D model;
  Environment env = box_env({Aabb{{4, 0, 0}, {4.5, 10, 10}}});
  env.start = StateVec{1, 1, 1, 0, 0, 0};
  env.goal = GoalBall{{2, 1, 1}, 0.1};
  std::vector<TrajectorySegment> traj = {propagate_ode(model, env.start, ControlVec{2, 0, 0}, 0.5)};
  traj.push_back(propagate_ode(model, traj[0].end_state, ControlVec{0, 0, 0}, 0.75));
  const kptest::FineReport good = kptest::fine_check(env, model, traj, 0.05);
  CAPTURE(good.first_problem);
  CHECK(good.ok());

  auto gapped = traj;
  gapped[1] = propagate_ode(model, StateVec{1.3, 1, 1, 1, 0, 0}, ControlVec{0, 0, 0}, 0.75);
  CHECK_FALSE(kptest::fine_check(env, model, gapped, 0.05).continuous);

  auto tampered = traj;
  tampered[0].control = ControlVec{1.9, 0, 0};
  const kptest::FineReport drift = kptest::fine_check(env, model, tampered, 0.05);
  CHECK(drift.max_drift > kptest::kMaxDrift);
  CHECK_FALSE(drift.ok());

  Environment blocked = env;
  blocked.obstacles.push_back(Aabb{{1.5, 0.95, 0.95}, {1.51, 1.05, 1.05}});
  CHECK(kptest::fine_check(blocked, model, traj, 0.05).violations > 0);

  Environment far_goal = env;
  far_goal.goal = GoalBall{{3, 1, 1}, 0.1};
  CHECK_FALSE(kptest::fine_check(far_goal, model, traj, 0.05).reaches_goal);
}
