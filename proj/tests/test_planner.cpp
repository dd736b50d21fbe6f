#include <gtest/gtest.h>

#include "canav/planner.hpp"
#include "suites.hpp"

using namespace canav;

TEST(Fmm, StraightLineMatchesDijkstra) {
  const GridSpec spec{30, 5, 0.05};
  const CellMask free(spec, 0);
  const DistanceField f = fmm_solve({2, 0}, free);
  const Grid<double> d = oracle::dijkstra4({2, 0}, free);
  EXPECT_NEAR(f.at(2, 10), 0.50, 1e-12);
  EXPECT_NEAR(f.at(2, 10), d.at(2, 10), spec.resolution);
}

// First-order upwinding overshoots most near the source (about 5.8% at 10
// cells, 1.9% at 50); the 1% bound holds from roughly 110 cells out.
TEST(Fmm, DiagonalWithinOnePercentOfEuclidean) {
  const GridSpec spec{240, 240, 0.05};
  const DistanceField f = fmm_solve({0, 0}, CellMask(spec, 0));
  for (int k : {120, 180, 239}) {
    const double euclid = std::hypot(k, k) * spec.resolution;
    EXPECT_GE(f.at(k, k), euclid - 1e-12) << k;
    EXPECT_LE(f.at(k, k), euclid * 1.01) << k;
  }
  double prev = 2.0;
  for (int k = 10; k < 240; k += 10) {
    const double ratio = f.at(k, k) / (std::hypot(k, k) * spec.resolution);
    EXPECT_LT(ratio, prev) << k;
    prev = ratio;
  }
}

TEST(Fmm, NeverBelowEuclideanInFreeSpace) {
  const GridSpec spec{60, 40, 0.05};
  const DistanceField f = fmm_solve({13, 21}, CellMask(spec, 0));
  for (int r = 0; r < spec.height; ++r)
    for (int c = 0; c < spec.width; ++c)
      EXPECT_GE(f.at(r, c), std::hypot(r - 13, c - 21) * spec.resolution - 1e-12);
}

TEST(Fmm, NeverAboveFourNeighbourPaths) {
  const suites::FmmTally t = suites::fmm_vs_dijkstra(17, 20);
  EXPECT_EQ(t.grids, 20);
  EXPECT_EQ(t.above_dijkstra, 0);
  EXPECT_EQ(t.reachability, 0);
}

TEST(Fmm, EikonalConsistency) {
  std::mt19937_64 rng(4);
  std::bernoulli_distribution wall(0.2);
  const GridSpec spec{50, 50, 0.05};
  CellMask blocked(spec, 0);
  for (auto& b : blocked.data()) b = wall(rng) ? 1 : 0;
  blocked.at(25, 25) = 0;
  const DistanceField f = fmm_solve({25, 25}, blocked);
  EXPECT_EQ(f.at(25, 25), 0.0);
  for (int r = 0; r < 50; ++r)
    for (int c = 0; c < 50; ++c) {
      if (!std::isfinite(f.at(r, c)) || (r == 25 && c == 25)) continue;
      double m = kInfDistance;
      for (const Cell& n : {Cell{r - 1, c}, Cell{r + 1, c}, Cell{r, c - 1}, Cell{r, c + 1}})
        if (spec.contains(n)) m = std::min(m, f[n]);
      EXPECT_LE(f.at(r, c), m + spec.resolution + 1e-9);
    }
}

TEST(Fmm, WalledOffWaypoint) {
  const GridSpec spec{20, 20, 0.05};
  CellMask occ(spec, 0);
  for (int i = 5; i <= 9; ++i) occ.at(5, i) = occ.at(9, i) = occ.at(i, 5) = occ.at(i, 9) = 1;
  const DistanceField f = fmm_field({7, 7}, occ, spec);
  EXPECT_TRUE(std::isfinite(f.at(7, 7)));
  EXPECT_FALSE(std::isfinite(f.at(0, 0)));
  EXPECT_FALSE(std::isfinite(f.at(19, 19)));
  EXPECT_THROW(fmm_field({5, 5}, occ, spec), UnreachableGoalError);
  EXPECT_THROW(fmm_field({6, 6}, occ, spec, 0.05), UnreachableGoalError);  // inflated onto the waypoint
}

TEST(NextAction, Basics) {
  const GridSpec spec{100, 100, 0.05};
  const DistanceField f = fmm_solve(world_to_cell(3.5, 2.5, spec), CellMask(spec, 0));
  EXPECT_EQ(next_action(Pose(2.5, 2.5, 0.0), f, 0.25).action, Action::Forward);
  EXPECT_EQ(next_action(Pose(2.5, 2.5, kPi), f, 0.25).action, Action::Left);
  EXPECT_EQ(next_action(Pose(2.5, 2.5, kPi / 2), f, 0.25).action, Action::Right);
  const ControlDecision at = next_action(Pose(3.45, 2.5, 0.0), f, 0.25);
  EXPECT_EQ(at.action, Action::Stop);
  EXPECT_EQ(at.status, ControlStatus::AtGoal);
}

TEST(NextAction, StuckOnInfiniteCell) {
  const GridSpec spec{20, 20, 0.05};
  DistanceField f(spec, kInfDistance);
  EXPECT_EQ(next_action(Pose(0.5, 0.5, 0.0), f, 0.25).status, ControlStatus::Stuck);
}

// Free-space rollout: every FORWARD lowers the field and the waypoint is
// reached within ceil(d / 0.25) + 12 turns, times a slack of 4.
TEST(NextAction, RolloutTerminates) {
  const GridSpec spec{160, 160, 0.05};
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.3, 7.7), h(-kPi, kPi);
  const ActionSpace space;
  for (int trial = 0; trial < 20; ++trial) {
    const Cell goal = world_to_cell(u(rng), u(rng), spec);
    const DistanceField f = fmm_solve(goal, CellMask(spec, 0));
    Pose p(u(rng), u(rng), h(rng));
    const double d0 = f[world_to_cell(p, spec)];
    const int bound = 4 * (static_cast<int>(std::ceil(d0 / space.forward_step)) + 12);
    int steps = 0;
    for (; steps < bound; ++steps) {
      const ControlDecision d = next_action(p, f, 0.25, space);
      if (d.status == ControlStatus::AtGoal) break;
      ASSERT_EQ(d.status, ControlStatus::Moving);
      const double before = f[world_to_cell(p, spec)];
      if (d.action == Action::Forward) {
        p = Pose(p.x() + space.forward_step * std::cos(p.heading()), p.y() + space.forward_step * std::sin(p.heading()), p.heading());
        EXPECT_LT(f[world_to_cell(p, spec)], before);
      } else {
        p = Pose(p.x(), p.y(), p.heading() + (d.action == Action::Left ? 1 : -1) * space.turn_step);
      }
    }
    EXPECT_LT(steps, bound) << "trial " << trial;
  }
}
