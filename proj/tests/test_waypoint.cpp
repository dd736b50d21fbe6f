#include <gtest/gtest.h>

#include "canav/waypoint.hpp"
#include "suites.hpp"

using namespace canav;

TEST(Slic, UniformSquareGivesFourBlocks) {
  const GridSpec spec{96, 96, 0.05};
  const auto sps = slic_partition(Grid<double>(spec, 0.5), CellMask(spec, 1), 48);
  ASSERT_EQ(sps.size(), 4u);
  for (const auto& sp : sps) {
    EXPECT_NEAR(static_cast<double>(sp.members.size()), 48.0 * 48.0, 48.0 * 4);
    EXPECT_TRUE(suites::connected4(sp.members));
  }
}

TEST(Slic, SingleCell) {
  const GridSpec spec{5, 5, 0.05};
  CellMask nav(spec, 0);
  nav.at(2, 3) = 1;
  const auto sps = slic_partition(Grid<double>(spec, 0.1), nav, 4);
  ASSERT_EQ(sps.size(), 1u);
  ASSERT_EQ(sps[0].members.size(), 1u);
  EXPECT_EQ(sps[0].members[0], (Cell{2, 3}));
}

TEST(Slic, EmptyInputRejected) {
  const GridSpec spec{5, 5, 0.05};
  EXPECT_THROW(slic_partition(Grid<double>(spec, 0.0), CellMask(spec, 0), 4), EmptyInputError);
  EXPECT_THROW(slic_partition(Grid<double>(spec, 0.0), CellMask(spec, 1), 1), PreconditionError);
}

TEST(Slic, BoundaryFollowsValueEdge) {
  // Left half 0, right half 1, region size = half the width: the partition
  // with the lower SLIC energy puts the cut exactly on the edge.
  const GridSpec spec{16, 16, 0.05};
  Grid<double> v(spec, 0.0);
  for (int r = 0; r < 16; ++r)
    for (int c = 8; c < 16; ++c) v.at(r, c) = 1.0;
  const auto sps = slic_partition(v, CellMask(spec, 1), 8, 1.0);
  for (const auto& sp : sps) {
    const double first = v[sp.members.front()];
    for (const Cell& c : sp.members) EXPECT_EQ(v[c], first) << "superpixel " << sp.id << " straddles the edge";
  }
}

TEST(Waypoints, SuperpixelArgmaxAndTieBreak) {
  std::vector<Superpixel> sps = {{0, {{0, 0}, {0, 1}}, 0.9, 0.0, 0.5}, {1, {{5, 5}}, 0.2, 5.0, 5.0}};
  EXPECT_EQ(select_superpixel_waypoint(sps).cell, (Cell{0, 0}));
  sps[1].mean_value = 0.9;
  EXPECT_EQ(select_superpixel_waypoint(sps).cell, (Cell{0, 0}));  // lower id wins
  EXPECT_THROW(select_superpixel_waypoint({}), EmptyInputError);
}

TEST(Waypoints, SuperpixelInvariantUnderPositiveScaling) {
  std::mt19937_64 rng(3);
  for (int k = 0; k < 30; ++k) {
    const auto m = oracle::random_map(rng, 14, 14, 0.1);
    auto sps = slic_partition(m.values, m.nav, 5);
    const Cell before = select_superpixel_waypoint(sps).cell;
    for (auto& sp : sps) sp.mean_value = 3.0 * sp.mean_value + 0.25;
    EXPECT_EQ(select_superpixel_waypoint(sps).cell, before);
  }
}

TEST(Waypoints, PixelAndOrp) {
  const GridSpec spec{4, 4, 0.05};
  Grid<double> v(spec, 0.3);
  CellMask nav(spec, 1);
  EXPECT_EQ(select_pixel_waypoint(v, nav).cell, (Cell{0, 0}));
  v.at(2, 1) = 0.9;
  EXPECT_EQ(select_pixel_waypoint(v, nav).cell, (Cell{2, 1}));
  nav.at(2, 1) = 0;
  EXPECT_EQ(select_pixel_waypoint(v, nav).cell, (Cell{0, 0}));
  nav.at(2, 1) = 1;
  Superpixel all{0, {}, 0.0, 0, 0};
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) all.members.push_back({r, c});
  EXPECT_EQ(select_orp_waypoint({all}, v).cell, select_pixel_waypoint(v, nav).cell);
}

TEST(Waypoints, FrontierSelection) {
  const GridSpec spec{5, 5, 0.05};
  Grid<double> v(spec, 0.0);
  CellMask nav(spec, 1), explored(spec, 1);
  EXPECT_FALSE(select_fbe_waypoint(v, explored, nav).has_value());
  explored.at(0, 4) = 0;
  explored.at(4, 0) = 0;
  v.at(0, 3) = 0.3;
  v.at(4, 1) = 0.7;
  EXPECT_EQ(select_fbe_waypoint(v, explored, nav)->cell, (Cell{4, 1}));
}

TEST(Waypoints, GoalMaskCentroid) {
  const GridSpec spec{10, 10, 0.05};
  CellMask mask(spec, 0);
  mask.at(4, 4) = mask.at(4, 5) = mask.at(5, 4) = mask.at(5, 5) = 1;
  // Centroid (4.5, 4.5) is equidistant from four cells; row-major picks (4, 4).
  EXPECT_EQ(goal_waypoint(mask).cell, (Cell{4, 4}));
  CellMask one(spec, 0);
  one.at(7, 2) = 1;
  EXPECT_EQ(goal_waypoint(one).cell, (Cell{7, 2}));
  EXPECT_THROW(goal_waypoint(CellMask(spec, 0)), EmptyInputError);
}

TEST(Waypoints, AgreeWithBruteForceOracles) {
  const suites::WaypointTally t = suites::waypoint_vs_bruteforce(99, 50);
  EXPECT_EQ(t.maps, 50);
  EXPECT_EQ(t.partition, 0);
  EXPECT_EQ(t.superpixel, 0);
  EXPECT_EQ(t.orp, 0);
  EXPECT_EQ(t.pixel, 0);
  EXPECT_EQ(t.fbe, 0);
}

TEST(Waypoints, Deterministic) {
  std::mt19937_64 rng(8);
  const auto m = oracle::random_map(rng, 16, 16, 0.2);
  const auto a = slic_partition(m.values, m.nav, 5);
  const auto b = slic_partition(m.values, m.nav, 5);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].members, b[i].members);
}
