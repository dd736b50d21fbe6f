#pragma once

// Independent reference implementations used by the unit tests and the
// acceptance binary. Deliberately naive: brute force wherever possible.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <random>
#include <vector>

#include "canav/canav.hpp"

namespace oracle {

using canav::Cell;
using canav::CellMask;
using canav::Grid;
using canav::GridSpec;
using canav::Point2;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// 4-neighbour Dijkstra in meters from `source` over free cells.
inline Grid<double> dijkstra4(Cell source, const CellMask& blocked) {
  const GridSpec& spec = blocked.spec();
  Grid<double> d(spec, kInf);
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  d[source] = 0.0;
  pq.push({0.0, spec.index(source)});
  while (!pq.empty()) {
    auto [du, u] = pq.top();
    pq.pop();
    if (du > d.flat(u)) continue;
    const Cell c = spec.cell_at(u);
    const Cell nb[4] = {{c.row - 1, c.col}, {c.row + 1, c.col}, {c.row, c.col - 1}, {c.row, c.col + 1}};
    for (const Cell& n : nb) {
      if (!spec.contains(n) || blocked[n]) continue;
      const double nd = du + spec.resolution;
      if (nd < d[n]) {
        d[n] = nd;
        pq.push({nd, spec.index(n)});
      }
    }
  }
  return d;
}

/// Minimum over every monotone alignment path, enumerated recursively.
inline double dtw_exhaustive(const std::vector<Point2>& a, const std::vector<Point2>& b) {
  std::function<double(std::size_t, std::size_t)> go = [&](std::size_t i, std::size_t j) -> double {
    const double here = canav::distance(a[i], b[j]);
    if (i + 1 == a.size() && j + 1 == b.size()) return here;
    double best = kInf;
    if (i + 1 < a.size()) best = std::min(best, go(i + 1, j));
    if (j + 1 < b.size()) best = std::min(best, go(i, j + 1));
    if (i + 1 < a.size() && j + 1 < b.size()) best = std::min(best, go(i + 1, j + 1));
    return here + best;
  };
  return go(0, 0);
}

inline double ndtw_exhaustive(const std::vector<Point2>& a, const std::vector<Point2>& ref, double d_th) {
  return std::exp(-dtw_exhaustive(a, ref) / (static_cast<double>(ref.size()) * d_th));
}

/// Brute-force navigable argmax, first in row-major order.
inline std::optional<Cell> pixel_argmax(const Grid<double>& v, const CellMask& nav) {
  std::optional<Cell> best;
  for (int r = 0; r < v.height(); ++r)
    for (int c = 0; c < v.width(); ++c) {
      if (!nav.at(r, c)) continue;
      if (!best || v.at(r, c) > v[*best]) best = Cell{r, c};
    }
  return best;
}

/// Frontier by definition: explored navigable cell with an unexplored
/// in-grid 4-neighbour. Returns the best-valued one, row-major ties.
inline std::optional<Cell> frontier_argmax(const Grid<double>& v, const CellMask& explored, const CellMask& nav) {
  std::optional<Cell> best;
  const GridSpec& spec = v.spec();
  for (int r = 0; r < spec.height; ++r)
    for (int c = 0; c < spec.width; ++c) {
      if (!nav.at(r, c) || !explored.at(r, c)) continue;
      bool frontier = false;
      for (auto [dr, dc] : {std::pair{-1, 0}, {1, 0}, {0, -1}, {0, 1}}) {
        const Cell n{r + dr, c + dc};
        if (spec.contains(n) && !explored[n]) frontier = true;
      }
      if (frontier && (!best || v.at(r, c) > v[*best])) best = Cell{r, c};
    }
  return best;
}

struct RegionPick {
  int id = -1;
  Cell centroid_cell;
  Cell max_cell;
};

/// Recomputes every region's mean from scratch and picks the highest
/// (lowest id on ties); the centroid is snapped to the closest member by
/// exhaustive comparison, first member on ties.
inline RegionPick region_argmax(const std::vector<canav::Superpixel>& sps, const Grid<double>& v) {
  RegionPick pick;
  double best_mean = -kInf;
  for (const auto& sp : sps) {
    double sum = 0.0;
    for (const Cell& c : sp.members) sum += v[c];
    const double mean = sum / static_cast<double>(sp.members.size());
    if (mean > best_mean || (mean == best_mean && sp.id < pick.id)) {
      best_mean = mean;
      pick.id = sp.id;
    }
  }
  const auto& sp = *std::find_if(sps.begin(), sps.end(), [&](const canav::Superpixel& s) { return s.id == pick.id; });
  double sr = 0.0, sc = 0.0;
  for (const Cell& c : sp.members) {
    sr += c.row;
    sc += c.col;
  }
  sr /= static_cast<double>(sp.members.size());
  sc /= static_cast<double>(sp.members.size());
  double best_d = kInf;
  for (const Cell& c : sp.members) {
    const double d = (c.row - sr) * (c.row - sr) + (c.col - sc) * (c.col - sc);
    if (d < best_d) {
      best_d = d;
      pick.centroid_cell = c;
    }
  }
  pick.max_cell = sp.members.front();
  for (const Cell& c : sp.members)
    if (v[c] > v[pick.max_cell]) pick.max_cell = c;
  return pick;
}

/// Turn side and size from the heading difference, no vector algebra.
struct TurnTruth {
  bool left = false;
  bool right = false;
  double angle = 0.0;
};

inline TurnTruth turn_truth(double h0, double h1) {
  const double delta = canav::normalize_angle(h1 - h0);
  return {delta > 0.0 && delta < canav::kPi, delta < 0.0 && delta > -canav::kPi, std::abs(delta)};
}

/// Random map: occupancy with the given density, dyadic values so region
/// sums are exact in any order.
struct RandomMap {
  CellMask nav;
  Grid<double> values;
};

inline RandomMap random_map(std::mt19937_64& rng, int h, int w, double blocked_p) {
  GridSpec spec{w, h, 0.05};
  RandomMap m{CellMask(spec, 0), Grid<double>(spec, 0.0)};
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> q(0, 16);
  for (std::size_t i = 0; i < m.nav.size(); ++i) {
    m.nav.flat(i) = u(rng) >= blocked_p ? 1 : 0;
    m.values.flat(i) = q(rng) / 16.0;
  }
  if (canav::count_set(m.nav) == 0) m.nav.flat(0) = 1;
  return m;
}

}  // namespace oracle
