#pragma once

// Waypoint selection over a value map: SLIC superpixels (default), frontier,
// pixel-argmax and optimal-region-then-pixel strategies, plus the final-goal
// waypoint from a projected segmentation mask.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string_view>
#include <vector>

#include "canav/errors.hpp"
#include "canav/grid.hpp"

namespace canav {

struct Superpixel {
  int id = 0;
  std::vector<Cell> members;  // row-major
  double mean_value = 0.0;
  double centroid_row = 0.0;
  double centroid_col = 0.0;
};

enum class WaypointSource { Superpixel, Fbe, Pixel, Orp, GoalMask, Random, Frontier };

inline std::string_view to_string(WaypointSource s) {
  switch (s) {
    case WaypointSource::Superpixel: return "superpixel";
    case WaypointSource::Fbe: return "fbe";
    case WaypointSource::Pixel: return "pixel";
    case WaypointSource::Orp: return "orp";
    case WaypointSource::GoalMask: return "goal_mask";
    case WaypointSource::Random: return "random";
    case WaypointSource::Frontier: return "frontier";
  }
  return "superpixel";
}

struct Waypoint {
  Cell cell;
  WaypointSource source = WaypointSource::Superpixel;
  bool operator==(const Waypoint&) const = default;
};

/// Nearest candidate cell to a real-valued (row, col) point; ties resolve to
/// the first candidate in row-major order. Candidates must be row-major sorted.
inline std::optional<Cell> nearest_cell(double row, double col, const std::vector<Cell>& candidates) {
  std::optional<Cell> best;
  double best_d = std::numeric_limits<double>::infinity();
  for (const Cell& c : candidates) {
    const double d = (c.row - row) * (c.row - row) + (c.col - col) * (c.col - col);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

inline std::optional<Cell> nearest_cell(double row, double col, const CellMask& allowed) {
  std::optional<Cell> best;
  double best_d = std::numeric_limits<double>::infinity();
  const GridSpec& spec = allowed.spec();
  for (int r = 0; r < spec.height; ++r) {
    const double dr2 = (r - row) * (r - row);
    if (dr2 > best_d) continue;
    for (int c = 0; c < spec.width; ++c) {
      if (!allowed.at(r, c)) continue;
      const double d = dr2 + (c - col) * (c - col);
      if (d < best_d) {
        best_d = d;
        best = Cell{r, c};
      }
    }
  }
  return best;
}

namespace detail {

struct SlicCenter {
  double value = 0.0;
  double row = 0.0;
  double col = 0.0;
};

inline double slic_distance(const SlicCenter& k, double v, int r, int c, double value_scale) {
  const double dv = (v - k.value) * value_scale;
  const double dr = r - k.row;
  const double dc = c - k.col;
  return dv * dv + dr * dr + dc * dc;
}

}  // namespace detail

/// SLIC over (value, row, col) restricted to navigable cells.
/// distance^2 = (dv * S / m)^2 + drow^2 + dcol^2 with S = region_size and
/// m = compactness. Seeds: one per S x S block containing navigable cells, at
/// the navigable cell nearest the block center. At most 10 assignment/update
/// iterations; afterwards each label keeps its largest 4-connected component
/// and orphaned fragments join the adjacent superpixel whose center is
/// nearest. Ids follow first appearance in row-major order.
inline std::vector<Superpixel> slic_partition(const Grid<double>& values, const CellMask& navigable, int region_size,
                                              double compactness = 10.0, int max_iterations = 10) {
  if (region_size < 2) throw PreconditionError("region_size must be >= 2");
  if (!(compactness > 0.0)) throw PreconditionError("compactness must be positive");
  if (!values.same_shape(navigable.spec())) throw PreconditionError("value and navigable shapes differ");
  const GridSpec& spec = navigable.spec();
  const int H = spec.height, W = spec.width, S = region_size;
  const std::size_t N = spec.cell_count();
  if (count_set(navigable) == 0) throw EmptyInputError("no navigable cells to partition");

  const double value_scale = S / compactness;
  std::vector<detail::SlicCenter> centers;
  for (int br = 0; br * S < H; ++br) {
    for (int bc = 0; bc * S < W; ++bc) {
      const int r0 = br * S, r1 = std::min(H, r0 + S);
      const int c0 = bc * S, c1 = std::min(W, c0 + S);
      const double cr = r0 + (r1 - r0 - 1) / 2.0, cc = c0 + (c1 - c0 - 1) / 2.0;
      std::optional<Cell> seed;
      double best = std::numeric_limits<double>::infinity();
      for (int r = r0; r < r1; ++r)
        for (int c = c0; c < c1; ++c) {
          if (!navigable.at(r, c)) continue;
          const double d = (r - cr) * (r - cr) + (c - cc) * (c - cc);
          if (d < best) {
            best = d;
            seed = Cell{r, c};
          }
        }
      if (seed) centers.push_back({values[*seed], static_cast<double>(seed->row), static_cast<double>(seed->col)});
    }
  }

  std::vector<int> label(N, -1);
  std::vector<double> dist(N);
  for (int iter = 0; iter < max_iterations; ++iter) {
    std::vector<int> next(N, -1);
    std::fill(dist.begin(), dist.end(), std::numeric_limits<double>::infinity());
    for (std::size_t k = 0; k < centers.size(); ++k) {
      const auto& ctr = centers[k];
      const int rl = std::max(0, static_cast<int>(std::floor(ctr.row - S))), rh = std::min(H - 1, static_cast<int>(std::ceil(ctr.row + S)));
      const int cl = std::max(0, static_cast<int>(std::floor(ctr.col - S))), ch = std::min(W - 1, static_cast<int>(std::ceil(ctr.col + S)));
      for (int r = rl; r <= rh; ++r)
        for (int c = cl; c <= ch; ++c) {
          const std::size_t i = spec.index({r, c});
          if (!navigable.flat(i)) continue;
          const double d = detail::slic_distance(ctr, values.flat(i), r, c, value_scale);
          if (d < dist[i]) {
            dist[i] = d;
            next[i] = static_cast<int>(k);
          }
        }
    }
    for (std::size_t i = 0; i < N; ++i) {
      if (!navigable.flat(i) || next[i] >= 0) continue;
      const Cell cell = spec.cell_at(i);
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < centers.size(); ++k) {
        const double d = detail::slic_distance(centers[k], values.flat(i), cell.row, cell.col, value_scale);
        if (d < best) {
          best = d;
          next[i] = static_cast<int>(k);
        }
      }
    }
    const bool converged = next == label;
    label = std::move(next);
    if (converged) break;

    std::vector<detail::SlicCenter> acc(centers.size());
    std::vector<std::size_t> counts(centers.size(), 0);
    for (std::size_t i = 0; i < N; ++i) {
      if (label[i] < 0) continue;
      const Cell cell = spec.cell_at(i);
      auto& a = acc[static_cast<std::size_t>(label[i])];
      a.value += values.flat(i);
      a.row += cell.row;
      a.col += cell.col;
      ++counts[static_cast<std::size_t>(label[i])];
    }
    for (std::size_t k = 0; k < centers.size(); ++k) {
      if (counts[k] == 0) continue;
      const double n = static_cast<double>(counts[k]);
      centers[k] = {acc[k].value / n, acc[k].row / n, acc[k].col / n};
    }
  }

  // Connectivity: keep the largest component per label, collect the rest.
  std::vector<std::vector<Cell>> components;
  std::vector<int> comp_of(N, -1);
  std::vector<int> comp_label;
  for (std::size_t i = 0; i < N; ++i) {
    if (label[i] < 0 || comp_of[i] >= 0) continue;
    const int id = static_cast<int>(components.size());
    components.emplace_back();
    comp_label.push_back(label[i]);
    std::vector<std::size_t> stack{i};
    comp_of[i] = id;
    while (!stack.empty()) {
      const std::size_t cur = stack.back();
      stack.pop_back();
      const Cell cc = spec.cell_at(cur);
      components.back().push_back(cc);
      const Cell nbrs[4] = {{cc.row - 1, cc.col}, {cc.row + 1, cc.col}, {cc.row, cc.col - 1}, {cc.row, cc.col + 1}};
      for (const Cell& n : nbrs) {
        if (!spec.contains(n)) continue;
        const std::size_t ni = spec.index(n);
        if (comp_of[ni] < 0 && label[ni] == label[i]) {
          comp_of[ni] = id;
          stack.push_back(ni);
        }
      }
    }
  }
  std::vector<int> main_comp(centers.size(), -1);
  for (std::size_t c = 0; c < components.size(); ++c) {
    const auto k = static_cast<std::size_t>(comp_label[c]);
    if (main_comp[k] < 0 || components[c].size() > components[static_cast<std::size_t>(main_comp[k])].size())
      main_comp[k] = static_cast<int>(c);
  }
  std::vector<int> final_label(N, -1);
  std::vector<std::size_t> orphans;
  for (std::size_t c = 0; c < components.size(); ++c) {
    if (main_comp[static_cast<std::size_t>(comp_label[c])] == static_cast<int>(c)) {
      for (const Cell& cell : components[c]) final_label[spec.index(cell)] = comp_label[c];
    } else {
      orphans.push_back(c);
    }
  }
  bool progress = true;
  while (progress && !orphans.empty()) {
    progress = false;
    std::vector<std::size_t> remaining;
    for (std::size_t c : orphans) {
      double fr = 0.0, fc = 0.0;
      std::vector<int> adjacent;
      for (const Cell& cell : components[c]) {
        fr += cell.row;
        fc += cell.col;
        const Cell nbrs[4] = {{cell.row - 1, cell.col}, {cell.row + 1, cell.col}, {cell.row, cell.col - 1}, {cell.row, cell.col + 1}};
        for (const Cell& n : nbrs)
          if (spec.contains(n) && final_label[spec.index(n)] >= 0) adjacent.push_back(final_label[spec.index(n)]);
      }
      if (adjacent.empty()) {
        remaining.push_back(c);
        continue;
      }
      fr /= static_cast<double>(components[c].size());
      fc /= static_cast<double>(components[c].size());
      std::sort(adjacent.begin(), adjacent.end());
      adjacent.erase(std::unique(adjacent.begin(), adjacent.end()), adjacent.end());
      int best = adjacent.front();
      double best_d = std::numeric_limits<double>::infinity();
      for (int k : adjacent) {
        const auto& ctr = centers[static_cast<std::size_t>(k)];
        const double d = (ctr.row - fr) * (ctr.row - fr) + (ctr.col - fc) * (ctr.col - fc);
        if (d < best_d) {
          best_d = d;
          best = k;
        }
      }
      for (const Cell& cell : components[c]) final_label[spec.index(cell)] = best;
      progress = true;
    }
    orphans = std::move(remaining);
  }
  int next_label = static_cast<int>(centers.size());
  for (std::size_t c : orphans) {
    for (const Cell& cell : components[c]) final_label[spec.index(cell)] = next_label;
    ++next_label;
  }

  // Renumber by first appearance and summarize.
  std::vector<int> remap(static_cast<std::size_t>(next_label), -1);
  std::vector<Superpixel> out;
  for (std::size_t i = 0; i < N; ++i) {
    if (final_label[i] < 0) continue;
    int& id = remap[static_cast<std::size_t>(final_label[i])];
    if (id < 0) {
      id = static_cast<int>(out.size());
      out.push_back(Superpixel{id, {}, 0.0, 0.0, 0.0});
    }
    out[static_cast<std::size_t>(id)].members.push_back(spec.cell_at(i));
  }
  for (auto& sp : out) {
    double v = 0.0, r = 0.0, c = 0.0;
    for (const Cell& cell : sp.members) {
      v += values[cell];
      r += cell.row;
      c += cell.col;
    }
    const double n = static_cast<double>(sp.members.size());
    sp.mean_value = v / n;
    sp.centroid_row = r / n;
    sp.centroid_col = c / n;
  }
  return out;
}

namespace detail {

inline const Superpixel& best_region(const std::vector<Superpixel>& superpixels) {
  if (superpixels.empty()) throw EmptyInputError("no superpixels to select from");
  const Superpixel* best = &superpixels.front();
  for (const auto& sp : superpixels)
    if (sp.mean_value > best->mean_value || (sp.mean_value == best->mean_value && sp.id < best->id)) best = &sp;
  return *best;
}

}  // namespace detail

/// Centroid of the highest-mean superpixel (ties: lowest id), snapped to its
/// nearest member cell.
inline Waypoint select_superpixel_waypoint(const std::vector<Superpixel>& superpixels) {
  const Superpixel& best = detail::best_region(superpixels);
  return {*nearest_cell(best.centroid_row, best.centroid_col, best.members), WaypointSource::Superpixel};
}

/// Highest-valued cell of the highest-mean superpixel.
inline Waypoint select_orp_waypoint(const std::vector<Superpixel>& superpixels, const Grid<double>& values) {
  const Superpixel& best = detail::best_region(superpixels);
  Cell pick = best.members.front();
  for (const Cell& c : best.members)
    if (values[c] > values[pick]) pick = c;
  return {pick, WaypointSource::Orp};
}

/// Navigable argmax of the value map, row-major tie-break.
inline Waypoint select_pixel_waypoint(const Grid<double>& values, const CellMask& navigable) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!navigable.flat(i)) continue;
    if (!best || values.flat(i) > values.flat(*best)) best = i;
  }
  if (!best) throw EmptyInputError("no navigable cells");
  return {values.spec().cell_at(*best), WaypointSource::Pixel};
}

/// Explored navigable cells with at least one unexplored 4-neighbor.
inline CellMask frontier_mask(const CellMask& explored, const CellMask& navigable) {
  const GridSpec& spec = explored.spec();
  CellMask out(spec, 0);
  for (int r = 0; r < spec.height; ++r)
    for (int c = 0; c < spec.width; ++c) {
      if (!navigable.at(r, c) || !explored.at(r, c)) continue;
      const Cell nbrs[4] = {{r - 1, c}, {r + 1, c}, {r, c - 1}, {r, c + 1}};
      for (const Cell& n : nbrs)
        if (spec.contains(n) && !explored[n]) {
          out.at(r, c) = 1;
          break;
        }
    }
  return out;
}

/// Highest-valued frontier cell (row-major tie-break); nullopt when no
/// frontier remains.
inline std::optional<Waypoint> select_fbe_waypoint(const Grid<double>& values, const CellMask& explored, const CellMask& navigable) {
  const CellMask frontier = frontier_mask(explored, navigable);
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < frontier.size(); ++i) {
    if (!frontier.flat(i)) continue;
    if (!best || values.flat(i) > values.flat(*best)) best = i;
  }
  if (!best) return std::nullopt;
  return Waypoint{values.spec().cell_at(*best), WaypointSource::Fbe};
}

/// Centroid of the mask snapped to the nearest allowed cell (Euclidean,
/// row-major tie-break).
inline Waypoint goal_waypoint(const CellMask& mask, const CellMask& navigable) {
  double r = 0.0, c = 0.0;
  std::size_t n = 0;
  const GridSpec& spec = mask.spec();
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask.flat(i)) continue;
    const Cell cell = spec.cell_at(i);
    r += cell.row;
    c += cell.col;
    ++n;
  }
  if (n == 0) throw EmptyInputError("goal mask is empty");
  const auto snapped = nearest_cell(r / static_cast<double>(n), c / static_cast<double>(n), navigable);
  if (!snapped) throw EmptyInputError("no navigable cell to snap the goal to");
  return {*snapped, WaypointSource::GoalMask};
}

inline Waypoint goal_waypoint(const CellMask& mask) { return goal_waypoint(mask, CellMask(mask.spec(), 1)); }

}  // namespace canav
