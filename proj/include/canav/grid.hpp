#pragma once

// Grid geometry: poses, cell indexing, the egocentric visibility sector and
// per-cell bearings relative to the optical axis.

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "canav/errors.hpp"

namespace canav {

inline constexpr double kPi = std::numbers::pi;

inline constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline constexpr double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

// Wraps an angle into [-pi, pi).
inline double normalize_angle(double a) {
  double r = std::fmod(a + kPi, 2.0 * kPi);
  if (r < 0.0) r += 2.0 * kPi;
  r -= kPi;
  // fmod can land exactly on +pi after the shift for inputs like -pi - eps.
  if (r >= kPi) r -= 2.0 * kPi;
  return r;
}

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

inline double distance(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

/// Agent position (meters) and heading (radians, counter-clockwise from +x).
/// The heading is kept normalized to [-pi, pi).
class Pose {
 public:
  Pose() = default;
  Pose(double x, double y, double heading) : x_(x), y_(y), heading_(normalize_angle(heading)) {
    if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(heading))
      throw PreconditionError("pose coordinates must be finite");
  }

  double x() const { return x_; }
  double y() const { return y_; }
  double heading() const { return heading_; }
  Point2 position() const { return {x_, y_}; }

  bool operator==(const Pose&) const = default;

 private:
  double x_ = 0.0;
  double y_ = 0.0;
  double heading_ = 0.0;
};

struct Cell {
  int row = 0;
  int col = 0;
  auto operator<=>(const Cell&) const = default;
};

struct GridSpec {
  int width = 1;
  int height = 1;
  double resolution = 0.05;  // meters per cell

  void validate() const {
    if (width < 1 || height < 1) throw PreconditionError("grid dimensions must be >= 1");
    if (!(resolution > 0.0)) throw PreconditionError("grid resolution must be positive");
  }
  bool contains(Cell c) const { return c.row >= 0 && c.row < height && c.col >= 0 && c.col < width; }
  std::size_t cell_count() const { return static_cast<std::size_t>(width) * static_cast<std::size_t>(height); }
  std::size_t index(Cell c) const {
    return static_cast<std::size_t>(c.row) * static_cast<std::size_t>(width) + static_cast<std::size_t>(c.col);
  }
  Cell cell_at(std::size_t idx) const {
    return {static_cast<int>(idx / static_cast<std::size_t>(width)), static_cast<int>(idx % static_cast<std::size_t>(width))};
  }
  bool operator==(const GridSpec&) const = default;
};

/// Dense row-major per-cell storage shaped by a GridSpec.
template <class T>
class Grid {
 public:
  Grid() = default;
  explicit Grid(const GridSpec& spec, T fill = T{}) : spec_(spec), data_(spec.cell_count(), fill) {}

  const GridSpec& spec() const { return spec_; }
  int width() const { return spec_.width; }
  int height() const { return spec_.height; }
  std::size_t size() const { return data_.size(); }

  T& operator[](Cell c) { return data_[spec_.index(c)]; }
  const T& operator[](Cell c) const { return data_[spec_.index(c)]; }
  T& at(int row, int col) { return data_[spec_.index({row, col})]; }
  const T& at(int row, int col) const { return data_[spec_.index({row, col})]; }
  T& flat(std::size_t i) { return data_[i]; }
  const T& flat(std::size_t i) const { return data_[i]; }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }
  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  bool same_shape(const GridSpec& other) const { return spec_.width == other.width && spec_.height == other.height; }

  bool operator==(const Grid&) const = default;

 private:
  GridSpec spec_;
  std::vector<T> data_;
};

using CellMask = Grid<std::uint8_t>;

inline std::size_t count_set(const CellMask& m) {
  return static_cast<std::size_t>(std::count_if(m.data().begin(), m.data().end(), [](std::uint8_t v) { return v != 0; }));
}

inline Point2 cell_center(Cell c, const GridSpec& spec) {
  return {(c.col + 0.5) * spec.resolution, (c.row + 0.5) * spec.resolution};
}

inline Cell world_to_cell(double x, double y, const GridSpec& spec) {
  if (!std::isfinite(x) || !std::isfinite(y) || x < 0.0 || y < 0.0)
    throw BoundsError("position outside grid bounds");
  const Cell c{static_cast<int>(std::floor(y / spec.resolution)), static_cast<int>(std::floor(x / spec.resolution))};
  if (!spec.contains(c)) throw BoundsError("position outside grid bounds");
  return c;
}

inline Cell world_to_cell(const Pose& p, const GridSpec& spec) { return world_to_cell(p.x(), p.y(), spec); }
inline Cell world_to_cell(Point2 p, const GridSpec& spec) { return world_to_cell(p.x, p.y, spec); }

/// Camera sector on the top-down map.
struct Frustum {
  Pose origin;
  double hfov = deg_to_rad(79.0);
  double max_range = 5.0;

  void validate() const {
    if (!(hfov > 0.0 && hfov < kPi)) throw PreconditionError("hfov must lie in (0, pi)");
    if (!(max_range > 0.0)) throw PreconditionError("max_range must be positive");
  }
};

/// Visits every cell touched by the segment a->b (coordinates in cell units,
/// i.e. meters / resolution). When the segment passes exactly through a cell
/// corner both side cells are reported before the diagonal one. The visitor
/// returns false to stop early; traverse_segment then returns false.
template <class Visitor>
bool traverse_segment(double x0, double y0, double x1, double y1, Visitor&& visit) {
  constexpr double kEps = 1e-12;
  int col = static_cast<int>(std::floor(x0));
  int row = static_cast<int>(std::floor(y0));
  const int end_col = static_cast<int>(std::floor(x1));
  const int end_row = static_cast<int>(std::floor(y1));
  const double dx = x1 - x0;
  const double dy = y1 - y0;
  const int step_x = dx > 0 ? 1 : (dx < 0 ? -1 : 0);
  const int step_y = dy > 0 ? 1 : (dy < 0 ? -1 : 0);
  constexpr double kInf = std::numeric_limits<double>::infinity();
  const double t_delta_x = step_x != 0 ? 1.0 / std::abs(dx) : kInf;
  const double t_delta_y = step_y != 0 ? 1.0 / std::abs(dy) : kInf;
  double t_max_x = step_x > 0 ? (std::floor(x0) + 1.0 - x0) * t_delta_x
                   : step_x < 0 ? (x0 - std::floor(x0)) * t_delta_x
                                : kInf;
  double t_max_y = step_y > 0 ? (std::floor(y0) + 1.0 - y0) * t_delta_y
                   : step_y < 0 ? (y0 - std::floor(y0)) * t_delta_y
                                : kInf;

  // Each iteration moves at least one cell; the bound guards against
  // floating-point disagreement between floor(end) and the t parameter.
  const int max_iters = std::abs(end_col - col) + std::abs(end_row - row) + 4;
  for (int it = 0; it <= max_iters; ++it) {
    if (!visit(Cell{row, col})) return false;
    if (row == end_row && col == end_col) return true;
    if (std::min(t_max_x, t_max_y) > 1.0 + kEps) return true;
    if (t_max_x < t_max_y - kEps) {
      col += step_x;
      t_max_x += t_delta_x;
    } else if (t_max_y < t_max_x - kEps) {
      row += step_y;
      t_max_y += t_delta_y;
    } else {
      if (!visit(Cell{row, col + step_x})) return false;
      if (!visit(Cell{row + step_y, col})) return false;
      col += step_x;
      row += step_y;
      t_max_x += t_delta_x;
      t_max_y += t_delta_y;
    }
  }
  return true;
}

/// True when no cell strictly between `from` and `to` on the supercover line
/// joining their centers is set in `blocked`.
inline bool line_of_sight(Cell from, Cell to, const CellMask& blocked) {
  const GridSpec& spec = blocked.spec();
  return traverse_segment(from.col + 0.5, from.row + 0.5, to.col + 0.5, to.row + 0.5, [&](Cell c) {
    if (c == from || c == to || !spec.contains(c)) return true;
    return blocked[c] == 0;
  });
}

/// Signed angle of the cell center relative to the optical axis
/// (positive = counter-clockwise / left).
inline double signed_bearing(const Pose& origin, Point2 target) {
  const double dx = target.x - origin.x();
  const double dy = target.y - origin.y();
  if (dx == 0.0 && dy == 0.0) return 0.0;
  return normalize_angle(std::atan2(dy, dx) - origin.heading());
}

/// Absolute angular offset in [0, pi] of the cell center from the optical
/// axis; 0 for the cell holding the camera.
inline double bearing_angle(const Frustum& f, Cell cell, const GridSpec& spec) {
  if (!spec.contains(cell)) throw BoundsError("cell outside grid");
  if (cell == world_to_cell(f.origin, spec)) return 0.0;
  return std::abs(signed_bearing(f.origin, cell_center(cell, spec)));
}

/// Cells inside the sector (|bearing| <= hfov/2, range <= max_range) whose
/// center-to-center segment from the origin cell crosses no occupied cell.
/// The origin cell is always visible. hfov == 0 is accepted as a degenerate
/// sector that yields only the origin cell.
inline CellMask visible_mask(const Frustum& f, const CellMask& occupancy, const GridSpec& spec) {
  if (!occupancy.same_shape(spec)) throw PreconditionError("occupancy shape does not match grid");
  CellMask mask(spec, 0);
  const Cell origin = world_to_cell(f.origin, spec);
  mask[origin] = 1;
  if (!(f.hfov > 0.0) || !(f.max_range > 0.0)) return mask;

  const double half = f.hfov / 2.0;
  const double range_cells = f.max_range / spec.resolution;
  const int r_lo = std::max(0, static_cast<int>(std::floor(origin.row - range_cells - 1)));
  const int r_hi = std::min(spec.height - 1, static_cast<int>(std::ceil(origin.row + range_cells + 1)));
  const int c_lo = std::max(0, static_cast<int>(std::floor(origin.col - range_cells - 1)));
  const int c_hi = std::min(spec.width - 1, static_cast<int>(std::ceil(origin.col + range_cells + 1)));
  const Point2 o = f.origin.position();
  const double max_r2 = f.max_range * f.max_range;

  for (int r = r_lo; r <= r_hi; ++r) {
    for (int c = c_lo; c <= c_hi; ++c) {
      const Cell cell{r, c};
      if (cell == origin) continue;
      const Point2 p = cell_center(cell, spec);
      const double dx = p.x - o.x;
      const double dy = p.y - o.y;
      if (dx * dx + dy * dy > max_r2) continue;
      if (std::abs(signed_bearing(f.origin, p)) > half) continue;
      if (line_of_sight(origin, cell, occupancy)) mask[cell] = 1;
    }
  }
  return mask;
}

/// Disk dilation of `mask` by `radius_cells` (Euclidean, cell-center metric).
inline CellMask dilate(const CellMask& mask, int radius_cells) {
  if (radius_cells <= 0) return mask;
  const GridSpec& spec = mask.spec();
  CellMask out = mask;
  std::vector<Cell> offsets;
  for (int dr = -radius_cells; dr <= radius_cells; ++dr)
    for (int dc = -radius_cells; dc <= radius_cells; ++dc)
      if (dr * dr + dc * dc <= radius_cells * radius_cells && (dr != 0 || dc != 0)) offsets.push_back({dr, dc});
  for (int r = 0; r < spec.height; ++r) {
    for (int c = 0; c < spec.width; ++c) {
      if (!mask.at(r, c)) continue;
      for (const Cell& o : offsets) {
        const Cell n{r + o.row, c + o.col};
        if (spec.contains(n)) out[n] = 1;
      }
    }
  }
  return out;
}

}  // namespace canav
