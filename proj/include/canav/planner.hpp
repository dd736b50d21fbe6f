#pragma once

// Low-level control: Fast Marching distance fields and the discrete action
// rule that descends them.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <queue>
#include <string_view>
#include <utility>
#include <vector>

#include "canav/errors.hpp"
#include "canav/grid.hpp"

namespace canav {

enum class Action { Forward, Left, Right, Stop };

inline std::string_view to_string(Action a) {
  switch (a) {
    case Action::Forward: return "FORWARD";
    case Action::Left: return "LEFT";
    case Action::Right: return "RIGHT";
    case Action::Stop: return "STOP";
  }
  return "STOP";
}

struct ActionSpace {
  double forward_step = 0.25;         // meters
  double turn_step = deg_to_rad(30);  // radians
};

inline constexpr double kInfDistance = std::numeric_limits<double>::infinity();

/// Geodesic distance (meters) to a waypoint; infinite on blocked or
/// unreachable cells.
using DistanceField = Grid<double>;

inline int radius_to_cells(double radius_m, double resolution) {
  if (radius_m <= 0.0) return 0;
  return static_cast<int>(std::ceil(radius_m / resolution - 1e-9));
}

/// Optional early exit: once `focus` is accepted the march continues only up
/// to T(focus) + margin; every cell left unaccepted reads as infinite.
struct FmmHorizon {
  std::optional<Cell> focus;
  double margin = 0.0;
};

/// Solves |grad T| = 1 with first-order upwind updates on the 4-neighborhood.
/// `blocked` is used as-is (no inflation).
inline DistanceField fmm_solve(Cell waypoint, const CellMask& blocked, const FmmHorizon& horizon = {}) {
  const GridSpec& spec = blocked.spec();
  if (!spec.contains(waypoint)) throw BoundsError("waypoint outside grid");
  if (blocked[waypoint]) throw UnreachableGoalError("waypoint cell is blocked");

  const double h = spec.resolution;
  DistanceField T(spec, kInfDistance);
  std::vector<std::uint8_t> known(spec.cell_count(), 0);
  using Entry = std::pair<double, std::size_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;

  T[waypoint] = 0.0;
  heap.emplace(0.0, spec.index(waypoint));

  auto known_value = [&](int r, int c) {
    if (r < 0 || r >= spec.height || c < 0 || c >= spec.width) return kInfDistance;
    const std::size_t i = spec.index({r, c});
    return known[i] ? T.flat(i) : kInfDistance;
  };

  const std::size_t focus = horizon.focus && spec.contains(*horizon.focus) ? spec.index(*horizon.focus) : spec.cell_count();
  double limit = kInfDistance;
  bool truncated = false;

  constexpr int kDr[4] = {-1, 1, 0, 0};
  constexpr int kDc[4] = {0, 0, -1, 1};
  while (!heap.empty()) {
    const auto [t, idx] = heap.top();
    heap.pop();
    if (known[idx]) continue;
    if (t > limit) {
      truncated = true;
      break;
    }
    known[idx] = 1;
    if (idx == focus) limit = t + horizon.margin;
    const Cell cur = spec.cell_at(idx);
    for (int k = 0; k < 4; ++k) {
      const Cell n{cur.row + kDr[k], cur.col + kDc[k]};
      if (!spec.contains(n)) continue;
      const std::size_t ni = spec.index(n);
      if (known[ni] || blocked.flat(ni)) continue;
      double a = std::min(known_value(n.row - 1, n.col), known_value(n.row + 1, n.col));
      double b = std::min(known_value(n.row, n.col - 1), known_value(n.row, n.col + 1));
      if (a > b) std::swap(a, b);
      double candidate;
      if (!std::isfinite(b) || b - a >= h) {
        candidate = a + h;
      } else {
        candidate = 0.5 * (a + b + std::sqrt(2.0 * h * h - (a - b) * (a - b)));
      }
      if (candidate < T.flat(ni)) {
        T.flat(ni) = candidate;
        heap.emplace(candidate, ni);
      }
    }
  }
  if (truncated)
    for (std::size_t i = 0; i < T.size(); ++i)
      if (!known[i]) T.flat(i) = kInfDistance;
  return T;
}

/// Distance field to `waypoint` after inflating `occupancy` by the agent
/// radius. Throws UnreachableGoalError if the waypoint ends up blocked.
inline DistanceField fmm_field(Cell waypoint, const CellMask& occupancy, const GridSpec& spec, double inflation_radius_m = 0.0) {
  if (!occupancy.same_shape(spec)) throw PreconditionError("occupancy shape does not match grid");
  const CellMask blocked = dilate(occupancy, radius_to_cells(inflation_radius_m, spec.resolution));
  if (spec.contains(waypoint) && blocked[waypoint]) throw UnreachableGoalError("waypoint is occupied after inflation");
  return fmm_solve(waypoint, blocked);
}

enum class ControlStatus { Moving, AtGoal, Stuck };

struct ControlDecision {
  Action action = Action::Stop;
  ControlStatus status = ControlStatus::Moving;
  double descent_heading = 0.0;
};

/// Cells the agent would sweep moving `length` meters along its heading.
/// Returns false if any swept cell is outside the grid or `is_free` rejects it.
template <class FreePredicate>
bool swept_clear(const Pose& pose, double length, const GridSpec& spec, FreePredicate&& is_free) {
  const double x1 = pose.x() + length * std::cos(pose.heading());
  const double y1 = pose.y() + length * std::sin(pose.heading());
  const double res = spec.resolution;
  return traverse_segment(pose.x() / res, pose.y() / res, x1 / res, y1 / res,
                          [&](Cell c) { return spec.contains(c) && is_free(c); });
}

namespace detail {

// Follows steepest 8-neighbor descent (no corner cutting) for `steps` cells.
inline Cell trace_descent(const DistanceField& field, Cell start, int steps) {
  const GridSpec& spec = field.spec();
  Cell cur = start;
  for (int s = 0; s < steps; ++s) {
    Cell best = cur;
    double best_v = field[cur];
    for (int dr = -1; dr <= 1; ++dr) {
      for (int dc = -1; dc <= 1; ++dc) {
        if (dr == 0 && dc == 0) continue;
        const Cell n{cur.row + dr, cur.col + dc};
        if (!spec.contains(n)) continue;
        if (dr != 0 && dc != 0) {
          if (!std::isfinite(field[Cell{cur.row + dr, cur.col}]) || !std::isfinite(field[Cell{cur.row, cur.col + dc}])) continue;
        }
        const double v = field[n];
        if (v < best_v) {
          best_v = v;
          best = n;
        }
      }
    }
    if (best == cur) break;
    cur = best;
  }
  return cur;
}

}  // namespace detail

/// One control step toward the field's source.
///  - infinite distance at the agent cell: Stuck
///  - distance at the agent cell <= goal_tolerance: AtGoal (action STOP)
///  - descent direction: the lattice heading (current heading plus whole
///    turn steps) closest to the steepest-descent bearing, provided a forward
///    step along it sweeps finite cells and ends downhill; otherwise the
///    lattice heading whose forward step lowers the distance most
///  - heading within half a turn step of the descent direction: FORWARD
///  - otherwise turn toward it, shorter side first, exactly behind: LEFT
/// The target heading depends on position only, so turning in place cannot
/// oscillate.
inline ControlDecision next_action(const Pose& pose, const DistanceField& field, double goal_tolerance,
                                   const ActionSpace& space = {}) {
  const GridSpec& spec = field.spec();
  const Cell here = world_to_cell(pose, spec);
  const double d = field[here];
  if (!std::isfinite(d)) return {Action::Stop, ControlStatus::Stuck, 0.0};
  if (d <= goal_tolerance) return {Action::Stop, ControlStatus::AtGoal, 0.0};

  const int lookahead = std::max(1, static_cast<int>(std::ceil(space.forward_step / spec.resolution - 1e-9)));
  const Cell target = detail::trace_descent(field, here, lookahead);
  if (target == here) return {Action::Stop, ControlStatus::Stuck, 0.0};
  const Point2 tp = cell_center(target, spec);
  const double gradient = std::atan2(tp.y - pose.y(), tp.x - pose.x());

  // Distance after a forward step along `heading`, infinite if blocked.
  auto forward_value = [&](double heading) {
    const Pose probe(pose.x(), pose.y(), heading);
    if (!swept_clear(probe, space.forward_step, spec, [&](Cell c) { return std::isfinite(field[c]); })) return kInfDistance;
    const double x1 = pose.x() + space.forward_step * std::cos(heading);
    const double y1 = pose.y() + space.forward_step * std::sin(heading);
    return field[world_to_cell(x1, y1, spec)];
  };

  const int lattice = std::max(1, static_cast<int>(std::lround(2.0 * kPi / space.turn_step)));
  int nearest = 0;
  double nearest_gap = kInfDistance;
  for (int k = 0; k < lattice; ++k) {
    const double gap = std::abs(normalize_angle(pose.heading() + k * space.turn_step - gradient));
    if (gap < nearest_gap - 1e-12) {
      nearest_gap = gap;
      nearest = k;
    }
  }
  double descent = normalize_angle(pose.heading() + nearest * space.turn_step);
  if (!(forward_value(descent) < d)) {
    double best = d;
    bool found = false;
    for (int k = 0; k < lattice; ++k) {
      const double h = normalize_angle(pose.heading() + k * space.turn_step);
      const double v = forward_value(h);
      if (v < best - 1e-12) {
        best = v;
        descent = h;
        found = true;
      }
    }
    if (!found) return {Action::Stop, ControlStatus::Stuck, gradient};
  }

  const double diff = normalize_angle(descent - pose.heading());
  if (std::abs(diff) <= space.turn_step / 2.0 + 1e-9) return {Action::Forward, ControlStatus::Moving, descent};
  // diff is in [-pi, pi): exactly behind maps to -pi, which turns LEFT.
  const Action turn = (diff > 0.0 || diff <= -kPi + 1e-9) ? Action::Left : Action::Right;
  return {turn, ControlStatus::Moving, descent};
}

}  // namespace canav
