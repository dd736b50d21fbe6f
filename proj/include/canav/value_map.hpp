#pragma once

// Constraint-aware value map: confidence-weighted fusion of per-frame scores
// over the visible sector, decay on sub-instruction switches and a read-time
// trajectory mask lambda^visits.

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "canav/errors.hpp"
#include "canav/grid.hpp"

namespace canav {

struct ValueMapConfig {
  double gamma = 0.5;    // decay applied to stored values on a switch
  double lambda = 0.95;  // per-visit trajectory factor
  bool reset_on_switch = false;
  bool disable_trajectory_mask = false;
  bool disable_historical_decay = false;
  int visit_radius = 0;  // cells around the agent counted as visited

  void validate() const {
    // gamma = 0 is admitted so the full-discard ablation row is expressible.
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in [0, 1]");
    if (!(lambda > 0.0 && lambda <= 1.0)) throw ConfigError("lambda must lie in (0, 1]");
    if (visit_radius < 0) throw ConfigError("visit_radius must be >= 0");
  }
};

/// cos^2((theta / (hfov/2)) * pi/2) inside the half field of view, else 0.
inline double confidence_profile(double theta, double hfov) {
  const double half = hfov / 2.0;
  if (!(theta < half)) return 0.0;
  const double c = std::cos(theta / half * (kPi / 2.0));
  return c * c;
}

struct ObserveReport {
  std::size_t updated_cells = 0;
  bool clamped = false;  // score was outside [0, 1]
};

class ValueMap {
 public:
  ValueMap(const GridSpec& spec, ValueMapConfig config)
      : config_(config), value_(spec, 0.0), confidence_(spec, 0.0), visits_(spec, 0) {
    spec.validate();
    config_.validate();
  }

  /// Fuses score `v` into every visible cell with confidence theta(cell):
  ///   V <- (c*v + C*V) / (c + C),  C <- (c^2 + C^2) / (c + C)
  /// Cells where c + C == 0 are left unchanged; invisible cells are untouched.
  template <class BearingFn>
  ObserveReport observe(const CellMask& visible, double score, double hfov, BearingFn&& theta) {
    if (!visible.same_shape(value_.spec())) throw PreconditionError("mask shape does not match value map");
    ObserveReport report;
    if (!(score >= 0.0 && score <= 1.0)) {
      report.clamped = true;
      score = std::isnan(score) ? 0.0 : std::clamp(score, 0.0, 1.0);
    }
    const std::size_t n = visible.size();
    const GridSpec& spec = value_.spec();
    for (std::size_t i = 0; i < n; ++i) {
      if (!visible.flat(i)) continue;
      const double c_obs = confidence_profile(theta(spec.cell_at(i)), hfov);
      const double c_prev = confidence_.flat(i);
      const double denom = c_obs + c_prev;
      if (denom <= 0.0) continue;
      value_.flat(i) = (c_obs * score + c_prev * value_.flat(i)) / denom;
      confidence_.flat(i) = (c_obs * c_obs + c_prev * c_prev) / denom;
      ++report.updated_cells;
    }
    return report;
  }

  ObserveReport observe(const CellMask& visible, double score, const Grid<double>& bearings, double hfov) {
    if (!bearings.same_shape(value_.spec())) throw PreconditionError("bearing grid shape does not match value map");
    return observe(visible, score, hfov, [&](Cell c) { return bearings[c]; });
  }

  ObserveReport observe(const Frustum& frustum, const CellMask& visible, double score) {
    const GridSpec& spec = value_.spec();
    const Cell origin = world_to_cell(frustum.origin, spec);
    return observe(visible, score, frustum.hfov, [&](Cell c) {
      if (c == origin) return 0.0;
      return std::abs(signed_bearing(frustum.origin, cell_center(c, spec)));
    });
  }

  /// Counts a visit at the agent cell (and within visit_radius), then applies
  /// the switch decay gamma^B to the stored values.
  void on_step_end(Cell agent, bool switch_event) {
    const GridSpec& spec = value_.spec();
    if (!spec.contains(agent)) throw BoundsError("agent cell outside value map");
    const int r = config_.visit_radius;
    for (int dr = -r; dr <= r; ++dr)
      for (int dc = -r; dc <= r; ++dc) {
        const Cell c{agent.row + dr, agent.col + dc};
        if (dr * dr + dc * dc <= r * r && spec.contains(c)) ++visits_[c];
      }
    if (!switch_event) return;
    if (config_.reset_on_switch) {
      value_.fill(0.0);
      confidence_.fill(0.0);
    } else if (!config_.disable_historical_decay) {
      for (auto& v : value_.data()) v *= config_.gamma;
    }
  }

  double trajectory_weight(Cell c) const {
    if (config_.disable_trajectory_mask) return 1.0;
    return std::pow(config_.lambda, static_cast<double>(visits_[c]));
  }

  /// V (elementwise) lambda^visits; storage is not modified.
  Grid<double> effective_value() const {
    Grid<double> out = value_;
    if (config_.disable_trajectory_mask || config_.lambda == 1.0) return out;
    for (std::size_t i = 0; i < out.size(); ++i)
      if (visits_.flat(i) > 0) out.flat(i) *= std::pow(config_.lambda, static_cast<double>(visits_.flat(i)));
    return out;
  }

  const Grid<double>& value() const { return value_; }
  const Grid<double>& confidence() const { return confidence_; }
  const Grid<std::uint32_t>& visits() const { return visits_; }
  const ValueMapConfig& config() const { return config_; }
  const GridSpec& spec() const { return value_.spec(); }

 private:
  ValueMapConfig config_;
  Grid<double> value_;
  Grid<double> confidence_;
  Grid<std::uint32_t> visits_;
};

}  // namespace canav
