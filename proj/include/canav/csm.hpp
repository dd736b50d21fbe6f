#pragma once

// Sub-instruction manager: a queue of constraint sets, per-step satisfaction
// checks and min/max dwell thresholds for switching.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <optional>
#include <vector>

#include "canav/errors.hpp"
#include "canav/grid.hpp"
#include "canav/instruction.hpp"
#include "canav/perception.hpp"

namespace canav {

struct CsmConfig {
  double object_range = 5.0;        // r_object_range, meters
  int tau = 5;                      // tau_window, steps
  int min_steps = 10;
  int max_steps = 25;               // 0 disables the forced switch
  double turn_threshold_deg = 45.0;

  void validate() const {
    if (!(object_range > 0.0)) throw ConfigError("r_object_range must be positive");
    if (tau < 1) throw ConfigError("tau_window must be >= 1");
    if (min_steps < 0 || max_steps < 0) throw ConfigError("step thresholds must be >= 0");
    if (max_steps > 0 && min_steps > max_steps) throw ConfigError("min_steps must not exceed max_steps");
    if (!(turn_threshold_deg > 0.0 && turn_threshold_deg <= 180.0)) throw ConfigError("turn_threshold_deg must be in (0, 180]");
  }
};

/// Last tau+1 poses, oldest first.
class PoseHistory {
 public:
  explicit PoseHistory(int tau = 5) : capacity_(static_cast<std::size_t>(tau) + 1) {}

  void push(const Pose& p) {
    poses_.push_back(p);
    while (poses_.size() > capacity_) poses_.pop_front();
  }
  bool full() const { return poses_.size() == capacity_; }
  std::size_t size() const { return poses_.size(); }
  const Pose& oldest() const { return poses_.front(); }
  const Pose& newest() const { return poses_.back(); }

 private:
  std::size_t capacity_;
  std::deque<Pose> poses_;
};

inline bool check_object(const Constraint& c, const Observation& obs, Perception& perception, double range = 5.0) {
  if (c.kind != ConstraintKind::Object) throw PreconditionError("check_object needs an object constraint");
  for (const auto& d : perception.detect_objects(obs, c.argument))
    if (d.distance <= range) return true;
  return false;
}

inline bool check_location(const Constraint& c, const Observation& obs, Perception& perception) {
  if (c.kind != ConstraintKind::Location) throw PreconditionError("check_location needs a location constraint");
  return perception.location_query(obs, c.argument);
}

struct TurnMeasure {
  double cross = 0.0;  // > 0 means a left (counter-clockwise) turn
  double angle = 0.0;  // radians in [0, pi]
};

inline TurnMeasure measure_turn(double heading_from, double heading_to) {
  const double ux = std::cos(heading_from), uy = std::sin(heading_from);
  const double vx = std::cos(heading_to), vy = std::sin(heading_to);
  const double dot = std::clamp(ux * vx + uy * vy, -1.0, 1.0);
  return {ux * vy - uy * vx, std::acos(dot)};
}

/// Compares the headings at t - tau and t. Not assessable (false) until the
/// history holds tau + 1 poses.
inline bool check_direction(const Constraint& c, const PoseHistory& history, double threshold_deg = 45.0) {
  if (c.kind != ConstraintKind::Direction) throw PreconditionError("check_direction needs a direction constraint");
  if (!history.full()) return false;
  const TurnMeasure t = measure_turn(history.oldest().heading(), history.newest().heading());
  const bool side_ok = c.direction == TurnDirection::Left ? t.cross > 0.0 : t.cross < 0.0;
  return side_ok && t.angle >= deg_to_rad(threshold_deg) - 1e-12;
}

struct CsmStep {
  std::optional<std::size_t> active;  // empty once the queue is exhausted
  bool switch_event = false;
  bool forced = false;
  bool terminal = false;
};

class SubInstructionManager {
 public:
  SubInstructionManager(std::vector<SubInstruction> queue, CsmConfig config)
      : queue_(std::move(queue)), config_(config), history_(config.tau) {
    config_.validate();
    if (queue_.empty()) throw PreconditionError("sub-instruction queue must be non-empty");
    for (const auto& s : queue_) s.validate();
    reset_flags();
  }

  /// Advances one step from `obs`: records the pose, evaluates (and latches)
  /// the active constraints, then switches when they are all satisfied after
  /// min_steps, or unconditionally once max_steps is reached.
  CsmStep step(const Observation& obs, Perception& perception) {
    history_.push(obs.pose);
    if (terminal()) return {std::nullopt, false, false, true};

    ++steps_on_active_;
    const auto& active = queue_[active_index_];
    bool all = true;
    for (std::size_t i = 0; i < active.constraints.size(); ++i) {
      if (!satisfied_[i]) satisfied_[i] = evaluate(active.constraints[i], obs, perception);
      all = all && satisfied_[i];
    }

    CsmStep out;
    if (all && steps_on_active_ >= config_.min_steps) {
      out.switch_event = true;
    } else if (config_.max_steps > 0 && steps_on_active_ >= config_.max_steps) {
      out.switch_event = true;
      out.forced = true;
    }
    if (out.switch_event) {
      ++active_index_;
      steps_on_active_ = 0;
      reset_flags();
    }
    out.terminal = terminal();
    if (!out.terminal) out.active = active_index_;
    return out;
  }

  bool terminal() const { return active_index_ >= queue_.size(); }
  std::size_t active_index() const { return active_index_; }
  int steps_on_active() const { return steps_on_active_; }
  const std::vector<SubInstruction>& queue() const { return queue_; }
  const std::vector<bool>& satisfied_flags() const { return satisfied_; }
  const PoseHistory& history() const { return history_; }
  const CsmConfig& config() const { return config_; }

  const SubInstruction* active() const { return terminal() ? nullptr : &queue_[active_index_]; }
  bool on_final() const { return active_index_ + 1 >= queue_.size(); }

 private:
  bool evaluate(const Constraint& c, const Observation& obs, Perception& perception) const {
    switch (c.kind) {
      case ConstraintKind::Object: return check_object(c, obs, perception, config_.object_range);
      case ConstraintKind::Location: return check_location(c, obs, perception);
      case ConstraintKind::Direction: return check_direction(c, history_, config_.turn_threshold_deg);
    }
    return false;
  }

  void reset_flags() {
    satisfied_.assign(terminal() ? 0 : queue_[active_index_].constraints.size(), false);
  }

  std::vector<SubInstruction> queue_;
  CsmConfig config_;
  PoseHistory history_;
  std::size_t active_index_ = 0;
  int steps_on_active_ = 0;
  std::vector<bool> satisfied_;
};

/// Drops constraint kinds outside `enabled`. Sub-instructions left without
/// constraints are removed, except the final one, which keeps its original
/// set so the episode goal survives.
inline std::vector<SubInstruction> filter_constraints(const std::vector<SubInstruction>& queue, bool object, bool location,
                                                      bool direction) {
  std::vector<SubInstruction> out;
  for (std::size_t i = 0; i < queue.size(); ++i) {
    const bool last = i + 1 == queue.size();
    if (last) {
      out.push_back(queue[i]);
      break;
    }
    std::vector<Constraint> kept;
    for (const auto& c : queue[i].constraints) {
      const bool on = (c.kind == ConstraintKind::Object && object) || (c.kind == ConstraintKind::Location && location) ||
                      (c.kind == ConstraintKind::Direction && direction);
      if (on) kept.push_back(c);
    }
    if (!kept.empty()) out.emplace_back(queue[i].text, std::move(kept));
  }
  return out;
}

}  // namespace canav
