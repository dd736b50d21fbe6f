#pragma once

// The per-episode loop: observe, step the sub-instruction manager, fuse the
// similarity score into the value map, pick a waypoint, descend the distance
// field, act.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "canav/config.hpp"
#include "canav/csm.hpp"
#include "canav/errors.hpp"
#include "canav/generator.hpp"
#include "canav/grid.hpp"
#include "canav/metrics.hpp"
#include "canav/perception.hpp"
#include "canav/planner.hpp"
#include "canav/simulator.hpp"
#include "canav/value_map.hpp"
#include "canav/waypoint.hpp"

namespace canav {

struct StepRecord {
  int step = 0;
  Pose pose;  // before the action
  Action action = Action::Stop;
  std::optional<std::size_t> active;
  bool switch_event = false;
  bool forced = false;
  std::optional<Waypoint> waypoint;
  double score = 0.0;
  bool collided = false;
};

struct EpisodeResult {
  std::string episode_id;
  std::string world_id;
  MetricBundle metrics;
  int steps = 0;
  bool stopped = false;
  std::vector<Pose> trajectory;  // start pose, then the pose after every step
  std::vector<StepRecord> records;
  std::vector<int> switch_steps;
  std::size_t sub_instructions = 0;
  std::size_t score_clamps = 0;
};

struct SnapshotFrame {
  int step = 0;
  const ValueMap* value_map = nullptr;
  std::optional<std::size_t> active;
  std::string prompt;
};
using SnapshotSink = std::function<void(const SnapshotFrame&)>;

/// Reference cells resampled every `stride` cells (last cell always kept),
/// as world points.
inline std::vector<Point2> reference_points(const std::vector<Cell>& path, const GridSpec& spec, std::size_t stride = 5) {
  std::vector<Point2> out;
  for (std::size_t i = 0; i < path.size(); i += stride) out.push_back(cell_center(path[i], spec));
  if (!path.empty() && (path.size() - 1) % stride != 0) out.push_back(cell_center(path.back(), spec));
  return out;
}

/// Geodesic start-to-goal distance on the ground-truth map, inflated like the
/// agent; falls back to the raw map when inflation disconnects the two.
inline double shortest_distance(const GridWorld& world, Cell start, Cell goal, double inflation_radius) {
  for (const double r : {inflation_radius, 0.0}) {
    CellMask blocked = dilate(world.solid, radius_to_cells(r, world.spec.resolution));
    blocked[start] = 0;
    if (blocked[goal]) continue;
    const DistanceField f = fmm_solve(goal, blocked, FmmHorizon{start, 0.0});
    if (std::isfinite(f[start])) return f[start];
  }
  return kInfDistance;
}

namespace detail {

// Label the final-goal segmentation asks for.
inline std::string final_label(const SubInstruction& s) {
  if (const Constraint* c = s.first_of(ConstraintKind::Object)) return c->argument;
  if (const Constraint* c = s.first_of(ConstraintKind::Location)) return c->argument;
  return s.landmark_prompt;
}

class Agent {
 public:
  Agent(const GridWorld& world, const RunConfig& cfg, std::uint64_t seed)
      : world_(world),
        cfg_(cfg),
        spec_(world.spec),
        explored_(spec_, 0),
        known_(spec_, 0),
        inflated_(spec_, 0),
        nav_(spec_, 0),
        dead_(spec_, 0),
        rng_(seed) {}

  void sense(const Observation& obs) {
    const CellMask& vis = obs.mask();
    bool changed = false;
    auto learn = [&](std::size_t i) {
      explored_.flat(i) = 1;
      if (world_.solid.flat(i) && !known_.flat(i)) {
        known_.flat(i) = 1;
        fresh_obstacles_.push_back(i);
        changed = true;
      }
    };
    // Solid cells bordering a visible free cell count as seen too (a depth
    // return at a grazing angle); otherwise wall faces along a corridor stay
    // unknown and read as frontiers.
    for (std::size_t i = 0; i < vis.size(); ++i) {
      if (!vis.flat(i)) continue;
      learn(i);
      if (world_.solid.flat(i)) continue;
      const Cell c = spec_.cell_at(i);
      for (int dr = -1; dr <= 1; ++dr)
        for (int dc = -1; dc <= 1; ++dc) {
          const Cell n{c.row + dr, c.col + dc};
          if (spec_.contains(n) && world_.solid[n]) learn(spec_.index(n));
        }
    }
    if (changed) refresh_inflation();
    for (std::size_t i = 0; i < nav_.size(); ++i) nav_.flat(i) = explored_.flat(i) && !inflated_.flat(i);
  }

  void mark_obstacle(Cell c) {
    if (!spec_.contains(c) || known_[c]) return;
    known_[c] = 1;
    explored_[c] = 1;
    fresh_obstacles_.push_back(spec_.index(c));
    refresh_inflation();
    nav_[c] = 0;
  }

  /// Frontier target: the nearest frontier cell at least
  /// min_frontier_distance away, else the nearest one.
  std::optional<Waypoint> frontier_waypoint(Cell here) const {
    const CellMask frontier = frontier_mask(explored_, nav_);
    const double min_cells = cfg_.min_frontier_distance / spec_.resolution;
    std::optional<Cell> near, far;
    double near_d = kInfDistance, far_d = kInfDistance;
    for (std::size_t i = 0; i < frontier.size(); ++i) {
      if (!frontier.flat(i) || dead_.flat(i)) continue;
      const Cell c = spec_.cell_at(i);
      const double d = std::hypot(c.row - here.row, c.col - here.col);
      if (d < near_d) {
        near_d = d;
        near = c;
      }
      if (d >= min_cells && d < far_d) {
        far_d = d;
        far = c;
      }
    }
    if (far) return Waypoint{*far, WaypointSource::Frontier};
    if (near) return Waypoint{*near, WaypointSource::Frontier};
    return std::nullopt;
  }

  /// `fresh`: the active prompt has scored above zero since the last switch.
  /// Without fresh evidence the map only holds history, and chasing its
  /// argmax turns the agent in place; explore frontiers instead.
  std::optional<Waypoint> select(const Grid<double>& values, Cell here, const std::optional<Waypoint>& current, bool fresh) {
    if (cfg_.strategy == Strategy::Random) {
      if (current && current->source == WaypointSource::Random && nav_[current->cell] && !spent_) return current;
      spent_ = false;
      std::vector<std::size_t> cells;
      for (std::size_t i = 0; i < nav_.size(); ++i)
        if (nav_.flat(i)) cells.push_back(i);
      if (cells.empty()) return std::nullopt;
      return Waypoint{spec_.cell_at(cells[static_cast<std::size_t>(rng_() % cells.size())]), WaypointSource::Random};
    }
    if (count_set(nav_) == 0) return std::nullopt;
    if (cfg_.strategy == Strategy::Fbe) {
      if (auto w = select_fbe_waypoint(values, explored_, nav_)) return w;
      return select_superpixel_waypoint(slic_partition(values, nav_, cfg_.region_size, cfg_.compactness));
    }
    double peak = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i)
      if (nav_.flat(i)) peak = std::max(peak, values.flat(i));
    if (!fresh && revisit_ && revisit_target_ && nav_[revisit_target_->cell] && values[revisit_target_->cell] > 0.0 && !spent_)
      return revisit_target_;  // finish the leg toward the last target while history still backs it
    revisit_ = false;
    if (!fresh || peak <= 0.0) {
      // Hold an unreached frontier target so exploration does not dither.
      if (current && current->source == WaypointSource::Frontier && nav_[current->cell] && !spent_) return current;
      spent_ = false;
      return frontier_waypoint(here);
    }
    std::optional<Waypoint> w;
    switch (cfg_.strategy) {
      case Strategy::Pixel: w = select_pixel_waypoint(values, nav_); break;
      case Strategy::Orp: w = select_orp_waypoint(slic_partition(values, nav_, cfg_.region_size, cfg_.compactness), values); break;
      default: w = select_superpixel_waypoint(slic_partition(values, nav_, cfg_.region_size, cfg_.compactness));
    }
    if (w) last_target_ = w;
    return w;
  }

  /// Distance field toward `wp`, recomputed only when the waypoint moved, new
  /// obstacles touch the solved region, or the agent left it.
  const DistanceField* field_to(Cell wp, Cell here) {
    bool stale = !field_ || field_source_ != wp || !std::isfinite((*field_)[here]);
    if (!stale)
      for (std::size_t i : fresh_obstacles_)
        if (std::isfinite(field_->flat(i))) stale = true;
    fresh_obstacles_.clear();
    if (!stale) return &*field_;
    CellMask blocked = inflated_;
    for (int dr = -1; dr <= 1; ++dr)
      for (int dc = -1; dc <= 1; ++dc) {
        const Cell c{here.row + dr, here.col + dc};
        if (spec_.contains(c) && !known_[c]) blocked[c] = 0;
      }
    if (blocked[wp]) return nullptr;
    field_ = fmm_solve(wp, blocked, FmmHorizon{here, 1.0});
    field_source_ = wp;
    return &*field_;
  }

  /// After a switch the agent keeps heading for the last target of the
  /// previous prompt; reaching it triggers one look around.
  void on_switch() {
    revisit_ = true;
    revisit_target_ = last_target_;
    last_target_.reset();
    spent_ = false;
  }
  bool take_scan_request() { return std::exchange(scan_request_, false); }

  /// A reached (or unreachable) frontier that is still a frontier is
  /// retired together with its surroundings; grazing views along walls leave
  /// such cells behind.
  void waypoint_spent(const std::optional<Waypoint>& wp) {
    spent_ = true;
    if (revisit_ && revisit_target_ && wp && wp->cell == revisit_target_->cell) {
      revisit_ = false;
      revisit_target_.reset();
      scan_request_ = true;
    }
    if (!wp || wp->source != WaypointSource::Frontier) return;
    const int r = radius_to_cells(0.5, spec_.resolution);
    for (int dr = -r; dr <= r; ++dr)
      for (int dc = -r; dc <= r; ++dc) {
        const Cell c{wp->cell.row + dr, wp->cell.col + dc};
        if (spec_.contains(c) && dr * dr + dc * dc <= r * r) dead_[c] = 1;
      }
  }
  const CellMask& nav() const { return nav_; }
  const CellMask& explored() const { return explored_; }

 private:
  void refresh_inflation() { inflated_ = dilate(known_, radius_to_cells(cfg_.inflation_radius, spec_.resolution)); }

  const GridWorld& world_;
  const RunConfig& cfg_;
  GridSpec spec_;
  CellMask explored_;
  CellMask known_;
  CellMask inflated_;
  CellMask nav_;
  CellMask dead_;
  std::vector<std::size_t> fresh_obstacles_;
  std::optional<DistanceField> field_;
  Cell field_source_;
  std::mt19937_64 rng_;
  bool spent_ = false;
  bool revisit_ = false;
  bool scan_request_ = false;
  std::optional<Waypoint> revisit_target_, last_target_;
};

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace detail

/// Runs one episode to STOP or budget exhaustion.
inline EpisodeResult run_episode(const Episode& ep, const GridWorld& world, Perception& perception, const RunConfig& cfg,
                                 const SnapshotSink& snapshot = {}) {
  cfg.validate();
  const GridSpec& spec = world.spec;
  const ActionSpace space;
  const Frustum frustum = cfg.frustum();

  DecompositionResult plan = perception.decompose_instruction(ep.instruction);
  plan.validate();
  std::vector<SubInstruction> queue =
      filter_constraints(plan.sub_instructions, cfg.constraints.object, cfg.constraints.location, cfg.constraints.direction);
  const SubInstruction final_sub = queue.back();
  const std::string target_label = detail::final_label(final_sub);
  const bool final_has_target = final_sub.first_of(ConstraintKind::Object) || final_sub.first_of(ConstraintKind::Location);

  SubInstructionManager csm(queue, cfg.csm);
  ValueMap vm(spec, cfg.value_map);
  detail::Agent agent(world, cfg, mix_seed(cfg.seed, detail::fnv1a(ep.id)));

  EpisodeResult out;
  out.episode_id = ep.id;
  out.world_id = world.id;
  out.sub_instructions = queue.size();
  Pose pose = ep.start;
  out.trajectory.push_back(pose);
  std::string prompt;
  std::optional<Waypoint> waypoint;
  std::optional<Waypoint> goal;
  bool fresh = false;
  // Look around in place (one full turn at most) before exploring blind.
  const int scan_turns = std::max(0, static_cast<int>(std::lround(2.0 * kPi / space.turn_step)) - 1);
  int scan_left = scan_turns;

  for (int step = 0; step < ep.step_budget; ++step) {
    StepRecord rec;
    rec.step = step;
    rec.pose = pose;
    const Cell here = world_to_cell(pose, spec);

    const Observation obs = observe(world, pose, frustum);
    agent.sense(obs);

    const CsmStep cs = csm.step(obs, perception);
    rec.active = cs.active;
    rec.switch_event = cs.switch_event;
    rec.forced = cs.forced;
    if (cs.switch_event) {
      out.switch_steps.push_back(step);
      fresh = false;
      agent.on_switch();
    }

    const SubInstruction& current = csm.terminal() ? final_sub : *csm.active();
    if (!current.landmark_prompt.empty()) prompt = current.landmark_prompt;
    double score = 0.0;
    if (!prompt.empty()) score = perception.similarity_score(SimilarityQuery{&obs, prompt});
    rec.score = score;
    fresh = fresh || score > 0.0;
    if (fresh) scan_left = 0;
    const ObserveReport rep = vm.observe(obs.frustum, obs.mask(), score);
    if (rep.clamped) ++out.score_clamps;
    vm.on_step_end(here, cs.switch_event);
    if (snapshot) snapshot(SnapshotFrame{step, &vm, cs.active, prompt});

    Action action = Action::Left;
    if (csm.terminal() && !final_has_target) {
      action = Action::Stop;
    } else if (scan_left > 0 && !goal) {
      --scan_left;
    } else {
      if ((csm.terminal() || csm.on_final()) && final_has_target) {
        const CellMask mask = perception.segment_target(obs, target_label);
        if (count_set(mask) > 0) {
          try {
            goal = goal_waypoint(mask, agent.nav());
          } catch (const EmptyInputError&) {
          }
        }
      }
      waypoint = goal ? goal : agent.select(vm.effective_value(), here, waypoint, fresh);
      if (waypoint) {
        const DistanceField* field = agent.field_to(waypoint->cell, here);
        std::optional<ControlDecision> d;
        if (field) d = next_action(pose, *field, cfg.goal_tolerance, space);
        if (!d || d->status == ControlStatus::Stuck) {
          agent.waypoint_spent(waypoint);
          if (!goal) {
            if (auto fw = agent.frontier_waypoint(here); fw && fw->cell != waypoint->cell) {
              if (const DistanceField* f2 = agent.field_to(fw->cell, here)) {
                const ControlDecision d2 = next_action(pose, *f2, cfg.goal_tolerance, space);
                if (d2.status == ControlStatus::Moving) {
                  waypoint = fw;
                  d = d2;
                }
              }
            }
          } else {
            goal.reset();
          }
        }
        if (d && d->status == ControlStatus::Moving) {
          action = d->action;
        } else if (d && d->status == ControlStatus::AtGoal) {
          if (waypoint->source == WaypointSource::GoalMask) {
            action = Action::Stop;
          } else {
            agent.waypoint_spent(waypoint);
          }
        }
      }
    }
    if (agent.take_scan_request() && !fresh) scan_left = scan_turns;
    rec.waypoint = waypoint;
    rec.action = action;

    const ActionOutcome res = apply_action(world, pose, action, space);
    rec.collided = res.collided;
    if (res.blocked_cell) agent.mark_obstacle(*res.blocked_cell);
    pose = res.pose;
    out.records.push_back(rec);
    out.trajectory.push_back(pose);
    out.steps = step + 1;
    if (res.stopped) {
      out.stopped = true;
      break;
    }
  }

  std::vector<Point2> positions;
  for (const Pose& p : out.trajectory)
    if (positions.empty() || positions.back().x != p.x() || positions.back().y != p.y()) positions.push_back(p.position());
  const Cell start_cell = world_to_cell(ep.start, spec);
  const double shortest = shortest_distance(world, start_cell, ep.goal, cfg.inflation_radius);
  out.metrics = compute_metrics(positions, reference_points(ep.reference_path, spec), cell_center(ep.goal, spec),
                                std::isfinite(shortest) ? shortest : 0.0, out.stopped, ep.success_radius);
  return out;
}

}  // namespace canav
