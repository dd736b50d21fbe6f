#pragma once

// Gridworld simulation: egocentric observations, action dynamics and the
// episode file format.

#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "canav/errors.hpp"
#include "canav/grid.hpp"
#include "canav/instruction.hpp"
#include "canav/perception.hpp"
#include "canav/planner.hpp"
#include "canav/world.hpp"
#include "json.hpp"

namespace canav {

inline constexpr int kEpisodeSchemaVersion = 1;

/// Egocentric observation at `pose`: the visibility sector plus every
/// landmark and region with at least one visible cell.
inline Observation observe(const GridWorld& world, const Pose& pose, Frustum frustum) {
  frustum.origin = pose;
  const Cell here = world_to_cell(pose, world.spec);
  if (!world.is_navigable(here)) throw PreconditionError("observation pose must be navigable");

  auto mask = std::make_shared<CellMask>(visible_mask(frustum, world.occupancy, world.spec));
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> lm_dist(world.landmarks.size(), kInf);
  std::vector<double> lm_bearing(world.landmarks.size(), 0.0);
  std::vector<double> rg_dist(world.regions.size(), kInf);

  const GridSpec& spec = world.spec;
  const int reach = static_cast<int>(std::ceil(frustum.max_range / spec.resolution)) + 1;
  const int r_lo = std::max(0, here.row - reach), r_hi = std::min(spec.height - 1, here.row + reach);
  const int c_lo = std::max(0, here.col - reach), c_hi = std::min(spec.width - 1, here.col + reach);
  const Point2 p = pose.position();
  for (int r = r_lo; r <= r_hi; ++r) {
    for (int c = c_lo; c <= c_hi; ++c) {
      if (!mask->at(r, c)) continue;
      const int li = world.landmark_at.at(r, c);
      const int ri = world.region_at.at(r, c);
      if (li < 0 && ri < 0) continue;
      const Point2 q = cell_center({r, c}, spec);
      const double d = distance(p, q);
      if (li >= 0 && d < lm_dist[static_cast<std::size_t>(li)]) {
        lm_dist[static_cast<std::size_t>(li)] = d;
        lm_bearing[static_cast<std::size_t>(li)] = signed_bearing(pose, q);
      }
      if (ri >= 0 && d < rg_dist[static_cast<std::size_t>(ri)]) rg_dist[static_cast<std::size_t>(ri)] = d;
    }
  }

  Observation obs;
  obs.pose = pose;
  obs.frustum = frustum;
  for (std::size_t i = 0; i < lm_dist.size(); ++i)
    if (std::isfinite(lm_dist[i])) obs.landmarks.push_back({i, world.landmarks[i].label, lm_dist[i], lm_bearing[i]});
  for (std::size_t i = 0; i < rg_dist.size(); ++i)
    if (std::isfinite(rg_dist[i])) obs.regions.push_back({i, world.regions[i].label, rg_dist[i]});
  std::stable_sort(obs.landmarks.begin(), obs.landmarks.end(),
                   [](const SeenLandmark& a, const SeenLandmark& b) { return a.distance < b.distance; });
  std::stable_sort(obs.regions.begin(), obs.regions.end(),
                   [](const SeenRegion& a, const SeenRegion& b) { return a.distance < b.distance; });
  obs.visible = std::move(mask);
  return obs;
}

struct ActionOutcome {
  Pose pose;
  bool collided = false;
  bool stopped = false;
  std::optional<Cell> blocked_cell;  // first solid (or off-grid) swept cell
};

namespace detail {

// Rotates by whole turn steps; headings on the turn lattice stay exact.
inline double turn_heading(double heading, int steps, double turn_step) {
  const double k = std::round(heading / turn_step);
  if (std::abs(heading - k * turn_step) < 1e-9) {
    const long per_rev = std::lround(2.0 * kPi / turn_step);
    if (std::abs(per_rev * turn_step - 2.0 * kPi) < 1e-9) {
      long idx = (static_cast<long>(k) + steps) % per_rev;
      if (idx < 0) idx += per_rev;
      return normalize_angle(static_cast<double>(idx) * turn_step);
    }
  }
  return normalize_angle(heading + steps * turn_step);
}

}  // namespace detail

inline ActionOutcome apply_action(const GridWorld& world, const Pose& pose, Action action, const ActionSpace& space = {}) {
  ActionOutcome out{pose, false, false, std::nullopt};
  switch (action) {
    case Action::Stop:
      out.stopped = true;
      return out;
    case Action::Left:
      out.pose = Pose(pose.x(), pose.y(), detail::turn_heading(pose.heading(), +1, space.turn_step));
      return out;
    case Action::Right:
      out.pose = Pose(pose.x(), pose.y(), detail::turn_heading(pose.heading(), -1, space.turn_step));
      return out;
    case Action::Forward: break;
  }
  const double x1 = pose.x() + space.forward_step * std::cos(pose.heading());
  const double y1 = pose.y() + space.forward_step * std::sin(pose.heading());
  const GridSpec& spec = world.spec;
  const double res = spec.resolution;
  std::optional<Cell> hit;
  traverse_segment(pose.x() / res, pose.y() / res, x1 / res, y1 / res, [&](Cell c) {
    if (!spec.contains(c) || world.solid[c]) {
      hit = c;
      return false;
    }
    return true;
  });
  if (hit) {
    out.collided = true;
    out.blocked_cell = hit;
    return out;
  }
  out.pose = Pose(x1, y1, pose.heading());
  return out;
}

// Episodes ------------------------------------------------------------------

struct Episode {
  std::string id;
  std::string world_id;
  Pose start;
  Cell goal;
  double success_radius = 3.0;
  std::string instruction;
  DecompositionResult decomposition;
  std::vector<Cell> reference_path;
  int step_budget = 500;
};

struct EpisodeSet {
  std::vector<std::shared_ptr<const GridWorld>> worlds;
  std::vector<Episode> episodes;

  std::shared_ptr<const GridWorld> world_for(const Episode& e) const {
    for (const auto& w : worlds)
      if (w->id == e.world_id) return w;
    throw ConfigError("episode '" + e.id + "' references unknown world '" + e.world_id + "'");
  }
};

/// True when consecutive cells are 8-adjacent and all are navigable.
inline bool path_is_connected(const GridWorld& world, const std::vector<Cell>& path) {
  if (path.empty()) return false;
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (!world.is_navigable(path[i])) return false;
    if (i > 0 && (std::abs(path[i].row - path[i - 1].row) > 1 || std::abs(path[i].col - path[i - 1].col) > 1)) return false;
  }
  return true;
}

inline void validate_episode(const Episode& e, const GridWorld& world) {
  if (e.id.empty()) throw ConfigError("episode id must be non-empty");
  if (!(e.success_radius > 0.0)) throw ConfigError("episode '" + e.id + "': success radius must be positive");
  if (e.step_budget < 0) throw ConfigError("episode '" + e.id + "': step budget must be >= 0");
  const Cell s = world_to_cell(e.start, world.spec);
  if (!world.is_navigable(s)) throw ConfigError("episode '" + e.id + "': start is not navigable");
  if (!world.spec.contains(e.goal)) throw ConfigError("episode '" + e.id + "': goal outside grid");
  e.decomposition.validate();
  if (!e.reference_path.empty()) {
    if (!path_is_connected(world, e.reference_path)) throw ConfigError("episode '" + e.id + "': reference path is not connected");
    if (e.reference_path.front() != s || e.reference_path.back() != e.goal)
      throw ConfigError("episode '" + e.id + "': reference path must run from start to goal");
  }
}

inline void to_json(nlohmann::json& j, const Cell& c) { j = nlohmann::json::array({c.row, c.col}); }
inline void from_json(const nlohmann::json& j, Cell& c) { c = {j.at(0).get<int>(), j.at(1).get<int>()}; }

inline void to_json(nlohmann::json& j, const Pose& p) {
  j = nlohmann::json{{"x", p.x()}, {"y", p.y()}, {"heading", p.heading()}};
}
inline void from_json(const nlohmann::json& j, Pose& p) {
  p = Pose(j.at("x").get<double>(), j.at("y").get<double>(), j.value("heading", 0.0));
}

inline void to_json(nlohmann::json& j, const Episode& e) {
  j = nlohmann::json{{"id", e.id},
                     {"world", e.world_id},
                     {"start", e.start},
                     {"goal", e.goal},
                     {"success_radius", e.success_radius},
                     {"instruction", e.instruction},
                     {"decomposition", e.decomposition},
                     {"reference_path", e.reference_path},
                     {"step_budget", e.step_budget}};
}
inline void from_json(const nlohmann::json& j, Episode& e) {
  e = Episode{};
  e.id = j.at("id").get<std::string>();
  e.world_id = j.at("world").get<std::string>();
  e.start = j.at("start").get<Pose>();
  e.goal = j.at("goal").get<Cell>();
  e.success_radius = j.value("success_radius", 3.0);
  e.instruction = j.at("instruction").get<std::string>();
  e.decomposition = j.at("decomposition").get<DecompositionResult>();
  e.reference_path = j.value("reference_path", std::vector<Cell>{});
  e.step_budget = j.value("step_budget", 500);
}

inline nlohmann::json episode_set_to_json(const EpisodeSet& set) {
  nlohmann::json worlds = nlohmann::json::array();
  for (const auto& w : set.worlds) worlds.push_back(*w);
  return {{"schema_version", kEpisodeSchemaVersion}, {"worlds", worlds}, {"episodes", set.episodes}};
}

inline EpisodeSet episode_set_from_json(const nlohmann::json& j) {
  try {
    if (j.value("schema_version", 0) != kEpisodeSchemaVersion)
      throw ConfigError("unsupported episode schema_version (expected " + std::to_string(kEpisodeSchemaVersion) + ")");
    EpisodeSet set;
    for (const auto& wj : j.at("worlds")) set.worlds.push_back(std::make_shared<const GridWorld>(wj.get<GridWorld>()));
    set.episodes = j.at("episodes").get<std::vector<Episode>>();
    for (const auto& e : set.episodes) validate_episode(e, *set.world_for(e));
    return set;
  } catch (const nlohmann::json::exception& ex) {
    throw ConfigError(std::string("malformed episode file: ") + ex.what());
  } catch (const PreconditionError& ex) {
    throw ConfigError(std::string("invalid episode file: ") + ex.what());
  } catch (const BoundsError& ex) {
    throw ConfigError(std::string("invalid episode file: ") + ex.what());
  }
}

}  // namespace canav
