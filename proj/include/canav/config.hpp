#pragma once

// Run configuration: every module's knobs in one validated, serializable
// record. Unknown keys are rejected so typos surface before any episode runs.

#include <cstdint>
#include <set>
#include <string>

#include "canav/csm.hpp"
#include "canav/errors.hpp"
#include "canav/grid.hpp"
#include "canav/value_map.hpp"
#include "json.hpp"

namespace canav {

enum class Strategy { Superpixel, Fbe, Pixel, Orp, Random };

inline std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::Superpixel: return "superpixel";
    case Strategy::Fbe: return "fbe";
    case Strategy::Pixel: return "pixel";
    case Strategy::Orp: return "orp";
    case Strategy::Random: return "random";
  }
  return "superpixel";
}

inline Strategy parse_strategy(std::string_view s) {
  if (s == "superpixel") return Strategy::Superpixel;
  if (s == "fbe") return Strategy::Fbe;
  if (s == "pixel") return Strategy::Pixel;
  if (s == "orp") return Strategy::Orp;
  if (s == "random") return Strategy::Random;
  throw ConfigError("unknown strategy '" + std::string(s) + "' (expected superpixel|fbe|pixel|orp|random)");
}

enum class Backend { Oracle, Remote, Replay };

inline std::string_view to_string(Backend b) {
  switch (b) {
    case Backend::Oracle: return "oracle";
    case Backend::Remote: return "remote";
    case Backend::Replay: return "replay";
  }
  return "oracle";
}

inline Backend parse_backend(std::string_view s) {
  if (s == "oracle") return Backend::Oracle;
  if (s == "remote") return Backend::Remote;
  if (s == "replay") return Backend::Replay;
  throw ConfigError("unknown backend '" + std::string(s) + "' (expected oracle|remote|replay)");
}

struct ConstraintToggles {
  bool object = true;
  bool location = true;
  bool direction = true;
  bool all() const { return object && location && direction; }
};

struct RunConfig {
  CsmConfig csm;
  ValueMapConfig value_map;
  ConstraintToggles constraints;

  Strategy strategy = Strategy::Superpixel;
  int region_size = 48;
  double compactness = 10.0;

  double hfov_deg = 79.0;
  double max_range = 5.0;
  double goal_tolerance = 0.25;
  double inflation_radius = 0.05;
  double min_frontier_distance = 1.0;  // zero-value fallback skips closer frontiers

  Backend backend = Backend::Oracle;
  std::string fixtures;
  std::string episodes;
  std::uint64_t seed = 0;
  int jobs = 1;

  void validate() const {
    csm.validate();
    value_map.validate();
    if (region_size < 2) throw ConfigError("region_size must be >= 2");
    if (!(compactness > 0.0)) throw ConfigError("compactness must be positive");
    if (!(hfov_deg > 0.0 && hfov_deg < 180.0)) throw ConfigError("hfov_deg must lie in (0, 180)");
    if (!(max_range > 0.0)) throw ConfigError("max_range must be positive");
    if (!(goal_tolerance > 0.0)) throw ConfigError("goal_tolerance must be positive");
    if (!(inflation_radius >= 0.0)) throw ConfigError("inflation_radius must be >= 0");
    if (!(min_frontier_distance >= 0.0)) throw ConfigError("min_frontier_distance must be >= 0");
    if (jobs < 1) throw ConfigError("jobs must be >= 1");
    if (backend != Backend::Oracle && fixtures.empty()) throw ConfigError("remote and replay backends need a fixtures path");
  }

  Frustum frustum() const { return Frustum{Pose{}, deg_to_rad(hfov_deg), max_range}; }
};

namespace detail {

inline void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> keys, std::string_view where) {
  if (!j.is_object()) throw ConfigError(std::string(where) + " must be a JSON object");
  std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [k, _] : j.items())
    if (!allowed.count(k)) throw ConfigError("unknown key '" + k + "' in " + std::string(where));
}

template <class T>
void read_opt(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace detail

inline nlohmann::json config_to_json(const RunConfig& c) {
  return {{"csm",
           {{"r_object_range", c.csm.object_range},
            {"tau_window", c.csm.tau},
            {"min_steps", c.csm.min_steps},
            {"max_steps", c.csm.max_steps},
            {"turn_threshold_deg", c.csm.turn_threshold_deg}}},
          {"value_map",
           {{"gamma", c.value_map.gamma},
            {"lambda", c.value_map.lambda},
            {"reset_on_switch", c.value_map.reset_on_switch},
            {"disable_trajectory_mask", c.value_map.disable_trajectory_mask},
            {"disable_historical_decay", c.value_map.disable_historical_decay},
            {"visit_radius", c.value_map.visit_radius}}},
          {"constraints", {{"object", c.constraints.object}, {"location", c.constraints.location}, {"direction", c.constraints.direction}}},
          {"strategy", to_string(c.strategy)},
          {"region_size", c.region_size},
          {"compactness", c.compactness},
          {"hfov_deg", c.hfov_deg},
          {"max_range", c.max_range},
          {"goal_tolerance", c.goal_tolerance},
          {"inflation_radius", c.inflation_radius},
          {"min_frontier_distance", c.min_frontier_distance},
          {"backend", to_string(c.backend)},
          {"fixtures", c.fixtures},
          {"episodes", c.episodes},
          {"seed", c.seed},
          {"jobs", c.jobs}};
}

/// Overlays the keys present in `j` onto `base` and validates the result.
inline RunConfig config_from_json(const nlohmann::json& j, RunConfig base = {}) {
  try {
    detail::reject_unknown(j,
                           {"csm", "value_map", "constraints", "strategy", "region_size", "compactness", "hfov_deg", "max_range",
                            "goal_tolerance", "inflation_radius", "min_frontier_distance", "backend", "fixtures", "episodes", "seed",
                            "jobs"},
                           "config");
    RunConfig c = base;
    if (j.contains("csm")) {
      const auto& s = j.at("csm");
      detail::reject_unknown(s, {"r_object_range", "tau_window", "min_steps", "max_steps", "turn_threshold_deg"}, "csm");
      detail::read_opt(s, "r_object_range", c.csm.object_range);
      detail::read_opt(s, "tau_window", c.csm.tau);
      detail::read_opt(s, "min_steps", c.csm.min_steps);
      detail::read_opt(s, "max_steps", c.csm.max_steps);
      detail::read_opt(s, "turn_threshold_deg", c.csm.turn_threshold_deg);
    }
    if (j.contains("value_map")) {
      const auto& v = j.at("value_map");
      detail::reject_unknown(v, {"gamma", "lambda", "reset_on_switch", "disable_trajectory_mask", "disable_historical_decay", "visit_radius"},
                             "value_map");
      detail::read_opt(v, "gamma", c.value_map.gamma);
      detail::read_opt(v, "lambda", c.value_map.lambda);
      detail::read_opt(v, "reset_on_switch", c.value_map.reset_on_switch);
      detail::read_opt(v, "disable_trajectory_mask", c.value_map.disable_trajectory_mask);
      detail::read_opt(v, "disable_historical_decay", c.value_map.disable_historical_decay);
      detail::read_opt(v, "visit_radius", c.value_map.visit_radius);
    }
    if (j.contains("constraints")) {
      const auto& k = j.at("constraints");
      detail::reject_unknown(k, {"object", "location", "direction"}, "constraints");
      detail::read_opt(k, "object", c.constraints.object);
      detail::read_opt(k, "location", c.constraints.location);
      detail::read_opt(k, "direction", c.constraints.direction);
    }
    if (j.contains("strategy")) c.strategy = parse_strategy(j.at("strategy").get<std::string>());
    if (j.contains("backend")) c.backend = parse_backend(j.at("backend").get<std::string>());
    detail::read_opt(j, "region_size", c.region_size);
    detail::read_opt(j, "compactness", c.compactness);
    detail::read_opt(j, "hfov_deg", c.hfov_deg);
    detail::read_opt(j, "max_range", c.max_range);
    detail::read_opt(j, "goal_tolerance", c.goal_tolerance);
    detail::read_opt(j, "inflation_radius", c.inflation_radius);
    detail::read_opt(j, "min_frontier_distance", c.min_frontier_distance);
    detail::read_opt(j, "fixtures", c.fixtures);
    detail::read_opt(j, "episodes", c.episodes);
    detail::read_opt(j, "seed", c.seed);
    detail::read_opt(j, "jobs", c.jobs);
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
}

}  // namespace canav
