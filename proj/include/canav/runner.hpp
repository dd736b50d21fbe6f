#pragma once

// Batch execution over an episode set, results JSONL, aggregate reports and
// ablation sweeps.

#include <algorithm>
#include <atomic>
#include <exception>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "canav/config.hpp"
#include "canav/errors.hpp"
#include "canav/metrics.hpp"
#include "canav/navigator.hpp"
#include "canav/oracle_perception.hpp"
#include "canav/remote_perception.hpp"
#include "canav/simulator.hpp"
#include "json.hpp"

namespace canav {

using PerceptionFactory = std::function<std::unique_ptr<Perception>(const Episode&, std::shared_ptr<const GridWorld>)>;

inline PerceptionFactory oracle_factory() {
  return [](const Episode& ep, std::shared_ptr<const GridWorld> world) {
    auto p = std::make_unique<OraclePerception>(std::move(world));
    p->add_decomposition(ep.instruction, ep.decomposition);
    return std::unique_ptr<Perception>(std::move(p));
  };
}

/// Remote (record) or replay perception sharing one fixture cache.
inline PerceptionFactory remote_factory(std::shared_ptr<FixtureCache> cache, FixtureMode mode, PostFn post = {}) {
  return [cache = std::move(cache), mode, post = std::move(post)](const Episode& ep, std::shared_ptr<const GridWorld>) {
    auto p = std::make_unique<RemotePerception>(cache, mode, post);
    p->add_decomposition(ep.instruction, ep.decomposition);
    return std::unique_ptr<Perception>(std::move(p));
  };
}

inline PerceptionFactory perception_factory(const RunConfig& cfg) {
  switch (cfg.backend) {
    case Backend::Oracle: return oracle_factory();
    case Backend::Remote: return remote_factory(std::make_shared<FixtureCache>(cfg.fixtures), FixtureMode::Record);
    case Backend::Replay:
      if (!std::filesystem::exists(cfg.fixtures)) throw FixtureError("fixture file " + cfg.fixtures + " does not exist");
      return remote_factory(std::make_shared<FixtureCache>(cfg.fixtures), FixtureMode::Replay);
  }
  return oracle_factory();
}

using SnapshotFactory = std::function<SnapshotSink(const Episode&)>;

/// Runs every episode (cfg.jobs workers). Results come back sorted by
/// episode id regardless of scheduling.
inline std::vector<EpisodeResult> run_batch(const EpisodeSet& set, const RunConfig& cfg, const PerceptionFactory& factory,
                                            const SnapshotFactory& snapshots = {}) {
  cfg.validate();
  std::vector<EpisodeResult> results(set.episodes.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= set.episodes.size()) return;
      try {
        const Episode& ep = set.episodes[i];
        auto world = set.world_for(ep);
        auto perception = factory(ep, world);
        results[i] = run_episode(ep, *world, *perception, cfg, snapshots ? snapshots(ep) : SnapshotSink{});
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next.store(set.episodes.size());
        return;
      }
    }
  };
  const int n = std::min<int>(cfg.jobs, static_cast<int>(std::max<std::size_t>(set.episodes.size(), 1)));
  if (n <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  std::stable_sort(results.begin(), results.end(), [](const EpisodeResult& a, const EpisodeResult& b) { return a.episode_id < b.episode_id; });
  return results;
}

inline std::string action_string(const EpisodeResult& r) {
  std::string s;
  s.reserve(r.records.size());
  for (const auto& rec : r.records) s += to_string(rec.action).front();
  return s;
}

/// One results line. Carries the resolved config so the run can be repeated
/// from the file alone.
inline nlohmann::json result_line(const EpisodeResult& r, const RunConfig& cfg) {
  const Pose& last = r.trajectory.back();
  return {{"episode", r.episode_id},
          {"world", r.world_id},
          {"seed", cfg.seed},
          {"steps", r.steps},
          {"stopped", r.stopped},
          {"sub_instructions", r.sub_instructions},
          {"switch_steps", r.switch_steps},
          {"actions", action_string(r)},
          {"final_pose", {{"x", last.x()}, {"y", last.y()}, {"heading", last.heading()}}},
          {"metrics", r.metrics},
          {"config", config_to_json(cfg)}};
}

inline std::string results_jsonl(const std::vector<EpisodeResult>& results, const RunConfig& cfg) {
  std::string out;
  for (const auto& r : results) {
    out += result_line(r, cfg).dump();
    out += '\n';
  }
  return out;
}

inline std::vector<MetricBundle> bundles_of(const std::vector<EpisodeResult>& results) {
  std::vector<MetricBundle> b;
  for (const auto& r : results) b.push_back(r.metrics);
  return b;
}

inline nlohmann::json report_json(const std::vector<EpisodeResult>& results, const RunConfig& cfg) {
  return {{"summary", summarize(bundles_of(results))}, {"config", config_to_json(cfg)}};
}

// Ablations -------------------------------------------------------------------

struct AblationRow {
  std::string label;
  RunConfig config;
};

inline const std::vector<std::string>& ablation_axes() {
  static const std::vector<std::string> axes = {"constraints", "thresholds", "update", "strategy", "gamma", "lambda", "region_size"};
  return axes;
}

/// Configurations along one axis, everything else taken from `base`.
inline std::vector<AblationRow> ablation_rows(std::string_view axis, const RunConfig& base) {
  std::vector<AblationRow> rows;
  auto add = [&](std::string label, auto&& edit) {
    RunConfig c = base;
    edit(c);
    c.validate();
    rows.push_back({std::move(label), c});
  };
  if (axis == "constraints") {
    for (int mask = 0; mask < 8; ++mask) {
      const bool o = mask & 1, l = mask & 2, d = mask & 4;
      std::string label;
      if (o) label += "object";
      if (l) label += std::string(label.empty() ? "" : "+") + "location";
      if (d) label += std::string(label.empty() ? "" : "+") + "direction";
      if (label.empty()) label = "final only";
      add(label, [&](RunConfig& c) { c.constraints = {o, l, d}; });
    }
  } else if (axis == "thresholds") {
    for (auto [lo, hi] : std::vector<std::pair<int, int>>{{0, 0}, {5, 25}, {10, 25}, {15, 25}, {10, 15}, {10, 35}})
      add(std::to_string(lo) + "/" + std::to_string(hi), [&](RunConfig& c) {
        c.csm.min_steps = lo;
        c.csm.max_steps = hi;
      });
  } else if (axis == "update") {
    add("None", [](RunConfig& c) {
      c.value_map.reset_on_switch = true;
      c.value_map.disable_trajectory_mask = true;
    });
    add("trajectory mask", [](RunConfig& c) { c.value_map.disable_trajectory_mask = true; });
    add("historical decay", [](RunConfig& c) { c.value_map.reset_on_switch = true; });
    add("trajectory mask + historical decay", [](RunConfig&) {});
  } else if (axis == "strategy") {
    for (auto [label, s] : std::vector<std::pair<std::string, Strategy>>{
             {"FBE", Strategy::Fbe}, {"Pixel", Strategy::Pixel}, {"ORP", Strategy::Orp}, {"Superpixel", Strategy::Superpixel}})
      add(label, [&](RunConfig& c) { c.strategy = s; });
  } else if (axis == "gamma") {
    for (double g : {0.0, 0.25, 0.5, 0.75}) {
      std::ostringstream os;
      os << g;
      add(os.str(), [&](RunConfig& c) { c.value_map.gamma = g; });
    }
  } else if (axis == "lambda") {
    for (double l : {0.95, 0.90, 0.85, 0.80}) {
      std::ostringstream os;
      os << l;
      add(os.str(), [&](RunConfig& c) { c.value_map.lambda = l; });
    }
  } else if (axis == "region_size") {
    for (int s : {25, 50, 75, 100}) add(std::to_string(s), [&](RunConfig& c) { c.region_size = s; });
  } else {
    throw ConfigError("unknown ablation axis '" + std::string(axis) +
                      "' (expected constraints|thresholds|update|strategy|gamma|lambda|region_size)");
  }
  return rows;
}

struct AblationResult {
  std::string axis;
  std::vector<std::pair<std::string, MetricSummary>> rows;

  std::string table() const { return format_table(rows, axis); }
  nlohmann::json to_json() const {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& [label, s] : rows) j.push_back({{"label", label}, {"summary", s}});
    return {{"axis", axis}, {"rows", j}};
  }
};

inline AblationResult run_ablation(std::string_view axis, const EpisodeSet& set, const RunConfig& base, const PerceptionFactory& factory) {
  AblationResult out{std::string(axis), {}};
  for (const auto& row : ablation_rows(axis, base))
    out.rows.emplace_back(row.label, summarize(bundles_of(run_batch(set, row.config, factory))));
  return out;
}

}  // namespace canav
