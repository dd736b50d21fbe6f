// canav: run episodes, generate episode sets, sweep ablations.
//
// Exit codes: 0 ok, 1 unexpected failure, 2 config error, 3 fixture missing,
// 4 transport error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "canav/canav.hpp"

namespace {

using canav::ConfigError;
using nlohmann::json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  out << text;
}

// A config file is either a JSON object or a results JSONL whose first line
// carries the resolved config.
json load_config_json(const std::string& path) {
  const std::string text = read_file(path);
  try {
    const json j = json::parse(text);
    if (j.is_object() && j.contains("episode") && j.contains("config")) return j.at("config");  // one-line results file
    return j;
  } catch (const json::exception&) {
  }
  std::istringstream lines(text);
  std::string first;
  while (std::getline(lines, first) && first.empty()) {
  }
  try {
    const json line = json::parse(first);
    if (line.contains("config")) return line.at("config");
  } catch (const json::exception&) {
  }
  throw ConfigError(path + " is neither a config object nor a results file");
}

struct Overrides {
  std::string config_path;
  std::optional<std::string> backend, fixtures, strategy, episodes;
  std::optional<double> gamma, lambda;
  std::optional<int> region_size, min_steps, max_steps, jobs;
  std::optional<std::uint64_t> seed;

  void add(CLI::App* app) {
    app->add_option("--config", config_path, "config JSON, or a results JSONL to repeat its run");
    app->add_option("--episodes", episodes, "episode set JSON (see `generate`)");
    app->add_option("--backend", backend, "oracle|remote|replay");
    app->add_option("--fixtures", fixtures, "fixture JSONL for the remote and replay backends");
    app->add_option("--strategy", strategy, "superpixel|fbe|pixel|orp|random");
    app->add_option("--gamma", gamma, "history decay on switch");
    app->add_option("--lambda", lambda, "trajectory mask factor");
    app->add_option("--region-size", region_size, "superpixel size (cells)");
    app->add_option("--min-steps", min_steps, "minimum steps before a switch");
    app->add_option("--max-steps", max_steps, "forced switch after this many steps");
    app->add_option("--jobs", jobs, "episodes run concurrently");
    app->add_option("--seed", seed, "agent seed (and suite seed with --count)");
  }

  canav::RunConfig resolve() const {
    canav::RunConfig c;
    if (!config_path.empty()) c = canav::config_from_json(load_config_json(config_path), c);
    json j = json::object();
    if (backend) j["backend"] = *backend;
    if (fixtures) j["fixtures"] = *fixtures;
    if (strategy) j["strategy"] = *strategy;
    if (episodes) j["episodes"] = *episodes;
    if (gamma) j["value_map"]["gamma"] = *gamma;
    if (lambda) j["value_map"]["lambda"] = *lambda;
    if (region_size) j["region_size"] = *region_size;
    if (min_steps) j["csm"]["min_steps"] = *min_steps;
    if (max_steps) j["csm"]["max_steps"] = *max_steps;
    if (jobs) j["jobs"] = *jobs;
    if (seed) j["seed"] = *seed;
    return canav::config_from_json(j, c);
  }
};

struct SuiteOptions {
  int count = -1;
  std::string layout = "mixed";
  int step_budget = 500;

  void add(CLI::App* app, bool required) {
    auto* o = app->add_option("--count", count, "episodes to generate");
    if (required) o->required();
    app->add_option("--template", layout, "rooms|corridor|maze|mixed");
    app->add_option("--step-budget", step_budget, "per-episode step limit");
  }

  canav::EpisodeSet generate(std::uint64_t seed) const {
    if (count < 0) throw ConfigError("--count must be >= 0");
    if (step_budget < 0) throw ConfigError("--step-budget must be >= 0");
    std::optional<canav::WorldTemplate> t;
    if (layout != "mixed") t = canav::parse_template(layout);
    return canav::generate_suite(seed, t, count, {}, step_budget);
  }
};

// Episodes from --episodes (or the config's "episodes"), else a generated suite.
canav::EpisodeSet load_episodes(const canav::RunConfig& cfg, const SuiteOptions& suite) {
  if (!cfg.episodes.empty()) {
    try {
      return canav::episode_set_from_json(json::parse(read_file(cfg.episodes)));
    } catch (const json::exception& e) {
      throw ConfigError(cfg.episodes + ": " + e.what());
    }
  }
  if (suite.count < 0) throw ConfigError("give --episodes FILE or --count N");
  return suite.generate(cfg.seed);
}

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const canav::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const canav::FixtureError& e) {
    std::cerr << "fixture missing: " << e.what() << '\n';
    return 3;
  } catch (const canav::TransportError& e) {
    std::cerr << "transport error: " << e.what() << '\n';
    return 4;
  } catch (const canav::DecompositionError& e) {
    std::cerr << "transport error: " << e.what() << "\nraw reply: " << e.raw_reply() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Constraint-aware zero-shot navigation in synthetic gridworlds"};
  app.require_subcommand(1);

  // run ---------------------------------------------------------------------
  auto* run = app.add_subcommand("run", "run episodes and write results JSONL plus a report");
  Overrides run_ov;
  SuiteOptions run_suite;
  std::string run_out, run_report, snapshots;
  int snapshot_every = 1;
  bool dry_run = false;
  run_ov.add(run);
  run_suite.add(run, false);
  run->add_option("--out", run_out, "results JSONL (default: stdout)");
  run->add_option("--report", run_report, "aggregate report JSON");
  run->add_option("--snapshots", snapshots, "directory for value-map snapshots");
  run->add_option("--snapshot-every", snapshot_every, "snapshot every N-th step")->check(CLI::PositiveNumber);
  run->add_flag("--dry-run", dry_run, "validate and print the resolved config");

  // generate ----------------------------------------------------------------
  auto* gen = app.add_subcommand("generate", "write a generated episode set");
  SuiteOptions gen_suite;
  std::uint64_t gen_seed = 0;
  std::string gen_out;
  gen_suite.add(gen, true);
  gen->add_option("--seed", gen_seed, "suite seed");
  gen->add_option("--out", gen_out, "episode set JSON")->required();

  // ablate ------------------------------------------------------------------
  auto* abl = app.add_subcommand("ablate", "sweep one ablation axis and print a table");
  Overrides abl_ov;
  SuiteOptions abl_suite;
  std::string axis, abl_out;
  abl_ov.add(abl);
  abl_suite.add(abl, false);
  abl->add_option("--axis", axis, "constraints|thresholds|update|strategy|gamma|lambda|region_size")->required();
  abl->add_option("--out", abl_out, "table as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // usage errors count as config errors
  }

  if (*run) {
    return guarded([&] {
      const canav::RunConfig cfg = run_ov.resolve();
      if (dry_run) {
        std::cout << canav::config_to_json(cfg).dump(2) << '\n';
        return 0;
      }
      const canav::EpisodeSet set = load_episodes(cfg, run_suite);
      canav::SnapshotFactory snap;
      if (!snapshots.empty())
        snap = [&](const canav::Episode& ep) { return canav::snapshot_sink(snapshots, ep.id, snapshot_every); };
      const auto results = canav::run_batch(set, cfg, canav::perception_factory(cfg), snap);
      const std::string jsonl = canav::results_jsonl(results, cfg);
      if (run_out.empty()) std::cout << jsonl;
      else write_file(run_out, jsonl);
      if (!run_report.empty()) write_file(run_report, canav::report_json(results, cfg).dump(2) + "\n");
      std::cerr << canav::format_table({{std::string(canav::to_string(cfg.strategy)), canav::summarize(canav::bundles_of(results))}});
      return 0;
    });
  }
  if (*gen) {
    return guarded([&] {
      const canav::EpisodeSet set = gen_suite.generate(gen_seed);
      write_file(gen_out, canav::episode_set_to_json(set).dump() + "\n");
      std::cerr << "wrote " << set.episodes.size() << " episodes to " << gen_out << '\n';
      return 0;
    });
  }
  return guarded([&] {
    const canav::RunConfig cfg = abl_ov.resolve();
    const canav::EpisodeSet set = load_episodes(cfg, abl_suite);
    const canav::AblationResult res = canav::run_ablation(axis, set, cfg, canav::perception_factory(cfg));
    std::cout << res.table();
    if (!abl_out.empty()) write_file(abl_out, res.to_json().dump(2) + "\n");
    return 0;
  });
}
