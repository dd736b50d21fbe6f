// Acceptance run: one PASS/FAIL line per criterion, tolerances pinned here.
// Exit status is the number of failing criteria.

#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "canav/canav.hpp"
#include "oracles.hpp"
#include "suites.hpp"

using namespace canav;

namespace {

constexpr double kProfileTol = 1e-9;
constexpr double kFusionTol = 1e-12;
constexpr double kFmmCellTol = 1.0;  // cells
constexpr double kNdtwTol = 1e-9;
constexpr double kMinSr = 0.90;
constexpr double kMinMargin = 0.30;
constexpr int kEpisodes = 50;
constexpr std::uint64_t kSuiteSeed = 1;
const std::vector<std::uint64_t> kAblationSeeds = {1, 2, 3};

struct Verdict {
  bool pass = false;
  std::string detail;
  double limit_s = 0.0;  // runtime budget, 0 for none
};

int failures = 0;

void report(int n, const std::function<Verdict()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Verdict v;
  try {
    v = body();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what(), 0.0};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (v.limit_s > 0.0 && secs >= v.limit_s) {
    v.pass = false;
    v.detail += "; over the " + std::to_string(static_cast<int>(v.limit_s)) + " s budget";
  }
  if (!v.pass) ++failures;
  std::printf("criterion %d: %s  %s  (%.2f s)\n", n, v.pass ? "PASS" : "FAIL", v.detail.c_str(), secs);
  std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

double sr_of(const std::vector<EpisodeResult>& r) { return summarize(bundles_of(r)).sr; }

// Suites are generated once per seed and reused across criteria.
const EpisodeSet& suite(std::uint64_t seed) {
  static std::map<std::uint64_t, EpisodeSet> cache;
  auto it = cache.find(seed);
  if (it == cache.end()) it = cache.emplace(seed, generate_suite(seed, std::nullopt, kEpisodes)).first;
  return it->second;
}

RunConfig final_only() {
  RunConfig c;
  c.constraints = {false, false, false};
  return c;
}

RunConfig no_update() {
  RunConfig c;
  c.value_map.reset_on_switch = true;
  c.value_map.disable_trajectory_mask = true;
  return c;
}

RunConfig random_waypoints() {
  RunConfig c;
  c.strategy = Strategy::Random;
  return c;
}

std::vector<EpisodeResult> all_results;  // every end-to-end run, for criterion 7
std::string default_jsonl;               // first default run on the main suite

std::vector<EpisodeResult> run(const EpisodeSet& set, const RunConfig& cfg) {
  auto r = run_batch(set, cfg, oracle_factory());
  all_results.insert(all_results.end(), r.begin(), r.end());
  return r;
}

}  // namespace

int main() {
  report(1, [] {
    const double hfov = deg_to_rad(79.0);
    bool ok = std::abs(confidence_profile(0.0, hfov) - 1.0) <= kProfileTol &&
              std::abs(confidence_profile(hfov / 4, hfov) - 0.5) <= kProfileTol &&
              std::abs(confidence_profile(hfov / 2, hfov) - 0.0) <= kProfileTol;

    const GridSpec spec{4, 4, 0.05};
    CellMask one(spec, 0);
    one.at(1, 1) = 1;
    const double h = kPi / 2;
    auto theta_for = [&](double c) { return std::acos(std::sqrt(c)) * (h / 2) / (kPi / 2); };
    ValueMap vm(spec, {});
    vm.observe(one, 0.4, h, [&](Cell) { return theta_for(0.2); });
    vm.observe(one, 0.8, h, [&](Cell) { return theta_for(0.6); });
    const double v = vm.value().at(1, 1), c = vm.confidence().at(1, 1);
    ok = ok && std::abs(v - 0.7) <= kFusionTol && std::abs(c - 0.5) <= kFusionTol;

    ValueMap d(spec, {});
    d.observe(one, 0.8, 1.0, [](Cell) { return 0.0; });
    d.on_step_end({0, 0}, false);
    const bool b0 = d.value().at(1, 1) == 0.8;
    d.on_step_end({0, 0}, true);
    const bool b1 = d.value().at(1, 1) == 0.4;
    ValueMap t(spec, {});
    t.observe(one, 1.0, 1.0, [](Cell) { return 0.0; });
    for (int i = 0; i < 3; ++i) t.on_step_end({1, 1}, false);
    const double m3 = t.effective_value().at(1, 1);
    const bool lk = m3 == std::pow(0.95, 3.0) && std::abs(m3 - 0.857375) < 1e-15;
    ok = ok && b0 && b1 && lk;
    return Verdict{ok, fmt("fusion V=%.15f C=%.15f, lambda^3=%.9f", v, c, m3), 1.0};
  });

  report(2, [] {
    const suites::FmmTally f = suites::fmm_vs_dijkstra(2, 100, 50);
    const suites::WaypointTally w = suites::waypoint_vs_bruteforce(2, 50);
    const bool fmm_ok = f.grids == 100 && f.max_diff_cells <= kFmmCellTol && f.reachability == 0;
    const bool wp_ok = w.maps == 50 && w.mismatches() == 0;
    return Verdict{fmm_ok && wp_ok,
                   fmt("FMM vs 4-neighbour Dijkstra max diff %.2f cells (tol %.0f); waypoint mismatches %.0f/50 maps", f.max_diff_cells,
                       kFmmCellTol, w.mismatches()),
                   30.0};
  });

  report(3, [] {
    const suites::ValueMapTally t = suites::value_map_properties(3, 1000);
    return Verdict{t.sequences >= 1000 && t.violations() == 0,
                   fmt("%.0f sequences; range %.0f, convergence %.0f, locality %.0f", t.sequences, t.range, t.convergence, t.locality) +
                       fmt(", decay %.0f violations", t.decay),
                   30.0};
  });

  report(4, [] {
    struct Switchboard : Perception {
      bool yes = false;
      double similarity_score(const SimilarityQuery&) override { return 0; }
      std::vector<Detection> detect_objects(const Observation&, std::string_view l) override {
        return yes ? std::vector<Detection>{{std::string(l), 1.0, 0.0}} : std::vector<Detection>{};
      }
      bool location_query(const Observation&, std::string_view) override { return yes; }
      CellMask segment_target(const Observation& o, std::string_view) override { return CellMask(o.spec(), 0); }
      DecompositionResult decompose_instruction(std::string_view) override { return {}; }
    } p;
    Observation obs;
    obs.pose = Pose(1, 1, 0);
    obs.visible = std::make_shared<CellMask>(GridSpec{10, 10, 0.05}, 0);
    std::vector<SubInstruction> q(4, SubInstruction("s", {Constraint::object("a"), Constraint::location("b")}));

    // Satisfied from the first step: switch exactly at step 10.
    p.yes = true;
    SubInstructionManager early(q, CsmConfig{});
    int first_switch = 0;
    for (int s = 1; s <= 30 && !first_switch; ++s)
      if (early.step(obs, p).switch_event) first_switch = s;
    // Never satisfied: forced switch exactly at step 25.
    p.yes = false;
    SubInstructionManager late(q, CsmConfig{});
    int forced = 0;
    for (int s = 1; s <= 30 && !forced; ++s)
      if (late.step(obs, p).forced) forced = s;
    // Random satisfaction: the active index only ever advances by one.
    std::mt19937_64 rng(4);
    std::bernoulli_distribution coin(0.2);
    bool monotone = true;
    for (int trial = 0; trial < 50; ++trial) {
      SubInstructionManager m(q, CsmConfig{});
      std::size_t prev = 0;
      for (int s = 0; s < 200 && !m.terminal(); ++s) {
        p.yes = coin(rng);
        m.step(obs, p);
        monotone = monotone && (m.active_index() == prev || m.active_index() == prev + 1);
        prev = m.active_index();
      }
      monotone = monotone && m.terminal();
    }
    const suites::DirectionTally d = suites::direction_vs_geometry(4, 100);
    const bool ok = first_switch == 10 && forced == 25 && monotone && d.pairs == 100 && d.mismatches == 0;
    return Verdict{ok,
                   fmt("first switch at %.0f, forced at %.0f, monotone %.0f, direction mismatches %.0f/100", first_switch, forced, monotone,
                       d.mismatches),
                   5.0};
  });

  report(5, [] {
    const EpisodeSet& set = suite(kSuiteSeed);
    const RunConfig cfg;
    const auto def = run(set, cfg);
    default_jsonl = results_jsonl(def, cfg);
    const auto rnd = run(set, random_waypoints());
    const double sr = sr_of(def), base = sr_of(rnd);
    return Verdict{sr >= kMinSr && sr - base >= kMinMargin,
                   fmt("SR %.3f (min %.2f), random-waypoint SR %.3f, margin %.3f (min 0.30)", sr, kMinSr, base, sr - base), 300.0};
  });

  report(6, [] {
    double def = 0, fin = 0, none = 0;
    for (std::uint64_t seed : kAblationSeeds) {
      const EpisodeSet& set = suite(seed);
      def += sr_of(run(set, RunConfig{}));
      fin += sr_of(run(set, final_only()));
      none += sr_of(run(set, no_update()));
    }
    const double n = static_cast<double>(kAblationSeeds.size());
    def /= n;
    fin /= n;
    none /= n;
    return Verdict{def > fin && def > none, fmt("mean SR over seeds 1-3: default %.3f, final-only %.3f, reset-on-switch %.3f", def, fin, none),
                   0.0};
  });

  report(7, [] {
    // Hand cases.
    bool hand = navigation_error({0, 0}, {0, 0}) == 0.0 && is_success(2.9) && !is_success(3.0) && spl(true, 4, 4) == 1.0 &&
                spl(true, 4, 8) == 0.5 && spl(false, 4, 4) == 0.0;
    const std::vector<Point2> graze = {{0, 0}, {7.5, 0}, {0, 0}};
    const MetricBundle g = compute_metrics(graze, graze, {10, 0}, 10.0, true);
    hand = hand && g.osr && !g.sr && !oracle_success({{0, 0}}, {10, 0});
    const std::vector<Point2> path = {{0, 0}, {1, 0}, {2, 0}};
    const MetricBundle same = compute_metrics(path, path, {2, 0}, 2.0, true);
    hand = hand && same.ndtw == 1.0 && same.sdtw == same.ndtw;
    const suites::NdtwTally nd = suites::ndtw_vs_exhaustive(7, 20);
    std::size_t broken = 0;
    for (const auto& r : all_results)
      if (!r.metrics.invariants_hold()) ++broken;
    const bool ok = hand && nd.pairs == 20 && nd.max_error <= kNdtwTol && broken == 0 && !all_results.empty();
    return Verdict{ok,
                   std::string(hand ? "hand cases ok" : "hand cases BROKEN") +
                       fmt("; nDTW max error %.2e over 20 pairs; invariant violations %.0f of %.0f results", nd.max_error,
                           static_cast<double>(broken), static_cast<double>(all_results.size())),
                   0.0};
  });

  report(8, [] {
    const RunConfig cfg;
    const std::string again = results_jsonl(run_batch(suite(kSuiteSeed), cfg, oracle_factory()), cfg);
    const bool same = !default_jsonl.empty() && again == default_jsonl;
    return Verdict{same, fmt("%.0f bytes, byte-identical %.0f", static_cast<double>(again.size()), same), 0.0};
  });

  return failures;
}
