#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <thread>

#include "canav/canav.hpp"

using namespace canav;
using nlohmann::json;

namespace {

std::shared_ptr<const GridWorld> small_world() {
  auto w = std::make_shared<GridWorld>();
  w->id = "w";
  w->spec = {100, 100, 0.05};
  w->occupancy = CellMask(w->spec, 0);
  for (int r = 0; r < 100; ++r) w->occupancy.at(r, 0) = 1;
  w->landmarks.push_back({"chair", {{48, 80, 4, 4}}, {}});
  w->landmarks.push_back({"lamp", {{10, 10, 2, 2}}, {}});  // behind the agent
  w->regions.push_back({"kitchen", {{0, 60, 100, 40}}, {}});
  w->regions.push_back({"bath", {{0, 1, 100, 10}}, {}});
  w->finalize();
  return w;
}

Observation look(const GridWorld& w) { return observe(w, Pose(1.0, 2.5, 0.0), Frustum{}); }

std::filesystem::path temp_file(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("canav_test_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove(p);
  return p;
}

}  // namespace

TEST(OraclePerception, SimilarityIsDistanceRamp) {
  auto w = small_world();
  OraclePerception p(w);
  const Observation obs = look(*w);
  // Independent nearest-visible-footprint distance.
  double d = 1e9;
  for (const Cell& c : w->landmarks[0].cells)
    if (obs.mask()[c]) d = std::min(d, distance(cell_center(c, w->spec), {1.0, 2.5}));
  ASSERT_LT(d, 5.0);
  EXPECT_NEAR(p.similarity_score({&obs, "chair"}), 1.0 - d / 10.0, 1e-12);
  EXPECT_DOUBLE_EQ(p.similarity_score({&obs, "lamp"}), 0.0);
  EXPECT_DOUBLE_EQ(p.similarity_score({&obs, "sofa"}), 0.0);
  // Multi-term prompt scores the best term.
  EXPECT_GE(p.similarity_score({&obs, "sofa, kitchen, chair"}), p.similarity_score({&obs, "chair"}));
  EXPECT_THROW(p.similarity_score({&obs, ""}), PreconditionError);
}

TEST(OraclePerception, DetectionsAndLocations) {
  auto w = small_world();
  OraclePerception p(w);
  const Observation obs = look(*w);
  const auto dets = p.detect_objects(obs, "chair");
  ASSERT_EQ(dets.size(), 1u);
  EXPECT_GT(dets[0].distance, 3.0);
  EXPECT_TRUE(p.detect_objects(obs, "lamp").empty());
  EXPECT_TRUE(p.location_query(obs, "kitchen"));
  EXPECT_FALSE(p.location_query(obs, "bath"));
  EXPECT_EQ(p.location_query(obs, "kitchen"), p.location_query(obs, "kitchen"));
}

TEST(OraclePerception, SegmentationStaysInsideView) {
  auto w = small_world();
  OraclePerception p(w);
  const Observation obs = look(*w);
  const CellMask m = p.segment_target(obs, "chair");
  EXPECT_GT(count_set(m), 0u);
  for (std::size_t i = 0; i < m.size(); ++i)
    if (m.flat(i)) {
      EXPECT_TRUE(obs.mask().flat(i));
      EXPECT_EQ(w->landmark_at.flat(i), 0);
    }
  EXPECT_EQ(count_set(p.segment_target(obs, "lamp")), 0u);
}

TEST(OraclePerception, DecompositionLookup) {
  auto w = small_world();
  OraclePerception p(w);
  DecompositionResult d{{SubInstruction("Stop at the chair.", {Constraint::object("chair")})}};
  p.add_decomposition("Stop at the chair.", d);
  EXPECT_EQ(p.decompose_instruction("Stop at the chair."), d);
  EXPECT_THROW(p.decompose_instruction("Go home."), FixtureError);
  EXPECT_THROW(p.decompose_instruction(""), PreconditionError);
}

TEST(CsmChecks, ObjectRangeBoundary) {
  struct Fixed : Perception {
    std::vector<Detection> dets;
    double similarity_score(const SimilarityQuery&) override { return 0; }
    std::vector<Detection> detect_objects(const Observation&, std::string_view) override { return dets; }
    bool location_query(const Observation&, std::string_view) override { return false; }
    CellMask segment_target(const Observation& o, std::string_view) override { return CellMask(o.spec(), 0); }
    DecompositionResult decompose_instruction(std::string_view) override { return {}; }
  } p;
  auto w = small_world();
  const Observation obs = look(*w);
  const Constraint c = Constraint::object("chair");
  p.dets = {{"chair", 4.9, 0}};
  EXPECT_TRUE(check_object(c, obs, p));
  p.dets = {{"chair", 5.1, 0}};
  EXPECT_FALSE(check_object(c, obs, p));
  p.dets = {};
  EXPECT_FALSE(check_object(c, obs, p));
}

// Remote backend ---------------------------------------------------------------

namespace {

struct FakeServer {
  int calls = 0;
  json decomposition = json::object();
  bool echo = true;
  PostFn post() {
    return [this](std::string_view endpoint, const json& body) {
      ++calls;
      json r;
      if (endpoint == "/similarity") r = {{"score", 1.7}};
      else if (endpoint == "/detect") r = {{"detections", json::array({{{"label", "chair"}, {"distance", 4.0}}, {{"label", "chair"}, {"distance", 2.0}}})}};
      else if (endpoint == "/vqa") r = {{"answer", "Yes, it is visible."}};
      else if (endpoint == "/segment") r = {{"cells", json::array({json::array({50, 82}), json::array({0, 0})})}};
      else if (endpoint == "/decompose") r = decomposition;
      if (echo) r["query_id"] = body.at("query_id");
      return r;
    };
  }
};

}  // namespace

TEST(RemotePerception, RecordsThenReplaysWithoutNetwork) {
  auto w = small_world();
  const Observation obs = look(*w);
  const auto path = temp_file("record");
  FakeServer server;
  {
    RemotePerception rec(std::make_shared<FixtureCache>(path.string()), FixtureMode::Record, server.post());
    EXPECT_DOUBLE_EQ(rec.similarity_score({&obs, "chair"}), 1.0);  // clamped
    const auto dets = rec.detect_objects(obs, "chair");
    ASSERT_EQ(dets.size(), 2u);
    EXPECT_DOUBLE_EQ(dets[0].distance, 2.0);
    EXPECT_TRUE(rec.location_query(obs, "kitchen"));
    const CellMask seg = rec.segment_target(obs, "chair");
    EXPECT_EQ(count_set(seg), obs.mask().at(50, 82) ? 1u : 0u);
    EXPECT_EQ(server.calls, 4);
    rec.similarity_score({&obs, "chair"});
    EXPECT_EQ(server.calls, 4);  // cache hit
  }
  RemotePerception replay(std::make_shared<FixtureCache>(path.string()), FixtureMode::Replay, [](std::string_view, const json&) -> json {
    ADD_FAILURE() << "replay must not post";
    return {};
  });
  EXPECT_DOUBLE_EQ(replay.similarity_score({&obs, "chair"}), 1.0);
  EXPECT_EQ(replay.detect_objects(obs, "chair").size(), 2u);
  EXPECT_THROW(replay.similarity_score({&obs, "sofa"}), FixtureError);
  std::filesystem::remove(path);
}

TEST(RemotePerception, ReplyMustEchoQueryId) {
  auto w = small_world();
  const Observation obs = look(*w);
  const auto path = temp_file("echo");
  FakeServer server;
  server.echo = false;
  RemotePerception rec(std::make_shared<FixtureCache>(path.string()), FixtureMode::Record, server.post());
  EXPECT_THROW(rec.similarity_score({&obs, "chair"}), TransportError);
  std::filesystem::remove(path);
}

TEST(RemotePerception, UnparseableDecompositionKeepsRawReply) {
  const auto path = temp_file("decomp");
  FakeServer server;
  server.decomposition = {{"reply", "I think you should walk somewhere"}};
  RemotePerception rec(std::make_shared<FixtureCache>(path.string()), FixtureMode::Record, server.post());
  try {
    rec.decompose_instruction("Go to the chair.");
    FAIL() << "expected DecompositionError";
  } catch (const DecompositionError& e) {
    EXPECT_NE(e.raw_reply().find("walk somewhere"), std::string::npos);
  }
  std::filesystem::remove(path);
}

TEST(RemotePerception, DecompositionFromStringReply) {
  const auto path = temp_file("decomp_ok");
  FakeServer server;
  const DecompositionResult d{{SubInstruction("Go to the chair.", {Constraint::object("chair")})}};
  server.decomposition = {{"reply", json(d).dump()}};
  RemotePerception rec(std::make_shared<FixtureCache>(path.string()), FixtureMode::Record, server.post());
  EXPECT_EQ(rec.decompose_instruction("Go to the chair."), d);
  std::filesystem::remove(path);
}

TEST(RemotePerception, ReplayFallsBackToAuthoredDecomposition) {
  const auto path = temp_file("authored");
  { std::ofstream touch(path); }
  RemotePerception rep(std::make_shared<FixtureCache>(path.string()), FixtureMode::Replay, FakeServer{}.post());
  const DecompositionResult d{{SubInstruction("Go to the chair.", {Constraint::object("chair")})}};
  rep.add_decomposition("Go to the chair.", d);
  EXPECT_EQ(rep.decompose_instruction("Go to the chair."), d);
  EXPECT_THROW(rep.decompose_instruction("Go to the lamp."), FixtureError);
  std::filesystem::remove(path);
}

TEST(RemotePerception, KeyIgnoresQueryIdAndIsOrderFree) {
  const json a = {{"b", 1}, {"a", 2}};
  json b = {{"a", 2}, {"b", 1}, {"query_id", "x"}};
  EXPECT_EQ(fixture_key("/x", a), fixture_key("/x", b));
  EXPECT_NE(fixture_key("/x", a), fixture_key("/y", a));
}

TEST(RemotePerception, ConcurrentAppendsStayWholeLines) {
  const auto path = temp_file("concurrent");
  auto cache = std::make_shared<FixtureCache>(path.string());
  std::vector<std::thread> pool;
  for (int t = 0; t < 4; ++t)
    pool.emplace_back([&, t] {
      for (int i = 0; i < 50; ++i) {
        const json req = {{"t", t}, {"i", i}};
        cache->append(fixture_key("/similarity", req), "/similarity", req, {{"score", 0.5}});
      }
    });
  for (auto& th : pool) th.join();
  EXPECT_EQ(cache->size(), 200u);
  FixtureCache reread(path.string());
  EXPECT_EQ(reread.size(), 200u);
  std::filesystem::remove(path);
}

TEST(RemotePerception, BadFixtureLineIsConfigError) {
  const auto path = temp_file("bad");
  {
    std::ofstream out(path);
    out << "{not json\n";
  }
  EXPECT_THROW(FixtureCache(path.string()), ConfigError);
  std::filesystem::remove(path);
}

TEST(RemotePerception, PromptHasFourParts) {
  const std::string p = decomposition_prompt("Go to the chair.");
  for (const char* part : {"Task:", "Output:", "Example:", "Remember:"}) EXPECT_NE(p.find(part), std::string::npos) << part;
  EXPECT_NE(p.find("Go to the chair."), std::string::npos);
}
