#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace fs = std::filesystem;

namespace {

fs::path work_dir() {
  static const fs::path p = [] {
    const fs::path d = fs::temp_directory_path() / ("canav_cli_" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return p;
}

int run(const std::string& args) {
  const std::string cmd = std::string(CANAV_CLI) + " " + args + " >" + (work_dir() / "stdout").string() + " 2>" +
                          (work_dir() / "stderr").string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string path(const std::string& name) { return (work_dir() / name).string(); }

}  // namespace

TEST(Cli, DryRunPrintsResolvedConfig) {
  ASSERT_EQ(run("run --dry-run --strategy orp --gamma 0.25 --min-steps 5"), 0);
  const auto cfg = nlohmann::json::parse(slurp(work_dir() / "stdout"));
  EXPECT_EQ(cfg.at("strategy"), "orp");
  EXPECT_EQ(cfg.at("value_map").at("gamma"), 0.25);
  EXPECT_EQ(cfg.at("csm").at("min_steps"), 5);
}

TEST(Cli, ConfigErrorsExitTwo) {
  EXPECT_EQ(run("run --dry-run --strategy best"), 2);
  EXPECT_EQ(run("run --dry-run --min-steps 40"), 2);
  EXPECT_EQ(run("run --no-such-flag"), 2);
  EXPECT_EQ(run("run --count 1 --episodes /nonexistent.json"), 2);
  EXPECT_EQ(run("ablate --axis colour --count 0"), 2);
  EXPECT_EQ(run(""), 2);
}

TEST(Cli, ReplayWithoutFixturesExitsThree) {
  EXPECT_EQ(run("run --count 1 --backend replay --fixtures " + path("missing.jsonl")), 3);
}

TEST(Cli, RemoteWithoutEndpointExitsFour) {
  fs::remove(path("rec.jsonl"));
  EXPECT_EQ(run("run --count 1 --backend remote --fixtures " + path("rec.jsonl")), 4);
}

TEST(Cli, GenerateIsByteStable) {
  ASSERT_EQ(run("generate --count 2 --seed 4 --out " + path("a.json")), 0);
  ASSERT_EQ(run("generate --count 2 --seed 4 --out " + path("b.json")), 0);
  EXPECT_EQ(slurp(path("a.json")), slurp(path("b.json")));
  ASSERT_EQ(run("generate --count 0 --out " + path("empty.json")), 0);
  EXPECT_TRUE(nlohmann::json::parse(slurp(path("empty.json"))).at("episodes").empty());
  EXPECT_EQ(run("generate --count 1 --template castle --out " + path("c.json")), 2);
}

TEST(Cli, RunWritesResultsAndRepeatsFromThem) {
  ASSERT_EQ(run("generate --count 1 --seed 4 --out " + path("one.json")), 0);
  ASSERT_EQ(run("run --episodes " + path("one.json") + " --out " + path("r1.jsonl") + " --report " + path("rep.json") +
                " --snapshots " + path("snaps") + " --snapshot-every 50"),
            0);
  const std::string r1 = slurp(path("r1.jsonl"));
  ASSERT_FALSE(r1.empty());
  const auto line = nlohmann::json::parse(r1.substr(0, r1.find('\n')));
  EXPECT_EQ(line.at("episode"), "ep0000");
  EXPECT_TRUE(nlohmann::json::parse(slurp(path("rep.json"))).contains("summary"));
  EXPECT_TRUE(fs::exists(work_dir() / "snaps" / "ep0000" / "step_000000.json"));
  ASSERT_EQ(run("run --config " + path("r1.jsonl") + " --out " + path("r2.jsonl")), 0);
  EXPECT_EQ(slurp(path("r2.jsonl")), r1);
}

TEST(Cli, AblateWritesTable) {
  ASSERT_EQ(run("generate --count 1 --seed 4 --out " + path("abl.json")), 0);
  ASSERT_EQ(run("ablate --axis update --episodes " + path("abl.json") + " --out " + path("abl_out.json")), 0);
  EXPECT_NE(slurp(work_dir() / "stdout").find("historical decay"), std::string::npos);
  EXPECT_EQ(nlohmann::json::parse(slurp(path("abl_out.json"))).at("rows").size(), 4u);
}
