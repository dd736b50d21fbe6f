#pragma once

// Perception over HTTP with a request-hash keyed fixture cache.
//
// Wire protocol: POST /similarity, /detect, /vqa, /segment, /decompose with a
// JSON body; every request carries "query_id" (the hex request hash) and the
// reply must echo it. Fixtures are JSONL, one {key, endpoint, request,
// response} object per line.
//
// Record mode answers from the cache when it can and otherwise asks the
// server (endpoint from CANAV_REMOTE_ENDPOINT) and appends the exchange.
// Replay mode never touches the network; a miss is a FixtureError.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "canav/errors.hpp"
#include "canav/perception.hpp"
#include "httplib.h"
#include "json.hpp"

namespace canav {

inline constexpr const char* kRemoteEndpointEnv = "CANAV_REMOTE_ENDPOINT";

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

/// Key of one exchange: FNV-1a over endpoint and the request body dumped
/// without its query_id (nlohmann dumps object keys sorted).
inline std::string fixture_key(std::string_view endpoint, nlohmann::json request) {
  request.erase("query_id");
  return hex64(fnv1a64(std::string(endpoint) + "\n" + request.dump()));
}

/// JSONL fixture store shared by all episodes of a run.
class FixtureCache {
 public:
  explicit FixtureCache(std::string path) : path_(std::move(path)) {
    std::ifstream in(path_);
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
      ++n;
      if (line.empty()) continue;
      try {
        const auto j = nlohmann::json::parse(line);
        entries_[j.at("key").get<std::string>()] = j.at("response");
      } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path_ + ":" + std::to_string(n) + ": bad fixture line: " + e.what());
      }
    }
  }

  std::optional<nlohmann::json> find(const std::string& key) const {
    std::lock_guard lock(mu_);
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

  void append(const std::string& key, std::string_view endpoint, const nlohmann::json& request, const nlohmann::json& response) {
    std::lock_guard lock(mu_);
    if (!entries_.emplace(key, response).second) return;
    std::ofstream out(path_, std::ios::app);
    if (!out) throw ConfigError("cannot append to fixture file " + path_);
    out << nlohmann::json{{"key", key}, {"endpoint", endpoint}, {"request", request}, {"response", response}}.dump() << '\n';
  }

  std::size_t size() const {
    std::lock_guard lock(mu_);
    return entries_.size();
  }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  mutable std::mutex mu_;
  std::map<std::string, nlohmann::json> entries_;
};

/// Transport hook; the default posts with cpp-httplib. Tests swap in a fake.
using PostFn = std::function<nlohmann::json(std::string_view endpoint, const nlohmann::json& body)>;

inline PostFn http_post(std::string base_url, int timeout_s = 30) {
  return [base = std::move(base_url), timeout_s](std::string_view endpoint, const nlohmann::json& body) {
    httplib::Client client(base);
    client.set_connection_timeout(timeout_s);
    client.set_read_timeout(timeout_s);
    const auto res = client.Post(std::string(endpoint), body.dump(), "application/json");
    if (!res) throw TransportError("POST " + std::string(endpoint) + " to " + base + " failed: " + httplib::to_string(res.error()));
    if (res->status != 200) throw TransportError("POST " + std::string(endpoint) + " returned HTTP " + std::to_string(res->status));
    try {
      return nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception&) {
      throw TransportError("POST " + std::string(endpoint) + " returned a non-JSON body");
    }
  };
}

/// Endpoint from the environment, or a poster that fails on first use.
inline PostFn env_post() {
  if (const char* url = std::getenv(kRemoteEndpointEnv); url && *url) return http_post(url);
  return [](std::string_view endpoint, const nlohmann::json&) -> nlohmann::json {
    throw TransportError(std::string("no remote endpoint for ") + std::string(endpoint) + " (set " + kRemoteEndpointEnv + ")");
  };
}

/// Four-part decomposition prompt: task, output format, examples, reminder.
inline std::string decomposition_prompt(std::string_view instruction) {
  std::string p;
  p += "Task: split the navigation instruction into an ordered list of sub-instructions. Give each one the constraints "
       "that tell when it is done.\n";
  p += "Output: JSON {\"sub_instructions\": [{\"text\": str, \"constraints\": [{\"type\": \"object\"|\"location\", "
       "\"argument\": str} | {\"type\": \"direction\", \"direction\": \"left\"|\"right\"}]}]}\n";
  p += "Example: \"Turn left to the living room.\" -> {\"sub_instructions\": [{\"text\": \"Turn left to the living room.\", "
       "\"constraints\": [{\"type\": \"direction\", \"direction\": \"left\"}, {\"type\": \"location\", \"argument\": \"living room\"}]}]}\n";
  p += "Example: \"Go to the door.\" -> {\"sub_instructions\": [{\"text\": \"Go to the door.\", \"constraints\": "
       "[{\"type\": \"object\", \"argument\": \"door\"}]}]}\n";
  p += "Remember: keep the order of the instruction, use only the three constraint types, and end with the goal object.\n";
  p += "Instruction: ";
  p += instruction;
  return p;
}

enum class FixtureMode { Record, Replay };

class RemotePerception : public Perception {
 public:
  RemotePerception(std::shared_ptr<FixtureCache> cache, FixtureMode mode, PostFn post = {})
      : cache_(std::move(cache)), mode_(mode), post_(post ? std::move(post) : env_post()) {
    if (!cache_) throw PreconditionError("remote perception needs a fixture cache");
  }

  /// Decomposition authored with the episode; replay falls back to it when
  /// no recorded reply exists.
  void add_decomposition(std::string instruction, DecompositionResult result) {
    result.validate();
    authored_[std::move(instruction)] = std::move(result);
  }

  double similarity_score(const SimilarityQuery& q) override {
    q.validate();
    const auto r = call("/similarity", {{"prompt", q.prompt}, {"observation", observation_summary(*q.observation)}});
    try {
      const double s = r.at("score").get<double>();
      return std::isnan(s) ? 0.0 : std::clamp(s, 0.0, 1.0);
    } catch (const nlohmann::json::exception&) {
      throw TransportError("/similarity reply lacks a numeric score");
    }
  }

  std::vector<Detection> detect_objects(const Observation& obs, std::string_view label) override {
    const auto r = call("/detect", {{"label", label}, {"observation", observation_summary(obs)}});
    try {
      auto out = r.at("detections").get<std::vector<Detection>>();
      std::stable_sort(out.begin(), out.end(), [](const Detection& a, const Detection& b) { return a.distance < b.distance; });
      return out;
    } catch (const nlohmann::json::exception&) {
      throw TransportError("/detect reply lacks a detections list");
    } catch (const PreconditionError& e) {
      throw TransportError(std::string("/detect reply: ") + e.what());
    }
  }

  bool location_query(const Observation& obs, std::string_view location) override {
    const auto r = call("/vqa", {{"question", location_question(location)}, {"observation", observation_summary(obs)}});
    const auto& a = r.contains("answer") ? r.at("answer") : nlohmann::json();
    if (a.is_boolean()) return a.get<bool>();
    if (a.is_string()) {
      std::string s = a.get<std::string>();
      for (auto& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
      return s.rfind("yes", 0) == 0;
    }
    throw TransportError("/vqa reply lacks an answer");
  }

  CellMask segment_target(const Observation& obs, std::string_view label) override {
    const auto r = call("/segment", {{"label", label}, {"observation", observation_summary(obs)}});
    CellMask out(obs.spec(), 0);
    try {
      for (const auto& c : r.at("cells")) {
        const Cell cell{c.at(0).get<int>(), c.at(1).get<int>()};
        if (obs.spec().contains(cell) && obs.mask()[cell]) out[cell] = 1;  // only what is actually in view
      }
    } catch (const nlohmann::json::exception&) {
      throw TransportError("/segment reply lacks a cells list");
    }
    return out;
  }

  DecompositionResult decompose_instruction(std::string_view instruction) override {
    if (instruction.empty()) throw PreconditionError("instruction must be non-empty");
    const nlohmann::json body{{"instruction", instruction}, {"prompt", decomposition_prompt(instruction)}};
    if (mode_ == FixtureMode::Replay && !cache_->find(fixture_key("/decompose", body)))
      if (auto it = authored_.find(std::string(instruction)); it != authored_.end()) return it->second;
    const auto r = call("/decompose", body);
    try {
      const nlohmann::json& reply = r.contains("reply") && r.at("reply").is_string() ? nlohmann::json::parse(r.at("reply").get<std::string>()) : r;
      return reply.get<DecompositionResult>();
    } catch (const std::exception& e) {
      throw DecompositionError(std::string("unparseable decomposition: ") + e.what(), r.dump());
    }
  }

  FixtureMode mode() const { return mode_; }

 private:
  nlohmann::json call(std::string_view endpoint, nlohmann::json body) {
    const std::string key = fixture_key(endpoint, body);
    if (auto hit = cache_->find(key)) return *hit;
    if (mode_ == FixtureMode::Replay)
      throw FixtureError("no fixture for " + std::string(endpoint) + " request " + key + " in " + cache_->path());
    body["query_id"] = key;
    nlohmann::json reply = post_(endpoint, body);
    if (!reply.is_object() || reply.value("query_id", std::string{}) != key)
      throw TransportError(std::string(endpoint) + " reply does not echo query_id " + key);
    reply.erase("query_id");
    body.erase("query_id");
    cache_->append(key, endpoint, body, reply);
    return reply;
  }

  std::shared_ptr<FixtureCache> cache_;
  FixtureMode mode_;
  PostFn post_;
  std::map<std::string, DecompositionResult> authored_;
};

}  // namespace canav
