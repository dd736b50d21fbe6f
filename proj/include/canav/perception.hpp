#pragma once

// Perception capabilities consumed by the navigator. Backends: an oracle over
// gridworld ground truth (oracle_perception.hpp) and a remote client with a
// record/replay fixture cache (remote_perception.hpp).

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "canav/errors.hpp"
#include "canav/grid.hpp"
#include "canav/instruction.hpp"
#include "json.hpp"

namespace canav {

struct SeenLandmark {
  std::size_t index = 0;
  std::string label;
  double distance = 0.0;  // meters to the nearest visible footprint cell
  double bearing = 0.0;   // signed, radians, left positive
};

struct SeenRegion {
  std::size_t index = 0;
  std::string label;
  double distance = 0.0;  // meters to the nearest visible region cell
};

/// Observation handle: what the agent can see from one pose.
struct Observation {
  Pose pose;
  Frustum frustum;
  std::shared_ptr<const CellMask> visible;
  std::vector<SeenLandmark> landmarks;  // sorted by distance, then index
  std::vector<SeenRegion> regions;      // sorted by distance, then index

  const CellMask& mask() const { return *visible; }
  const GridSpec& spec() const { return visible->spec(); }
};

struct SimilarityQuery {
  const Observation* observation = nullptr;
  std::string prompt;

  void validate() const {
    if (observation == nullptr || !observation->visible) throw PreconditionError("similarity query needs an observation");
    if (prompt.empty()) throw PreconditionError("similarity prompt must be non-empty");
  }
};

struct Detection {
  std::string label;
  double distance = 0.0;
  double bearing = 0.0;
  bool operator==(const Detection&) const = default;
};

class Perception {
 public:
  virtual ~Perception() = default;

  /// Relevance of the observation to the prompt, in [0, 1].
  virtual double similarity_score(const SimilarityQuery& q) = 0;
  virtual std::vector<Detection> detect_objects(const Observation& obs, std::string_view label) = 0;
  virtual bool location_query(const Observation& obs, std::string_view location) = 0;
  virtual CellMask segment_target(const Observation& obs, std::string_view label) = 0;
  virtual DecompositionResult decompose_instruction(std::string_view instruction) = 0;
};

inline std::string location_question(std::string_view location) {
  return "Can you see the " + std::string(location) + "?";
}

// JSON summaries used on the wire ------------------------------------------

inline void to_json(nlohmann::json& j, const Detection& d) {
  j = nlohmann::json{{"label", d.label}, {"distance", d.distance}, {"bearing", d.bearing}};
}
inline void from_json(const nlohmann::json& j, Detection& d) {
  d.label = j.at("label").get<std::string>();
  d.distance = j.at("distance").get<double>();
  d.bearing = j.value("bearing", 0.0);
  if (d.distance < 0.0) throw PreconditionError("detection distance must be >= 0");
}

inline nlohmann::json observation_summary(const Observation& obs) {
  nlohmann::json lms = nlohmann::json::array();
  for (const auto& l : obs.landmarks) lms.push_back({{"label", l.label}, {"distance", l.distance}, {"bearing", l.bearing}});
  nlohmann::json rgs = nlohmann::json::array();
  for (const auto& r : obs.regions) rgs.push_back({{"label", r.label}, {"distance", r.distance}});
  return {{"pose", {{"x", obs.pose.x()}, {"y", obs.pose.y()}, {"heading", obs.pose.heading()}}},
          {"hfov", obs.frustum.hfov},
          {"max_range", obs.frustum.max_range},
          {"landmarks", lms},
          {"regions", rgs}};
}

}  // namespace canav
