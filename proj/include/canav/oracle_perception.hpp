#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <string>

#include "canav/errors.hpp"
#include "canav/perception.hpp"
#include "canav/world.hpp"

namespace canav {

/// Ground-truth perception over a GridWorld.
///
/// Similarity: for each comma-separated prompt term, a visible landmark or
/// region carrying that label at distance d scores 1 - d / (2 * max_range);
/// the query scores the best term, or 0 when nothing matches.
/// Segmentation returns the visible footprint of the nearest visible
/// instance of the label (falling back to a region of that name).
/// Decompositions are the ground truth registered with add_decomposition().
class OraclePerception : public Perception {
 public:
  explicit OraclePerception(std::shared_ptr<const GridWorld> world) : world_(std::move(world)) {
    if (!world_) throw PreconditionError("oracle perception needs a world");
  }

  void add_decomposition(std::string instruction, DecompositionResult result) {
    result.validate();
    decompositions_[std::move(instruction)] = std::move(result);
  }

  double similarity_score(const SimilarityQuery& q) override {
    q.validate();
    const Observation& obs = *q.observation;
    const double range = obs.frustum.max_range;
    double best = 0.0;
    for (const auto& term : prompt_terms(q.prompt)) {
      for (const auto& l : obs.landmarks) {
        if (l.label == term) {
          best = std::max(best, score_for(l.distance, range));
          break;  // sorted by distance
        }
      }
      for (const auto& r : obs.regions) {
        if (r.label == term) {
          best = std::max(best, score_for(r.distance, range));
          break;
        }
      }
    }
    return std::clamp(best, 0.0, 1.0);
  }

  std::vector<Detection> detect_objects(const Observation& obs, std::string_view label) override {
    std::vector<Detection> out;
    for (const auto& l : obs.landmarks)
      if (l.label == label) out.push_back({l.label, l.distance, l.bearing});
    return out;
  }

  bool location_query(const Observation& obs, std::string_view location) override {
    return std::any_of(obs.regions.begin(), obs.regions.end(), [&](const SeenRegion& r) { return r.label == location; });
  }

  CellMask segment_target(const Observation& obs, std::string_view label) override {
    CellMask out(obs.spec(), 0);
    const CellMask& vis = obs.mask();
    for (const auto& l : obs.landmarks) {
      if (l.label != label) continue;
      for (const Cell& c : world_->landmarks[l.index].cells)
        if (vis[c]) out[c] = 1;
      return out;
    }
    for (const auto& r : obs.regions) {
      if (r.label != label) continue;
      for (const Cell& c : world_->regions[r.index].cells)
        if (vis[c]) out[c] = 1;
      return out;
    }
    return out;
  }

  DecompositionResult decompose_instruction(std::string_view instruction) override {
    if (instruction.empty()) throw PreconditionError("instruction must be non-empty");
    auto it = decompositions_.find(std::string(instruction));
    if (it == decompositions_.end()) throw FixtureError("no ground-truth decomposition for instruction");
    return it->second;
  }

  static double score_for(double distance, double max_range) { return 1.0 - distance / (2.0 * max_range); }

 private:
  std::shared_ptr<const GridWorld> world_;
  std::map<std::string, DecompositionResult> decompositions_;
};

}  // namespace canav
