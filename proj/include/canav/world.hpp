#pragma once

// Synthetic gridworld ground truth: walls, labeled landmarks and rooms.

#include <algorithm>
#include <string>
#include <vector>

#include "canav/errors.hpp"
#include "canav/grid.hpp"
#include "json.hpp"

namespace canav {

struct Rect {
  int row = 0;
  int col = 0;
  int rows = 1;
  int cols = 1;
  bool contains(Cell c) const { return c.row >= row && c.row < row + rows && c.col >= col && c.col < col + cols; }
  bool operator==(const Rect&) const = default;
};

/// A labeled cell set described as a union of rectangles.
struct LabeledArea {
  std::string label;
  std::vector<Rect> rects;
  std::vector<Cell> cells;  // expanded from rects, row-major, unique

  void expand() {
    cells.clear();
    for (const Rect& r : rects)
      for (int i = 0; i < r.rows; ++i)
        for (int j = 0; j < r.cols; ++j) cells.push_back({r.row + i, r.col + j});
    std::sort(cells.begin(), cells.end());
    cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
  }

  Point2 centroid(const GridSpec& spec) const {
    Point2 acc;
    for (const Cell& c : cells) {
      const Point2 p = cell_center(c, spec);
      acc.x += p.x;
      acc.y += p.y;
    }
    const double n = static_cast<double>(std::max<std::size_t>(cells.size(), 1));
    return {acc.x / n, acc.y / n};
  }
};

using Landmark = LabeledArea;
using Region = LabeledArea;

class GridWorld {
 public:
  std::string id;
  GridSpec spec;
  CellMask occupancy;  // walls
  std::vector<Landmark> landmarks;
  std::vector<Region> regions;

  // Derived by finalize().
  CellMask solid;      // walls plus landmark footprints
  CellMask navigable;  // complement of solid
  Grid<int> landmark_at;
  Grid<int> region_at;

  /// Validates the world and builds the derived layers. Call after editing
  /// any of the public ground-truth members.
  void finalize() {
    spec.validate();
    if (!occupancy.same_shape(spec)) throw PreconditionError("world occupancy shape mismatch");
    solid = occupancy;
    landmark_at = Grid<int>(spec, -1);
    region_at = Grid<int>(spec, -1);
    for (std::size_t i = 0; i < landmarks.size(); ++i) {
      auto& lm = landmarks[i];
      if (lm.label.empty()) throw PreconditionError("landmark label must be non-empty");
      lm.expand();
      if (lm.cells.empty()) throw PreconditionError("landmark '" + lm.label + "' has no cells");
      for (const Cell& c : lm.cells) {
        if (!spec.contains(c)) throw BoundsError("landmark '" + lm.label + "' extends outside the grid");
        solid[c] = 1;
        landmark_at[c] = static_cast<int>(i);
      }
    }
    for (std::size_t i = 0; i < regions.size(); ++i) {
      auto& rg = regions[i];
      if (rg.label.empty()) throw PreconditionError("region label must be non-empty");
      rg.expand();
      for (const Cell& c : rg.cells) {
        if (!spec.contains(c)) throw BoundsError("region '" + rg.label + "' extends outside the grid");
        if (region_at[c] < 0) region_at[c] = static_cast<int>(i);
      }
    }
    navigable = CellMask(spec, 0);
    for (std::size_t i = 0; i < solid.size(); ++i) navigable.flat(i) = solid.flat(i) ? 0 : 1;
  }

  bool is_navigable(Cell c) const { return spec.contains(c) && navigable[c] != 0; }

  std::vector<std::size_t> landmarks_labeled(std::string_view label) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < landmarks.size(); ++i)
      if (landmarks[i].label == label) out.push_back(i);
    return out;
  }
  std::vector<std::size_t> regions_labeled(std::string_view label) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < regions.size(); ++i)
      if (regions[i].label == label) out.push_back(i);
    return out;
  }
};

// JSON ----------------------------------------------------------------------

inline void to_json(nlohmann::json& j, const Rect& r) { j = nlohmann::json::array({r.row, r.col, r.rows, r.cols}); }
inline void from_json(const nlohmann::json& j, Rect& r) {
  if (!j.is_array() || j.size() != 4) throw PreconditionError("rect must be [row, col, rows, cols]");
  r = {j[0].get<int>(), j[1].get<int>(), j[2].get<int>(), j[3].get<int>()};
  if (r.rows < 1 || r.cols < 1) throw PreconditionError("rect extents must be >= 1");
}

inline void to_json(nlohmann::json& j, const LabeledArea& a) { j = nlohmann::json{{"label", a.label}, {"rects", a.rects}}; }
inline void from_json(const nlohmann::json& j, LabeledArea& a) {
  a = LabeledArea{};
  a.label = j.at("label").get<std::string>();
  if (j.contains("rects")) a.rects = j.at("rects").get<std::vector<Rect>>();
  if (j.contains("cells"))
    for (const auto& c : j.at("cells")) a.rects.push_back({c.at(0).get<int>(), c.at(1).get<int>(), 1, 1});
}

inline void to_json(nlohmann::json& j, const GridWorld& w) {
  std::vector<std::string> rows;
  rows.reserve(static_cast<std::size_t>(w.spec.height));
  for (int r = 0; r < w.spec.height; ++r) {
    std::string line(static_cast<std::size_t>(w.spec.width), '.');
    for (int c = 0; c < w.spec.width; ++c)
      if (w.occupancy.at(r, c)) line[static_cast<std::size_t>(c)] = '#';
    rows.push_back(std::move(line));
  }
  j = nlohmann::json{{"id", w.id},
                     {"width", w.spec.width},
                     {"height", w.spec.height},
                     {"resolution", w.spec.resolution},
                     {"occupancy", rows},
                     {"landmarks", w.landmarks},
                     {"regions", w.regions}};
}

inline void from_json(const nlohmann::json& j, GridWorld& w) {
  w = GridWorld{};
  w.id = j.at("id").get<std::string>();
  w.spec = {j.at("width").get<int>(), j.at("height").get<int>(), j.value("resolution", 0.05)};
  w.spec.validate();
  w.occupancy = CellMask(w.spec, 0);
  const auto& rows = j.at("occupancy");
  if (!rows.is_array() || rows.size() != static_cast<std::size_t>(w.spec.height))
    throw PreconditionError("occupancy must have one string per grid row");
  for (int r = 0; r < w.spec.height; ++r) {
    const auto line = rows[static_cast<std::size_t>(r)].get<std::string>();
    if (line.size() != static_cast<std::size_t>(w.spec.width)) throw PreconditionError("occupancy row width mismatch");
    for (int c = 0; c < w.spec.width; ++c) w.occupancy.at(r, c) = line[static_cast<std::size_t>(c)] == '#' ? 1 : 0;
  }
  w.landmarks = j.value("landmarks", std::vector<Landmark>{});
  w.regions = j.value("regions", std::vector<Region>{});
  w.finalize();
}

}  // namespace canav
