#pragma once

// Procedural floorplans with labeled rooms and objects, plus episodes whose
// ground-truth decomposition walks a chain of rooms to a target object.
//
// Every random draw goes through Rng below (64-bit Mersenne twister with
// modulo reduction) so output is identical across standard libraries.

#include <algorithm>
#include <array>
#include <cstdio>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <queue>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "canav/errors.hpp"
#include "canav/grid.hpp"
#include "canav/instruction.hpp"
#include "canav/simulator.hpp"
#include "canav/world.hpp"

namespace canav {

enum class WorldTemplate { Rooms, Corridor, Maze };

inline std::string_view to_string(WorldTemplate t) {
  switch (t) {
    case WorldTemplate::Rooms: return "rooms";
    case WorldTemplate::Corridor: return "corridor";
    case WorldTemplate::Maze: return "maze";
  }
  return "rooms";
}

inline WorldTemplate parse_template(std::string_view s) {
  if (s == "rooms") return WorldTemplate::Rooms;
  if (s == "corridor") return WorldTemplate::Corridor;
  if (s == "maze") return WorldTemplate::Maze;
  throw ConfigError("unknown template '" + std::string(s) + "' (expected corridor|rooms|maze)");
}

struct WorldSize {
  int room_cells = 64;   // interior side of one room
  int wall_cells = 2;
  int door_cells = 24;
  int object_cells = 8;  // object footprint side
};

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  std::uint64_t next() { return engine_(); }
  /// Uniform-ish integer in [lo, hi] (modulo bias is irrelevant here).
  int range(int lo, int hi) {
    if (hi < lo) throw PreconditionError("empty random range");
    return lo + static_cast<int>(next() % static_cast<std::uint64_t>(hi - lo + 1));
  }
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[static_cast<std::size_t>(next() % i)]);
  }

 private:
  std::mt19937_64 engine_;
};

/// splitmix64 finalizer; derives independent sub-seeds.
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9E3779B97F4A7C15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace gen {

inline const std::vector<std::string>& room_names() {
  static const std::vector<std::string> names = {"kitchen", "bedroom",  "living room", "bathroom", "office",  "dining room",
                                                  "laundry room", "study", "nursery",  "garage",   "pantry",  "library",
                                                  "gym",     "den"};
  return names;
}

inline const std::vector<std::string>& object_names() {
  static const std::vector<std::string> names = {
      "chair",   "table",   "sofa",     "bed",     "lamp",     "plant",    "desk",     "bookshelf", "television", "sink",
      "piano",   "cabinet", "fridge",   "oven",    "toilet",   "bathtub",  "dresser",  "armchair",  "mirror",     "fireplace",
      "washer",  "painting", "ottoman", "bench",   "wardrobe", "stool",    "vase",     "clock",     "guitar",     "aquarium",
      "treadmill", "globe"};
  return names;
}

struct RoomSlot {
  int row = 0;  // grid position (corridor: 0 top, 2 bottom)
  int col = 0;
  Rect rect;
  std::string label;
};

struct Layout {
  GridSpec spec;
  CellMask walls;
  std::vector<RoomSlot> rooms;
  std::vector<Region> extra_regions;          // hallway for the corridor template
  std::vector<std::vector<int>> adjacency;    // room graph used for route selection
  std::vector<Rect> door_zones;               // cells objects must keep clear of
};

inline void carve(CellMask& walls, const Rect& r) {
  for (int i = 0; i < r.rows; ++i)
    for (int j = 0; j < r.cols; ++j) walls.at(r.row + i, r.col + j) = 0;
}

inline void paint(CellMask& mask, const Rect& r) {
  for (int i = 0; i < r.rows; ++i)
    for (int j = 0; j < r.cols; ++j) mask.at(r.row + i, r.col + j) = 1;
}

inline Rect grow(const Rect& r, int by) { return {r.row - by, r.col - by, r.rows + 2 * by, r.cols + 2 * by}; }

inline bool overlaps(const Rect& a, const Rect& b) {
  return a.row < b.row + b.rows && b.row < a.row + a.rows && a.col < b.col + b.cols && b.col < a.col + a.cols;
}

// Door through the wall between two grid-adjacent rooms.
inline Rect door_between(const Rect& a, const Rect& b, const WorldSize& sz, Rng& rng) {
  const int margin = 8;
  if (a.row == b.row) {  // side by side
    const Rect& left = a.col < b.col ? a : b;
    const int r0 = rng.range(left.row + margin, left.row + left.rows - margin - sz.door_cells);
    return {r0, left.col + left.cols, sz.door_cells, sz.wall_cells};
  }
  const Rect& top = a.row < b.row ? a : b;
  const int c0 = rng.range(top.col + margin, top.col + top.cols - margin - sz.door_cells);
  return {top.row + top.rows, c0, sz.wall_cells, sz.door_cells};
}

inline Layout room_grid(int rows, int cols, bool extra_doors, const std::vector<std::pair<int, int>>& forced_edges, const WorldSize& sz,
                        Rng& rng) {
  Layout L;
  const int pitch = sz.room_cells + sz.wall_cells;
  L.spec = GridSpec{cols * pitch + sz.wall_cells, rows * pitch + sz.wall_cells, 0.05};
  L.walls = CellMask(L.spec, 1);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) {
      RoomSlot slot{i, j, Rect{sz.wall_cells + i * pitch, sz.wall_cells + j * pitch, sz.room_cells, sz.room_cells}, {}};
      carve(L.walls, slot.rect);
      L.rooms.push_back(slot);
    }
  const int n = rows * cols;
  L.adjacency.assign(static_cast<std::size_t>(n), {});

  // Candidate edges between grid neighbors.
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) {
      const int a = i * cols + j;
      if (j + 1 < cols) edges.emplace_back(a, a + 1);
      if (i + 1 < rows) edges.emplace_back(a, a + cols);
    }
  rng.shuffle(edges);

  std::vector<int> parent(static_cast<std::size_t>(n));
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) { return parent[static_cast<std::size_t>(x)] == x ? x : parent[static_cast<std::size_t>(x)] = find(parent[static_cast<std::size_t>(x)]); };
  std::set<std::pair<int, int>> doors;
  auto add = [&](int a, int b) {
    const auto key = std::minmax(a, b);
    if (!doors.insert(key).second) return;
    parent[static_cast<std::size_t>(find(a))] = find(b);
  };
  for (auto [a, b] : forced_edges) add(a, b);
  std::vector<std::pair<int, int>> spare;
  for (auto [a, b] : edges) {
    if (find(a) != find(b)) add(a, b);
    else if (!doors.count(std::minmax(a, b))) spare.emplace_back(a, b);
  }
  if (extra_doors) {
    const int extra = std::min<int>(2, static_cast<int>(spare.size()));
    for (int k = 0; k < extra; ++k) doors.insert(std::minmax(spare[static_cast<std::size_t>(k)].first, spare[static_cast<std::size_t>(k)].second));
  }
  for (auto [a, b] : doors) {
    const Rect d = door_between(L.rooms[static_cast<std::size_t>(a)].rect, L.rooms[static_cast<std::size_t>(b)].rect, sz, rng);
    carve(L.walls, d);
    L.door_zones.push_back(grow(d, 12));
    L.adjacency[static_cast<std::size_t>(a)].push_back(b);
    L.adjacency[static_cast<std::size_t>(b)].push_back(a);
  }
  for (auto& adj : L.adjacency) std::sort(adj.begin(), adj.end());
  return L;
}

// Top and bottom rows of rooms along a full-width hallway; every room opens
// onto the hallway, so any two rooms are adjacent for routing. Rooms are
// numbered row-major (top row first). For each forced pair, neighbors on the
// same side get a connecting door and facing rooms get aligned hallway doors.
inline Layout corridor(int cols, const std::vector<std::pair<int, int>>& forced_edges, const WorldSize& sz, Rng& rng) {
  Layout L;
  const int pitch = sz.room_cells + sz.wall_cells;
  const int hall = sz.room_cells / 2;
  L.spec = GridSpec{cols * pitch + sz.wall_cells, 2 * sz.room_cells + hall + 4 * sz.wall_cells, 0.05};
  L.walls = CellMask(L.spec, 1);
  const Rect hall_rect{sz.room_cells + 2 * sz.wall_cells, sz.wall_cells, hall, L.spec.width - 2 * sz.wall_cells};
  carve(L.walls, hall_rect);
  std::vector<int> door_col;
  for (int side = 0; side < 2; ++side)
    for (int j = 0; j < cols; ++j) {
      const int r0 = side == 0 ? sz.wall_cells : hall_rect.row + hall + sz.wall_cells;
      RoomSlot slot{side * 2, j, Rect{r0, sz.wall_cells + j * pitch, sz.room_cells, sz.room_cells}, {}};
      carve(L.walls, slot.rect);
      door_col.push_back(rng.range(slot.rect.col + 8, slot.rect.col + slot.rect.cols - 8 - sz.door_cells));
      L.rooms.push_back(slot);
    }
  for (auto [a, b] : forced_edges) {
    if (a / cols == b / cols) {
      const Rect d = door_between(L.rooms[static_cast<std::size_t>(a)].rect, L.rooms[static_cast<std::size_t>(b)].rect, sz, rng);
      carve(L.walls, d);
      L.door_zones.push_back(grow(d, 12));
    } else if (a % cols == b % cols) {
      door_col[static_cast<std::size_t>(std::max(a, b))] = door_col[static_cast<std::size_t>(std::min(a, b))];
    }
  }
  for (std::size_t k = 0; k < L.rooms.size(); ++k) {
    const Rect& rr = L.rooms[k].rect;
    const bool top = L.rooms[k].row == 0;
    const Rect door{top ? rr.row + sz.room_cells : hall_rect.row + hall, door_col[k], sz.wall_cells, sz.door_cells};
    carve(L.walls, door);
    L.door_zones.push_back(grow(door, 12));
  }
  const int n = static_cast<int>(L.rooms.size());
  L.adjacency.assign(static_cast<std::size_t>(n), {});
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      if (a != b) L.adjacency[static_cast<std::size_t>(a)].push_back(b);
  Region hallway;
  hallway.label = "hallway";
  hallway.rects = {hall_rect};
  L.extra_regions.push_back(hallway);
  return L;
}

// Random simple path of exactly `length` rooms on a grid graph (4-neighbors).
inline std::optional<std::vector<int>> grid_route(int rows, int cols, int length, Rng& rng) {
  const int n = rows * cols;
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  for (int start : order) {
    std::vector<int> path{start};
    std::vector<char> used(static_cast<std::size_t>(n), 0);
    used[static_cast<std::size_t>(start)] = 1;
    int budget = 20000;
    std::function<bool()> dfs = [&]() -> bool {
      if (static_cast<int>(path.size()) == length) return true;
      if (--budget < 0) return false;
      const int cur = path.back();
      const int r = cur / cols, c = cur % cols;
      std::vector<int> next;
      if (r > 0) next.push_back(cur - cols);
      if (r + 1 < rows) next.push_back(cur + cols);
      if (c > 0) next.push_back(cur - 1);
      if (c + 1 < cols) next.push_back(cur + 1);
      rng.shuffle(next);
      for (int nb : next) {
        if (used[static_cast<std::size_t>(nb)]) continue;
        used[static_cast<std::size_t>(nb)] = 1;
        path.push_back(nb);
        if (dfs()) return true;
        path.pop_back();
        used[static_cast<std::size_t>(nb)] = 0;
      }
      return false;
    };
    if (dfs()) return path;
  }
  return std::nullopt;
}

inline Point2 rect_center(const Rect& r) { return {r.col + r.cols / 2.0, r.row + r.rows / 2.0}; }

// 8-connected shortest path (no corner cutting) over `free`.
inline std::optional<std::vector<Cell>> shortest_path(const CellMask& free, Cell from, Cell to) {
  const GridSpec& spec = free.spec();
  if (!spec.contains(from) || !spec.contains(to) || !free[from] || !free[to]) return std::nullopt;
  Grid<double> dist(spec, std::numeric_limits<double>::infinity());
  Grid<int> prev(spec, -1);
  using Entry = std::pair<double, std::size_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
  dist[from] = 0.0;
  heap.emplace(0.0, spec.index(from));
  const std::size_t target = spec.index(to);
  while (!heap.empty()) {
    const auto [d, idx] = heap.top();
    heap.pop();
    if (d > dist.flat(idx)) continue;
    if (idx == target) break;
    const Cell cur = spec.cell_at(idx);
    for (int dr = -1; dr <= 1; ++dr)
      for (int dc = -1; dc <= 1; ++dc) {
        if (dr == 0 && dc == 0) continue;
        const Cell n{cur.row + dr, cur.col + dc};
        if (!spec.contains(n) || !free[n]) continue;
        if (dr != 0 && dc != 0 && (!free[Cell{cur.row + dr, cur.col}] || !free[Cell{cur.row, cur.col + dc}])) continue;
        const double nd = d + ((dr != 0 && dc != 0) ? std::sqrt(2.0) : 1.0);
        if (nd < dist[n]) {
          dist[n] = nd;
          prev[n] = static_cast<int>(idx);
          heap.emplace(nd, spec.index(n));
        }
      }
  }
  if (!std::isfinite(dist[to])) return std::nullopt;
  std::vector<Cell> path;
  for (int i = static_cast<int>(target); i >= 0; i = prev.flat(static_cast<std::size_t>(i))) path.push_back(spec.cell_at(static_cast<std::size_t>(i)));
  std::reverse(path.begin(), path.end());
  return path;
}

// True when any footprint cell is within `range` meters and in line of sight
// (walls only, all bearings) of any of the given cells.
inline bool seen_from_any(const GridWorld& world, const std::vector<Cell>& footprint, const std::vector<Cell>& from, double range) {
  const double range_cells = range / world.spec.resolution;
  for (const Cell& p : from)
    for (const Cell& c : footprint) {
      const double dr = c.row - p.row, dc = c.col - p.col;
      if (dr * dr + dc * dc > range_cells * range_cells) continue;
      if (line_of_sight(p, c, world.occupancy)) return true;
    }
  return false;
}

// Ray cast (all bearings, walls occlude) from the corners and center of a
// box; true when any ray reaches a cell of `mask` within `range`.
inline bool box_sees(const GridWorld& world, const Rect& box, const CellMask& mask, double range) {
  const int r0 = box.row, r1 = box.row + box.rows - 1, c0 = box.col, c1 = box.col + box.cols - 1;
  const Cell samples[5] = {{r0, c0}, {r0, c1}, {r1, c0}, {r1, c1}, {(r0 + r1) / 2, (c0 + c1) / 2}};
  const double len = range / world.spec.resolution;
  constexpr int kRays = 720;
  for (const Cell& s : samples) {
    const double x0 = s.col + 0.5, y0 = s.row + 0.5;
    for (int k = 0; k < kRays; ++k) {
      const double a = 2.0 * kPi * k / kRays;
      bool hit = false;
      traverse_segment(x0, y0, x0 + len * std::cos(a), y0 + len * std::sin(a), [&](Cell c) {
        if (!world.spec.contains(c)) return false;
        if (mask[c]) {
          hit = true;
          return false;
        }
        return !(world.occupancy[c] && !(c == s));
      });
      if (hit) return true;
    }
  }
  return false;
}

inline Cell approach_cell(const GridWorld& world, const CellMask& free, const Landmark& lm) {
  const Point2 c = lm.centroid(world.spec);
  const double row = c.y / world.spec.resolution - 0.5, col = c.x / world.spec.resolution - 0.5;
  std::optional<Cell> best;
  double best_d = std::numeric_limits<double>::infinity();
  for (int r = 0; r < world.spec.height; ++r)
    for (int k = 0; k < world.spec.width; ++k) {
      if (!free.at(r, k)) continue;
      const double d = (r - row) * (r - row) + (k - col) * (k - col);
      if (d < best_d) {
        best_d = d;
        best = Cell{r, k};
      }
    }
  if (!best) throw PreconditionError("no free cell to approach landmark");
  return *best;
}

inline std::string capitalize(std::string s) {
  if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 'a' + 'A');
  return s;
}

}  // namespace gen

struct GenerateOptions {
  WorldTemplate layout = WorldTemplate::Rooms;
  int sub_instructions = 0;  // 1..7; 0 draws one at random
  WorldSize size;
  int step_budget = 500;
};

/// One world with one episode. Retries internally (deterministically) until
/// the episode passes the solvability checks.
inline EpisodeSet generate_world(std::uint64_t seed, const GenerateOptions& opt, const std::string& id_prefix = "") {
  if (opt.sub_instructions < 0 || opt.sub_instructions > 7) throw ConfigError("sub_instructions must lie in 0..7");
  const WorldSize& sz = opt.size;
  for (int attempt = 0; attempt < 64; ++attempt) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(attempt)));
    const int K = opt.sub_instructions > 0 ? opt.sub_instructions : rng.range(1, 7);

    // Layout and room route (K + 1 rooms, the last holds the target).
    gen::Layout L;
    std::vector<int> route;
    if (opt.layout == WorldTemplate::Corridor) {
      // Rooms are numbered row-major on a 2 x 4 grid; consecutive route rooms
      // face each other or sit side by side along the hallway.
      const auto r = gen::grid_route(2, 4, K + 1, rng);
      if (!r) continue;
      route = *r;
      std::vector<std::pair<int, int>> forced;
      for (std::size_t i = 1; i < route.size(); ++i) forced.emplace_back(route[i - 1], route[i]);
      L = gen::corridor(4, forced, sz, rng);
    } else {
      const auto r = gen::grid_route(3, 3, K + 1, rng);
      if (!r) continue;
      route = *r;
      std::vector<std::pair<int, int>> forced;
      for (std::size_t i = 1; i < route.size(); ++i) forced.emplace_back(route[i - 1], route[i]);
      L = gen::room_grid(3, 3, opt.layout == WorldTemplate::Rooms, forced, sz, rng);
    }

    auto room_names = gen::room_names();
    rng.shuffle(room_names);
    for (std::size_t i = 0; i < L.rooms.size(); ++i) L.rooms[i].label = room_names[i];

    GridWorld w;
    w.spec = L.spec;
    w.occupancy = L.walls;
    for (const auto& room : L.rooms) w.regions.push_back(Region{room.label, {room.rect}, {}});
    for (const auto& r : L.extra_regions) w.regions.push_back(r);

    // Objects: two per room with unique labels, plus decoys sharing the
    // target label in rooms away from the final leg.
    auto object_names = gen::object_names();
    rng.shuffle(object_names);
    std::size_t next_name = 0;
    std::vector<std::vector<Rect>> placed(L.rooms.size());
    auto place = [&](std::size_t room, const std::string& label) -> std::optional<std::size_t> {
      const Rect& rr = L.rooms[room].rect;
      const int m = 10;
      for (int tries = 0; tries < 300; ++tries) {
        const Rect box{rng.range(rr.row + m, rr.row + rr.rows - m - sz.object_cells), rng.range(rr.col + m, rr.col + rr.cols - m - sz.object_cells),
                       sz.object_cells, sz.object_cells};
        bool ok = true;
        for (const Rect& z : L.door_zones) ok = ok && !gen::overlaps(box, z);
        for (const Rect& o : placed[room]) ok = ok && !gen::overlaps(gen::grow(box, 10), o);
        if (!ok) continue;
        placed[room].push_back(box);
        w.landmarks.push_back(Landmark{label, {box}, {}});
        return w.landmarks.size() - 1;
      }
      return std::nullopt;
    };

    const std::string target_label = object_names[next_name++];
    std::vector<std::size_t> room_object(L.rooms.size(), 0);  // the object named by the route
    bool ok = true;
    for (std::size_t room = 0; room < L.rooms.size() && ok; ++room) {
      const bool is_target_room = static_cast<int>(room) == route.back();
      const std::string label = is_target_room ? target_label : object_names[next_name++];
      // A named object is visible from the previous route room but not from
      // two or more rooms back, so sub-instructions cannot complete far ahead
      // of the agent and each one can be spotted from where the last one was.
      const auto at = std::find(route.begin(), route.end(), static_cast<int>(room));
      const std::size_t index = static_cast<std::size_t>(at - route.begin());
      std::optional<std::size_t> first;
      if (at != route.end() && index >= 1) {
        CellMask behind(w.spec, 0), previous(w.spec, 0);
        for (std::size_t j = 0; j + 2 <= index; ++j) gen::paint(behind, L.rooms[static_cast<std::size_t>(route[j])].rect);
        gen::paint(previous, L.rooms[static_cast<std::size_t>(route[index - 1])].rect);
        for (int tries = 0; tries < 40 && !first; ++tries) {
          first = place(room, label);
          if (!first) break;
          const Rect& box = placed[room].back();
          if (gen::box_sees(w, box, behind, 5.0 + 0.5) || !gen::box_sees(w, box, previous, 5.0 - 0.5)) {
            w.landmarks.pop_back();
            placed[room].pop_back();
            first.reset();
          }
        }
        if (!first) first = place(room, label);  // best effort in densely connected layouts
      } else {
        first = place(room, label);
      }
      const auto second = place(room, object_names[next_name++]);
      ok = first && second;
      if (ok) room_object[room] = *first;
    }
    if (!ok) continue;

    w.id = (id_prefix.empty() ? std::string("world") : id_prefix) + "-" + std::string(to_string(opt.layout));
    w.finalize();
    const CellMask free = [&] {
      CellMask f(w.spec, 0);
      const CellMask inflated = dilate(w.solid, 1);
      for (std::size_t i = 0; i < f.size(); ++i) f.flat(i) = inflated.flat(i) ? 0 : 1;
      return f;
    }();

    // Start somewhere clear in the first room.
    const Rect& start_room = L.rooms[static_cast<std::size_t>(route.front())].rect;
    std::optional<Cell> start_cell;
    const CellMask roomy = dilate(w.solid, 8);
    for (int tries = 0; tries < 300 && !start_cell; ++tries) {
      const Cell c{rng.range(start_room.row + 10, start_room.row + start_room.rows - 11), rng.range(start_room.col + 10, start_room.col + start_room.cols - 11)};
      if (!roomy[c]) start_cell = c;
    }
    if (!start_cell) continue;

    // Reference path: start -> approach of each named object -> goal.
    const Landmark& target = w.landmarks[room_object[static_cast<std::size_t>(route.back())]];
    const Cell goal = gen::approach_cell(w, free, target);
    std::vector<Cell> stops{*start_cell};
    for (std::size_t i = 1; i + 1 < route.size(); ++i)
      stops.push_back(gen::approach_cell(w, free, w.landmarks[room_object[static_cast<std::size_t>(route[i])]]));
    stops.push_back(goal);
    std::vector<Cell> reference{*start_cell};
    std::vector<std::size_t> leg_start{0};
    for (std::size_t i = 1; i < stops.size() && ok; ++i) {
      const auto leg = gen::shortest_path(free, stops[i - 1], stops[i]);
      if (!leg) {
        ok = false;
        break;
      }
      leg_start.push_back(reference.size() - 1);
      reference.insert(reference.end(), leg->begin() + 1, leg->end());
    }
    if (!ok) continue;

    // Decoys: same label as the target, at least 6 m from the goal and never
    // in or next to the last two route rooms, where the final search happens.
    // Named objects are hidden two rooms back, so the final phase starts no
    // earlier than route room K-2; decoys stay out of sight from there on.
    // Earlier route rooms (the start room included) may hold one: a
    // final-only agent explores from the start and tends to meet it first.
    // Single-step episodes get none.
    const std::size_t hide_from = static_cast<std::size_t>(std::max(0, K - 2));
    CellMask late_view(w.spec, 0);
    std::vector<Rect> early;
    for (std::size_t i = 0; i < route.size(); ++i) {
      const Rect& rr = L.rooms[static_cast<std::size_t>(route[i])].rect;
      if (i >= hide_from) gen::paint(late_view, rr);
      else early.push_back(rr);
    }
    for (const Cell& p : reference)
      if (std::none_of(early.begin(), early.end(), [&](const Rect& r) { return r.contains(p); })) late_view[p] = 1;
    std::vector<std::size_t> decoy_rooms;
    for (std::size_t room = 0; room < L.rooms.size(); ++room) {
      const auto at = std::find(route.begin(), route.end(), static_cast<int>(room));
      if (at == route.end() || static_cast<std::size_t>(at - route.begin()) < hide_from) decoy_rooms.push_back(room);
    }
    rng.shuffle(decoy_rooms);
    if (K == 1) decoy_rooms.clear();  // a bare "stop at the X" cannot tell copies apart
    const int grid_cols = opt.layout == WorldTemplate::Corridor ? 4 : 3;
    auto room_distance = [&](int a, int b) { return std::abs(a / grid_cols - b / grid_cols) + std::abs(a % grid_cols - b % grid_cols); };
    std::erase_if(decoy_rooms, [&](std::size_t room) {
      const int r = static_cast<int>(room);
      return room_distance(r, route.back()) < 2 || room_distance(r, route[route.size() - 2]) < 2;
    });
    for (std::size_t room : decoy_rooms) {
      const std::size_t before = w.landmarks.size();
      for (int tries = 0; tries < 20; ++tries) {
        const auto idx = place(room, target_label);
        if (!idx) break;
        GridWorld probe = w;
        probe.finalize();
        const Landmark& d = probe.landmarks[*idx];
        const Point2 dc = d.centroid(w.spec);
        const bool far = distance(dc, cell_center(goal, w.spec)) >= 6.0;
        const bool hidden = !gen::box_sees(probe, d.rects.front(), late_view, 5.0 + 0.5);
        bool clear_path = true;
        for (const Cell& c : d.cells)
          for (const Cell& p : reference)
            if (std::abs(c.row - p.row) <= 2 && std::abs(c.col - p.col) <= 2) clear_path = false;
        if (far && hidden && clear_path) break;
        w.landmarks.pop_back();
        placed[room].pop_back();
      }
      if (w.landmarks.size() == before) continue;
    }
    w.finalize();

    // Sub-instructions.
    std::vector<SubInstruction> subs;
    for (std::size_t i = 1; i + 1 < route.size(); ++i) {
      const auto& room = L.rooms[static_cast<std::size_t>(route[i])];
      const auto& obj = w.landmarks[room_object[static_cast<std::size_t>(route[i])]];
      std::vector<Constraint> cs;
      std::string text;
      if (i >= 2) {
        const Point2 a = gen::rect_center(L.rooms[static_cast<std::size_t>(route[i - 2])].rect);
        const Point2 b = gen::rect_center(L.rooms[static_cast<std::size_t>(route[i - 1])].rect);
        const Point2 c = gen::rect_center(room.rect);
        const double ux = b.x - a.x, uy = b.y - a.y, vx = c.x - b.x, vy = c.y - b.y;
        const double cross = ux * vy - uy * vx;
        const double cosang = (ux * vx + uy * vy) / (std::hypot(ux, uy) * std::hypot(vx, vy));
        if (cosang < 0.5 && cosang > -0.85 && std::abs(cross) > 1e-9) {
          const TurnDirection dir = cross > 0 ? TurnDirection::Left : TurnDirection::Right;
          cs.push_back(Constraint::turn(dir));
          text = "Turn " + std::string(to_string(dir)) + " and walk into the " + room.label + ", passing the " + obj.label + ".";
        }
      }
      if (text.empty()) text = "Walk into the " + room.label + " and pass the " + obj.label + ".";
      cs.push_back(Constraint::location(room.label));
      cs.push_back(Constraint::object(obj.label));
      subs.emplace_back(text, std::move(cs));
    }
    subs.emplace_back("Stop at the " + target_label + ".", std::vector<Constraint>{Constraint::object(target_label)});

    // Every named landmark must be visible from the reference path.
    bool visible = true;
    for (const auto& s : subs)
      for (const auto& c : s.constraints) {
        if (c.kind == ConstraintKind::Direction) continue;
        const auto idx = c.kind == ConstraintKind::Object ? w.landmarks_labeled(c.argument) : w.regions_labeled(c.argument);
        bool any = false;
        for (std::size_t k : idx) {
          const auto& cells = c.kind == ConstraintKind::Object ? w.landmarks[k].cells : w.regions[k].cells;
          any = any || gen::seen_from_any(w, cells, reference, 5.0);
        }
        visible = visible && any;
      }
    if (!visible) continue;

    Episode e;
    e.id = id_prefix.empty() ? "ep0" : id_prefix;
    e.world_id = w.id;
    e.start = Pose(cell_center(*start_cell, w.spec).x, cell_center(*start_cell, w.spec).y, deg_to_rad(30.0 * rng.range(0, 11)));
    e.goal = goal;
    e.success_radius = 3.0;
    for (std::size_t i = 0; i < subs.size(); ++i) e.instruction += (i ? " " : "") + subs[i].text;
    e.decomposition.sub_instructions = std::move(subs);
    e.reference_path = std::move(reference);
    e.step_budget = opt.step_budget;
    validate_episode(e, w);

    EpisodeSet set;
    set.worlds.push_back(std::make_shared<const GridWorld>(std::move(w)));
    set.episodes.push_back(std::move(e));
    return set;
  }
  throw PreconditionError("could not generate a solvable episode for this seed");
}

/// `count` single-episode worlds. Sub-instruction counts cycle through 1..7
/// and, for the mixed suite, templates cycle rooms, corridor, maze.
inline EpisodeSet generate_suite(std::uint64_t seed, std::optional<WorldTemplate> layout, int count, const WorldSize& size = {},
                                 int step_budget = 500) {
  if (count < 0) throw ConfigError("count must be >= 0");
  static constexpr std::array<WorldTemplate, 3> kCycle{WorldTemplate::Rooms, WorldTemplate::Corridor, WorldTemplate::Maze};
  EpisodeSet out;
  for (int i = 0; i < count; ++i) {
    GenerateOptions opt;
    opt.layout = layout ? *layout : kCycle[static_cast<std::size_t>(i) % kCycle.size()];
    opt.sub_instructions = 1 + i % 7;
    opt.size = size;
    opt.step_budget = step_budget;
    char id[32];
    std::snprintf(id, sizeof id, "ep%04d", i);
    EpisodeSet one = generate_world(mix_seed(seed, static_cast<std::uint64_t>(i)), opt, id);
    out.worlds.push_back(one.worlds.front());
    out.episodes.push_back(std::move(one.episodes.front()));
  }
  return out;
}

}  // namespace canav
