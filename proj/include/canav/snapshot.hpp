#pragma once

// Value-map snapshots: binary PGM images (one byte per cell, row-major) plus
// a JSON header per frame.
//
//   <dir>/<episode>/step_000042.json
//   <dir>/<episode>/step_000042_value.pgm        value * 255, rounded
//   <dir>/<episode>/step_000042_confidence.pgm   confidence * 255, rounded
//   <dir>/<episode>/step_000042_visits.pgm       visit count, saturating at 255

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "canav/errors.hpp"
#include "canav/grid.hpp"
#include "canav/navigator.hpp"
#include "canav/value_map.hpp"
#include "json.hpp"

namespace canav {

inline std::uint8_t unit_byte(double v) {
  if (std::isnan(v)) return 0;
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major
};

template <class T, class ToByte>
GrayImage to_image(const Grid<T>& g, ToByte&& to_byte) {
  GrayImage img{g.spec().width, g.spec().height, {}};
  img.pixels.reserve(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) img.pixels.push_back(to_byte(g.flat(i)));
  return img;
}

inline void write_pgm(const std::filesystem::path& path, const GrayImage& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "P5\n" << img.width << ' ' << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
}

inline GrayImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::string magic;
  GrayImage img;
  int maxval = 0;
  in >> magic >> img.width >> img.height >> maxval;
  if (magic != "P5" || img.width < 1 || img.height < 1 || maxval != 255) throw ConfigError(path.string() + " is not an 8-bit binary PGM");
  in.get();  // the single whitespace after maxval
  img.pixels.resize(static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height));
  in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.pixels.size())) throw ConfigError(path.string() + " is truncated");
  return img;
}

inline std::string step_stem(int step) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "step_%06d", step);
  return buf;
}

/// Writes one frame's three images and header into `dir`.
inline void write_snapshot(const std::filesystem::path& dir, const SnapshotFrame& f) {
  if (!f.value_map) throw PreconditionError("snapshot frame has no value map");
  std::filesystem::create_directories(dir);
  const ValueMap& vm = *f.value_map;
  const std::string stem = step_stem(f.step);
  write_pgm(dir / (stem + "_value.pgm"), to_image(vm.value(), unit_byte));
  write_pgm(dir / (stem + "_confidence.pgm"), to_image(vm.confidence(), unit_byte));
  write_pgm(dir / (stem + "_visits.pgm"), to_image(vm.visits(), [](std::uint32_t v) { return static_cast<std::uint8_t>(std::min<std::uint32_t>(v, 255)); }));
  nlohmann::json header{{"step", f.step},
                        {"active", f.active ? nlohmann::json(*f.active) : nlohmann::json(nullptr)},
                        {"prompt", f.prompt},
                        {"width", vm.spec().width},
                        {"height", vm.spec().height},
                        {"resolution", vm.spec().resolution},
                        {"images", {{"value", stem + "_value.pgm"}, {"confidence", stem + "_confidence.pgm"}, {"visits", stem + "_visits.pgm"}}}};
  std::ofstream out(dir / (stem + ".json"));
  if (!out) throw ConfigError("cannot write snapshot header in " + dir.string());
  out << header.dump(2) << '\n';
}

/// Sink writing every `every`-th step under dir/<episode id>.
inline SnapshotSink snapshot_sink(const std::filesystem::path& dir, const std::string& episode_id, int every = 1) {
  if (every < 1) throw ConfigError("snapshot interval must be >= 1");
  return [root = dir / episode_id, every](const SnapshotFrame& f) {
    if (f.step % every == 0) write_snapshot(root, f);
  };
}

}  // namespace canav
