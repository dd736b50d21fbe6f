#pragma once

// Navigation metrics: NE, SR, OSR, SPL, nDTW, SDTW and set-level means.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "canav/errors.hpp"
#include "canav/grid.hpp"
#include "json.hpp"

namespace canav {

inline constexpr double kSuccessRadius = 3.0;

inline double navigation_error(Point2 final_position, Point2 goal) { return distance(final_position, goal); }

/// Strict: exactly `radius` away is a failure.
inline bool is_success(double ne, double radius = kSuccessRadius) { return ne < radius; }

inline bool oracle_success(const std::vector<Point2>& trajectory, Point2 goal, double radius = kSuccessRadius) {
  return std::any_of(trajectory.begin(), trajectory.end(), [&](Point2 p) { return distance(p, goal) < radius; });
}

inline double spl(bool success, double shortest, double taken) {
  if (!success) return 0.0;
  if (shortest < 0.0 || taken < 0.0) throw PreconditionError("path lengths must be >= 0");
  const double denom = std::max(shortest, taken);
  return denom > 0.0 ? shortest / denom : 1.0;
}

inline double path_length(const std::vector<Point2>& pts) {
  double len = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) len += distance(pts[i - 1], pts[i]);
  return len;
}

/// Dynamic time warping with Euclidean point cost.
inline double dtw(const std::vector<Point2>& a, const std::vector<Point2>& b) {
  if (a.empty() || b.empty()) throw EmptyInputError("dtw needs non-empty sequences");
  const std::size_t m = b.size();
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> prev(m + 1, kInf), cur(m + 1, kInf);
  prev[0] = 0.0;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = kInf;
    for (std::size_t j = 1; j <= m; ++j) {
      const double best = std::min({prev[j], cur[j - 1], prev[j - 1]});
      cur[j] = distance(a[i - 1], b[j - 1]) + best;
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

/// exp(-DTW / (|reference| * d_th)).
inline double ndtw(const std::vector<Point2>& trajectory, const std::vector<Point2>& reference, double d_th = kSuccessRadius) {
  if (!(d_th > 0.0)) throw PreconditionError("d_th must be positive");
  return std::exp(-dtw(trajectory, reference) / (static_cast<double>(reference.size()) * d_th));
}

struct MetricBundle {
  double ne = 0.0;
  bool sr = false;
  bool osr = false;
  double spl = 0.0;
  double ndtw = 0.0;
  double sdtw = 0.0;
  double trajectory_length = 0.0;

  /// sdtw <= ndtw, sdtw <= sr, spl <= sr, success implies oracle success.
  bool invariants_hold() const {
    const double s = sr ? 1.0 : 0.0;
    return sdtw <= ndtw + 1e-15 && sdtw <= s && spl <= s && (!sr || osr) && ndtw >= 0.0 && ndtw <= 1.0 && spl >= 0.0;
  }
};

inline MetricBundle compute_metrics(const std::vector<Point2>& trajectory, const std::vector<Point2>& reference, Point2 goal,
                                    double shortest, bool stopped, double radius = kSuccessRadius) {
  if (trajectory.empty()) throw EmptyInputError("trajectory must hold at least the start position");
  MetricBundle m;
  m.ne = navigation_error(trajectory.back(), goal);
  m.sr = stopped && is_success(m.ne, radius);
  m.osr = oracle_success(trajectory, goal, radius);
  m.trajectory_length = path_length(trajectory);
  m.spl = spl(m.sr, shortest, m.trajectory_length);
  m.ndtw = reference.empty() ? 0.0 : ndtw(trajectory, reference, radius);
  m.sdtw = m.sr ? m.ndtw : 0.0;
  return m;
}

inline void to_json(nlohmann::json& j, const MetricBundle& m) {
  j = nlohmann::json{{"ne", m.ne},     {"sr", m.sr},     {"osr", m.osr},
                     {"spl", m.spl},   {"ndtw", m.ndtw}, {"sdtw", m.sdtw},
                     {"trajectory_length", m.trajectory_length}};
}
inline void from_json(const nlohmann::json& j, MetricBundle& m) {
  m.ne = j.at("ne").get<double>();
  m.sr = j.at("sr").get<bool>();
  m.osr = j.at("osr").get<bool>();
  m.spl = j.at("spl").get<double>();
  m.ndtw = j.at("ndtw").get<double>();
  m.sdtw = j.at("sdtw").get<double>();
  m.trajectory_length = j.value("trajectory_length", 0.0);
}

/// Means over an episode set; rates are fractions in [0, 1].
struct MetricSummary {
  std::size_t episodes = 0;
  double ne = 0.0, osr = 0.0, sr = 0.0, spl = 0.0, ndtw = 0.0, sdtw = 0.0;
};

inline MetricSummary summarize(const std::vector<MetricBundle>& bundles) {
  MetricSummary s;
  s.episodes = bundles.size();
  if (bundles.empty()) return s;
  for (const auto& b : bundles) {
    s.ne += b.ne;
    s.osr += b.osr ? 1.0 : 0.0;
    s.sr += b.sr ? 1.0 : 0.0;
    s.spl += b.spl;
    s.ndtw += b.ndtw;
    s.sdtw += b.sdtw;
  }
  const double n = static_cast<double>(bundles.size());
  s.ne /= n;
  s.osr /= n;
  s.sr /= n;
  s.spl /= n;
  s.ndtw /= n;
  s.sdtw /= n;
  return s;
}

inline void to_json(nlohmann::json& j, const MetricSummary& s) {
  j = nlohmann::json{{"episodes", s.episodes}, {"ne", s.ne},     {"osr", s.osr},  {"sr", s.sr},
                     {"spl", s.spl},           {"ndtw", s.ndtw}, {"sdtw", s.sdtw}};
}

/// Text table; rates printed as percentages like the benchmark tables.
inline std::string format_table(const std::vector<std::pair<std::string, MetricSummary>>& rows, std::string_view first_column = "Method") {
  std::size_t w = first_column.size();
  for (const auto& [name, _] : rows) w = std::max(w, name.size());
  auto pad = [&](std::string_view s) {
    std::string out(s);
    out.resize(w, ' ');
    return out;
  };
  char buf[160];
  std::string out = pad(first_column);
  std::snprintf(buf, sizeof buf, " %7s %7s %7s %7s %7s %7s %5s\n", "NE", "OSR", "SR", "SPL", "NDTW", "SDTW", "N");
  out += buf;
  for (const auto& [name, s] : rows) {
    out += pad(name);
    std::snprintf(buf, sizeof buf, " %7.2f %7.1f %7.1f %7.1f %7.1f %7.1f %5zu\n", s.ne, 100 * s.osr, 100 * s.sr, 100 * s.spl,
                  100 * s.ndtw, 100 * s.sdtw, s.episodes);
    out += buf;
  }
  return out;
}

}  // namespace canav
