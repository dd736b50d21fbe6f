#pragma once

// Decomposed instructions: constraints, sub-instructions and their JSON form.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "canav/errors.hpp"
#include "json.hpp"

namespace canav {

enum class ConstraintKind { Object, Location, Direction };
enum class TurnDirection { Left, Right };

inline std::string_view to_string(ConstraintKind k) {
  switch (k) {
    case ConstraintKind::Object: return "object";
    case ConstraintKind::Location: return "location";
    case ConstraintKind::Direction: return "direction";
  }
  return "object";
}

inline std::string_view to_string(TurnDirection d) { return d == TurnDirection::Left ? "left" : "right"; }

inline ConstraintKind parse_constraint_kind(std::string_view s) {
  if (s == "object") return ConstraintKind::Object;
  if (s == "location") return ConstraintKind::Location;
  if (s == "direction") return ConstraintKind::Direction;
  throw PreconditionError("unknown constraint kind '" + std::string(s) + "'");
}

inline TurnDirection parse_turn_direction(std::string_view s) {
  if (s == "left") return TurnDirection::Left;
  if (s == "right") return TurnDirection::Right;
  throw PreconditionError("unknown turn direction '" + std::string(s) + "'");
}

struct Constraint {
  ConstraintKind kind = ConstraintKind::Object;
  std::string argument;  // landmark label (object) or scene name (location)
  TurnDirection direction = TurnDirection::Left;
  std::optional<double> target_angle_deg;  // informational for direction constraints

  static Constraint object(std::string label) { return {ConstraintKind::Object, std::move(label), {}, {}}; }
  static Constraint location(std::string name) { return {ConstraintKind::Location, std::move(name), {}, {}}; }
  static Constraint turn(TurnDirection d, std::optional<double> angle_deg = {}) {
    return {ConstraintKind::Direction, {}, d, angle_deg};
  }

  void validate() const {
    if (kind != ConstraintKind::Direction && argument.empty())
      throw PreconditionError("object/location constraint needs a non-empty argument");
  }

  bool operator==(const Constraint&) const = default;
};

/// Object and location arguments joined in constraint order; empty for a
/// direction-only set.
inline std::string derive_landmark_prompt(const std::vector<Constraint>& constraints) {
  std::string prompt;
  for (const auto& c : constraints) {
    if (c.kind == ConstraintKind::Direction) continue;
    if (!prompt.empty()) prompt += ", ";
    prompt += c.argument;
  }
  return prompt;
}

/// Splits a landmark prompt back into its comma-separated terms.
inline std::vector<std::string> prompt_terms(std::string_view prompt) {
  std::vector<std::string> terms;
  std::size_t start = 0;
  while (start <= prompt.size()) {
    std::size_t end = prompt.find(',', start);
    if (end == std::string_view::npos) end = prompt.size();
    std::string_view t = prompt.substr(start, end - start);
    while (!t.empty() && t.front() == ' ') t.remove_prefix(1);
    while (!t.empty() && t.back() == ' ') t.remove_suffix(1);
    if (!t.empty()) terms.emplace_back(t);
    start = end + 1;
  }
  return terms;
}

struct SubInstruction {
  std::string text;
  std::vector<Constraint> constraints;
  std::string landmark_prompt;

  SubInstruction() = default;
  SubInstruction(std::string t, std::vector<Constraint> cs)
      : text(std::move(t)), constraints(std::move(cs)), landmark_prompt(derive_landmark_prompt(constraints)) {}

  void validate() const {
    if (constraints.empty()) throw PreconditionError("sub-instruction '" + text + "' has no constraints");
    for (const auto& c : constraints) c.validate();
  }

  const Constraint* first_of(ConstraintKind k) const {
    for (const auto& c : constraints)
      if (c.kind == k) return &c;
    return nullptr;
  }

  bool operator==(const SubInstruction&) const = default;
};

struct DecompositionResult {
  std::vector<SubInstruction> sub_instructions;

  void validate() const {
    if (sub_instructions.empty()) throw PreconditionError("decomposition has no sub-instructions");
    for (const auto& s : sub_instructions) s.validate();
  }
  bool operator==(const DecompositionResult&) const = default;
};

// JSON ----------------------------------------------------------------------

inline void to_json(nlohmann::json& j, const Constraint& c) {
  j = nlohmann::json{{"type", to_string(c.kind)}};
  if (c.kind == ConstraintKind::Direction) {
    j["direction"] = to_string(c.direction);
    if (c.target_angle_deg) j["angle_deg"] = *c.target_angle_deg;
  } else {
    j["argument"] = c.argument;
  }
}

inline void from_json(const nlohmann::json& j, Constraint& c) {
  c = Constraint{};
  c.kind = parse_constraint_kind(j.at("type").get<std::string>());
  if (c.kind == ConstraintKind::Direction) {
    c.direction = parse_turn_direction(j.at("direction").get<std::string>());
    if (j.contains("angle_deg")) c.target_angle_deg = j.at("angle_deg").get<double>();
  } else {
    c.argument = j.at("argument").get<std::string>();
  }
  c.validate();
}

inline void to_json(nlohmann::json& j, const SubInstruction& s) {
  j = nlohmann::json{{"text", s.text}, {"constraints", s.constraints}, {"landmark_prompt", s.landmark_prompt}};
}

inline void from_json(const nlohmann::json& j, SubInstruction& s) {
  s = SubInstruction(j.value("text", std::string{}), j.at("constraints").get<std::vector<Constraint>>());
  s.validate();
}

inline void to_json(nlohmann::json& j, const DecompositionResult& d) {
  j = nlohmann::json{{"sub_instructions", d.sub_instructions}};
}

inline void from_json(const nlohmann::json& j, DecompositionResult& d) {
  d.sub_instructions = j.at("sub_instructions").get<std::vector<SubInstruction>>();
  d.validate();
}

}  // namespace canav
