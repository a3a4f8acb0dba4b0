#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "atom/variant.hpp"

namespace atom::core {

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Errors

class ParseError : public std::runtime_error {
 public:
  enum class Kind { NoJsonFound, SchemaViolation, MalformedMoveValue };

  ParseError(Kind kind, std::string path, const std::string& reason)
      : std::runtime_error(describe(kind, path, reason)), kind_(kind), path_(std::move(path)) {}

  Kind kind() const { return kind_; }
  const std::string& path() const { return path_; }

  static ParseError no_json_found() { return {Kind::NoJsonFound, "", "no JSON object in reply"}; }
  static ParseError schema(std::string path, const std::string& reason) {
    return {Kind::SchemaViolation, std::move(path), reason};
  }
  static ParseError malformed_move(const std::string& value) {
    return {Kind::MalformedMoveValue, "move", "expected \"object, destination\", got \"" + value + "\""};
  }

 private:
  static std::string describe(Kind k, const std::string& path, const std::string& reason);
  Kind kind_;
  std::string path_;
};

// ---------------------------------------------------------------------------
// Key normalization
//
// Recorded model outputs mix spellings ("suggested robot solution",
// "suggested_robot_solution", "suggested_robot_action", "possible item").
// Mechanical normalization handles case/spacing; the alias table (a data
// file, so new spellings don't need a rebuild) folds synonyms.

class KeyNormalizer {
 public:
  static const KeyNormalizer& builtin();
  static KeyNormalizer load(const std::filesystem::path& alias_file);

  /// Total and idempotent.
  std::string operator()(std::string_view raw_key) const;

 private:
  explicit KeyNormalizer(std::map<std::string, std::string> aliases);
  std::map<std::string, std::string> aliases_;
};

// ---------------------------------------------------------------------------
// Domain types

struct HumanObservation {
  std::string facial_expression;
  std::string eye_gaze;
  std::string head_direction;
  std::string gesture;
  std::string posture;
  std::string activity;

  bool any() const;
  bool operator==(const HumanObservation&) const = default;
};

struct EnvironmentObservation {
  std::string location;
  std::string lighting;
  std::string sound;
  std::string temperature;
  /// name -> affordance, source order preserved
  std::vector<std::pair<std::string, std::string>> objects;
  std::vector<std::string> possible_items;

  bool operator==(const EnvironmentObservation&) const = default;
};

struct InternalState {
  /// touch, taste, vision, sound, smell, vestibular, proprioception, interoception
  std::vector<std::pair<std::string, std::string>> physical;
  /// emotion, attention, desire, intention
  std::vector<std::pair<std::string, std::string>> mental;

  static const std::vector<std::string>& physical_vocabulary();
  static const std::vector<std::string>& mental_vocabulary();
  const std::string* find_mental(std::string_view key) const;

  bool operator==(const InternalState&) const = default;
};

struct Need {
  std::string id;
  std::string description;
  std::string solution;
  bool uses_possible_item = false;

  bool operator==(const Need&) const = default;
};

struct NeedReport {
  EnvironmentObservation environment;
  HumanObservation human;
  InternalState state;
  std::vector<Need> needs;
  std::string raw_text;
  PromptVariant variant = PromptVariant::full_atom_constraints;
};

/// Semantic equality; raw_text (the verbatim reply) is deliberately left out
/// so round-tripped reports compare equal.
bool field_identical(const NeedReport& a, const NeedReport& b);

// ---------------------------------------------------------------------------
// Action grammar

struct Navigate {
  std::string target;
  bool operator==(const Navigate&) const = default;
};
struct Move {
  std::string object;
  std::string destination;  // object name or the reserved "person"
  bool operator==(const Move&) const = default;
};
struct Use {
  std::string object;
  bool operator==(const Use&) const = default;
};

using ActionPrimitive = std::variant<Navigate, Move, Use>;

struct ActionPlan {
  std::string solution_text;
  std::vector<ActionPrimitive> steps;  // first is always Navigate

  bool operator==(const ActionPlan&) const = default;
};

std::string primitive_kind(const ActionPrimitive& p);

// ---------------------------------------------------------------------------
// Embodiment constraints (defaults mirror the prompt's constraint sentence)

struct RobotConstraints {
  int arm_count = 1;
  bool can_reach_floor = false;
  bool verbal_allowed = false;
  std::set<std::string> forbidden_device_classes = {"computer", "phone", "laptop"};
  bool mobility = true;

  bool operator==(const RobotConstraints&) const = default;
};

// ---------------------------------------------------------------------------
// Scenarios

enum class Scene { kitchen, office, home_gym, living_room };

std::string to_string(Scene s);
Scene parse_scene(std::string_view s);

struct ScenarioSpec {
  int id = 0;  // 1..16
  Scene scene = Scene::kitchen;
  std::string image_ref;
  std::vector<std::string> visible_objects;
  std::vector<std::string> auxiliary_objects;  // 10..18 entries
  std::string annotation;

  bool operator==(const ScenarioSpec&) const = default;
};

ScenarioSpec scenario_from_json(const Json& j);
Json scenario_to_json(const ScenarioSpec& s);

// ---------------------------------------------------------------------------
// Operations

/// Extracts the outermost balanced JSON object from a model reply that may
/// be wrapped in code fences or prose. Throws ParseError(NoJsonFound).
std::string extract_json_object(std::string_view raw);

NeedReport parse_need_report(std::string_view raw, PromptVariant variant,
                             const KeyNormalizer& keys = KeyNormalizer::builtin());

std::vector<ActionPlan> parse_action_list(std::string_view raw);

/// Canonical serialization: human nested under Environment, canonical key
/// spellings. parse(serialize(r)) is field_identical to r.
Json report_to_json(const NeedReport& r);
Json plan_to_json(const ActionPlan& p);
Json plans_to_json(const std::vector<ActionPlan>& plans);
ActionPlan plan_from_json(const std::string& solution_text, const Json& body);

}  // namespace atom::core
