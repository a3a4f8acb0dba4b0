#include "atom/core_model.hpp"

#include <algorithm>
#include <unordered_set>

#include "atom/data_paths.hpp"
#include "atom/text.hpp"

namespace atom::core {

using text::normalize;
using text::trim;

// ---------------------------------------------------------------------------
// Errors

std::string ParseError::describe(Kind k, const std::string& path, const std::string& reason) {
  const char* tag = k == Kind::NoJsonFound        ? "NoJsonFound"
                    : k == Kind::SchemaViolation  ? "SchemaViolation"
                                                  : "MalformedMoveValue";
  std::string out = tag;
  if (!path.empty()) out += " at " + path;
  out += ": " + reason;
  return out;
}

// ---------------------------------------------------------------------------
// PromptVariant

}  // namespace atom::core

namespace atom {

std::string to_string(PromptVariant v) {
  switch (v) {
    case PromptVariant::full_atom_constraints: return "full_atom_constraints";
    case PromptVariant::no_atom_no_constraints: return "no_atom_no_constraints";
    case PromptVariant::atom_no_constraints: return "atom_no_constraints";
    case PromptVariant::no_atom_constraints: return "no_atom_constraints";
    case PromptVariant::action_generation: return "action_generation";
  }
  return "unknown";
}

std::optional<PromptVariant> parse_variant(std::string_view s) {
  const std::string n = text::normalize(s);
  if (n == "full_atom_constraints" || n == "full") return PromptVariant::full_atom_constraints;
  if (n == "no_atom_no_constraints" || n == "none") return PromptVariant::no_atom_no_constraints;
  if (n == "atom_no_constraints" || n == "atom_only") return PromptVariant::atom_no_constraints;
  if (n == "no_atom_constraints" || n == "constraints_only") return PromptVariant::no_atom_constraints;
  if (n == "action_generation" || n == "action") return PromptVariant::action_generation;
  return std::nullopt;
}

}  // namespace atom

namespace atom::core {

// ---------------------------------------------------------------------------
// KeyNormalizer

namespace {

std::string mechanical_normalize(std::string_view raw) {
  std::string s = normalize(trim(raw));
  // stripping a trailing colon can expose a trailing separator, so loop
  while (!s.empty() && (s.back() == ':' || s.back() == '_')) s.pop_back();
  return s;
}

std::map<std::string, std::string> builtin_aliases() {
  return {
      {"suggested_robot_action", "suggested_robot_solution"},
      {"possible_item", "possible_items"},
      {"possible_items_list", "possible_items"},
  };
}

}  // namespace

KeyNormalizer::KeyNormalizer(std::map<std::string, std::string> aliases)
    : aliases_(std::move(aliases)) {
  // Alias targets must be fixed points or idempotence breaks.
  for (const auto& [from, to] : aliases_) {
    if (aliases_.count(to))
      throw std::invalid_argument("key alias target is itself aliased: " + from + " -> " + to);
    if (mechanical_normalize(to) != to)
      throw std::invalid_argument("key alias target not canonical: " + to);
  }
}

const KeyNormalizer& KeyNormalizer::builtin() {
  static const KeyNormalizer instance{builtin_aliases()};
  return instance;
}

KeyNormalizer KeyNormalizer::load(const std::filesystem::path& alias_file) {
  Json doc = Json::parse(read_file(alias_file));
  std::map<std::string, std::string> table = builtin_aliases();
  for (const auto& [k, v] : doc.at("aliases").items())
    table[mechanical_normalize(k)] = v.get<std::string>();
  return KeyNormalizer(std::move(table));
}

std::string KeyNormalizer::operator()(std::string_view raw_key) const {
  std::string k = mechanical_normalize(raw_key);
  auto it = aliases_.find(k);
  return it == aliases_.end() ? k : it->second;
}

// ---------------------------------------------------------------------------
// Vocabularies

const std::vector<std::string>& InternalState::physical_vocabulary() {
  static const std::vector<std::string> kKeys = {
      "touch", "taste", "vision", "sound", "smell", "vestibular", "proprioception", "interoception"};
  return kKeys;
}

const std::vector<std::string>& InternalState::mental_vocabulary() {
  static const std::vector<std::string> kKeys = {"emotion", "attention", "desire", "intention"};
  return kKeys;
}

const std::string* InternalState::find_mental(std::string_view key) const {
  for (const auto& [k, v] : mental)
    if (k == key) return &v;
  return nullptr;
}

bool HumanObservation::any() const {
  return !facial_expression.empty() || !eye_gaze.empty() || !head_direction.empty() ||
         !gesture.empty() || !posture.empty() || !activity.empty();
}

// ---------------------------------------------------------------------------
// JSON extraction

std::string extract_json_object(std::string_view raw) {
  for (size_t start = raw.find('{'); start != std::string_view::npos;
       start = raw.find('{', start + 1)) {
    int depth = 0;
    bool in_string = false;
    for (size_t i = start; i < raw.size(); ++i) {
      char c = raw[i];
      if (in_string) {
        if (c == '\\') {
          ++i;
        } else if (c == '"') {
          in_string = false;
        }
      } else if (c == '"') {
        in_string = true;
      } else if (c == '{') {
        ++depth;
      } else if (c == '}') {
        if (--depth == 0) {
          std::string candidate(raw.substr(start, i - start + 1));
          if (Json::accept(candidate)) return candidate;
          break;  // balanced but invalid; try the next opening brace
        }
      }
    }
  }
  throw ParseError::no_json_found();
}

namespace {

Json normalize_keys_deep(const Json& j, const KeyNormalizer& keys) {
  if (j.is_object()) {
    Json out = Json::object();
    for (const auto& [k, v] : j.items()) out[keys(k)] = normalize_keys_deep(v, keys);
    return out;
  }
  if (j.is_array()) {
    Json out = Json::array();
    for (const auto& v : j) out.push_back(normalize_keys_deep(v, keys));
    return out;
  }
  return j;
}

std::string as_text(const Json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_null()) return "";
  return v.dump();
}

const Json* find_member(const Json& obj, std::string_view key) {
  if (!obj.is_object()) return nullptr;
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

bool looks_like_need_key(const std::string& k) {
  return k.rfind("need", 0) == 0 && k.size() > 4 &&
         std::all_of(k.begin() + 4, k.end(), [](unsigned char c) { return std::isdigit(c); });
}

std::vector<std::string> sorted_unique_tokens(std::string_view s) {
  auto t = text::content_tokens(s);
  std::sort(t.begin(), t.end());
  t.erase(std::unique(t.begin(), t.end()), t.end());
  return t;
}

bool mentions(const std::string& solution, const std::string& item) {
  auto sol = sorted_unique_tokens(solution);
  auto it = sorted_unique_tokens(item);
  if (it.empty()) return false;
  return std::includes(sol.begin(), sol.end(), it.begin(), it.end());
}

}  // namespace

// ---------------------------------------------------------------------------
// parse_need_report

NeedReport parse_need_report(std::string_view raw, PromptVariant variant,
                             const KeyNormalizer& keys) {
  if (!is_detection_variant(variant))
    throw std::invalid_argument("parse_need_report: not a detection variant");

  const Json doc = normalize_keys_deep(Json::parse(extract_json_object(raw)), keys);

  NeedReport r;
  r.raw_text = std::string(raw);
  r.variant = variant;

  const Json* env = find_member(doc, "environment");
  if (env && !env->is_object()) throw ParseError::schema("Environment", "expected an object");

  // "human" occurs both nested inside Environment and beside it.
  const Json* human = env ? find_member(*env, "human") : nullptr;
  if (!human) human = find_member(doc, "human");
  if (human && !human->is_object()) throw ParseError::schema("human", "expected an object");

  if (env) {
    if (const Json* v = find_member(*env, "location")) r.environment.location = as_text(*v);
    if (const Json* v = find_member(*env, "lighting")) r.environment.lighting = as_text(*v);
    if (const Json* v = find_member(*env, "sound")) r.environment.sound = as_text(*v);
    if (const Json* v = find_member(*env, "temperature")) r.environment.temperature = as_text(*v);
    if (const Json* objs = find_member(*env, "objects")) {
      if (!objs->is_object()) throw ParseError::schema("Environment.objects", "expected an object");
      for (const auto& [name, affordance] : objs->items()) {
        if (trim(name).empty())
          throw ParseError::schema("Environment.objects", "empty object name");
        r.environment.objects.emplace_back(name, as_text(affordance));
      }
    }
    if (const Json* pi = find_member(*env, "possible_items")) {
      const Json* arr = pi->is_object() ? find_member(*pi, "items") : pi;
      if (arr && arr->is_array()) {
        std::unordered_set<std::string> seen;
        for (const auto& item : *arr) {
          std::string name = trim(as_text(item));
          if (name.empty()) continue;
          if (seen.insert(normalize(name)).second) r.environment.possible_items.push_back(name);
        }
      }
    }
  }

  const Json* needs = nullptr;
  if (human) needs = find_member(*human, "needs");
  if (!needs && env) needs = find_member(*env, "needs");
  if (!needs) needs = find_member(doc, "needs");

  if (human) {
    for (const auto& [key, value] : human->items()) {
      if (key == "needs") continue;
      const std::string v = as_text(value);
      if (key == "facial_expression") {
        r.human.facial_expression = v;
      } else if (key == "eye_gaze") {
        r.human.eye_gaze = v;
      } else if (key == "head_direction") {
        r.human.head_direction = v;
      } else if (key == "gesture" || key == "gestures") {
        r.human.gesture = v;
      } else if (key == "posture") {
        r.human.posture = v;
      } else if (key == "activity") {
        r.human.activity = v;
      } else if (std::find(InternalState::physical_vocabulary().begin(),
                           InternalState::physical_vocabulary().end(),
                           key) != InternalState::physical_vocabulary().end()) {
        r.state.physical.emplace_back(key, v);
      } else if (std::find(InternalState::mental_vocabulary().begin(),
                           InternalState::mental_vocabulary().end(),
                           key) != InternalState::mental_vocabulary().end()) {
        r.state.mental.emplace_back(key, v);
      }
      // anything else is tolerated and dropped
    }
  }

  // Bare form: the minimal prompt's reply is just {need1: {...}, ...}.
  Json bare;
  if (!needs) {
    bare = Json::object();
    for (const auto& [k, v] : doc.items())
      if (looks_like_need_key(k)) bare[k] = v;
    if (!bare.empty()) needs = &bare;
  }
  if (!needs || !needs->is_object() || needs->empty())
    throw ParseError::schema("needs", "missing or empty");

  std::unordered_set<std::string> ids;
  for (const auto& [id, body] : needs->items()) {
    if (!body.is_object()) throw ParseError::schema("needs." + id, "expected an object");
    Need n;
    n.id = id;
    if (const Json* d = find_member(body, "description")) n.description = trim(as_text(*d));
    if (const Json* s = find_member(body, "suggested_robot_solution")) n.solution = trim(as_text(*s));
    if (n.description.empty())
      throw ParseError::schema("needs." + id + ".description", "missing or empty");
    if (n.solution.empty())
      throw ParseError::schema("needs." + id + ".suggested_robot_solution", "missing or empty");
    if (!ids.insert(normalize(id)).second)
      throw ParseError::schema("needs." + id, "duplicate need id");
    for (const auto& item : r.environment.possible_items) {
      if (mentions(n.solution, item)) {
        n.uses_possible_item = true;
        break;
      }
    }
    r.needs.push_back(std::move(n));
  }

  // Variant-dependent strictness. The minimal ablation prompt promises only
  // bare needs; the constraints-only prompt adds Environment; the AToM
  // prompts add the observed human and internal state.
  const bool wants_env = variant != PromptVariant::no_atom_no_constraints;
  const bool wants_atom = variant == PromptVariant::full_atom_constraints ||
                          variant == PromptVariant::atom_no_constraints;
  if (wants_env) {
    if (!env) throw ParseError::schema("Environment", "missing");
    if (r.environment.objects.empty())
      throw ParseError::schema("Environment.objects", "missing or empty");
  }
  if (wants_atom) {
    if (!human) throw ParseError::schema("human", "missing");
    if (!r.human.any()) throw ParseError::schema("human", "no observation field present");
    const std::string* emotion = r.state.find_mental("emotion");
    const std::string* intention = r.state.find_mental("intention");
    if (!emotion || emotion->empty()) throw ParseError::schema("human.emotion", "missing or empty");
    if (!intention || intention->empty())
      throw ParseError::schema("human.intention", "missing or empty");
  }

  return r;
}

bool field_identical(const NeedReport& a, const NeedReport& b) {
  return a.variant == b.variant && a.environment == b.environment && a.human == b.human &&
         a.state == b.state && a.needs == b.needs;
}

// ---------------------------------------------------------------------------
// parse_action_list

namespace {

bool key_is(const std::string& normalized_key, std::string_view word) {
  if (normalized_key.rfind(word, 0) != 0) return false;
  if (normalized_key.size() == word.size()) return true;
  return !std::isalnum(static_cast<unsigned char>(normalized_key[word.size()]));
}

}  // namespace

std::string primitive_kind(const ActionPrimitive& p) {
  if (std::holds_alternative<Navigate>(p)) return "navigate";
  if (std::holds_alternative<Move>(p)) return "move";
  return "use";
}

std::vector<ActionPlan> parse_action_list(std::string_view raw) {
  const Json doc = Json::parse(extract_json_object(raw));
  if (!doc.is_object() || doc.empty())
    throw ParseError::schema("", "expected a non-empty object of plans");

  std::vector<ActionPlan> plans;
  for (const auto& [solution_text, body] : doc.items()) {
    if (!body.is_object())
      throw ParseError::schema(solution_text, "plan entry must be an object");
    ActionPlan plan;
    plan.solution_text = solution_text;
    for (const auto& [k, v] : body.items()) {
      const std::string nk = normalize(trim(k));
      const std::string value = trim(as_text(v));
      if (key_is(nk, "navigation")) {
        if (value.empty()) throw ParseError::schema(solution_text + ".navigation", "empty target");
        plan.steps.emplace_back(Navigate{value});
      } else if (key_is(nk, "move")) {
        const size_t comma = value.find(',');
        if (comma == std::string::npos) throw ParseError::malformed_move(value);
        std::string object = trim(value.substr(0, comma));
        std::string destination = trim(value.substr(comma + 1));
        if (object.empty() || destination.empty()) throw ParseError::malformed_move(value);
        plan.steps.emplace_back(Move{std::move(object), std::move(destination)});
      } else if (key_is(nk, "use")) {
        if (value.empty()) throw ParseError::schema(solution_text + ".use", "empty target");
        plan.steps.emplace_back(Use{value});
      }
      // unknown keys tolerated
    }
    if (plan.steps.empty())
      throw ParseError::schema(solution_text, "no recognized action keys");
    if (!std::holds_alternative<Navigate>(plan.steps.front()))
      throw ParseError::schema(solution_text, "first step must be navigation");
    plans.push_back(std::move(plan));
  }
  return plans;
}

// ---------------------------------------------------------------------------
// Canonical serialization

Json report_to_json(const NeedReport& r) {
  Json env = Json::object();
  if (!r.environment.location.empty()) env["location"] = r.environment.location;
  if (!r.environment.lighting.empty()) env["lighting"] = r.environment.lighting;
  if (!r.environment.sound.empty()) env["sound"] = r.environment.sound;
  if (!r.environment.temperature.empty()) env["temperature"] = r.environment.temperature;
  if (!r.environment.objects.empty()) {
    Json objs = Json::object();
    for (const auto& [name, affordance] : r.environment.objects) objs[name] = affordance;
    env["objects"] = std::move(objs);
  }
  if (!r.environment.possible_items.empty())
    env["possible_items"] = Json{{"items", r.environment.possible_items}};

  Json human = Json::object();
  if (!r.human.facial_expression.empty()) human["facial_expression"] = r.human.facial_expression;
  if (!r.human.eye_gaze.empty()) human["eye_gaze"] = r.human.eye_gaze;
  if (!r.human.head_direction.empty()) human["head_direction"] = r.human.head_direction;
  if (!r.human.gesture.empty()) human["gesture"] = r.human.gesture;
  if (!r.human.posture.empty()) human["posture"] = r.human.posture;
  if (!r.human.activity.empty()) human["activity"] = r.human.activity;
  for (const auto& [k, v] : r.state.mental) human[k] = v;
  for (const auto& [k, v] : r.state.physical) human[k] = v;

  Json needs = Json::object();
  for (const auto& n : r.needs)
    needs[n.id] = Json{{"description", n.description}, {"suggested_robot_solution", n.solution}};
  human["needs"] = std::move(needs);

  env["human"] = std::move(human);
  return Json{{"Environment", std::move(env)}};
}

Json plan_to_json(const ActionPlan& p) {
  Json body = Json::object();
  for (const auto& step : p.steps) {
    if (const auto* nav = std::get_if<Navigate>(&step)) {
      body["navigation"] = nav->target;
    } else if (const auto* mv = std::get_if<Move>(&step)) {
      body["move"] = mv->object + ", " + mv->destination;
    } else if (const auto* use = std::get_if<Use>(&step)) {
      body["use"] = use->object;
    }
  }
  return body;
}

Json plans_to_json(const std::vector<ActionPlan>& plans) {
  Json out = Json::object();
  for (const auto& p : plans) out[p.solution_text] = plan_to_json(p);
  return out;
}

ActionPlan plan_from_json(const std::string& solution_text, const Json& body) {
  Json wrapper = Json::object();
  wrapper[solution_text] = body;
  return parse_action_list(wrapper.dump()).front();
}

// ---------------------------------------------------------------------------
// Scenes / scenarios

std::string to_string(Scene s) {
  switch (s) {
    case Scene::kitchen: return "kitchen";
    case Scene::office: return "office";
    case Scene::home_gym: return "home_gym";
    case Scene::living_room: return "living_room";
  }
  return "unknown";
}

Scene parse_scene(std::string_view s) {
  const std::string n = normalize(s);
  if (n == "kitchen") return Scene::kitchen;
  if (n == "office") return Scene::office;
  if (n == "home_gym") return Scene::home_gym;
  if (n == "living_room") return Scene::living_room;
  throw ParseError::schema("scene", "unknown scene: " + std::string(s));
}

ScenarioSpec scenario_from_json(const Json& j) {
  ScenarioSpec s;
  s.id = j.at("id").get<int>();
  if (s.id < 1 || s.id > 16) throw ParseError::schema("id", "scenario id out of range 1..16");
  s.scene = parse_scene(j.at("scene").get<std::string>());
  s.image_ref = j.value("image_ref", "");
  for (const auto& v : j.at("visible_objects")) s.visible_objects.push_back(v.get<std::string>());
  for (const auto& v : j.at("auxiliary_objects"))
    s.auxiliary_objects.push_back(v.get<std::string>());
  if (s.auxiliary_objects.size() < 10 || s.auxiliary_objects.size() > 18)
    throw ParseError::schema("auxiliary_objects", "expected 10..18 entries, got " +
                                                      std::to_string(s.auxiliary_objects.size()));
  s.annotation = j.value("annotation", "");
  return s;
}

Json scenario_to_json(const ScenarioSpec& s) {
  return Json{{"id", s.id},
              {"scene", to_string(s.scene)},
              {"image_ref", s.image_ref},
              {"visible_objects", s.visible_objects},
              {"auxiliary_objects", s.auxiliary_objects},
              {"annotation", s.annotation}};
}

}  // namespace atom::core
