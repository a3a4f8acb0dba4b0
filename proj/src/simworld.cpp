#include "atom/simworld.hpp"

#include <algorithm>
#include <unordered_set>

#include "atom/data_paths.hpp"
#include "atom/names.hpp"

namespace atom::sim {

using core::ActionPlan;
using core::ActionPrimitive;
using core::Json;
using core::Move;
using core::Navigate;
using core::Use;

const char* SimError::name(Kind kind) {
  switch (kind) {
    case Kind::ObjectNotFound: return "object_not_found";
    case Kind::ScanFailed: return "scan_failed";
    case Kind::GroundPickup: return "ground_pickup";
    case Kind::GripperOccupied: return "gripper_occupied";
    case Kind::NotGraspable: return "not_graspable";
    case Kind::NotUsable: return "not_usable";
    case Kind::NotAdjacent: return "not_adjacent";
    case Kind::UnknownDestination: return "unknown_destination";
    case Kind::HumanContact: return "human_contact";
    case Kind::NoSkill: return "no_skill";
    case Kind::InvalidWorld: return "invalid_world";
  }
  return "unknown";
}

std::string UseEffect::apply(const std::optional<std::string>& current) const {
  if (kind == Kind::set) return to;
  return (current && *current == to) ? from : to;
}

// ---------------------------------------------------------------------------
// World

const ObjectSpec* World::find(const std::string& declared_name) const {
  for (const auto& o : objects)
    if (o.name == declared_name) return &o;
  return nullptr;
}

ObjectSpec* World::find(const std::string& declared_name) {
  return const_cast<ObjectSpec*>(static_cast<const World*>(this)->find(declared_name));
}

std::vector<std::string> World::object_names() const {
  std::vector<std::string> out;
  out.reserve(objects.size());
  for (const auto& o : objects) out.push_back(o.name);
  return out;
}

bool World::has_location(const std::string& id) const {
  return std::find(locations.begin(), locations.end(), id) != locations.end();
}

void World::validate() const {
  if (!has_location(robot_location))
    throw SimError(SimError::Kind::InvalidWorld, "robot location unknown: " + robot_location);
  if (!has_location(human_location))
    throw SimError(SimError::Kind::InvalidWorld, "human location unknown: " + human_location);
  std::unordered_set<std::string> seen;
  for (const auto& o : objects) {
    if (!seen.insert(text::normalize(o.name)).second)
      throw SimError(SimError::Kind::InvalidWorld, "duplicate object name: " + o.name);
    if (!has_location(o.location))
      throw SimError(SimError::Kind::InvalidWorld,
                     "object '" + o.name + "' at unknown location: " + o.location);
    if (o.usable && !o.use_effect)
      throw SimError(SimError::Kind::InvalidWorld, "usable object lacks use_effect: " + o.name);
  }
  if (held && !find(*held))
    throw SimError(SimError::Kind::InvalidWorld, "held object not in world: " + *held);
}

void NoiseConfig::validate() const {
  for (double p : {p_scan_fail, p_grasp_fail, p_place_fail, p_use_fail})
    if (!(p >= 0.0 && p <= 1.0))
      throw std::invalid_argument("noise probabilities must be in [0,1]");
}

// ---------------------------------------------------------------------------
// Scan / execute

const ObjectSpec& scan_for(const World& world, const std::string& name) {
  names::NameIndex index(world.object_names());
  auto hit = index.resolve(name);
  if (!hit) throw SimError(SimError::Kind::ObjectNotFound, "no such object: " + name);
  return *world.find(*hit);
}

const ObjectSpec& scan_for(const World& world, const std::string& name, const NoiseConfig& noise,
                           text::Rng& rng) {
  const ObjectSpec& obj = scan_for(world, name);
  if (rng.next_double() < noise.p_scan_fail)
    throw SimError(SimError::Kind::ScanFailed, "scan failed for: " + name);
  return obj;
}

namespace {

std::string resolve_destination(const World& world, const std::string& destination) {
  if (names::refers_to_person(destination)) return world.human_location;
  const ObjectSpec& target = scan_for(world, destination);  // may throw ObjectNotFound
  return target.location;
}

StepOutcome fail(const ActionPrimitive& p, SimError::Kind kind) {
  StepOutcome out;
  out.primitive = p;
  out.ok = false;
  out.failure_reason = SimError::name(kind);
  return out;
}

}  // namespace

StepOutcome execute_primitive(World& world, const ActionPrimitive& primitive,
                              const NoiseConfig& noise, text::Rng& rng) {
  StepOutcome out;
  out.primitive = primitive;

  if (const auto* nav = std::get_if<Navigate>(&primitive)) {
    std::string target_loc;
    if (names::refers_to_person(nav->target)) {
      // person re-identification abstracted to id equality
      target_loc = world.human_location;
    } else {
      try {
        const ObjectSpec& obj = scan_for(world, nav->target);
        target_loc = obj.location;
      } catch (const SimError& e) {
        return fail(primitive, e.kind());
      }
    }
    if (rng.next_double() < noise.p_scan_fail) return fail(primitive, SimError::Kind::ScanFailed);
    out.deltas.push_back("robot: " + world.robot_location + " -> " + target_loc);
    world.robot_location = target_loc;
    out.ok = true;
    return out;
  }

  if (const auto* mv = std::get_if<Move>(&primitive)) {
    if (world.held) return fail(primitive, SimError::Kind::GripperOccupied);
    ObjectSpec* obj = nullptr;
    try {
      obj = world.find(scan_for(world, mv->object).name);
    } catch (const SimError& e) {
      return fail(primitive, e.kind());
    }
    if (obj->location != world.robot_location) return fail(primitive, SimError::Kind::NotAdjacent);
    if (!obj->graspable) return fail(primitive, SimError::Kind::NotGraspable);
    if (obj->on_floor) return fail(primitive, SimError::Kind::GroundPickup);
    std::string dest_loc;
    try {
      dest_loc = resolve_destination(world, mv->destination);
    } catch (const SimError&) {
      return fail(primitive, SimError::Kind::UnknownDestination);
    }
    if (rng.next_double() < noise.p_grasp_fail) {
      out.failure_reason = "grasp_failed";
      return out;
    }
    world.held = obj->name;
    out.deltas.push_back("grasp: " + obj->name);
    out.deltas.push_back("robot: " + world.robot_location + " -> " + dest_loc);
    world.robot_location = dest_loc;
    if (rng.next_double() < noise.p_place_fail) {
      out.failure_reason = "place_failed";
      return out;  // object remains held; plan aborts
    }
    obj->location = dest_loc;
    world.held.reset();
    out.deltas.push_back("release: " + obj->name + " at " + dest_loc);
    out.ok = true;
    return out;
  }

  const auto& use = std::get<Use>(primitive);
  if (names::refers_to_person(use.object)) return fail(primitive, SimError::Kind::HumanContact);
  ObjectSpec* obj = nullptr;
  try {
    obj = world.find(scan_for(world, use.object).name);
  } catch (const SimError& e) {
    return fail(primitive, e.kind());
  }
  if (obj->location != world.robot_location) return fail(primitive, SimError::Kind::NotAdjacent);
  if (!obj->usable || !obj->use_effect) return fail(primitive, SimError::Kind::NotUsable);
  if (rng.next_double() < noise.p_use_fail) {
    out.failure_reason = "use_failed";
    return out;
  }
  const std::string next = obj->use_effect->apply(obj->state);
  out.deltas.push_back("state(" + obj->name + "): " + obj->state.value_or("-") + " -> " + next);
  obj->state = next;
  out.ok = true;
  return out;
}

ExecTrace execute_plan(World world_state, const ActionPlan& plan, const NoiseConfig& noise,
                       std::optional<std::uint64_t> seed) {
  if (plan.steps.empty()) throw std::invalid_argument("execute_plan: empty plan");
  noise.validate();
  text::Rng rng(seed.value_or(world_state.rng_seed));
  ExecTrace trace;
  trace.success = true;
  for (const auto& step : plan.steps) {
    StepOutcome outcome = execute_primitive(world_state, step, noise, rng);
    const bool ok = outcome.ok;
    trace.steps.push_back(std::move(outcome));
    if (!ok) {
      trace.success = false;
      break;
    }
  }
  return trace;
}

double monte_carlo_success(const World& world, const ActionPlan& plan, const NoiseConfig& noise,
                           int trials, std::uint64_t seed) {
  if (trials < 1) throw std::invalid_argument("monte_carlo_success: trials must be >= 1");
  noise.validate();
  int successes = 0;
  for (int t = 0; t < trials; ++t) {
    ExecTrace trace =
        execute_plan(world, plan, noise, text::Rng::derive(seed, static_cast<std::uint64_t>(t)));
    if (trace.success) ++successes;
  }
  return static_cast<double>(successes) / static_cast<double>(trials);
}

std::string trace_to_jsonl(const ExecTrace& trace) {
  std::string out;
  for (const auto& step : trace.steps) {
    Json j = Json::object();
    j["primitive"] = core::primitive_kind(step.primitive);
    if (const auto* nav = std::get_if<Navigate>(&step.primitive)) {
      j["target"] = nav->target;
    } else if (const auto* mv = std::get_if<Move>(&step.primitive)) {
      j["object"] = mv->object;
      j["destination"] = mv->destination;
    } else if (const auto* use = std::get_if<Use>(&step.primitive)) {
      j["object"] = use->object;
    }
    j["outcome"] = step.ok ? "ok" : "failed";
    if (!step.ok) j["reason"] = step.failure_reason;
    if (!step.deltas.empty()) j["deltas"] = step.deltas;
    out += j.dump();
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Skills

SkillLibrary SkillLibrary::load(const std::filesystem::path& file) {
  Json doc = Json::parse(read_file(file));
  SkillLibrary lib;
  for (const auto& [category, demo] : doc.at("demos").items())
    lib.demos[text::normalize(category)] = demo.get<std::string>();
  for (const auto& group : doc.at("groups")) {
    std::vector<std::string> g;
    for (const auto& c : group) g.push_back(text::normalize(c.get<std::string>()));
    lib.groups.push_back(std::move(g));
  }
  return lib;
}

std::string retrieve_skill(const ObjectSpec& object, const SkillLibrary& library) {
  if (library.demos.empty()) throw std::invalid_argument("retrieve_skill: empty library");
  const std::string category =
      text::normalize(object.category.empty() ? object.name : object.category);
  if (auto it = library.demos.find(category); it != library.demos.end()) return it->second;
  for (const auto& group : library.groups) {
    if (std::find(group.begin(), group.end(), category) == group.end()) continue;
    for (const auto& sibling : group)
      if (auto it = library.demos.find(sibling); it != library.demos.end()) return it->second;
  }
  throw SimError(SimError::Kind::NoSkill, "no demonstration covers category: " + category);
}

// ---------------------------------------------------------------------------
// JSON

namespace {

UseEffect effect_from_json(const Json& j) {
  UseEffect e;
  const std::string type = j.at("type").get<std::string>();
  if (type == "set") {
    e.kind = UseEffect::Kind::set;
    e.to = j.at("value").get<std::string>();
  } else if (type == "toggle") {
    e.kind = UseEffect::Kind::toggle;
    e.from = j.at("from").get<std::string>();
    e.to = j.at("to").get<std::string>();
  } else {
    throw SimError(SimError::Kind::InvalidWorld, "unknown use_effect type: " + type);
  }
  return e;
}

Json effect_to_json(const UseEffect& e) {
  if (e.kind == UseEffect::Kind::set) return Json{{"type", "set"}, {"value", e.to}};
  return Json{{"type", "toggle"}, {"from", e.from}, {"to", e.to}};
}

}  // namespace

World world_from_json(const Json& j) {
  World w;
  for (const auto& l : j.at("locations")) w.locations.push_back(l.get<std::string>());
  if (j.contains("adjacency"))
    for (const auto& pair : j.at("adjacency"))
      w.adjacency.emplace_back(pair.at(0).get<std::string>(), pair.at(1).get<std::string>());
  for (const auto& jo : j.at("objects")) {
    ObjectSpec o;
    o.name = jo.at("name").get<std::string>();
    o.location = jo.at("location").get<std::string>();
    o.on_floor = jo.value("on_floor", false);
    o.graspable = jo.value("graspable", true);
    o.usable = jo.value("usable", false);
    if (jo.contains("use_effect")) o.use_effect = effect_from_json(jo.at("use_effect"));
    o.category = jo.value("category", "");
    if (jo.contains("state")) o.state = jo.at("state").get<std::string>();
    w.objects.push_back(std::move(o));
  }
  w.human_location = j.at("human").get<std::string>();
  w.robot_location = j.at("robot").at("location").get<std::string>();
  if (j.at("robot").contains("held") && !j.at("robot").at("held").is_null())
    w.held = j.at("robot").at("held").get<std::string>();
  w.rng_seed = j.value("rng_seed", 0ull);
  w.validate();
  return w;
}

Json world_to_json(const World& w) {
  Json objs = Json::array();
  for (const auto& o : w.objects) {
    Json jo = Json{{"name", o.name}, {"location", o.location}};
    if (o.on_floor) jo["on_floor"] = true;
    if (!o.graspable) jo["graspable"] = false;
    if (o.usable) jo["usable"] = true;
    if (o.use_effect) jo["use_effect"] = effect_to_json(*o.use_effect);
    if (!o.category.empty()) jo["category"] = o.category;
    if (o.state) jo["state"] = *o.state;
    objs.push_back(std::move(jo));
  }
  Json adj = Json::array();
  for (const auto& [a, b] : w.adjacency) adj.push_back(Json::array({a, b}));
  Json robot = Json{{"location", w.robot_location}};
  if (w.held) robot["held"] = *w.held;
  return Json{{"locations", w.locations}, {"adjacency", adj},      {"objects", objs},
              {"human", w.human_location}, {"robot", robot},        {"rng_seed", w.rng_seed}};
}

ScenarioFile load_scenario(const std::filesystem::path& file) {
  Json doc = Json::parse(read_file(file));
  ScenarioFile out;
  out.spec = core::scenario_from_json(doc.at("scenario"));
  out.world = world_from_json(doc.at("world"));
  return out;
}

std::vector<ScenarioFile> load_all_scenarios(const std::filesystem::path& dir) {
  std::vector<ScenarioFile> out;
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (name.rfind("task_", 0) == 0 && entry.path().extension() == ".json")
      files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) out.push_back(load_scenario(f));
  return out;
}

}  // namespace atom::sim
