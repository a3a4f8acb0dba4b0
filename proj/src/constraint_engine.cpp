#include "atom/constraint_engine.hpp"

#include <algorithm>

#include "atom/data_paths.hpp"
#include "atom/names.hpp"
#include "atom/text.hpp"

namespace atom::rules {

using core::ActionPlan;
using core::Move;
using core::Navigate;
using core::Use;

std::string to_string(Violation::Code code) {
  switch (code) {
    case Violation::Code::GroundPickup: return "GroundPickup";
    case Violation::Code::SecondArmNeeded: return "SecondArmNeeded";
    case Violation::Code::VerbalSolution: return "VerbalSolution";
    case Violation::Code::ForbiddenDevice: return "ForbiddenDevice";
    case Violation::Code::NoAction: return "NoAction";
    case Violation::Code::UnknownObject: return "UnknownObject";
    case Violation::Code::HumanContact: return "HumanContact";
  }
  return "Unknown";
}

// ---------------------------------------------------------------------------
// Lexicon

const Lexicon& Lexicon::builtin() {
  static const Lexicon kLexicon = [] {
    Lexicon l;
    l.verbal_verbs = {"tell",   "say",      "remind", "suggest", "ask",  "inform",
                      "advise", "recommend", "notify", "speak",   "talk", "announce",
                      "warn",   "instruct"};
    l.action_verbs = {
        "retrieve", "provide", "locate",  "navigate", "fetch",   "position", "organize",
        "hand",     "adjust",  "bring",   "turn",     "place",   "open",     "close",
        "activate", "install", "reposition", "replace", "offer", "deliver",  "prepare",
        "wipe",     "find",    "move",    "carry",    "grab",    "pick",     "put",
        "set",      "clean",   "arrange", "nudge",    "use",     "clear",    "fold",
        "press",    "push",    "pull",    "pour",     "lift",    "hold",     "dim",
        "switch",   "gather",  "collect", "serve",    "simulate"};
    l.forbidden_devices = {"computer", "phone", "laptop"};
    l.device_compounds = {"stand", "holder", "mount", "case", "desk", "charger", "tripod"};
    return l;
  }();
  return kLexicon;
}

Lexicon Lexicon::load(const std::filesystem::path& file) {
  const core::Json doc = core::Json::parse(read_file(file));
  Lexicon l;
  auto fill = [&](const char* key, std::set<std::string>& out) {
    for (const auto& w : doc.at(key)) out.insert(text::normalize(w.get<std::string>()));
  };
  fill("verbal_verbs", l.verbal_verbs);
  fill("action_verbs", l.action_verbs);
  fill("forbidden_devices", l.forbidden_devices);
  fill("device_compounds", l.device_compounds);
  return l;
}

namespace {

// Surface-form variants so the word lists stay short: "placing" and "placed"
// both resolve to "place".
std::vector<std::string> stems(const std::string& token) {
  std::vector<std::string> out{token};
  const size_t n = token.size();
  if (n > 3 && token.back() == 's') out.push_back(token.substr(0, n - 1));
  if (n > 4 && token.compare(n - 3, 3, "ing") == 0) {
    out.push_back(token.substr(0, n - 3));
    out.push_back(token.substr(0, n - 3) + "e");
  }
  if (n > 3 && token.compare(n - 2, 2, "ed") == 0) {
    out.push_back(token.substr(0, n - 2));
    out.push_back(token.substr(0, n - 2) + "e");
  }
  return out;
}

bool in_set(const std::set<std::string>& words, const std::string& token) {
  for (const auto& s : stems(token))
    if (words.count(s)) return true;
  return false;
}

const std::string* match_in_set(const std::set<std::string>& words, const std::string& token) {
  for (const auto& s : stems(token)) {
    auto it = words.find(s);
    if (it != words.end()) return &*it;
  }
  return nullptr;
}

}  // namespace

// ---------------------------------------------------------------------------
// check_solution

std::vector<Violation> check_solution(const std::string& solution,
                                      const core::EnvironmentObservation& env,
                                      const core::RobotConstraints& constraints,
                                      const Lexicon& lexicon) {
  (void)env;  // reserved; the token rules need no environment context
  std::vector<Violation> findings;
  const auto tokens = text::tokenize(solution);

  bool has_action = false;
  std::string first_verbal;
  for (const auto& t : tokens) {
    if (in_set(lexicon.action_verbs, t)) has_action = true;
    if (first_verbal.empty() && in_set(lexicon.verbal_verbs, t)) first_verbal = t;
  }

  if (!constraints.verbal_allowed && !first_verbal.empty() && !has_action)
    findings.push_back({Violation::Code::VerbalSolution, first_verbal,
                        "verbal-only solution with no physical action"});

  std::set<std::string> devices = lexicon.forbidden_devices;
  devices.insert(constraints.forbidden_device_classes.begin(),
                 constraints.forbidden_device_classes.end());
  std::set<std::string> flagged;
  for (size_t i = 0; i < tokens.size(); ++i) {
    const std::string* device = match_in_set(devices, tokens[i]);
    if (!device) continue;
    // "phone stand" targets the stand, not the phone
    if (i + 1 < tokens.size() && in_set(lexicon.device_compounds, tokens[i + 1])) continue;
    if (flagged.insert(*device).second)
      findings.push_back({Violation::Code::ForbiddenDevice, *device,
                          "solution interacts with forbidden device \"" + tokens[i] + "\""});
  }

  if (!has_action && first_verbal.empty())
    findings.push_back(
        {Violation::Code::NoAction, solution, "no action verb from the lexicon appears"});

  return findings;
}

std::vector<Violation> check_report_quota(const core::NeedReport& report,
                                          const EngineOptions& options) {
  std::vector<Violation> findings;
  if (!options.strict_quota) return findings;
  const int needs = static_cast<int>(report.needs.size());
  int possible_uses = 0;
  for (const auto& n : report.needs)
    if (n.uses_possible_item) ++possible_uses;
  if (needs != options.required_needs)
    findings.push_back({Violation::Code::NoAction, "needs",
                        "prompt requires " + std::to_string(options.required_needs) +
                            " needs, report has " + std::to_string(needs)});
  if (possible_uses < options.required_possible_item_uses)
    findings.push_back({Violation::Code::NoAction, "possible_items",
                        "prompt requires " + std::to_string(options.required_possible_item_uses) +
                            " solutions using possible items, report has " +
                            std::to_string(possible_uses)});
  return findings;
}

// ---------------------------------------------------------------------------
// check_plan

std::vector<Violation> check_plan(const ActionPlan& plan, const sim::World& world,
                                  const core::RobotConstraints& constraints,
                                  const std::vector<std::string>& extra_inventory) {
  std::vector<Violation> findings;
  std::vector<std::string> inventory = world.object_names();
  inventory.insert(inventory.end(), extra_inventory.begin(), extra_inventory.end());
  const names::NameIndex index(inventory);

  auto known = [&](const std::string& name) { return index.resolve(name).has_value(); };

  bool previous_was_move = false;
  for (const auto& step : plan.steps) {
    if (const auto* nav = std::get_if<Navigate>(&step)) {
      if (!names::refers_to_person(nav->target) && !known(nav->target))
        findings.push_back({Violation::Code::UnknownObject, nav->target,
                            "navigation target not in any inventory"});
      previous_was_move = false;
    } else if (const auto* mv = std::get_if<Move>(&step)) {
      if (previous_was_move && constraints.arm_count <= 1)
        findings.push_back({Violation::Code::SecondArmNeeded, mv->object,
                            "second move with no navigation between grasps"});
      auto resolved = index.resolve(mv->object);
      if (!resolved) {
        findings.push_back(
            {Violation::Code::UnknownObject, mv->object, "moved object not in any inventory"});
      } else if (const sim::ObjectSpec* obj = world.find(*resolved);
                 obj && obj->on_floor && !constraints.can_reach_floor) {
        findings.push_back({Violation::Code::GroundPickup, obj->name,
                            "object rests on the floor, out of arm reach"});
      }
      if (!names::refers_to_person(mv->destination) && !known(mv->destination))
        findings.push_back({Violation::Code::UnknownObject, mv->destination,
                            "move destination not in any inventory"});
      previous_was_move = true;
    } else if (const auto* use = std::get_if<Use>(&step)) {
      if (names::refers_to_person(use->object)) {
        findings.push_back(
            {Violation::Code::HumanContact, use->object, "use primitive targets the person"});
      } else if (!known(use->object)) {
        findings.push_back(
            {Violation::Code::UnknownObject, use->object, "used object not in any inventory"});
      }
      previous_was_move = false;
    }
  }
  return findings;
}

}  // namespace atom::rules
