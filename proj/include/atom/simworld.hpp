#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "atom/core_model.hpp"
#include "atom/text.hpp"

namespace atom::sim {

class SimError : public std::runtime_error {
 public:
  enum class Kind {
    ObjectNotFound,
    ScanFailed,
    GroundPickup,
    GripperOccupied,
    NotGraspable,
    NotUsable,
    NotAdjacent,
    UnknownDestination,
    HumanContact,
    NoSkill,
    InvalidWorld,
  };
  SimError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }
  static const char* name(Kind kind);

 private:
  Kind kind_;
};

struct UseEffect {
  enum class Kind { set, toggle };
  Kind kind = Kind::set;
  std::string from;  // toggle only
  std::string to;

  /// set -> `to`; toggle -> flips between `from` and `to`.
  std::string apply(const std::optional<std::string>& current) const;
  bool operator==(const UseEffect&) const = default;
};

struct ObjectSpec {
  std::string name;
  std::string location;
  bool on_floor = false;
  bool graspable = true;
  bool usable = false;
  std::optional<UseEffect> use_effect;  // required when usable
  std::string category;                 // skill-lookup key
  std::optional<std::string> state;

  bool operator==(const ObjectSpec&) const = default;
};

/// Discrete household world: a location graph, declared objects, the human,
/// and a single-gripper robot.
struct World {
  std::vector<std::string> locations;
  std::vector<std::pair<std::string, std::string>> adjacency;
  std::vector<ObjectSpec> objects;
  std::string human_location;
  std::string robot_location;
  std::optional<std::string> held;
  std::uint64_t rng_seed = 0;

  const ObjectSpec* find(const std::string& declared_name) const;
  ObjectSpec* find(const std::string& declared_name);
  std::vector<std::string> object_names() const;
  bool has_location(const std::string& id) const;
  /// Throws SimError(InvalidWorld) on a malformed world.
  void validate() const;
};

struct NoiseConfig {
  double p_scan_fail = 0;
  double p_grasp_fail = 0;
  double p_place_fail = 0;
  double p_use_fail = 0;

  void validate() const;
  static NoiseConfig zero() { return {}; }
};

struct StepOutcome {
  core::ActionPrimitive primitive;
  bool ok = false;
  std::string failure_reason;          // empty when ok
  std::vector<std::string> deltas;     // human-readable world changes
};

struct ExecTrace {
  std::vector<StepOutcome> steps;
  bool success = false;  // true iff every step ok
};

/// Resolves a free-text name against the world inventory (normalized exact,
/// then token matching). Throws SimError(ObjectNotFound) on a miss.
const ObjectSpec& scan_for(const World& world, const std::string& name);

/// As above, plus the scan checkpoint: consumes one noise draw after a
/// successful resolution and throws SimError(ScanFailed) with probability
/// noise.p_scan_fail.
const ObjectSpec& scan_for(const World& world, const std::string& name, const NoiseConfig& noise,
                           text::Rng& rng);

/// One stochastic checkpoint per scan/grasp/place/use; navigation after a
/// successful scan never fails.
StepOutcome execute_primitive(World& world, const core::ActionPrimitive& primitive,
                              const NoiseConfig& noise, text::Rng& rng);

/// Runs steps in order, stopping at the first failure. Deterministic given
/// (world, plan, noise, seed); seed defaults to world.rng_seed.
ExecTrace execute_plan(World world_state, const core::ActionPlan& plan, const NoiseConfig& noise,
                       std::optional<std::uint64_t> seed = std::nullopt);

/// Fraction of independently seeded trials ending in success.
double monte_carlo_success(const World& world, const core::ActionPlan& plan,
                           const NoiseConfig& noise, int trials, std::uint64_t seed);

std::string trace_to_jsonl(const ExecTrace& trace);

// ---------------------------------------------------------------------------
// Skill retrieval (visual-feature matching abstracted to category labels)

struct SkillLibrary {
  std::map<std::string, std::string> demos;            // category -> demo id
  std::vector<std::vector<std::string>> groups;        // interchangeable categories

  static SkillLibrary load(const std::filesystem::path& file);
};

/// Exact category first, then any demo from the category's similarity group.
/// Throws SimError(NoSkill) for uncovered categories.
std::string retrieve_skill(const ObjectSpec& object, const SkillLibrary& library);

// ---------------------------------------------------------------------------
// Scenario files (ScenarioSpec + authored world in one JSON document)

struct ScenarioFile {
  core::ScenarioSpec spec;
  World world;
};

World world_from_json(const core::Json& j);
core::Json world_to_json(const World& w);
ScenarioFile load_scenario(const std::filesystem::path& file);
/// All scenarios/task_*.json in id order.
std::vector<ScenarioFile> load_all_scenarios(const std::filesystem::path& dir);

}  // namespace atom::sim
