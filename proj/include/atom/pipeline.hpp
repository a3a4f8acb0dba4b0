#pragma once

#include <string>
#include <vector>

#include "atom/constraint_engine.hpp"
#include "atom/core_model.hpp"
#include "atom/llm_gateway.hpp"
#include "atom/prompt_registry.hpp"
#include "atom/simworld.hpp"

namespace atom::pipe {

class PipelineError : public std::runtime_error {
 public:
  enum class Kind { ExhaustedRepairs, SolutionPlanMismatch };
  PipelineError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

struct PipelineOptions {
  int repair_limit = 2;  // corrective re-asks after the first attempt
  /// Default keeps flagged solutions in the run (findings recorded); strict
  /// mode drops them before decomposition.
  bool drop_flagged_solutions = false;
};

struct Finding {
  std::string stage;  // "solution" or "plan"
  int need_index = 0;
  rules::Violation violation;
};

struct PipelineRun {
  int scenario_id = 0;
  PromptVariant variant = PromptVariant::full_atom_constraints;
  core::NeedReport report;
  /// One plan per decomposed solution, in need order. `plan_need_index`
  /// aligns plans with the needs that survived constraint checking.
  std::vector<core::ActionPlan> plans;
  std::vector<int> plan_need_index;
  std::vector<Finding> violations;
  int attempts = 0;  // detection gateway calls, <= 1 + repair_limit
  std::string started_at;
  std::string finished_at;
};

/// Runs the fused detect -> check -> decompose -> check chain. Observation,
/// internal state, and needs come back joined in one structured reply; the
/// stage boundary survives as the distinct NeedReport fields.
class Pipeline {
 public:
  Pipeline(llm::Gateway& gateway, const prompts::PromptRegistry& registry,
           core::RobotConstraints constraints = {}, rules::Lexicon lexicon = rules::Lexicon::builtin(),
           PipelineOptions options = {});

  /// Sends the detection prompt with the scenario image; strips code fences
  /// and re-asks with a corrective line on parse failures.
  core::NeedReport detect_needs(const core::ScenarioSpec& scenario, PromptVariant variant);

  /// Renders the action request over the report's solutions (in order),
  /// parses the reply and enforces the solution/plan pairing. scenario_id
  /// routes the replay backend; the remote backend ignores it.
  std::vector<core::ActionPlan> decompose(const core::NeedReport& report, int scenario_id = 0);

  PipelineRun run_full(const sim::ScenarioFile& scenario, PromptVariant variant);

  /// Gateway calls made by the most recent detect_needs.
  int last_attempts() const { return last_attempts_; }

 private:
  std::vector<core::ActionPlan> decompose_solutions(const std::vector<std::string>& solutions,
                                                    int scenario_id);

  llm::Gateway& gateway_;
  const prompts::PromptRegistry& registry_;
  core::RobotConstraints constraints_;
  rules::Lexicon lexicon_;
  PipelineOptions options_;
  int last_attempts_ = 0;
};

/// Deterministic artifact (stable key order); `timestamps` is the only
/// run-varying member.
core::Json run_to_json(const PipelineRun& run);

std::string strip_code_fences(const std::string& text);
std::string iso_utc_now();

}  // namespace atom::pipe
