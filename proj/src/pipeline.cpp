#include "atom/pipeline.hpp"

#include <chrono>
#include <ctime>
#include <sstream>

namespace atom::pipe {

using core::ActionPlan;
using core::Json;
using core::NeedReport;
using core::ParseError;

Pipeline::Pipeline(llm::Gateway& gateway, const prompts::PromptRegistry& registry,
                   core::RobotConstraints constraints, rules::Lexicon lexicon,
                   PipelineOptions options)
    : gateway_(gateway),
      registry_(registry),
      constraints_(std::move(constraints)),
      lexicon_(std::move(lexicon)),
      options_(options) {}

std::string strip_code_fences(const std::string& text) {
  std::string out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const std::string trimmed = text::trim(line);
    if (trimmed.rfind("```", 0) == 0) continue;
    out += line;
    out += '\n';
  }
  return out;
}

std::string iso_utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

NeedReport Pipeline::detect_needs(const core::ScenarioSpec& scenario, PromptVariant variant) {
  if (!is_detection_variant(variant))
    throw std::invalid_argument("detect_needs: " + to_string(variant) +
                                " is not a detection variant");

  llm::ChatRequest request;
  request.system_text = registry_.get(variant).text;
  request.image_ref = scenario.image_ref;
  request.scenario_id = scenario.id;
  request.variant = variant;

  last_attempts_ = 0;
  std::string last_error = "no attempt made";
  while (last_attempts_ <= options_.repair_limit) {
    ++last_attempts_;
    const llm::ChatResponse resp = gateway_.complete(request);
    try {
      return core::parse_need_report(resp.text, variant);
    } catch (const ParseError& first) {
      try {
        return core::parse_need_report(strip_code_fences(resp.text), variant);
      } catch (const ParseError& second) {
        last_error = second.what();
      }
    }
    request.user_text += "Your previous reply could not be parsed; reply with valid JSON only.\n";
  }
  throw PipelineError(PipelineError::Kind::ExhaustedRepairs,
                      "detection parse failed after " + std::to_string(last_attempts_) +
                          " attempts: " + last_error);
}

std::vector<ActionPlan> Pipeline::decompose_solutions(const std::vector<std::string>& solutions,
                                                      int scenario_id) {
  llm::ChatRequest request;
  request.user_text = registry_.render_action_request(solutions);
  request.scenario_id = scenario_id;
  request.variant = PromptVariant::action_generation;

  int attempts = 0;
  std::string last_error = "no attempt made";
  while (attempts <= options_.repair_limit) {
    ++attempts;
    const llm::ChatResponse resp = gateway_.complete(request);
    try {
      std::vector<ActionPlan> plans = core::parse_action_list(resp.text);
      if (plans.size() != solutions.size())
        throw PipelineError(PipelineError::Kind::SolutionPlanMismatch,
                            "expected " + std::to_string(solutions.size()) + " plans, parsed " +
                                std::to_string(plans.size()));
      return plans;
    } catch (const ParseError& e) {
      last_error = e.what();
    }
    request.user_text += "Your previous reply could not be parsed; reply with valid JSON only.\n";
  }
  throw PipelineError(PipelineError::Kind::ExhaustedRepairs,
                      "action parse failed after " + std::to_string(attempts) +
                          " attempts: " + last_error);
}

std::vector<ActionPlan> Pipeline::decompose(const NeedReport& report, int scenario_id) {
  if (report.needs.empty()) throw std::invalid_argument("decompose: report has no needs");
  std::vector<std::string> solutions;
  for (const auto& n : report.needs) solutions.push_back(n.solution);
  return decompose_solutions(solutions, scenario_id);
}

PipelineRun Pipeline::run_full(const sim::ScenarioFile& scenario, PromptVariant variant) {
  PipelineRun run;
  run.scenario_id = scenario.spec.id;
  run.variant = variant;
  run.started_at = iso_utc_now();

  run.report = detect_needs(scenario.spec, variant);
  run.attempts = last_attempts_;

  // Solution-text checks. Findings are recorded either way; strict mode also
  // drops the flagged solutions from decomposition.
  std::vector<int> surviving;
  for (size_t i = 0; i < run.report.needs.size(); ++i) {
    const auto findings =
        rules::check_solution(run.report.needs[i].solution, run.report.environment, constraints_,
                              lexicon_);
    for (const auto& v : findings)
      run.violations.push_back({"solution", static_cast<int>(i), v});
    if (!options_.drop_flagged_solutions || findings.empty())
      surviving.push_back(static_cast<int>(i));
  }

  if (!surviving.empty()) {
    std::vector<std::string> solutions;
    for (int idx : surviving) solutions.push_back(run.report.needs[idx].solution);
    run.plans = decompose_solutions(solutions, scenario.spec.id);
    run.plan_need_index = surviving;

    for (size_t p = 0; p < run.plans.size(); ++p) {
      const auto findings = rules::check_plan(run.plans[p], scenario.world, constraints_,
                                              run.report.environment.possible_items);
      for (const auto& v : findings)
        run.violations.push_back({"plan", run.plan_need_index[p], v});
    }
  }

  run.finished_at = iso_utc_now();
  return run;
}

Json run_to_json(const PipelineRun& run) {
  Json violations = Json::array();
  for (const auto& f : run.violations) {
    violations.push_back(Json{{"stage", f.stage},
                              {"need_index", f.need_index},
                              {"code", rules::to_string(f.violation.code)},
                              {"subject", f.violation.subject},
                              {"detail", f.violation.detail}});
  }
  Json plans = Json::array();
  for (size_t i = 0; i < run.plans.size(); ++i) {
    plans.push_back(Json{{"need_index", run.plan_need_index.empty()
                                            ? static_cast<int>(i)
                                            : run.plan_need_index[i]},
                         {"solution_text", run.plans[i].solution_text},
                         {"steps", core::plan_to_json(run.plans[i])}});
  }
  return Json{{"scenario_id", run.scenario_id},
              {"variant", to_string(run.variant)},
              {"attempts", run.attempts},
              {"report", core::report_to_json(run.report)},
              {"raw_reply", run.report.raw_text},
              {"plans", plans},
              {"violations", violations},
              {"timestamps", Json{{"started", run.started_at}, {"finished", run.finished_at}}}};
}

}  // namespace atom::pipe
