#include "atom/cli_commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "atom/core_model.hpp"
#include "atom/data_paths.hpp"
#include "atom/eval_lab.hpp"
#include "atom/llm_gateway.hpp"
#include "atom/pipeline.hpp"
#include "atom/prompt_registry.hpp"

namespace atom::cli {

using core::Json;

namespace {

std::string task_tag(int id) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "task_%02d", id);
  return buf;
}

std::string fmt1(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", v);
  return buf;
}

std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::vector<sim::ScenarioFile> load_selected(const DataPaths& paths,
                                             const std::vector<int>& tasks) {
  std::vector<sim::ScenarioFile> all = sim::load_all_scenarios(paths.scenarios());
  if (tasks.empty()) return all;
  std::vector<sim::ScenarioFile> out;
  for (int id : tasks) {
    auto it = std::find_if(all.begin(), all.end(),
                           [id](const sim::ScenarioFile& s) { return s.spec.id == id; });
    if (it == all.end())
      throw std::invalid_argument("unknown scenario: " + std::to_string(id));
    out.push_back(*it);
  }
  return out;
}

std::unique_ptr<llm::Backend> make_backend(const RunConfig& config, const DataPaths& paths) {
  if (config.backend == "replay") return std::make_unique<llm::ReplayBackend>(paths.fixtures());
  if (config.backend == "remote") {
    if (config.endpoint.empty())
      throw std::invalid_argument("remote backend requires --endpoint");
    llm::RemoteConfig rc;
    rc.endpoint = config.endpoint;
    return std::make_unique<llm::RemoteBackend>(rc);
  }
  throw std::invalid_argument("unknown backend: " + config.backend);
}

}  // namespace

std::vector<int> parse_task_selection(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    part = text::trim(part);
    if (part.empty()) continue;
    const auto dots = part.find("..");
    const auto dash = part.find('-');
    size_t split = dots != std::string::npos ? dots : dash;
    size_t skip = dots != std::string::npos ? 2 : 1;
    if (split != std::string::npos && split > 0) {
      const int lo = std::stoi(part.substr(0, split));
      const int hi = std::stoi(part.substr(split + skip));
      for (int i = lo; i <= hi; ++i) out.push_back(i);
    } else {
      out.push_back(std::stoi(part));
    }
  }
  return out;
}

sim::NoiseConfig parse_noise(const std::string& text) {
  std::vector<double> vals;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) vals.push_back(std::stod(text::trim(part)));
  if (vals.size() != 4)
    throw std::invalid_argument("--noise expects p_scan,p_grasp,p_place,p_use");
  sim::NoiseConfig n{vals[0], vals[1], vals[2], vals[3]};
  n.validate();
  return n;
}

// ---------------------------------------------------------------------------
// pipeline

int cmd_pipeline(const RunConfig& config, std::ostream& out, std::ostream& err) {
  DataPaths paths = config.data_root.empty() ? DataPaths() : DataPaths(config.data_root);
  std::vector<sim::ScenarioFile> scenarios;
  prompts::PromptRegistry registry;
  std::unique_ptr<llm::Gateway> gateway;
  std::filesystem::path out_dir;
  try {
    if (!is_detection_variant(config.variant))
      throw std::invalid_argument(to_string(config.variant) + " is not a detection variant");
    scenarios = load_selected(paths, config.tasks);
    registry = prompts::PromptRegistry::load(paths.prompts());
    gateway = std::make_unique<llm::Gateway>(make_backend(config, paths),
                                             std::max(1, config.jobs));
    out_dir = config.out_dir.empty()
                  ? std::filesystem::path("runs") / pipe::iso_utc_now()
                  : std::filesystem::path(config.out_dir);
  } catch (const std::exception& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  auto run_one = [&](const sim::ScenarioFile& scenario) {
    pipe::Pipeline pipeline(*gateway, registry);
    pipe::PipelineRun run = pipeline.run_full(scenario, config.variant);
    const auto path = out_dir / (task_tag(run.scenario_id) + "_" + to_string(run.variant) + ".json");
    write_file(path, pipe::run_to_json(run).dump(2) + "\n");
    return std::make_pair(run, path);
  };

  try {
    std::vector<std::pair<pipe::PipelineRun, std::filesystem::path>> results;
    if (config.jobs > 1) {
      std::vector<std::future<std::pair<pipe::PipelineRun, std::filesystem::path>>> futures;
      for (const auto& s : scenarios)
        futures.push_back(std::async(std::launch::async, run_one, std::cref(s)));
      for (auto& f : futures) results.push_back(f.get());
    } else {
      for (const auto& s : scenarios) results.push_back(run_one(s));
    }
    for (const auto& [run, path] : results) {
      out << task_tag(run.scenario_id) << " " << to_string(run.variant) << ": "
          << run.plans.size() << " plans, " << run.violations.size() << " findings -> "
          << path.string() << "\n";
    }
  } catch (const llm::GatewayError& e) {
    err << "gateway error: " << e.what() << "\n";
    return kExitGateway;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// sim

namespace {

std::map<int, std::vector<core::ActionPlan>> load_plans(const RunConfig& config,
                                                        const DataPaths& paths,
                                                        const std::vector<sim::ScenarioFile>& scenarios) {
  std::map<int, std::vector<core::ActionPlan>> out;
  for (const auto& s : scenarios) {
    if (!config.plans_dir.empty()) {
      const auto path = std::filesystem::path(config.plans_dir) /
                        (task_tag(s.spec.id) + "_" + to_string(config.variant) + ".json");
      Json doc = Json::parse(read_file(path));
      std::vector<core::ActionPlan> plans;
      for (const auto& p : doc.at("plans"))
        plans.push_back(core::plan_from_json(p.at("solution_text").get<std::string>(),
                                             p.at("steps")));
      out[s.spec.id] = std::move(plans);
    } else {
      const auto path = paths.fixtures() / task_tag(s.spec.id) / "actions.json";
      out[s.spec.id] = core::parse_action_list(read_file(path));
    }
  }
  return out;
}

}  // namespace

int cmd_sim(const RunConfig& config, std::ostream& out, std::ostream& err) {
  // Injected per-task counts: pool already-recorded results (Table-style x/N).
  if (!config.counts.empty()) {
    if (config.per_task_trials < 1) {
      err << "config error: per-task trials must be >= 1\n";
      return kExitConfig;
    }
    int total = 0;
    for (size_t i = 0; i < config.counts.size(); ++i) {
      const int x = config.counts[i];
      if (x < 0 || x > config.per_task_trials) {
        err << "config error: count " << x << " out of 0.." << config.per_task_trials << "\n";
        return kExitConfig;
      }
      total += x;
      out << "task " << (i + 1) << ": " << x << "/" << config.per_task_trials << "\n";
    }
    const int denom = config.per_task_trials * static_cast<int>(config.counts.size());
    const double pooled = 100.0 * total / denom;
    out << "pooled success rate: " << fmt1(pooled) << "% (" << total << "/" << denom << ")\n";
    return kExitOk;
  }

  if (config.trials < 1) {
    err << "config error: --trials must be >= 1\n";
    return kExitConfig;
  }

  DataPaths paths = config.data_root.empty() ? DataPaths() : DataPaths(config.data_root);
  std::vector<sim::ScenarioFile> scenarios;
  std::map<int, std::vector<core::ActionPlan>> plans;
  try {
    scenarios = load_selected(paths, config.tasks);
    plans = load_plans(config, paths, scenarios);
    config.noise.validate();
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  }

  int pooled_success = 0, pooled_trials = 0;
  Json summary_tasks = Json::object();
  try {
    for (const auto& scenario : scenarios) {
      const auto& task_plans = plans.at(scenario.spec.id);
      int successes = 0;
      for (int t = 0; t < config.trials; ++t) {
        bool all_ok = true;
        for (size_t p = 0; p < task_plans.size(); ++p) {
          const auto stream = (static_cast<std::uint64_t>(scenario.spec.id) << 48) |
                              (static_cast<std::uint64_t>(t) << 8) | p;
          const auto trial_seed = text::Rng::derive(config.seed, stream);
          const sim::ExecTrace trace =
              sim::execute_plan(scenario.world, task_plans[p], config.noise, trial_seed);
          if (!trace.success) {
            all_ok = false;
            break;
          }
        }
        if (all_ok) ++successes;
      }
      out << task_tag(scenario.spec.id) << ": " << successes << "/" << config.trials << "\n";
      pooled_success += successes;
      pooled_trials += config.trials;
      summary_tasks[std::to_string(scenario.spec.id)] =
          Json{{"successes", successes}, {"trials", config.trials}};

      if (!config.out_dir.empty()) {
        std::string jsonl;
        for (const auto& plan : task_plans)
          jsonl += sim::trace_to_jsonl(
              sim::execute_plan(scenario.world, plan, config.noise, config.seed));
        write_file(std::filesystem::path(config.out_dir) / "traces" /
                       (task_tag(scenario.spec.id) + ".jsonl"),
                   jsonl);
      }
    }
  } catch (const std::exception& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  }

  const double pooled = pooled_trials ? 100.0 * pooled_success / pooled_trials : 0.0;
  out << "pooled success rate: " << fmt1(pooled) << "% (" << pooled_success << "/"
      << pooled_trials << ")\n";
  if (!config.out_dir.empty()) {
    Json summary = Json{{"per_task", summary_tasks},
                        {"pooled_percent", pooled},
                        {"pooled_successes", pooled_success},
                        {"pooled_trials", pooled_trials}};
    write_file(std::filesystem::path(config.out_dir) / "sim_summary.json",
               summary.dump(2) + "\n");
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// eval

namespace {

struct RobotRow {
  int task_id;
  std::string stage;
  std::string text;
  std::string variant;
};

std::vector<RobotRow> parse_robot_csv(const std::string& content) {
  std::vector<RobotRow> out;
  std::istringstream in(content);
  std::string line;
  int line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    // minimal CSV: fields may be quoted to carry commas
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (char c : line) {
      if (quoted) {
        if (c == '"')
          quoted = false;
        else
          field.push_back(c);
      } else if (c == '"') {
        quoted = true;
      } else if (c == ',') {
        fields.push_back(field);
        field.clear();
      } else {
        field.push_back(c);
      }
    }
    fields.push_back(field);
    if (line_no == 1) {
      header = fields;
      continue;
    }
    auto col = [&](const std::string& name) -> std::optional<std::string> {
      for (size_t i = 0; i < header.size(); ++i)
        if (text::trim(header[i]) == name && i < fields.size()) return fields[i];
      return std::nullopt;
    };
    RobotRow row;
    auto task = col("task_id");
    auto stage = col("stage");
    auto txt = col("text");
    if (!task || !stage || !txt)
      throw eval::EvalError(eval::EvalError::Kind::CorpusSchema,
                            "robot file line " + std::to_string(line_no) +
                                ": needs task_id, stage, text columns");
    row.task_id = std::stoi(*task);
    row.stage = text::trim(*stage);
    row.text = *txt;
    row.variant = text::trim(col("variant").value_or(""));
    out.push_back(std::move(row));
  }
  return out;
}

std::vector<RobotRow> robot_rows_from_fixtures(const DataPaths& paths,
                                               const std::vector<int>& task_ids) {
  std::vector<RobotRow> out;
  for (int id : task_ids) {
    const auto path = paths.fixtures() / task_tag(id) / "needs.json";
    if (!std::filesystem::exists(path)) continue;
    const core::NeedReport report =
        core::parse_need_report(read_file(path), PromptVariant::full_atom_constraints);
    std::string needs_text, sols_text;
    for (const auto& n : report.needs) {
      if (!needs_text.empty()) needs_text += "; ";
      if (!sols_text.empty()) sols_text += "; ";
      needs_text += n.description;
      sols_text += n.solution;
    }
    out.push_back({id, "need", needs_text, ""});
    out.push_back({id, "solution", sols_text, ""});
  }
  return out;
}

struct TaskEvalRow {
  int task_id = 0;
  std::optional<eval::SimilarityReport> need;
  std::optional<eval::SimilarityReport> solution;
  std::optional<eval::LikertStats> exec_sat;
  std::string success;  // "x/N" when a sim summary is present
  double success_rate = -1;
};

std::string render_markdown(const std::vector<TaskEvalRow>& rows) {
  std::ostringstream md;
  md << "| Task | Need Sim | Need Prop | Need Sat | Sol Sim | Sol Prop | Sol Sat | Success | "
        "Exec Sat |\n";
  md << "|---|---|---|---|---|---|---|---|---|\n";
  auto pct = [](double v) { return fmt1(v * 100.0) + "%"; };
  auto sat = [](double mean, double sd) { return fmt2(mean) + "±" + fmt2(sd); };
  double sum_ns = 0, sum_np = 0, sum_nm = 0, sum_ss = 0, sum_sp = 0, sum_sm = 0, sum_em = 0;
  int n_need = 0, n_sol = 0, n_exec = 0;
  for (const auto& r : rows) {
    md << "| " << r.task_id << " | ";
    if (r.need) {
      md << pct(r.need->avg_sim) << " | " << pct(r.need->proportion) << " | "
         << sat(r.need->likert_mean, r.need->likert_sd) << " | ";
      sum_ns += r.need->avg_sim;
      sum_np += r.need->proportion;
      sum_nm += r.need->likert_mean;
      ++n_need;
    } else {
      md << "- | - | - | ";
    }
    if (r.solution) {
      md << pct(r.solution->avg_sim) << " | " << pct(r.solution->proportion) << " | "
         << sat(r.solution->likert_mean, r.solution->likert_sd) << " | ";
      sum_ss += r.solution->avg_sim;
      sum_sp += r.solution->proportion;
      sum_sm += r.solution->likert_mean;
      ++n_sol;
    } else {
      md << "- | - | - | ";
    }
    md << (r.success.empty() ? "-" : r.success) << " | ";
    if (r.exec_sat) {
      md << sat(r.exec_sat->mean, r.exec_sat->sd) << " |\n";
      sum_em += r.exec_sat->mean;
      ++n_exec;
    } else {
      md << "- |\n";
    }
  }
  md << "| **Avg** | ";
  if (n_need)
    md << pct(sum_ns / n_need) << " | " << pct(sum_np / n_need) << " | "
       << fmt2(sum_nm / n_need) << "/7 | ";
  else
    md << "- | - | - | ";
  if (n_sol)
    md << pct(sum_ss / n_sol) << " | " << pct(sum_sp / n_sol) << " | " << fmt2(sum_sm / n_sol)
       << "/7 | ";
  else
    md << "- | - | - | ";
  md << "- | ";
  md << (n_exec ? fmt2(sum_em / n_exec) + "/7" : "-") << " |\n";
  return md.str();
}

std::string render_csv(const std::vector<TaskEvalRow>& rows) {
  std::ostringstream csv;
  csv << "task_id,need_sim,need_prop,need_sat_mean,need_sat_sd,sol_sim,sol_prop,sol_sat_mean,"
         "sol_sat_sd,success,exec_sat_mean,exec_sat_sd\n";
  for (const auto& r : rows) {
    csv << r.task_id << ",";
    if (r.need)
      csv << r.need->avg_sim << "," << r.need->proportion << "," << r.need->likert_mean << ","
          << r.need->likert_sd << ",";
    else
      csv << ",,,,";
    if (r.solution)
      csv << r.solution->avg_sim << "," << r.solution->proportion << ","
          << r.solution->likert_mean << "," << r.solution->likert_sd << ",";
    else
      csv << ",,,,";
    csv << r.success << ",";
    if (r.exec_sat)
      csv << r.exec_sat->mean << "," << r.exec_sat->sd;
    else
      csv << ",";
    csv << "\n";
  }
  return csv.str();
}

}  // namespace

int cmd_eval(const RunConfig& config, std::ostream& out, std::ostream& err) {
  DataPaths paths = config.data_root.empty() ? DataPaths() : DataPaths(config.data_root);
  if (config.corpus_path.empty()) {
    err << "config error: eval requires --corpus\n";
    return kExitConfig;
  }
  if (config.mode != "assigned" && config.mode != "modal") {
    err << "config error: --mode must be assigned or modal\n";
    return kExitConfig;
  }

  std::vector<eval::ResponseRow> corpus;
  try {
    corpus = eval::load_corpus_csv(config.corpus_path);
  } catch (const std::exception& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  }

  try {
    // group corpus rows
    std::set<int> task_ids;
    std::map<std::pair<int, std::string>, std::vector<std::string>> unit_texts;
    std::map<std::pair<int, std::string>, std::vector<int>> likerts;
    for (const auto& row : corpus) {
      task_ids.insert(row.task_id);
      likerts[{row.task_id, row.stage}].push_back(row.likert);
      if (row.stage == "execution") continue;
      for (auto& unit : eval::segment(row.text)) unit_texts[{row.task_id, row.stage}].push_back(unit);
    }

    std::vector<RobotRow> robot_rows;
    if (!config.robot_path.empty())
      robot_rows = parse_robot_csv(read_file(config.robot_path));
    else
      robot_rows = robot_rows_from_fixtures(paths, {task_ids.begin(), task_ids.end()});

    eval::LocalHashEmbedder embedder;
    const auto mode = config.mode == "modal" ? eval::SimilarityMode::modal_cluster
                                             : eval::SimilarityMode::assigned_cluster;

    // per-variant means for the ablation grid, when variants are present
    std::map<std::string, std::vector<double>> variant_need_sims, variant_sol_sims;

    std::map<int, TaskEvalRow> table;
    for (const auto& robot : robot_rows) {
      const auto key = std::make_pair(robot.task_id, robot.stage);
      auto units_it = unit_texts.find(key);
      if (units_it == unit_texts.end() || units_it->second.empty()) continue;

      std::vector<eval::HumanResponseUnit> units;
      const auto unit_vecs = embedder.embed(units_it->second);
      for (size_t i = 0; i < unit_vecs.size(); ++i)
        units.push_back({robot.task_id, robot.stage, units_it->second[i], unit_vecs[i]});

      eval::RobotResponse rr{robot.task_id, robot.stage, robot.text,
                             embedder.embed({robot.text}).front()};
      const auto& task_likerts = likerts.count(key) ? likerts.at(key) : std::vector<int>{};
      const auto report = eval::evaluate_task(units, rr, task_likerts, config.seed, mode);

      if (robot.variant.empty()) {
        auto& row = table[robot.task_id];
        row.task_id = robot.task_id;
        if (robot.stage == "need")
          row.need = report;
        else if (robot.stage == "solution")
          row.solution = report;
      } else {
        if (robot.stage == "need") variant_need_sims[robot.variant].push_back(report.avg_sim);
        if (robot.stage == "solution") variant_sol_sims[robot.variant].push_back(report.avg_sim);
      }
    }

    // execution satisfaction + sim success column
    for (auto& [task_id, row] : table) {
      row.task_id = task_id;
      const auto key = std::make_pair(task_id, std::string("execution"));
      if (likerts.count(key)) row.exec_sat = eval::likert_stats(likerts.at(key));
    }
    if (!config.sim_summary_path.empty()) {
      Json summary = Json::parse(read_file(config.sim_summary_path));
      for (auto& [task_id, row] : table) {
        const auto k = std::to_string(task_id);
        if (summary.at("per_task").contains(k)) {
          const auto& cell = summary.at("per_task").at(k);
          row.success = std::to_string(cell.at("successes").get<int>()) + "/" +
                        std::to_string(cell.at("trials").get<int>());
          row.success_rate =
              double(cell.at("successes").get<int>()) / double(cell.at("trials").get<int>());
        }
      }
    }

    std::vector<TaskEvalRow> rows;
    for (auto& [id, row] : table) rows.push_back(row);

    std::string rendered;
    if (config.format == "csv") {
      rendered = render_csv(rows);
    } else if (config.format == "json") {
      Json arr = Json::array();
      for (const auto& r : rows) {
        Json j = Json{{"task_id", r.task_id}};
        if (r.need)
          j["need"] = Json{{"avg_sim", r.need->avg_sim},
                           {"proportion", r.need->proportion},
                           {"k", r.need->k},
                           {"likert_mean", r.need->likert_mean},
                           {"likert_sd", r.need->likert_sd}};
        if (r.solution)
          j["solution"] = Json{{"avg_sim", r.solution->avg_sim},
                               {"proportion", r.solution->proportion},
                               {"k", r.solution->k},
                               {"likert_mean", r.solution->likert_mean},
                               {"likert_sd", r.solution->likert_sd}};
        if (!r.success.empty()) j["success"] = r.success;
        if (r.exec_sat)
          j["execution"] = Json{{"likert_mean", r.exec_sat->mean}, {"likert_sd", r.exec_sat->sd}};
        arr.push_back(std::move(j));
      }
      rendered = arr.dump(2) + "\n";
    } else {
      rendered = render_markdown(rows);
    }
    out << rendered;

    // ablation grid when the four detection variants are all present
    auto mean_of = [](const std::vector<double>& v) {
      double s = 0;
      for (double x : v) s += x;
      return v.empty() ? 0.0 : s / static_cast<double>(v.size());
    };
    std::map<PromptVariant, eval::AblationCell> cells;
    for (const auto& [name, sims] : variant_need_sims) {
      if (auto v = parse_variant(name); v && is_detection_variant(*v)) {
        cells[*v].need_sim = mean_of(sims) * 100.0;
        if (variant_sol_sims.count(name)) cells[*v].sol_sim = mean_of(variant_sol_sims[name]) * 100.0;
      }
    }
    if (cells.size() == 4) {
      const auto ablation = eval::ablation_report(cells);
      out << "\n" << ablation.to_markdown();
    }

    if (!config.out_dir.empty()) {
      const char* ext = config.format == "csv" ? "report.csv"
                        : config.format == "json" ? "report.json"
                                                  : "report.md";
      write_file(std::filesystem::path(config.out_dir) / ext, rendered);
    }
  } catch (const eval::EvalError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitOk;
}

}  // namespace atom::cli
