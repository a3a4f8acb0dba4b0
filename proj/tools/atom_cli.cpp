#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "atom/cli_commands.hpp"

namespace {

using atom::cli::RunConfig;

// Config file (JSON) seeds the defaults; explicit flags override.
void apply_config_file(const std::string& path, RunConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw CLI::ValidationError("--config", "cannot open " + path);
  nlohmann::json doc = nlohmann::json::parse(in);
  if (doc.contains("data_root")) cfg.data_root = doc["data_root"].get<std::string>();
  if (doc.contains("backend")) cfg.backend = doc["backend"].get<std::string>();
  if (doc.contains("endpoint")) cfg.endpoint = doc["endpoint"].get<std::string>();
  if (doc.contains("variant")) {
    auto v = atom::parse_variant(doc["variant"].get<std::string>());
    if (!v) throw CLI::ValidationError("--config", "unknown variant in config file");
    cfg.variant = *v;
  }
  if (doc.contains("tasks"))
    cfg.tasks = atom::cli::parse_task_selection(doc["tasks"].get<std::string>());
  if (doc.contains("noise")) cfg.noise = atom::cli::parse_noise(doc["noise"].get<std::string>());
  if (doc.contains("trials")) cfg.trials = doc["trials"].get<int>();
  if (doc.contains("seed")) cfg.seed = doc["seed"].get<std::uint64_t>();
  if (doc.contains("jobs")) cfg.jobs = doc["jobs"].get<int>();
  if (doc.contains("out")) cfg.out_dir = doc["out"].get<std::string>();
  if (doc.contains("format")) cfg.format = doc["format"].get<std::string>();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Proactive need-detection pipeline: structured detection, action decomposition, "
               "simulated execution, and evaluation"};
  app.require_subcommand(1);

  RunConfig cfg;
  std::string config_file, variant_name, tasks_expr, noise_expr, counts_expr;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_file, "JSON config file (flags override it)");
    sub->add_option("--data", cfg.data_root, "data root holding prompts/, fixtures/, scenarios/");
    sub->add_option("--tasks", tasks_expr, "task selection, e.g. 1..16 or 1,4,9");
    sub->add_option("--seed", cfg.seed, "RNG seed");
    sub->add_option("--jobs", cfg.jobs, "parallel workers");
    sub->add_option("--out", cfg.out_dir, "output directory");
    sub->add_option("--format", cfg.format, "report format: md|csv|json");
    sub->add_option("--variant", variant_name,
                    "prompt variant: full|none|atom_only|constraints_only|action or full tag");
  };

  auto* pipeline = app.add_subcommand("pipeline", "run detection + decomposition per scenario");
  add_common(pipeline);
  pipeline->add_option("--backend", cfg.backend, "replay|remote");
  pipeline->add_option("--endpoint", cfg.endpoint, "remote chat-completions endpoint URL");

  auto* simulate = app.add_subcommand("sim", "execute plans in the simulator");
  add_common(simulate);
  simulate->add_option("--noise", noise_expr, "p_scan,p_grasp,p_place,p_use");
  simulate->add_option("--trials", cfg.trials, "trials per task");
  simulate->add_option("--counts", counts_expr, "injected per-task success counts, e.g. 8,9,5");
  simulate->add_option("--per-task-trials", cfg.per_task_trials,
                       "denominator for injected counts");
  simulate->add_option("--plans", cfg.plans_dir, "run-artifact dir (default: fixture plans)");

  auto* evaluate = app.add_subcommand("eval", "cluster human responses and score robot output");
  add_common(evaluate);
  evaluate->add_option("--corpus", cfg.corpus_path, "human-response CSV");
  evaluate->add_option("--robot", cfg.robot_path, "robot-response CSV (default: fixtures)");
  evaluate->add_option("--sim-summary", cfg.sim_summary_path, "sim_summary.json for the success column");
  evaluate->add_option("--mode", cfg.mode, "cluster selection: assigned|modal");

  CLI11_PARSE(app, argc, argv);

  try {
    if (!config_file.empty()) {
      // file seeds the config, explicitly given flags win
      auto flag_given = [&](const char* name) {
        for (CLI::App* sub : {pipeline, simulate, evaluate}) {
          const CLI::Option* opt = sub->get_option_no_throw(name);
          if (opt && opt->count() > 0) return true;
        }
        return false;
      };
      RunConfig flags = cfg;
      RunConfig from_file;
      apply_config_file(config_file, from_file);
      cfg = from_file;
      if (flag_given("--data")) cfg.data_root = flags.data_root;
      if (flag_given("--backend")) cfg.backend = flags.backend;
      if (flag_given("--endpoint")) cfg.endpoint = flags.endpoint;
      if (flag_given("--trials")) cfg.trials = flags.trials;
      if (flag_given("--seed")) cfg.seed = flags.seed;
      if (flag_given("--jobs")) cfg.jobs = flags.jobs;
      if (flag_given("--out")) cfg.out_dir = flags.out_dir;
      if (flag_given("--format")) cfg.format = flags.format;
      if (flag_given("--per-task-trials")) cfg.per_task_trials = flags.per_task_trials;
      if (flag_given("--plans")) cfg.plans_dir = flags.plans_dir;
      if (flag_given("--corpus")) cfg.corpus_path = flags.corpus_path;
      if (flag_given("--robot")) cfg.robot_path = flags.robot_path;
      if (flag_given("--sim-summary")) cfg.sim_summary_path = flags.sim_summary_path;
      if (flag_given("--mode")) cfg.mode = flags.mode;
      // --variant, --tasks, --noise, --counts re-apply from their expression
      // strings below, so explicit flags win for those too
    }
    if (!variant_name.empty()) {
      auto v = atom::parse_variant(variant_name);
      if (!v) {
        std::cerr << "config error: unknown variant '" << variant_name << "'\n";
        return atom::cli::kExitConfig;
      }
      cfg.variant = *v;
    }
    if (!tasks_expr.empty()) cfg.tasks = atom::cli::parse_task_selection(tasks_expr);
    if (!noise_expr.empty()) cfg.noise = atom::cli::parse_noise(noise_expr);
    if (!counts_expr.empty()) {
      cfg.counts.clear();
      for (int v : atom::cli::parse_task_selection(counts_expr)) cfg.counts.push_back(v);
    }
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return atom::cli::kExitConfig;
  }

  if (pipeline->parsed()) return atom::cli::cmd_pipeline(cfg, std::cout, std::cerr);
  if (simulate->parsed()) return atom::cli::cmd_sim(cfg, std::cout, std::cerr);
  if (evaluate->parsed()) return atom::cli::cmd_eval(cfg, std::cout, std::cerr);
  return atom::cli::kExitConfig;
}
