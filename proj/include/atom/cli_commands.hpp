#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "atom/simworld.hpp"
#include "atom/variant.hpp"

namespace atom::cli {

// Stable exit contract: 0 success, 1 config error, 2 data error, 3 gateway error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitGateway = 3;

struct RunConfig {
  std::string data_root;          // defaults to the compiled-in source tree
  std::string backend = "replay";  // replay | remote
  std::string endpoint;            // remote chat endpoint
  PromptVariant variant = PromptVariant::full_atom_constraints;
  std::vector<int> tasks;          // empty = all available scenarios
  sim::NoiseConfig noise;
  int trials = 1;
  std::uint64_t seed = 0;
  int jobs = 1;
  std::string out_dir;
  std::string format = "md";       // csv | md | json

  // sim
  std::vector<int> counts;         // injected per-task success counts
  int per_task_trials = 10;        // denominator for injected counts
  std::string plans_dir;           // run-artifact dir; empty = fixture plans

  // eval
  std::string corpus_path;
  std::string robot_path;          // optional robot-response CSV
  std::string sim_summary_path;    // optional cmd_sim JSON summary
  std::string mode = "assigned";   // assigned | modal
};

int cmd_pipeline(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_sim(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_eval(const RunConfig& config, std::ostream& out, std::ostream& err);

/// "1..16", "3", "1,4,9" -> task ids.
std::vector<int> parse_task_selection(const std::string& text);
/// "0.1,0.05,0.05,0.1" -> NoiseConfig (scan, grasp, place, use).
sim::NoiseConfig parse_noise(const std::string& text);

}  // namespace atom::cli
