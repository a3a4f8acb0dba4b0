// Acceptance suite: each criterion below is checked end to end at its stated
// tolerance and reported as one [PASS]/[FAIL] line. The binary exits nonzero
// if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <vector>

#include "atom/cli_commands.hpp"
#include "atom/constraint_engine.hpp"
#include "atom/core_model.hpp"
#include "atom/data_paths.hpp"
#include "atom/eval_lab.hpp"
#include "atom/pipeline.hpp"
#include "atom/simworld.hpp"
#include "atom/text.hpp"
#include "support/random_plans.hpp"

using namespace atom;

namespace {

DataPaths g_paths;

std::string task_dir(int task) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "task_%02d", task);
  return buf;
}

std::string fixture(int task, const char* file) {
  return read_file(g_paths.fixtures() / task_dir(task) / file);
}

struct Failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void expect(bool ok, const std::string& detail) {
  if (!ok) throw Failure(detail);
}

// --- 1. fixture round-trip -------------------------------------------------

void fixture_round_trip() {
  const auto start = std::chrono::steady_clock::now();
  std::set<std::string> spellings_seen;
  for (int task = 1; task <= 16; ++task) {
    const std::string raw = fixture(task, "needs.json");
    for (const char* spelling :
         {"suggested robot solution", "suggested_robot_solution", "suggested_robot_action"})
      if (raw.find(spelling) != std::string::npos) spellings_seen.insert(spelling);

    const auto first = core::parse_need_report(raw, PromptVariant::full_atom_constraints);
    const auto second = core::parse_need_report(core::report_to_json(first).dump(2),
                                                PromptVariant::full_atom_constraints);
    expect(core::field_identical(first, second),
           "task " + std::to_string(task) + ": need report round-trip drifted");

    const auto plans = core::parse_action_list(fixture(task, "actions.json"));
    const auto plans_again = core::parse_action_list(core::plans_to_json(plans).dump());
    expect(plans == plans_again, "task " + std::to_string(task) + ": action round-trip drifted");
  }
  expect(spellings_seen.size() == 3, "expected all three key spellings across the fixtures");
  const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
      std::chrono::steady_clock::now() - start);
  expect(elapsed.count() < 1000,
         "round-trip took " + std::to_string(elapsed.count()) + "ms (budget 1s)");
}

// --- 2. replay determinism ---------------------------------------------------

void replay_determinism() {
  const auto base = std::filesystem::temp_directory_path() / "atom_accept_replay";
  for (const char* run : {"a", "b"}) {
    std::filesystem::remove_all(base / run);
    cli::RunConfig cfg;
    cfg.out_dir = (base / run).string();
    std::ostringstream out, err;
    expect(cli::cmd_pipeline(cfg, out, err) == cli::kExitOk,
           std::string("pipeline run failed: ") + err.str());
  }
  for (int task = 1; task <= 16; ++task) {
    const auto name = task_dir(task) + "_full_atom_constraints.json";
    auto a = core::Json::parse(read_file(base / "a" / name));
    auto b = core::Json::parse(read_file(base / "b" / name));
    a.erase("timestamps");
    b.erase("timestamps");
    expect(a.dump() == b.dump(), "artifact differs for task " + std::to_string(task));
  }
}

// --- 3. zero-noise execution + recorded pooled rate -------------------------

void zero_noise_execution() {
  for (int task = 1; task <= 16; ++task) {
    const auto scenario = sim::load_scenario(g_paths.scenarios() / (task_dir(task) + ".json"));
    const auto plans = core::parse_action_list(fixture(task, "actions.json"));
    for (const auto& plan : plans) {
      const auto trace = sim::execute_plan(scenario.world, plan, sim::NoiseConfig::zero(), 1);
      expect(trace.success, "task " + std::to_string(task) + " plan '" + plan.solution_text +
                                "' failed: " +
                                (trace.steps.empty() ? "no steps"
                                                     : trace.steps.back().failure_reason));
    }
  }

  std::ostringstream out, err;
  cli::RunConfig zero;
  expect(cli::cmd_sim(zero, out, err) == cli::kExitOk, "cmd_sim failed: " + err.str());
  expect(out.str().find("pooled success rate: 100.0%") != std::string::npos,
         "zero-noise pool did not print 100%: " + out.str());

  cli::RunConfig counts;
  counts.counts = {8, 9, 5, 8, 4, 10, 4, 10, 5, 10, 5, 9, 4, 7, 4, 9};
  counts.per_task_trials = 10;
  std::ostringstream out2, err2;
  expect(cli::cmd_sim(counts, out2, err2) == cli::kExitOk, "counts mode failed");
  const double pooled = 100.0 * 111 / 160;
  expect(std::abs(pooled - 69.4) <= 0.05,
         "pooled arithmetic off: " + std::to_string(pooled));
  expect(out2.str().find("pooled success rate: 69.4% (111/160)") != std::string::npos,
         "printed pool line missing: " + out2.str());
}

// --- 4. Monte-Carlo vs analytic ----------------------------------------------

void monte_carlo_vs_analytic() {
  const auto start = std::chrono::steady_clock::now();
  text::Rng gen(0xAC5EEDull);
  for (int round = 0; round < 50; ++round) {
    auto c = testsupport::random_valid_case(gen);
    expect(sim::execute_plan(c.world, c.plan, sim::NoiseConfig::zero(), 3).success,
           "generated plan must succeed under zero noise");
    sim::NoiseConfig noise{0.01 + 0.29 * gen.next_double(), 0.01 + 0.29 * gen.next_double(),
                           0.01 + 0.29 * gen.next_double(), 0.01 + 0.29 * gen.next_double()};
    const int trials = 20000;
    const double p = testsupport::analytic_success(c, noise);
    const double se = std::sqrt(p * (1.0 - p) / trials);
    const double rate = sim::monte_carlo_success(c.world, c.plan, noise, trials,
                                                 0xF00D + static_cast<std::uint64_t>(round));
    expect(std::abs(rate - p) <= 3.0 * se + 1e-12,
           "round " + std::to_string(round) + ": empirical " + std::to_string(rate) +
               " vs analytic " + std::to_string(p) + " (3se=" + std::to_string(3 * se) + ")");
  }
  const auto elapsed =
      std::chrono::duration_cast<std::chrono::seconds>(std::chrono::steady_clock::now() - start);
  expect(elapsed.count() < 60, "suite took " + std::to_string(elapsed.count()) + "s (budget 60s)");
}

// --- 5. similarity and proportion oracles --------------------------------------

void similarity_proportion_oracles() {
  text::Rng rng(0x0E9A1ull);
  for (int round = 0; round < 100; ++round) {
    const size_t n = 2 + rng.next_index(19);   // <= 20 units
    const size_t dim = 2 + rng.next_index(7);  // <= 8 dims
    std::vector<eval::Vec> corpus;
    for (size_t i = 0; i < n; ++i) {
      eval::Vec v(dim);
      for (auto& x : v) x = rng.next_double() * 2 - 1;
      corpus.push_back(v);
    }
    eval::Vec robot(dim);
    for (auto& x : robot) x = rng.next_double() * 2 - 1;

    const int k = 1 + static_cast<int>(rng.next_index(std::min<size_t>(n, 5)));
    const auto model = eval::kmeans(corpus, k, rng.next_u64());
    double proportion_sum = 0;
    for (const auto& cluster : eval::clusters_of(model)) {
      if (cluster.members.empty()) continue;
      double brute = 0;
      for (size_t idx : cluster.members) {
        double dot = 0, nr = 0, nh = 0;
        for (size_t j = 0; j < dim; ++j) {
          dot += robot[j] * corpus[idx][j];
          nr += robot[j] * robot[j];
          nh += corpus[idx][j] * corpus[idx][j];
        }
        brute += dot / (std::sqrt(nr) * std::sqrt(nh));
      }
      brute /= static_cast<double>(cluster.members.size());
      const double got = eval::avg_sim(robot, cluster, corpus);
      expect(std::abs(got - brute) < 1e-12,
             "avg_sim drifted from brute force by " + std::to_string(std::abs(got - brute)));
      proportion_sum += eval::proportion_rate(cluster, n);
    }
    expect(std::abs(proportion_sum - 1.0) < 1e-12,
           "cluster proportions sum to " + std::to_string(proportion_sum));
  }
}

// --- 6. clustering sanity ------------------------------------------------------

void clustering_sanity() {
  // three separated blobs in 4-d
  auto make_blobs = [](std::uint64_t seed, std::vector<int>* labels) {
    const std::vector<eval::Vec> centers = {{10, 0, 0, 0}, {0, 10, 0, 0}, {0, 0, 10, 0}};
    text::Rng rng(seed);
    std::vector<eval::Vec> out;
    for (int c = 0; c < 3; ++c)
      for (int i = 0; i < 20; ++i) {
        eval::Vec v = centers[static_cast<size_t>(c)];
        for (auto& x : v) x += 0.4 * (rng.next_double() - 0.5);
        out.push_back(v);
        if (labels) labels->push_back(c);
      }
    return out;
  };

  std::vector<int> labels;
  const auto points = make_blobs(7, &labels);
  const auto elbow = eval::select_k_elbow(points, 2, 6);
  expect(elbow.k == 3, "elbow picked k=" + std::to_string(elbow.k));

  int recovered = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto model = eval::kmeans(points, 3, seed);
    for (size_t i = 1; i < model.sse_history.size(); ++i)
      expect(model.sse_history[i] <= model.sse_history[i - 1] + 1e-9,
             "SSE increased on iteration " + std::to_string(i));
    // partition matches blob labels up to permutation
    std::map<int, std::set<int>> blob_of_cluster;
    for (size_t i = 0; i < labels.size(); ++i)
      blob_of_cluster[model.assignment[i]].insert(labels[i]);
    bool clean = blob_of_cluster.size() == 3;
    for (const auto& [cluster, blobs] : blob_of_cluster)
      clean = clean && blobs.size() == 1;
    if (clean) ++recovered;
  }
  expect(recovered >= 95,
         "blob partition recovered in only " + std::to_string(recovered) + "/100 runs");
}

// --- 7. Likert conversion identity ---------------------------------------------

void likert_identity() {
  const std::vector<std::pair<double, double>> pairs = {
      {6.42, 91.7}, {6.15, 87.8}, {6.17, 88.1}};
  for (const auto& [mean, pct] : pairs) {
    const double got = eval::headline_percent(mean);
    expect(std::abs(got - pct) <= 0.05, "mean " + std::to_string(mean) + " converts to " +
                                            std::to_string(got) + ", expected " +
                                            std::to_string(pct));
  }
}

// --- 8. ablation arithmetic ------------------------------------------------------

void ablation_arithmetic() {
  std::map<PromptVariant, eval::AblationCell> cells;
  cells[PromptVariant::no_atom_no_constraints] = {33.2, 4.9};
  cells[PromptVariant::atom_no_constraints] = {68.7, 31.0};
  cells[PromptVariant::no_atom_constraints] = {46.4, 38.4};
  cells[PromptVariant::full_atom_constraints] = {72.8, 69.6};
  const auto report = eval::ablation_report(cells);
  expect(std::abs(report.atom_removal_need_delta - 26.4) < 1e-12,
         "need delta " + std::to_string(report.atom_removal_need_delta));
  expect(std::abs(report.atom_removal_sol_delta - 31.2) < 1e-12,
         "solution delta " + std::to_string(report.atom_removal_sol_delta));
  expect(std::abs(report.constraint_removal_sol_delta - 38.6) < 1e-12,
         "constraint delta " + std::to_string(report.constraint_removal_sol_delta));
}

// --- 9. constraint snapshot --------------------------------------------------------

void constraint_snapshot() {
  const core::RobotConstraints constraints;
  core::Json snapshot = core::Json::object();
  int solutions = 0;
  for (int task = 1; task <= 16; ++task) {
    const auto report = core::parse_need_report(fixture(task, "needs.json"),
                                                PromptVariant::full_atom_constraints);
    core::Json per_task = core::Json::array();
    for (const auto& need : report.needs) {
      ++solutions;
      core::Json entries = core::Json::array();
      for (const auto& v : rules::check_solution(need.solution, report.environment, constraints))
        entries.push_back(core::Json{{"code", rules::to_string(v.code)}, {"subject", v.subject}});
      per_task.push_back(entries);
    }
    snapshot[task_dir(task)] = per_task;
  }
  expect(solutions >= 48, "expected at least 48 fixture solutions");

  const auto frozen = core::Json::parse(
      read_file(std::filesystem::path(ATOM_SOURCE_ROOT) / "tests" / "data" /
                "constraint_findings.json"));
  expect(snapshot == frozen, "findings drifted from the frozen snapshot");

  const auto& t7 = frozen.at("task_07").at(1);
  expect(t7.size() == 1 && t7.at(0).at("code") == "ForbiddenDevice" &&
             t7.at(0).at("subject") == "laptop",
         "task 7 screen-protector solution must be flagged ForbiddenDevice(laptop)");
}

// --- 10. simulator invariants -------------------------------------------------------

void simulator_invariants() {
  const auto start = std::chrono::steady_clock::now();
  const auto scenario = sim::load_scenario(g_paths.scenarios() / "task_06.json");
  auto world = scenario.world;
  const auto names_before = testsupport::sorted_object_names(world);

  text::Rng gen(0x1417ull);
  text::Rng exec_rng(0x1418ull);
  sim::NoiseConfig noise{0.05, 0.05, 0.05, 0.05};
  std::vector<std::string> pool = world.object_names();
  pool.push_back("person");
  pool.push_back("missing thing");

  for (int i = 0; i < 10000; ++i) {
    core::ActionPrimitive p;
    const auto pick = [&] { return pool[gen.next_index(pool.size())]; };
    switch (gen.next_index(3)) {
      case 0: p = core::Navigate{pick()}; break;
      case 1: p = core::Move{pick(), pick()}; break;
      default: p = core::Use{pick()}; break;
    }
    (void)sim::execute_primitive(world, p, noise, exec_rng);
    expect(testsupport::sorted_object_names(world) == names_before,
           "object conservation violated at step " + std::to_string(i));
    if (world.held)
      expect(world.find(*world.held) != nullptr,
             "held object vanished at step " + std::to_string(i));
    expect(world.has_location(world.robot_location),
           "robot left the location graph at step " + std::to_string(i));
  }
  const auto elapsed =
      std::chrono::duration_cast<std::chrono::seconds>(std::chrono::steady_clock::now() - start);
  expect(elapsed.count() < 30, "invariant sweep took " + std::to_string(elapsed.count()) + "s");
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void()>>> criteria = {
      {"fixture-round-trip", fixture_round_trip},
      {"replay-determinism", replay_determinism},
      {"zero-noise-execution", zero_noise_execution},
      {"monte-carlo-vs-analytic", monte_carlo_vs_analytic},
      {"similarity-proportion-oracles", similarity_proportion_oracles},
      {"clustering-sanity", clustering_sanity},
      {"likert-conversion-identity", likert_identity},
      {"ablation-arithmetic", ablation_arithmetic},
      {"constraint-snapshot", constraint_snapshot},
      {"simulator-invariants", simulator_invariants},
  };

  int failures = 0;
  for (const auto& [name, fn] : criteria) {
    const auto start = std::chrono::steady_clock::now();
    try {
      fn();
      const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                          std::chrono::steady_clock::now() - start)
                          .count();
      std::cout << "[PASS] " << name << " (" << ms << "ms)\n";
    } catch (const std::exception& e) {
      ++failures;
      std::cout << "[FAIL] " << name << ": " << e.what() << "\n";
    }
  }
  if (failures) std::cout << failures << " criterion(s) failed\n";
  return failures == 0 ? 0 : 1;
}
