#include <doctest.h>

#include <set>

#include "atom/data_paths.hpp"
#include "atom/prompt_registry.hpp"

using namespace atom;
using prompts::PromptError;
using prompts::PromptRegistry;

namespace {
PromptRegistry load() {
  DataPaths paths;
  return PromptRegistry::load(paths.prompts());
}
}  // namespace

TEST_CASE("all five assets load and carry their signature phrases") {
  const auto reg = load();
  CHECK(reg.get(PromptVariant::full_atom_constraints).text.find("no hearing and verbal modules") !=
        std::string::npos);
  CHECK(reg.get(PromptVariant::full_atom_constraints)
            .text.find("6 needs in pairs with 6 solutions") != std::string::npos);
  CHECK(reg.get(PromptVariant::no_atom_constraints).text.find("I need 3 solutions in total") !=
        std::string::npos);
  CHECK(reg.get(PromptVariant::action_generation).text.find("only have one arm and a moving base") !=
        std::string::npos);
  CHECK(reg.get(PromptVariant::no_atom_no_constraints).text.find("Please help the person") !=
        std::string::npos);
  CHECK(reg.get(PromptVariant::atom_no_constraints).text.find("facial expression, posture") !=
        std::string::npos);
}

TEST_CASE("get_prompt is deterministic and checksums are stable") {
  const auto a = load();
  const auto b = load();
  for (auto v : {PromptVariant::full_atom_constraints, PromptVariant::no_atom_no_constraints,
                 PromptVariant::atom_no_constraints, PromptVariant::no_atom_constraints,
                 PromptVariant::action_generation}) {
    CHECK(a.get(v).text == b.get(v).text);
    CHECK(a.get(v).checksum == b.get(v).checksum);
    CHECK(a.get(v).checksum == PromptRegistry::checksum(a.get(v).text));
  }
}

TEST_CASE("the four detection variants are distinct prompts") {
  const auto reg = load();
  std::set<std::string> checksums;
  for (auto v : {PromptVariant::full_atom_constraints, PromptVariant::no_atom_no_constraints,
                 PromptVariant::atom_no_constraints, PromptVariant::no_atom_constraints})
    checksums.insert(reg.get(v).checksum);
  CHECK(checksums.size() == 4);
}

TEST_CASE("render_action_request enumerates one numbered line per solution") {
  const auto reg = load();
  const auto one = reg.render_action_request({"Retrieve a water bottle and place it nearby."});
  CHECK(one.find("solution requirement 1: Retrieve a water bottle and place it nearby.") !=
        std::string::npos);
  CHECK(one.find("solution requirement 2:") == std::string::npos);

  const auto three = reg.render_action_request({"a", "b", "c"});
  CHECK(three.find("solution requirement 1: a") != std::string::npos);
  CHECK(three.find("solution requirement 2: b") != std::string::npos);
  CHECK(three.find("solution requirement 3: c") != std::string::npos);

  CHECK_THROWS_AS((void)reg.render_action_request({}), PromptError);
}

TEST_CASE("whitespace normalization collapses runs") {
  CHECK(PromptRegistry::normalize_whitespace("a  b\n\tc ") == "a b c");
  CHECK(PromptRegistry::normalize_whitespace("  leading") == "leading");
}

TEST_CASE("a drifted asset fails the manifest check") {
  DataPaths paths;
  const auto tmp = std::filesystem::temp_directory_path() / "atom_prompts_drift";
  std::filesystem::remove_all(tmp);
  std::filesystem::create_directories(tmp);
  for (const auto& entry : std::filesystem::directory_iterator(paths.prompts()))
    std::filesystem::copy(entry.path(), tmp / entry.path().filename());
  write_file(tmp / "action_generation.txt", "tampered content");
  CHECK_THROWS_AS((void)PromptRegistry::load(tmp), PromptError);
  std::filesystem::remove_all(tmp);
}
