#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace atom {

/// The four detection prompts (the 2x2 ablation grid) plus the action
/// translation prompt.
enum class PromptVariant {
  full_atom_constraints,
  no_atom_no_constraints,
  atom_no_constraints,
  no_atom_constraints,
  action_generation,
};

constexpr bool is_detection_variant(PromptVariant v) {
  return v != PromptVariant::action_generation;
}

std::string to_string(PromptVariant v);
std::optional<PromptVariant> parse_variant(std::string_view s);

}  // namespace atom
