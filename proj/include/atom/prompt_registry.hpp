#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "atom/variant.hpp"

namespace atom::prompts {

class PromptError : public std::runtime_error {
 public:
  enum class Kind { UnknownVariant, EmptySolutions, ChecksumMismatch, MissingAsset };
  PromptError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

struct PromptAsset {
  PromptVariant variant;
  std::string text;      // verbatim prompt body
  std::string checksum;  // fnv1a64 of whitespace-normalized text
};

/// Read-only store of the five prompt texts, shipped as data files with a
/// checksum manifest so ablation variants can be added without a rebuild.
class PromptRegistry {
 public:
  /// Loads prompts/*.txt and verifies each against prompts/manifest.json.
  static PromptRegistry load(const std::filesystem::path& dir);

  const PromptAsset& get(PromptVariant variant) const;

  /// Action prompt followed by "solution requirement N: <text>" lines.
  std::string render_action_request(const std::vector<std::string>& solutions) const;

  /// Collapses whitespace runs to single spaces and trims.
  static std::string normalize_whitespace(std::string_view text);
  static std::string checksum(std::string_view text);

 private:
  std::map<PromptVariant, PromptAsset> assets_;
};

}  // namespace atom::prompts
