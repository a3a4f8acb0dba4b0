#include "atom/prompt_registry.hpp"

#include <cctype>

#include <json.hpp>

#include "atom/data_paths.hpp"
#include "atom/text.hpp"

namespace atom::prompts {

std::string PromptRegistry::normalize_whitespace(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool in_ws = false;
  for (char ch : text) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      in_ws = true;
    } else {
      if (in_ws && !out.empty()) out.push_back(' ');
      in_ws = false;
      out.push_back(ch);
    }
  }
  return out;
}

std::string PromptRegistry::checksum(std::string_view text) {
  return text::hex64(text::fnv1a64(normalize_whitespace(text)));
}

PromptRegistry PromptRegistry::load(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest.json";
  nlohmann::json manifest = nlohmann::json::parse(read_file(manifest_path));

  PromptRegistry reg;
  for (const auto& [name, entry] : manifest.at("assets").items()) {
    auto variant = parse_variant(name);
    if (!variant)
      throw PromptError(PromptError::Kind::UnknownVariant, "manifest names unknown variant: " + name);
    const auto file = dir / entry.at("file").get<std::string>();
    if (!std::filesystem::exists(file))
      throw PromptError(PromptError::Kind::MissingAsset, "missing prompt asset: " + file.string());
    PromptAsset asset;
    asset.variant = *variant;
    asset.text = read_file(file);
    asset.checksum = checksum(asset.text);
    const auto pinned = entry.at("checksum").get<std::string>();
    if (asset.checksum != pinned)
      throw PromptError(PromptError::Kind::ChecksumMismatch,
                        "prompt asset drifted from manifest: " + name + " (expected " + pinned +
                            ", got " + asset.checksum + ")");
    reg.assets_[*variant] = std::move(asset);
  }
  return reg;
}

const PromptAsset& PromptRegistry::get(PromptVariant variant) const {
  auto it = assets_.find(variant);
  if (it == assets_.end())
    throw PromptError(PromptError::Kind::UnknownVariant,
                      "no prompt asset loaded for variant: " + to_string(variant));
  return it->second;
}

std::string PromptRegistry::render_action_request(const std::vector<std::string>& solutions) const {
  if (solutions.empty())
    throw PromptError(PromptError::Kind::EmptySolutions, "render_action_request: no solutions");
  std::string out = get(PromptVariant::action_generation).text;
  if (!out.empty() && out.back() != '\n') out.push_back('\n');
  for (size_t i = 0; i < solutions.size(); ++i)
    out += "solution requirement " + std::to_string(i + 1) + ": " + solutions[i] + "\n";
  return out;
}

}  // namespace atom::prompts
