#pragma once

#include <optional>
#include <string>
#include <vector>

namespace atom::names {

/// Resolves free-text object references from model output ("water_bottle",
/// "pantry or fridge", "closer to the stove") against a declared inventory.
/// Tiers: normalized exact match, bidirectional token-subset, then best
/// token overlap. Deterministic: ties break on overlap size, then
/// lexicographically smallest normalized name.
class NameIndex {
 public:
  explicit NameIndex(const std::vector<std::string>& names);

  /// Returns the matched inventory name (as declared), or nullopt.
  std::optional<std::string> resolve(const std::string& query) const;

  bool contains(const std::string& query) const { return resolve(query).has_value(); }

 private:
  struct Entry {
    std::string declared;
    std::string normalized;
    std::vector<std::string> tokens;
  };
  std::vector<Entry> entries_;
};

/// "person", "her legs", "the individual", ... — references to the human,
/// reserved for the simulator rather than object lookup.
bool refers_to_person(const std::string& name);

}  // namespace atom::names
