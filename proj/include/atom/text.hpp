#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace atom::text {

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);

/// Case-fold, map spaces/hyphens to underscores, collapse runs, strip
/// leading/trailing underscores. Shared by key and object-name handling.
std::string normalize(std::string_view s);

/// Lowercased alphanumeric+apostrophe words.
std::vector<std::string> tokenize(std::string_view s);

bool is_stopword(std::string_view token);

/// Tokens with filler words ("the", "nearby", "closer", ...) removed.
/// Falls back to the raw token list when everything would be dropped.
std::vector<std::string> content_tokens(std::string_view s);

/// FNV-1a, used for prompt checksums and the hashing embedder.
std::uint64_t fnv1a64(std::string_view s);
std::string hex64(std::uint64_t v);

std::string base64_encode(std::string_view bytes);

/// splitmix64 step; the portable RNG used everywhere determinism matters.
std::uint64_t splitmix64(std::uint64_t& state);

/// Small deterministic RNG (not std::*_distribution, whose output is
/// implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() { return splitmix64(state_); }
  /// Uniform in [0, 1).
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
  /// Uniform in [0, n).
  std::size_t next_index(std::size_t n) { return static_cast<std::size_t>(next_u64() % n); }
  /// Derive an independent stream (e.g. one per Monte-Carlo trial).
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream);

 private:
  std::uint64_t state_;
};

}  // namespace atom::text
