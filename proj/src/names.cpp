#include "atom/names.hpp"

#include <algorithm>
#include <unordered_set>

#include "atom/text.hpp"

namespace atom::names {

using text::content_tokens;
using text::normalize;

NameIndex::NameIndex(const std::vector<std::string>& names) {
  for (const auto& n : names) {
    Entry e;
    e.declared = n;
    e.normalized = normalize(n);
    e.tokens = content_tokens(n);
    std::sort(e.tokens.begin(), e.tokens.end());
    entries_.push_back(std::move(e));
  }
}

namespace {

bool subset(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  // both sorted
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

size_t overlap(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  size_t n = 0, i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] == b[j]) {
      ++n;
      ++i;
      ++j;
    } else if (a[i] < b[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  return n;
}

}  // namespace

std::optional<std::string> NameIndex::resolve(const std::string& query) const {
  const std::string q = normalize(query);
  for (const auto& e : entries_)
    if (e.normalized == q) return e.declared;

  auto qtok = content_tokens(query);
  std::sort(qtok.begin(), qtok.end());
  qtok.erase(std::unique(qtok.begin(), qtok.end()), qtok.end());
  if (qtok.empty()) return std::nullopt;

  const Entry* best = nullptr;
  size_t best_overlap = 0;
  bool best_subset = false;
  for (const auto& e : entries_) {
    if (e.tokens.empty()) continue;
    bool sub = subset(qtok, e.tokens) || subset(e.tokens, qtok);
    size_t ov = overlap(qtok, e.tokens);
    if (ov == 0) continue;
    bool better = false;
    if (sub != best_subset) {
      better = sub;
    } else if (ov != best_overlap) {
      better = ov > best_overlap;
    } else if (best) {
      better = e.normalized < best->normalized;
    }
    if (!best || better) {
      best = &e;
      best_overlap = ov;
      best_subset = sub;
    }
  }
  if (best && (best_subset || best_overlap >= 1)) return best->declared;
  return std::nullopt;
}

bool refers_to_person(const std::string& name) {
  static const std::unordered_set<std::string> kPersonTokens = {
      "person", "human", "individual", "user", "her", "him", "them", "people"};
  for (const auto& t : text::tokenize(name))
    if (kPersonTokens.count(t)) return true;
  return false;
}

}  // namespace atom::names
