#include <algorithm>
#include <array>

#include "mgaudit/lexdb.hpp"
#include "mgaudit/text.hpp"

namespace mgaudit::lexdb {

namespace {

// "l'" tokenizes to "l".
constexpr std::array<std::string_view, 5> kDeterminers{"un", "une", "le", "la", "l"};

bool is_determiner(std::string_view tok) {
  return std::find(kDeterminers.begin(), kDeterminers.end(), tok) != kDeterminers.end();
}

bool starts_with_tokens(const std::vector<std::string>& def, const std::vector<std::string>& noun) {
  if (noun.empty()) return false;
  std::size_t offset = (!def.empty() && is_determiner(def.front())) ? 1 : 0;
  if (def.size() < offset + noun.size()) return false;
  return std::equal(noun.begin(), noun.end(), def.begin() + static_cast<std::ptrdiff_t>(offset));
}

}  // namespace

bool definition_starts_with(std::string_view definition, std::string_view noun) {
  return starts_with_tokens(text::word_strings(definition), text::word_strings(noun));
}

std::set<std::string> recursive_definition_search(const DictionarySnapshot& snapshot,
                                                  const std::set<std::string>& seeds,
                                                  std::size_t max_depth) {
  std::set<std::string> found;
  if (max_depth == 0 || seeds.empty()) return found;

  struct Candidate {
    std::string lemma;
    std::vector<std::vector<std::string>> definitions;
  };
  std::vector<Candidate> candidates;
  candidates.reserve(snapshot.entries.size());
  for (const auto& e : snapshot.entries) {
    Candidate c{text::normalize_lemma(e.lemma), {}};
    for (const auto& d : e.definitions) c.definitions.push_back(text::word_strings(d));
    candidates.push_back(std::move(c));
  }

  std::set<std::string> normalized_seeds;
  for (const auto& s : seeds) normalized_seeds.insert(text::normalize_lemma(s));

  std::vector<std::vector<std::string>> frontier;
  for (const auto& s : normalized_seeds) frontier.push_back(text::word_strings(s));

  for (std::size_t depth = 1; depth <= max_depth && !frontier.empty(); ++depth) {
    std::vector<std::vector<std::string>> next;
    for (const auto& c : candidates) {
      if (c.lemma.empty() || found.count(c.lemma) || normalized_seeds.count(c.lemma)) continue;
      bool hit = std::any_of(c.definitions.begin(), c.definitions.end(), [&](const auto& def) {
        return std::any_of(frontier.begin(), frontier.end(),
                           [&](const auto& noun) { return starts_with_tokens(def, noun); });
      });
      if (hit) {
        found.insert(c.lemma);
        next.push_back(text::word_strings(c.lemma));
      }
    }
    frontier = std::move(next);
  }
  return found;
}

}  // namespace mgaudit::lexdb
