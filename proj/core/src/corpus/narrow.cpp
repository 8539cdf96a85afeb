#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>

#include "mgaudit/common.hpp"
#include "mgaudit/corpus.hpp"
#include "mgaudit/text.hpp"

namespace mgaudit::corpus {

std::vector<CandidateOccurrence> find_hn_candidates(const AnnotatedDocument& doc, const lexdb::HumanNounDB& db) {
  std::vector<CandidateOccurrence> out;
  for (std::size_t s = 0; s < doc.sentences.size(); ++s) {
    const auto& toks = doc.sentences[s].tokens;
    for (std::size_t t = 0; t < toks.size(); ++t) {
      if (toks[t].upos != "NOUN") continue;
      auto lemma = text::normalize_lemma(toks[t].lemma);
      if (!db.contains_lemma(lemma)) continue;
      out.push_back({std::move(lemma), toks[t].form, s, t, toks[t].begin, toks[t].end});
    }
  }
  return out;
}

std::vector<CandidateOccurrence> apply_ambiguity_stoplist(std::vector<CandidateOccurrence> occurrences,
                                                          const std::set<std::string>& stoplist) {
  if (stoplist.empty()) return occurrences;
  std::erase_if(occurrences, [&](const CandidateOccurrence& o) { return stoplist.count(o.lemma) > 0; });
  return occurrences;
}

std::vector<AnnotatedDocument> remove_mg_instructions(const std::vector<AnnotatedDocument>& docs,
                                                      const lexdb::MGLexicon& mg,
                                                      const std::set<std::string>& stoplist) {
  std::vector<AnnotatedDocument> out;
  for (const auto& d : docs) {
    bool has_mg = false;
    for (const auto& s : d.sentences) {
      for (const auto& t : s.tokens) {
        auto lemma = text::normalize_lemma(t.lemma);
        if (mg.contains(lemma) && !stoplist.count(lemma)) {
          has_mg = true;
          break;
        }
      }
      if (has_mg) break;
    }
    if (!has_mg) out.push_back(d);
  }
  return out;
}

std::map<std::string, std::size_t> apportion_largest_remainder(const std::map<std::string, std::size_t>& counts,
                                                               std::size_t target) {
  std::size_t total = 0;
  for (const auto& [k, c] : counts) total += c;
  if (target > total)
    throw DataError("narrowing target " + std::to_string(target) + " exceeds the " + std::to_string(total) +
                    " available instructions");
  std::map<std::string, std::size_t> quota;
  if (target == 0) {
    for (const auto& [k, c] : counts) quota[k] = 0;
    return quota;
  }

  struct Share {
    const std::string* key;
    std::size_t count;
    std::uint64_t remainder;  // count * target mod total, exact
  };
  std::vector<Share> shares;
  std::size_t assigned = 0;
  for (const auto& [k, c] : counts) {
    if (c != 0 && target > UINT64_MAX / c) throw DataError("narrowing counts too large");
    std::uint64_t num = static_cast<std::uint64_t>(c) * target;
    auto floor = static_cast<std::size_t>(num / total);
    quota[k] = floor;
    assigned += floor;
    shares.push_back({&k, c, num % total});
  }
  std::sort(shares.begin(), shares.end(), [](const Share& a, const Share& b) {
    if (a.remainder != b.remainder) return a.remainder > b.remainder;
    if (a.count != b.count) return a.count > b.count;
    return *a.key < *b.key;
  });
  for (std::size_t i = 0; assigned < target; ++i, ++assigned) ++quota[*shares[i].key];
  return quota;
}

std::map<std::string, std::vector<std::size_t>> narrow_proportional(
    const std::map<std::string, std::size_t>& counts, std::size_t target, std::uint64_t seed) {
  auto quota = apportion_largest_remainder(counts, target);
  std::mt19937_64 rng(seed);
  std::map<std::string, std::vector<std::size_t>> out;
  for (const auto& [k, c] : counts) {
    std::vector<std::size_t> all(c);
    std::iota(all.begin(), all.end(), std::size_t{0});
    auto& picked = out[k];
    picked.reserve(quota[k]);
    std::sample(all.begin(), all.end(), std::back_inserter(picked), quota[k], rng);
  }
  return out;
}

}  // namespace mgaudit::corpus
