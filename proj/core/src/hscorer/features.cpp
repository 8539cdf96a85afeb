#include "mgaudit/hscorer/features.hpp"

#include <algorithm>
#include <cmath>

#include <spdlog/spdlog.h>

#include "mgaudit/text.hpp"

namespace mgaudit::hscorer {

namespace {

double cosine(std::span<const float> a, std::span<const float> b, bool& degenerate) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<double>(a[i]) * b[i];
    na += static_cast<double>(a[i]) * a[i];
    nb += static_cast<double>(b[i]) * b[i];
  }
  if (na == 0.0 || nb == 0.0) {
    degenerate = true;
    return 0.0;
  }
  double c = dot / (std::sqrt(na) * std::sqrt(nb));
  return std::clamp(c, -1.0, 1.0);
}

double mean_similarity(std::string_view word, std::span<const float> v, const std::set<std::string>& protos,
                       const EmbeddingTable& embeddings) {
  if (protos.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& p : protos) {
    auto pv = embeddings.find(p);
    if (!pv) continue;
    bool degenerate = false;
    sum += cosine(v, *pv, degenerate);
    if (degenerate) spdlog::debug("zero-norm vector comparing '{}' with prototype '{}'", word, p);
  }
  return sum / static_cast<double>(protos.size());
}

}  // namespace

ScorePair hypernym_score(std::string_view word, const WordNetSnapshot& wordnet) {
  std::size_t paths = 0;
  double human = 0, nonhuman = 0;
  for (const Synset* s : wordnet.synsets_for(word)) {
    for (const auto& path : wordnet.hypernym_paths(s->id)) {
      ++paths;
      for (const auto& node : path) {
        if (wordnet.is_human(node)) human += 1;
        if (wordnet.is_nonhuman(node)) nonhuman += 1;
      }
    }
  }
  if (paths == 0) return {};
  return {human / static_cast<double>(paths), nonhuman / static_cast<double>(paths)};
}

ScorePair definition_score(std::string_view word, const WordNetSnapshot& wordnet,
                           const IndicatorLexicon& indicators) {
  auto synsets = wordnet.synsets_for(word);
  if (synsets.empty()) return {};
  double human = 0, nonhuman = 0;
  for (const Synset* s : synsets) {
    for (const auto& tok : text::word_strings(s->definition)) {
      if (indicators.human.count(tok)) human += 1;
      if (indicators.nonhuman.count(tok)) nonhuman += 1;
    }
  }
  auto n = static_cast<double>(synsets.size());
  return {human / n, nonhuman / n};
}

ScorePair embedding_score(std::string_view word, const EmbeddingTable& embeddings,
                          const PrototypeLexicon& prototypes) {
  auto v = embeddings.find(word);
  if (!v) return {};
  return {mean_similarity(word, *v, prototypes.human, embeddings),
          mean_similarity(word, *v, prototypes.nonhuman, embeddings)};
}

int suffix_score(std::string_view word, const SuffixSet& suffixes) {
  auto w = text::normalize_lemma(word);
  for (const auto& s : suffixes.suffixes) {
    if (!s.empty() && w.size() >= s.size() && w.compare(w.size() - s.size(), s.size(), s) == 0) return 1;
  }
  return 0;
}

std::vector<double> FeatureVector::values() const {
  std::vector<double> out{hypernym.human,
                          hypernym.nonhuman,
                          definition.human,
                          definition.nonhuman,
                          embedding_similarity.human,
                          embedding_similarity.nonhuman,
                          static_cast<double>(suffix)};
  out.insert(out.end(), embedding.begin(), embedding.end());
  return out;
}

FeatureVector build_feature_vector(std::string_view word, const ScoringResources& resources) {
  FeatureVector f;
  f.hypernym = hypernym_score(word, resources.wordnet);
  f.definition = definition_score(word, resources.wordnet, resources.indicators);
  f.embedding_similarity = embedding_score(word, resources.embeddings, resources.prototypes);
  f.suffix = suffix_score(word, resources.suffixes);
  f.embedding.assign(resources.embeddings.dimension(), 0.0);
  if (auto v = resources.embeddings.find(word)) {
    std::copy(v->begin(), v->end(), f.embedding.begin());
  } else {
    f.embedding_missing = true;
  }
  return f;
}

}  // namespace mgaudit::hscorer
