#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "mgaudit/hscorer/resources.hpp"

namespace mgaudit::hscorer {

struct ScorePair {
  double human = 0.0;
  double nonhuman = 0.0;

  friend bool operator==(const ScorePair&, const ScorePair&) = default;
};

/// Anchor hits summed over every hypernym path of every synset of `word`,
/// divided by the number of paths. (0, 0) when the word has no synsets.
ScorePair hypernym_score(std::string_view word, const WordNetSnapshot& wordnet);

/// Whole-token, case-insensitive indicator counts over the definitions of
/// the word's synsets, divided by the number of synsets.
ScorePair definition_score(std::string_view word, const WordNetSnapshot& wordnet,
                           const IndicatorLexicon& indicators);

/// Mean cosine similarity to the human and non-human prototypes. A missing
/// word vector gives (0, 0); a zero-norm pair contributes 0.
ScorePair embedding_score(std::string_view word, const EmbeddingTable& embeddings,
                          const PrototypeLexicon& prototypes);

int suffix_score(std::string_view word, const SuffixSet& suffixes);

struct FeatureVector {
  static constexpr std::size_t kScalarCount = 7;

  ScorePair hypernym;
  ScorePair definition;
  ScorePair embedding_similarity;
  int suffix = 0;
  std::vector<double> embedding;
  bool embedding_missing = false;

  /// [h_s, n_s, h_d, n_d, h_f, n_f, s, embedding...]
  std::vector<double> values() const;
  std::size_t size() const { return kScalarCount + embedding.size(); }

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

FeatureVector build_feature_vector(std::string_view word, const ScoringResources& resources);

}  // namespace mgaudit::hscorer
