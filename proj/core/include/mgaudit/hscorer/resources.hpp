#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace mgaudit::hscorer {

struct Synset {
  std::string id;
  std::vector<std::string> lemmas;
  std::string definition;
  std::vector<std::string> hypernyms;
};

/// Lexical taxonomy snapshot with human / non-human anchor synsets. The
/// hypernym graph must be acyclic and every referenced id must exist.
class WordNetSnapshot {
 public:
  WordNetSnapshot() = default;
  WordNetSnapshot(std::vector<Synset> synsets, std::set<std::string> human_anchors,
                  std::set<std::string> nonhuman_anchors);

  /// Reads `{id, lemmas[], definition, hypernyms[]}` JSONL.
  static WordNetSnapshot load(const std::filesystem::path& path, std::set<std::string> human_anchors,
                              std::set<std::string> nonhuman_anchors);

  const Synset* find(std::string_view id) const;
  std::vector<const Synset*> synsets_for(std::string_view lemma) const;

  /// Every root-to-synset hypernym path, each ending with `id` itself.
  std::vector<std::vector<std::string>> hypernym_paths(std::string_view id) const;

  bool is_human(std::string_view id) const { return human_.count(std::string(id)) > 0; }
  bool is_nonhuman(std::string_view id) const { return nonhuman_.count(std::string(id)) > 0; }

  const std::vector<Synset>& synsets() const { return synsets_; }

 private:
  void index();

  std::vector<Synset> synsets_;
  std::unordered_map<std::string, std::size_t> by_id_;
  std::unordered_map<std::string, std::vector<std::size_t>> by_lemma_;
  std::set<std::string> human_;
  std::set<std::string> nonhuman_;
};

/// English indicator words searched in definitions. Sets must be disjoint.
struct IndicatorLexicon {
  std::set<std::string> human;
  std::set<std::string> nonhuman;

  void validate() const;
  /// JSON object `{"human": [...], "nonhuman": [...]}`.
  static IndicatorLexicon load(const std::filesystem::path& path);
};

/// French prototype words compared by embedding cosine. Sets must be disjoint.
struct PrototypeLexicon {
  std::set<std::string> human;
  std::set<std::string> nonhuman;

  void validate() const;
  static PrototypeLexicon load(const std::filesystem::path& path);
};

class EmbeddingTable {
 public:
  explicit EmbeddingTable(std::size_t dimension = 300);

  /// Text format: header "vocab_size dimension", then "token c1 ... cd".
  static EmbeddingTable load(const std::filesystem::path& path);

  void add(std::string token, std::span<const float> vector);
  /// Exact token first, then its normalized form.
  std::optional<std::span<const float>> find(std::string_view token) const;

  std::size_t dimension() const { return dimension_; }
  std::size_t size() const { return index_.size(); }

 private:
  std::size_t dimension_;
  std::vector<float> data_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct SuffixSet {
  std::vector<std::string> suffixes;

  void validate() const;
  /// One suffix per line.
  static SuffixSet load(const std::filesystem::path& path);
};

/// Everything the feature extractor reads; validated on construction.
struct ScoringResources {
  WordNetSnapshot wordnet;
  IndicatorLexicon indicators;
  PrototypeLexicon prototypes;
  EmbeddingTable embeddings{300};
  SuffixSet suffixes;

  /// Throws ConfigError when an invariant does not hold (overlapping sets,
  /// prototypes without vectors, empty suffixes).
  void validate() const;
};

}  // namespace mgaudit::hscorer
