#pragma once

// Pre-annotated corpora (CoNLL-U), the exclusion filters applied to
// instructions and responses, and proportional narrowing of instruction sets.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mgaudit/lexdb.hpp"

namespace mgaudit::corpus {

enum class NerLabel { none, per, misc, org, loc };

std::string_view to_string(NerLabel l);
/// "PER", "B-PER", "I-PER" ... and "O"; nullopt for anything else.
std::optional<NerLabel> parse_ner_label(std::string_view s);

struct AnnotatedToken {
  std::string form;
  std::string lemma;
  std::string upos;
  std::string xpos = "_";
  std::map<std::string, std::string> feats;
  int head = 0;  // 1-based token index within the sentence, 0 = root
  std::string deprel;
  std::optional<NerLabel> ner;  // nullopt: no NER annotation on this token
  bool space_after = true;
  /// MISC entries other than NER and SpaceAfter, verbatim.
  std::vector<std::string> misc;
  // byte span in AnnotatedDocument::text
  std::size_t begin = 0;
  std::size_t end = 0;

  std::string_view feat(std::string_view key) const;
};

/// CoNLL-U range line such as "1-2 du" covering words first..last (1-based).
struct MultiwordToken {
  int first = 0;
  int last = 0;
  std::string form;
  bool space_after = true;
};

struct Sentence {
  std::string sent_id;
  std::vector<AnnotatedToken> tokens;
  std::vector<MultiwordToken> multiword;
};

struct AnnotatedDocument {
  std::string doc_id;
  std::string dataset_tag;
  /// Rebuilt from the token forms: single spaces unless SpaceAfter=No,
  /// sentences joined by one space. Token begin/end index into it.
  std::string text;
  std::vector<Sentence> sentences;
  /// True when at least one token carries an NER= entry.
  bool has_ner = false;

  /// Recomputes `text` and every token span from the forms.
  void rebuild_text();
  std::size_t token_count() const;
};

/// Documents start at "# newdoc id = ..."; "# dataset = ..." sets the tag.
/// Empty nodes are skipped; a head outside the sentence is a DataError.
std::vector<AnnotatedDocument> read_conllu(const std::filesystem::path& path);
std::vector<AnnotatedDocument> parse_conllu(std::string_view contents, const std::string& origin = "<memory>");
void write_conllu(std::ostream& out, const std::vector<AnnotatedDocument>& docs);
std::string conllu_string(const std::vector<AnnotatedDocument>& docs);

// ---------------------------------------------------------------------------
// Filters

enum class RuleId { per, misc_given_name, qui_interrogative, det_hn, jargon };

std::string_view to_string(RuleId r);
/// Throws ConfigError on an unknown rule id.
RuleId parse_rule_id(std::string_view s);
std::set<RuleId> all_rules();

enum class DetHnMode { dependency, adjacency, both };

std::string_view to_string(DetHnMode m);
DetHnMode parse_det_hn_mode(std::string_view s);

struct FiredRule {
  RuleId rule;
  /// e.g. "possessive/dependency" for det_hn, "sentence_removed" for jargon.
  std::string sub_rule;
  std::size_t sentence = 0;  // 0-based
  std::size_t token = 0;     // 0-based within the sentence
  std::size_t begin = 0;     // byte span in the document text
  std::size_t end = 0;

  friend bool operator==(const FiredRule&, const FiredRule&) = default;
};

struct FilterDecision {
  bool kept = true;
  std::vector<FiredRule> fired_rules;

  /// Rules that exclude the document; jargon removes spans instead.
  static bool excludes(RuleId r) { return r != RuleId::jargon; }
  void add(FiredRule r);
  bool fired(RuleId r) const;
};

struct RuleSet {
  std::set<RuleId> enabled = all_rules();
  DetHnMode det_hn_mode = DetHnMode::dependency;
  std::set<std::string> given_names;  // normalize_lemma()'d
  std::set<std::string> jargon_datasets{"oracle"};
  std::set<std::string> jargon_terms{"oracle", "pythie"};
};

/// PER tokens, and MISC tokens whose form is a given name. Throws
/// ConfigError when the document has no NER layer.
FilterDecision detect_person_names(const AnnotatedDocument& doc, const std::set<std::string>& given_names);

struct FilterOutcome {
  AnnotatedDocument doc;  // jargon sentences removed
  FilterDecision decision;
};

/// qui_interrogative, det_hn and jargon (only for jargon_datasets).
FilterOutcome apply_generic_filters(const AnnotatedDocument& doc, const lexdb::HumanNounDB& hn_db,
                                    const RuleSet& rules);

/// Every enabled rule, person names included.
FilterOutcome filter_document(const AnnotatedDocument& doc, const lexdb::HumanNounDB& hn_db, const RuleSet& rules);

struct FilteredCorpus {
  std::vector<AnnotatedDocument> kept;
  std::vector<std::pair<std::string, FilterDecision>> decisions;  // by doc_id
};

/// Output ordered by doc_id (stable for duplicates).
FilteredCorpus filter_corpus(const std::vector<AnnotatedDocument>& docs, const lexdb::HumanNounDB& hn_db,
                             const RuleSet& rules);

/// {"doc_id", "kept", "fired_rules": [{rule, sub_rule, sentence, token, begin, end}]}
nlohmann::ordered_json filter_report_entry(const std::string& doc_id, const FilterDecision& d);

// ---------------------------------------------------------------------------
// Candidates and instruction selection

struct CandidateOccurrence {
  std::string lemma;  // normalized
  std::string form;
  std::size_t sentence = 0;
  std::size_t token = 0;
  std::size_t begin = 0;
  std::size_t end = 0;

  friend bool operator==(const CandidateOccurrence&, const CandidateOccurrence&) = default;
};

/// NOUN tokens whose lemma is in the database, in textual order.
std::vector<CandidateOccurrence> find_hn_candidates(const AnnotatedDocument& doc, const lexdb::HumanNounDB& db);

std::vector<CandidateOccurrence> apply_ambiguity_stoplist(std::vector<CandidateOccurrence> occurrences,
                                                          const std::set<std::string>& stoplist);

/// Drops every document with a token whose lemma is an MG lemma that is not
/// stoplisted.
std::vector<AnnotatedDocument> remove_mg_instructions(const std::vector<AnnotatedDocument>& docs,
                                                      const lexdb::MGLexicon& mg,
                                                      const std::set<std::string>& stoplist = {});

/// Largest remainder with the total fixed at `target`. Ties on the remainder
/// go to the larger original count, then to the smaller key. Throws
/// DataError when target exceeds the total.
std::map<std::string, std::size_t> apportion_largest_remainder(const std::map<std::string, std::size_t>& counts,
                                                               std::size_t target);

/// Per-dataset uniform sample (seeded) of the apportioned size; the kept
/// indices are returned in ascending order.
std::map<std::string, std::vector<std::size_t>> narrow_proportional(
    const std::map<std::string, std::size_t>& counts, std::size_t target, std::uint64_t seed);

}  // namespace mgaudit::corpus
