#pragma once

// French human-noun lexicon: ingestion of lexical-resource dumps, merging into
// a deduplicated database, class annotation and the masculine-generics subset.

#include <compare>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace mgaudit::lexdb {

enum class Gender { masculine, feminine };

enum class HnClass {
  profession,
  demonym,
  doer,
  speciality,
  attribute,
  relationship,
  status,
  title,
  patient,
  recipient,
  other,
};

enum class ClassProvenance { none, model, human };

std::string_view to_string(Gender g);
std::string_view to_string(HnClass c);
std::string_view to_string(ClassProvenance p);

/// Accepts "m", "masc", "masculine" (and "f"...) case-insensitively.
std::optional<Gender> parse_gender(std::string_view s);
std::optional<HnClass> parse_hn_class(std::string_view s);
std::optional<ClassProvenance> parse_provenance(std::string_view s);

struct LexicalEntry {
  std::string lemma;  // normalize_lemma()'d
  Gender gender = Gender::masculine;
  bool epicene = false;
  std::set<std::string> sources;
  std::optional<HnClass> hn_class;
  ClassProvenance class_provenance = ClassProvenance::none;

  friend bool operator==(const LexicalEntry&, const LexicalEntry&) = default;
};

/// Throws DataError if the entry violates its invariants (empty or padded
/// lemma, no source, class/provenance mismatch).
void validate(const LexicalEntry& e);

struct EntryKey {
  std::string lemma;
  Gender gender;

  friend auto operator<=>(const EntryKey&, const EntryKey&) = default;
};

/// Immutable after construction; keyed by (lemma, gender).
class HumanNounDB {
 public:
  using Map = std::map<EntryKey, LexicalEntry>;

  HumanNounDB() = default;
  explicit HumanNounDB(Map entries);

  const LexicalEntry* find(std::string_view lemma, Gender gender) const;
  /// True when the lemma exists under either gender.
  bool contains_lemma(std::string_view lemma) const;

  const Map& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  friend bool operator==(const HumanNounDB&, const HumanNounDB&) = default;

 private:
  Map entries_;
  std::set<std::string, std::less<>> lemmas_;
};

/// Masculine, non-epicene entries only, keyed by lemma.
class MGLexicon {
 public:
  MGLexicon() = default;
  explicit MGLexicon(std::map<std::string, LexicalEntry, std::less<>> entries);

  bool contains(std::string_view lemma) const { return entries_.find(lemma) != entries_.end(); }
  const LexicalEntry* find(std::string_view lemma) const;
  const std::map<std::string, LexicalEntry, std::less<>>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

 private:
  std::map<std::string, LexicalEntry, std::less<>> entries_;
};

struct DictionarySnapshot {
  struct Entry {
    std::string lemma;
    std::vector<std::string> definitions;  // source order, index 0 = most common sense
    std::optional<Gender> gender;
  };
  std::vector<Entry> entries;
};

// ---------------------------------------------------------------------------
// Ingestion

enum class SourceAdapter { demonette_csv, wikidata_tsv, nhuma_csv, wiktextract_jsonl, dictionary_snapshot };

std::string_view to_string(SourceAdapter a);
/// Throws ConfigError on an unknown adapter id.
SourceAdapter parse_source_adapter(std::string_view s);

/// Dictionary-definition nouns used to recognise human senses.
std::vector<std::string> default_definition_nouns();
/// Same list without "individu", which also denotes non-human living beings.
std::vector<std::string> default_wiktionary_definition_nouns();

struct IngestOptions {
  /// Source identifier recorded on each entry; empty means the adapter name.
  std::string source_id;
  /// Prefix nouns for wiktextract_jsonl / dictionary_snapshot. Empty selects
  /// the adapter's default list.
  std::vector<std::string> definition_nouns;
  /// 1-based index of the last sense allowed to carry the human reading.
  std::size_t max_definition_index = 2;
  /// Recursion depth for dictionary_snapshot.
  std::size_t max_depth = 2;
  /// Used when a record carries no gender information.
  Gender default_gender = Gender::masculine;
  /// Lemmas never emitted (e.g. common-word exclusions).
  std::set<std::string> exclude;
};

struct RecordError {
  std::size_t line;
  std::string message;
};

struct IngestReport {
  std::string source;
  std::size_t records = 0;
  std::vector<RecordError> errors;
};

struct IngestResult {
  std::vector<LexicalEntry> entries;
  IngestReport report;
};

/// Malformed records are collected in the report; an unreadable file or a
/// wrong header throws.
IngestResult ingest_source(SourceAdapter adapter, const std::filesystem::path& path,
                           const IngestOptions& options = {});

DictionarySnapshot load_dictionary_snapshot(const std::filesystem::path& path,
                                            IngestReport* report = nullptr);

/// Lemmas whose definitions begin (after a leading determiner) with a seed,
/// expanded breadth-first: level k matches against the lemmas found at level
/// k-1. Seeds themselves are never returned.
std::set<std::string> recursive_definition_search(const DictionarySnapshot& snapshot,
                                                  const std::set<std::string>& seeds,
                                                  std::size_t max_depth);

/// True if the definition's first tokens, after dropping one leading
/// determiner, equal the tokens of `noun`.
bool definition_starts_with(std::string_view definition, std::string_view noun);

// ---------------------------------------------------------------------------
// Merge, subset, classes

struct ClassConflict {
  std::string lemma;
  Gender gender;
  HnClass kept;
  std::string kept_source;
  HnClass dropped;
  std::string dropped_source;
};

struct MergeResult {
  HumanNounDB db;
  std::vector<ClassConflict> conflicts;
};

/// Deduplicates on (lemma, gender) and unions sources. Class labels follow
/// human > model > none; two different human labels are a conflict resolved
/// by `source_priority` (earlier wins; unlisted sources rank after listed
/// ones, and among themselves the first seen wins). Epicene is recomputed:
/// a lemma present under both genders is epicene.
MergeResult merge_lexicons(const std::vector<std::vector<LexicalEntry>>& parts,
                           const std::vector<std::string>& source_priority = {});

MGLexicon extract_mg_subset(const HumanNounDB& db);

/// Raw model labels to canonical classes: the NHUMA-trained tagger labels
/// plus identity entries for every canonical class name.
std::map<std::string, HnClass> default_class_mapping();

/// Gold labels win (provenance human). Predicted labels, mapped through
/// `mapping`, fill entries without a human label (provenance model). Throws
/// ConfigError when a predicted label is not in `mapping`.
HumanNounDB annotate_classes(const HumanNounDB& db, const std::map<std::string, HnClass>& gold,
                             const std::map<std::string, std::string>& predicted,
                             const std::map<std::string, HnClass>& mapping);

// ---------------------------------------------------------------------------
// Lexicon JSONL

/// One entry per line, keys in the order lemma, gender, epicene, sources,
/// hn_class, class_provenance; sources sorted; hn_class null when absent.
std::string entry_to_json_line(const LexicalEntry& e);
LexicalEntry entry_from_json_line(std::string_view line);

void write_lexicon_jsonl(std::ostream& out, const HumanNounDB& db);
void write_lexicon_jsonl(std::ostream& out, const MGLexicon& mg);
std::string lexicon_jsonl(const HumanNounDB& db);
HumanNounDB read_lexicon_jsonl(const std::filesystem::path& path);

}  // namespace mgaudit::lexdb
