#pragma once

// Human-noun and masculine-generic counting, M Scores, bias rates,
// inclusive-language markers and class frequencies, plus the audit report.

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mgaudit/corpus.hpp"
#include "mgaudit/lexdb.hpp"

namespace mgaudit::metrics {

// ---------------------------------------------------------------------------
// Inclusive-language markers

enum class MarkerFamily { incl_greetings, incl_pairs, neutral_prons, fem_ending, neutral_words };

inline constexpr std::array<MarkerFamily, 5> kMarkerFamilies{
    MarkerFamily::incl_greetings, MarkerFamily::incl_pairs, MarkerFamily::neutral_prons, MarkerFamily::fem_ending,
    MarkerFamily::neutral_words};

std::string_view to_string(MarkerFamily f);
MarkerFamily parse_marker_family(std::string_view s);

struct MarkerHit {
  std::size_t begin = 0;  // byte span
  std::size_t end = 0;
  std::string text;
  /// Which pattern matched: the phrase itself, or "middle_dot",
  /// "parenthesized", "capitalized" for feminine endings.
  std::string pattern;

  friend bool operator==(const MarkerHit&, const MarkerHit&) = default;
};

using MarkerHits = std::map<MarkerFamily, std::vector<MarkerHit>>;

struct MarkerLexicon {
  /// Matched case-insensitively as whole-token phrases.
  std::vector<std::string> incl_greetings;
  std::vector<std::string> incl_pairs;
  /// Matched case-insensitively as whole tokens.
  std::vector<std::string> neutral_prons;
  /// Lemmas; in raw text the lemma or lemma + "s" as a whole token.
  std::vector<std::string> neutral_words;

  struct FemEnding {
    /// Separators between stem and feminine ending ("auteur·ice").
    std::vector<std::string> separators;
    bool parenthesized = true;  // "auteur(ice)"
    bool capitalized = true;    // "auteurICE"
    /// Feminine endings (lowercase) accepted inside parentheses and, in
    /// upper case, after a lowercase stem.
    std::vector<std::string> endings;
    std::size_t min_capital_stem = 3;
    std::size_t min_capitals = 2;
  } fem_ending;

  static MarkerLexicon defaults();
  /// {"incl_greetings": [...], "incl_pairs": [...], "neutral_prons": [...],
  ///  "neutral_words": [...], "fem_ending": {"separators": [...],
  ///  "parenthesized": bool, "capitalized": bool, "endings": [...]}};
  /// missing keys keep the defaults.
  static MarkerLexicon from_json(const nlohmann::json& j);
  static MarkerLexicon load(const std::filesystem::path& path);
  nlohmann::ordered_json to_json() const;
};

/// Every family is present in the result (possibly empty); hits inside a
/// family are disjoint and ordered by position.
MarkerHits detect_markers(std::string_view text, const MarkerLexicon& lex);
/// Same, except neutral words are matched on NOUN lemmas of the document.
MarkerHits detect_markers(const corpus::AnnotatedDocument& doc, const MarkerLexicon& lex);

// ---------------------------------------------------------------------------
// Per-text analysis

enum class Validation { accepted, rejected, unvalidated };

std::string_view to_string(Validation v);
Validation parse_validation(std::string_view s);

/// What unvalidated occurrences count as: excluded (default) or accepted.
enum class UnvalidatedPolicy { exclude, accept };

UnvalidatedPolicy parse_unvalidated_policy(std::string_view s);

struct Occurrence {
  std::string lemma;
  std::string form;
  std::size_t begin = 0;
  std::size_t end = 0;
  bool is_mg = false;
  Validation validated = Validation::unvalidated;
  std::string hn_class;  // class name or "unannotated"

  friend bool operator==(const Occurrence&, const Occurrence&) = default;
};

struct TextAnalysis {
  std::string doc_id;
  std::string group;  // model or dataset id
  std::vector<Occurrence> occurrences;
  std::size_t hn_count = 0;
  std::size_t mg_count = 0;
  std::optional<double> m_score;
  MarkerHits markers;
  /// Counted HN occurrences per class.
  std::map<std::string, std::size_t> classes;
  /// Distinct lemmas of counted MG occurrences.
  std::set<std::string> mg_lemmas;

  friend bool operator==(const TextAnalysis&, const TextAnalysis&) = default;
};

struct AnalysisInputs {
  const lexdb::HumanNounDB& db;
  const lexdb::MGLexicon& mg;
  const std::set<std::string>& stoplist;
  const MarkerLexicon& markers;
  UnvalidatedPolicy policy = UnvalidatedPolicy::exclude;
};

/// Candidate occurrences are NOUN tokens whose lemma is in `db`, minus the
/// stoplist. `verdicts`, when given, holds one verdict per candidate in
/// textual order. An occurrence is MG when its lemma is in `mg`, the token is
/// not marked Gender=Fem and the lemma is not a neutral word.
TextAnalysis analyze_text(const corpus::AnnotatedDocument& doc, std::string group, const AnalysisInputs& in,
                          const std::vector<Validation>* verdicts = nullptr);

/// Candidates analyze_text() would consider, in order (what gets validated).
std::vector<corpus::CandidateOccurrence> analysis_candidates(const corpus::AnnotatedDocument& doc,
                                                             const lexdb::HumanNounDB& db,
                                                             const std::set<std::string>& stoplist);

// ---------------------------------------------------------------------------
// Aggregates

struct MScores {
  std::optional<double> overall;  // sum mg / sum hn
  std::optional<double> mean;     // mean of defined per-text scores
};

MScores aggregate_m_scores(const std::vector<TextAnalysis>& analyses);

struct BiasRates {
  std::optional<double> rate_all;      // percent
  std::optional<double> rate_with_hn;  // percent
};

BiasRates bias_rates(const std::vector<TextAnalysis>& analyses);

/// Percentage of texts with at least one hit, per family.
std::map<MarkerFamily, std::optional<double>> marker_rates(const std::vector<TextAnalysis>& analyses);

/// Unique MG lemmas per class of their masculine entry; lemmas without a
/// class go to "unannotated".
std::map<std::string, std::size_t> class_frequencies(const std::vector<TextAnalysis>& analyses,
                                                     const lexdb::HumanNounDB& db);

std::string class_name(const lexdb::HumanNounDB& db, std::string_view lemma, lexdb::Gender gender);

nlohmann::ordered_json to_json(const TextAnalysis& a);
TextAnalysis analysis_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Report

struct GroupReport {
  std::string group;
  std::size_t n_responses = 0;
  std::size_t n_responses_with_hn = 0;
  std::size_t n_responses_with_mg = 0;
  std::size_t hn_total = 0;
  std::size_t mg_total = 0;
  std::size_t unvalidated_occurrences = 0;
  BiasRates rates;
  MScores m_scores;
  std::map<MarkerFamily, std::size_t> marker_responses;
  std::map<MarkerFamily, std::optional<double>> marker_rates;
  std::map<std::string, std::size_t> class_frequencies;
};

struct AuditReport {
  std::string tool_version;
  std::vector<GroupReport> groups;  // ordered by group id
};

/// Groups analyses by TextAnalysis::group.
AuditReport build_report(const std::vector<TextAnalysis>& analyses, const lexdb::HumanNounDB& db,
                         std::string tool_version);

nlohmann::ordered_json to_json(const AuditReport& r);

enum class ReportFormat { json, csv, plotdata };

ReportFormat parse_report_format(std::string_view s);

/// File name -> contents for one format:
///   json      audit_report.json
///   csv       summary.csv, markers.csv, classes.csv
///   plotdata  plot_bias_rates.csv, plot_m_scores.csv, plot_marker_rates.csv,
///             plot_class_frequencies.csv
std::map<std::string, std::string> render_report(const AuditReport& r, ReportFormat format);

}  // namespace mgaudit::metrics
