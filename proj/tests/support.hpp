#pragma once

// Shared helpers for the unit tests and the acceptance binary: compact
// CoNLL-U document construction, scratch directories, toy lexicons and the
// brute-force reference implementations the library is checked against.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "mgaudit/common.hpp"
#include "mgaudit/corpus.hpp"
#include "mgaudit/lexdb.hpp"
#include "mgaudit/metrics.hpp"
#include "mgaudit/text.hpp"

#ifndef MGAUDIT_SOURCE_DIR
#define MGAUDIT_SOURCE_DIR "."
#endif

namespace mgtest {

namespace fs = std::filesystem;

inline fs::path source_dir() { return fs::path(MGAUDIT_SOURCE_DIR); }
inline fs::path mini_dir() { return source_dir() / "data" / "mini"; }
inline fs::path fixtures_dir() { return source_dir() / "tests" / "fixtures"; }

/// Fresh directory under the system temp dir, removed on destruction.
class ScratchDir {
 public:
  explicit ScratchDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    path_ = fs::temp_directory_path() /
            ("mgaudit-" + tag + "-" + std::to_string(stamp) + "-" + std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  fs::path path_;
};

// ---------------------------------------------------------------------------
// Documents

struct Tok {
  std::string form;
  std::string lemma;
  std::string upos;
  std::string feats = "_";
  int head = 0;
  std::string deprel = "dep";
  std::string ner = "O";  // empty: no NER entry in MISC
  bool space_after = true;
};

using Sent = std::vector<Tok>;

inline std::string conllu_of(const std::string& id, const std::vector<Sent>& sentences,
                             const std::string& dataset = "test") {
  std::ostringstream out;
  out << "# newdoc id = " << id << "\n# dataset = " << dataset << "\n";
  int n = 0;
  for (const auto& s : sentences) {
    out << "# sent_id = " << id << "-" << ++n << "\n";
    int i = 0;
    for (const auto& t : s) {
      std::vector<std::string> misc;
      if (!t.ner.empty()) misc.push_back("NER=" + t.ner);
      if (!t.space_after) misc.push_back("SpaceAfter=No");
      std::string m;
      for (const auto& x : misc) m += (m.empty() ? "" : "|") + x;
      if (m.empty()) m = "_";
      out << ++i << '\t' << t.form << '\t' << t.lemma << '\t' << t.upos << "\t_\t" << t.feats << '\t' << t.head
          << '\t' << t.deprel << "\t_\t" << m << "\n";
    }
    out << "\n";
  }
  return out.str();
}

inline mgaudit::corpus::AnnotatedDocument make_doc(const std::string& id, const std::vector<Sent>& sentences,
                                                   const std::string& dataset = "test") {
  auto docs = mgaudit::corpus::parse_conllu(conllu_of(id, sentences, dataset));
  return docs.at(0);
}

// ---------------------------------------------------------------------------
// Lexicons

inline mgaudit::lexdb::LexicalEntry entry(std::string lemma, mgaudit::lexdb::Gender g, bool epicene = false,
                                          std::string source = "test") {
  mgaudit::lexdb::LexicalEntry e;
  e.lemma = std::move(lemma);
  e.gender = g;
  e.epicene = epicene;
  e.sources = {std::move(source)};
  return e;
}

inline mgaudit::lexdb::HumanNounDB db_of(const std::vector<mgaudit::lexdb::LexicalEntry>& entries) {
  return mgaudit::lexdb::merge_lexicons({entries}).db;
}

/// Database from the mini corpus's curated sources (no classifier screening).
inline mgaudit::lexdb::HumanNounDB mini_trusted_db() {
  using namespace mgaudit::lexdb;
  auto d = ingest_source(SourceAdapter::demonette_csv, mini_dir() / "demonette.csv");
  auto w = ingest_source(SourceAdapter::wikidata_tsv, mini_dir() / "wikidata.tsv");
  auto n = ingest_source(SourceAdapter::nhuma_csv, mini_dir() / "nhuma.csv");
  return merge_lexicons({d.entries, w.entries, n.entries}).db;
}

inline mgaudit::corpus::RuleSet mini_rules() {
  mgaudit::corpus::RuleSet rules;
  for (const auto& n : mgaudit::read_line_list(mini_dir() / "given_names.txt"))
    rules.given_names.insert(mgaudit::text::normalize_lemma(n));
  return rules;
}

// ---------------------------------------------------------------------------
// Reference implementations

/// Largest-remainder apportionment in exact integer arithmetic.
inline std::map<std::string, std::size_t> reference_apportion(const std::map<std::string, std::size_t>& counts,
                                                              std::size_t target) {
  unsigned long long total = 0;
  for (const auto& [k, c] : counts) total += c;
  struct Row {
    std::string key;
    std::size_t count;
    unsigned long long floor;
    unsigned long long rem;
  };
  std::vector<Row> rows;
  unsigned long long assigned = 0;
  for (const auto& [k, c] : counts) {
    unsigned long long num = static_cast<unsigned long long>(target) * c;
    rows.push_back({k, c, num / total, num % total});
    assigned += num / total;
  }
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    if (a.rem != b.rem) return a.rem > b.rem;
    if (a.count != b.count) return a.count > b.count;
    return a.key < b.key;
  });
  for (std::size_t i = 0; assigned < target; ++i, ++assigned) rows[i].floor += 1;
  std::map<std::string, std::size_t> out;
  for (const auto& r : rows) out[r.key] = static_cast<std::size_t>(r.floor);
  return out;
}

/// Cohen's kappa straight from the 2x2 table.
inline double reference_kappa(const std::vector<int>& a, const std::vector<int>& b) {
  double n = static_cast<double>(a.size());
  double t[2][2] = {{0, 0}, {0, 0}};
  for (std::size_t i = 0; i < a.size(); ++i) t[a[i]][b[i]] += 1;
  double po = (t[0][0] + t[1][1]) / n;
  double a1 = (t[1][0] + t[1][1]) / n, b1 = (t[0][1] + t[1][1]) / n;
  double pe = a1 * b1 + (1 - a1) * (1 - b1);
  if (pe == 1.0) return 1.0;
  return (po - pe) / (1 - pe);
}

// ---------------------------------------------------------------------------
// Random mini-texts for the M Score oracle

struct ToyNoun {
  std::string lemma;
  bool masculine;
  bool feminine;
};

/// Ten lemmas: masculine-only, feminine-only, both genders, neutral words.
inline std::vector<ToyNoun> toy_nouns() {
  return {{"avocat", true, false},  {"avocate", false, true},    {"médecin", true, false},
          {"artiste", true, true},  {"chanteur", true, false},   {"chanteuse", false, true},
          {"personne", false, true}, {"individu", true, false},  {"guide", true, false},
          {"citoyen", true, false}};
}

inline mgaudit::lexdb::HumanNounDB toy_db() {
  std::vector<mgaudit::lexdb::LexicalEntry> es;
  for (const auto& n : toy_nouns()) {
    if (n.masculine) es.push_back(entry(n.lemma, mgaudit::lexdb::Gender::masculine));
    if (n.feminine) es.push_back(entry(n.lemma, mgaudit::lexdb::Gender::feminine));
  }
  return db_of(es);
}

inline const std::set<std::string>& toy_stoplist() {
  static const std::set<std::string> s{"guide"};
  return s;
}

inline const std::set<std::string>& toy_neutral_words() {
  static const std::set<std::string> s{"personne", "individu"};
  return s;
}

struct RandomText {
  std::vector<Sent> sentences;
  std::vector<mgaudit::metrics::Validation> verdicts;  // one per expected candidate
};

/// Up to 20 tokens: toy nouns (some tagged Gender=Fem), out-of-lexicon
/// nouns, a lexicon lemma used as a verb, function words.
inline RandomText random_text(std::mt19937_64& rng) {
  static const std::vector<ToyNoun> nouns = toy_nouns();
  static const std::vector<std::string> fillers{"le", "de", "et", "avec", "pour"};
  static const std::vector<std::string> other_nouns{"table", "maison", "voiture"};
  std::uniform_int_distribution<int> len(1, 20);
  std::uniform_int_distribution<int> kind(0, 9);
  RandomText t;
  Sent s;
  int n = len(rng);
  for (int i = 0; i < n; ++i) {
    int k = kind(rng);
    if (k < 5) {
      const auto& noun = nouns[rng() % nouns.size()];
      bool fem = noun.feminine && (!noun.masculine || rng() % 2 == 0);
      s.push_back({noun.lemma, noun.lemma, "NOUN", fem ? "Gender=Fem|Number=Sing" : "Gender=Masc|Number=Sing"});
    } else if (k < 7) {
      auto w = other_nouns[rng() % other_nouns.size()];
      s.push_back({w, w, "NOUN", "Number=Sing"});
    } else if (k == 7) {
      const auto& noun = nouns[rng() % nouns.size()];
      s.push_back({noun.lemma, noun.lemma, "VERB"});
    } else {
      auto w = fillers[rng() % fillers.size()];
      s.push_back({w, w, "ADP"});
    }
  }
  t.sentences.push_back(std::move(s));
  return t;
}

struct OracleCounts {
  std::size_t hn = 0;
  std::size_t mg = 0;
};

/// Scans the generator's own token list; knows nothing about the library's
/// candidate extraction.
inline OracleCounts oracle_scan(const RandomText& t, std::mt19937_64& verdict_rng,
                                std::vector<mgaudit::metrics::Validation>& verdicts) {
  using mgaudit::metrics::Validation;
  static const std::vector<ToyNoun> nouns = toy_nouns();
  OracleCounts c;
  verdicts.clear();
  for (const auto& s : t.sentences) {
    for (const auto& tok : s) {
      if (tok.upos != "NOUN") continue;
      auto it = std::find_if(nouns.begin(), nouns.end(), [&](const ToyNoun& n) { return n.lemma == tok.lemma; });
      if (it == nouns.end() || toy_stoplist().count(tok.lemma)) continue;
      auto v = static_cast<Validation>(verdict_rng() % 3);
      verdicts.push_back(v);
      if (v != Validation::accepted) continue;
      ++c.hn;
      bool fem_token = tok.feats.find("Gender=Fem") != std::string::npos;
      bool mg_lemma = it->masculine && !it->feminine;
      if (mg_lemma && !fem_token && !toy_neutral_words().count(tok.lemma)) ++c.mg;
    }
  }
  return c;
}

}  // namespace mgtest
