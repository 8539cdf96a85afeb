#include <algorithm>

#include "mgaudit/common.hpp"
#include "mgaudit/metrics.hpp"
#include "mgaudit/text.hpp"

namespace mgaudit::metrics {

namespace {

std::vector<std::string> string_list(const nlohmann::json& j, const char* key, std::vector<std::string> fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_array()) throw ConfigError(std::string("marker lexicon: '") + key + "' must be an array of strings");
  std::vector<std::string> out;
  for (const auto& s : v) {
    if (!s.is_string() || s.get<std::string>().empty())
      throw ConfigError(std::string("marker lexicon: '") + key + "' must hold non-empty strings");
    out.push_back(s.get<std::string>());
  }
  return out;
}

std::string_view gap(std::string_view s, std::size_t from, std::size_t to) {
  auto g = s.substr(from, to - from);
  while (!g.empty() && (g.front() == ' ' || g.front() == '\t' || g.front() == '\n' || g.front() == '\r'))
    g.remove_prefix(1);
  while (!g.empty() && (g.back() == ' ' || g.back() == '\t' || g.back() == '\n' || g.back() == '\r'))
    g.remove_suffix(1);
  return g;
}

/// Whole-token phrase matches. Punctuation between the phrase tokens must be
/// the same as in the phrase (so "mesdames, messieurs" needs its comma).
void match_phrases(std::string_view text, const std::vector<text::WordToken>& toks,
                   const std::vector<std::string>& phrases, std::vector<MarkerHit>& out) {
  for (const auto& phrase : phrases) {
    auto norm = text::normalize_lemma(phrase);
    auto ptoks = text::word_tokens(norm);
    if (ptoks.empty()) continue;
    for (std::size_t i = 0; i + ptoks.size() <= toks.size(); ++i) {
      bool ok = true;
      for (std::size_t k = 0; k < ptoks.size() && ok; ++k) {
        ok = toks[i + k].lower == ptoks[k].lower;
        if (ok && k > 0)
          ok = gap(text, toks[i + k - 1].end, toks[i + k].begin) == gap(norm, ptoks[k - 1].end, ptoks[k].begin);
      }
      if (!ok) continue;
      auto b = toks[i].begin, e = toks[i + ptoks.size() - 1].end;
      out.push_back({b, e, std::string(text.substr(b, e - b)), phrase});
    }
  }
}

void match_words(std::string_view text, const std::vector<text::WordToken>& toks,
                 const std::vector<std::string>& words, bool allow_plural, std::vector<MarkerHit>& out) {
  std::set<std::string> forms;
  for (const auto& w : words) {
    auto n = text::normalize_lemma(w);
    forms.insert(n);
    if (allow_plural) forms.insert(n + "s");
  }
  for (const auto& t : toks) {
    if (forms.count(t.lower)) out.push_back({t.begin, t.end, std::string(text.substr(t.begin, t.end - t.begin)), t.lower});
  }
}

class EndingMatcher {
 public:
  EndingMatcher(std::string_view text, const MarkerLexicon::FemEnding& cfg)
      : text_(text), cps_(text::decode_utf8(text)), cfg_(cfg) {
    for (const auto& e : cfg.endings) endings_.insert(text::normalize_lemma(e));
  }

  void run(std::vector<MarkerHit>& out) const {
    if (!cfg_.separators.empty()) middle_dot(out);
    if (cfg_.parenthesized) parenthesized(out);
    if (cfg_.capitalized) capitalized(out);
  }

 private:
  bool letter(std::size_t i) const { return i < cps_.size() && text::is_letter(cps_[i].value); }
  bool lower(std::size_t i) const { return i < cps_.size() && text::is_lower(cps_[i].value); }
  bool upper(std::size_t i) const { return i < cps_.size() && text::is_upper(cps_[i].value); }

  /// Length in code points of the separator starting at code point i, or 0.
  std::size_t separator_at(std::size_t i) const {
    if (i >= cps_.size()) return 0;
    for (const auto& sep : cfg_.separators) {
      if (sep.empty()) continue;
      if (text_.substr(cps_[i].begin, sep.size()) == sep) {
        std::size_t n = 0, bytes = cps_[i].begin + sep.size();
        while (i + n < cps_.size() && cps_[i + n].begin < bytes) ++n;
        return n;
      }
    }
    return 0;
  }

  std::size_t stem_start(std::size_t i) const {
    while (i > 0 && letter(i - 1)) --i;
    return i;
  }

  void emit(std::size_t first, std::size_t last_exclusive, const char* pattern, std::vector<MarkerHit>& out) const {
    auto b = cps_[first].begin;
    auto e = cps_[last_exclusive - 1].end;
    out.push_back({b, e, std::string(text_.substr(b, e - b)), pattern});
  }

  // auteur·ice, étudiant·e·s
  void middle_dot(std::vector<MarkerHit>& out) const {
    std::size_t i = 0;
    while (i < cps_.size()) {
      auto n = separator_at(i);
      if (n == 0 || i == 0 || !letter(i - 1) || !lower(i + n)) {
        ++i;
        continue;
      }
      auto first = stem_start(i);
      auto j = i;
      while (true) {
        auto m = separator_at(j);
        if (m > 0 && lower(j + m)) {
          j += m;
          while (letter(j)) ++j;
        } else {
          break;
        }
      }
      emit(first, j, "middle_dot", out);
      i = j;
    }
  }

  // auteur(ice), étudiant(e)s
  void parenthesized(std::vector<MarkerHit>& out) const {
    for (std::size_t i = 0; i < cps_.size(); ++i) {
      if (cps_[i].value != U'(' || i < 2 || !letter(i - 1) || !letter(i - 2)) continue;
      std::size_t j = i + 1;
      while (lower(j)) ++j;
      if (j == i + 1 || j >= cps_.size() || cps_[j].value != U')') continue;
      auto inner = text::normalize_lemma(text_.substr(cps_[i + 1].begin, cps_[j].begin - cps_[i + 1].begin));
      if (!endings_.count(inner)) continue;
      std::size_t k = j + 1;
      while (letter(k)) ++k;
      emit(stem_start(i), k, "parenthesized", out);
      i = k - 1;
    }
  }

  // auteurICE, utilisateurICEs
  void capitalized(std::vector<MarkerHit>& out) const {
    std::size_t i = 0;
    while (i < cps_.size()) {
      if (!letter(i)) {
        ++i;
        continue;
      }
      std::size_t first = i, j = i;
      while (letter(j)) ++j;
      // word = [first, j)
      std::size_t stem = first;
      while (stem < j && lower(stem)) ++stem;
      std::size_t caps = stem;
      while (caps < j && upper(caps)) ++caps;
      std::size_t tail = caps;
      if (tail < j && cps_[tail].value == U's') ++tail;
      bool shape = stem - first >= cfg_.min_capital_stem && caps - stem >= cfg_.min_capitals && tail == j;
      if (shape) {
        auto ending = text::normalize_lemma(text_.substr(cps_[stem].begin, cps_[caps - 1].end - cps_[stem].begin));
        if (endings_.count(ending)) emit(first, j, "capitalized", out);
      }
      i = j;
    }
  }

  std::string_view text_;
  std::vector<text::CodePoint> cps_;
  const MarkerLexicon::FemEnding& cfg_;
  std::set<std::string> endings_;
};

void make_disjoint(std::vector<MarkerHit>& hits) {
  std::stable_sort(hits.begin(), hits.end(), [](const MarkerHit& a, const MarkerHit& b) {
    if (a.begin != b.begin) return a.begin < b.begin;
    return a.end > b.end;
  });
  std::vector<MarkerHit> out;
  for (auto& h : hits) {
    if (!out.empty() && h.begin < out.back().end) continue;
    out.push_back(std::move(h));
  }
  hits = std::move(out);
}

MarkerHits detect_except_neutral_words(std::string_view text, const std::vector<text::WordToken>& toks,
                                       const MarkerLexicon& lex) {
  MarkerHits hits;
  for (auto f : kMarkerFamilies) hits[f];
  match_phrases(text, toks, lex.incl_greetings, hits[MarkerFamily::incl_greetings]);
  match_phrases(text, toks, lex.incl_pairs, hits[MarkerFamily::incl_pairs]);
  match_words(text, toks, lex.neutral_prons, false, hits[MarkerFamily::neutral_prons]);
  EndingMatcher(text, lex.fem_ending).run(hits[MarkerFamily::fem_ending]);
  return hits;
}

}  // namespace

std::string_view to_string(MarkerFamily f) {
  switch (f) {
    case MarkerFamily::incl_greetings: return "incl_greetings";
    case MarkerFamily::incl_pairs: return "incl_pairs";
    case MarkerFamily::neutral_prons: return "neutral_prons";
    case MarkerFamily::fem_ending: return "fem_ending";
    case MarkerFamily::neutral_words: return "neutral_words";
  }
  return "";
}

MarkerFamily parse_marker_family(std::string_view s) {
  for (auto f : kMarkerFamilies)
    if (to_string(f) == s) return f;
  throw DataError("unknown marker family '" + std::string(s) + "'");
}

MarkerLexicon MarkerLexicon::defaults() {
  MarkerLexicon lex;
  lex.incl_greetings = {"mesdames et messieurs", "messieurs et mesdames", "mesdames, messieurs",
                        "madame, monsieur",      "madame ou monsieur",    "tous et toutes",
                        "toutes et tous",        "chers et chères",       "chères et chers"};
  lex.incl_pairs = {"il ou elle",     "elle ou il",     "ils ou elles",   "elles ou ils",
                    "un ou une",      "une ou un",      "celui ou celle", "celle ou celui",
                    "ceux ou celles", "celles ou ceux"};
  lex.neutral_prons = {"iel", "iels", "ielle", "ielles", "yel", "yels", "celleux", "elleux", "toustes"};
  lex.neutral_words = {"personne", "individu"};
  lex.fem_ending.separators = {"·", "•", "⋅"};
  lex.fem_ending.endings = {"e",    "es",    "ice",  "ices",  "rice", "rices", "euse", "euses", "esse",
                            "esses", "enne", "ennes", "ère",  "ères",  "ne",   "nes",   "le",   "les",
                            "te",   "tes",   "ve",    "ves",  "trice", "trices"};
  return lex;
}

MarkerLexicon MarkerLexicon::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("marker lexicon must be a JSON object");
  auto d = defaults();
  MarkerLexicon lex;
  lex.incl_greetings = string_list(j, "incl_greetings", d.incl_greetings);
  lex.incl_pairs = string_list(j, "incl_pairs", d.incl_pairs);
  lex.neutral_prons = string_list(j, "neutral_prons", d.neutral_prons);
  lex.neutral_words = string_list(j, "neutral_words", d.neutral_words);
  lex.fem_ending = d.fem_ending;
  if (j.contains("fem_ending")) {
    const auto& f = j.at("fem_ending");
    if (!f.is_object()) throw ConfigError("marker lexicon: 'fem_ending' must be an object");
    lex.fem_ending.separators = string_list(f, "separators", d.fem_ending.separators);
    lex.fem_ending.endings = string_list(f, "endings", d.fem_ending.endings);
    lex.fem_ending.parenthesized = f.value("parenthesized", true);
    lex.fem_ending.capitalized = f.value("capitalized", true);
    lex.fem_ending.min_capital_stem = f.value("min_capital_stem", std::size_t{3});
    lex.fem_ending.min_capitals = f.value("min_capitals", std::size_t{2});
  }
  return lex;
}

MarkerLexicon MarkerLexicon::load(const std::filesystem::path& path) {
  try {
    return from_json(nlohmann::json::parse(read_file(path)));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

nlohmann::ordered_json MarkerLexicon::to_json() const {
  nlohmann::ordered_json j;
  j["incl_greetings"] = incl_greetings;
  j["incl_pairs"] = incl_pairs;
  j["neutral_prons"] = neutral_prons;
  j["neutral_words"] = neutral_words;
  j["fem_ending"] = {{"separators", fem_ending.separators},
                     {"parenthesized", fem_ending.parenthesized},
                     {"capitalized", fem_ending.capitalized},
                     {"endings", fem_ending.endings},
                     {"min_capital_stem", fem_ending.min_capital_stem},
                     {"min_capitals", fem_ending.min_capitals}};
  return j;
}

MarkerHits detect_markers(std::string_view text, const MarkerLexicon& lex) {
  auto toks = text::word_tokens(text);
  auto hits = detect_except_neutral_words(text, toks, lex);
  match_words(text, toks, lex.neutral_words, true, hits[MarkerFamily::neutral_words]);
  for (auto& [f, h] : hits) make_disjoint(h);
  return hits;
}

MarkerHits detect_markers(const corpus::AnnotatedDocument& doc, const MarkerLexicon& lex) {
  auto toks = text::word_tokens(doc.text);
  auto hits = detect_except_neutral_words(doc.text, toks, lex);
  std::set<std::string> words;
  for (const auto& w : lex.neutral_words) words.insert(text::normalize_lemma(w));
  auto& out = hits[MarkerFamily::neutral_words];
  for (const auto& s : doc.sentences) {
    for (const auto& t : s.tokens) {
      if (t.upos != "NOUN") continue;
      auto lemma = text::normalize_lemma(t.lemma);
      if (words.count(lemma)) out.push_back({t.begin, t.end, doc.text.substr(t.begin, t.end - t.begin), lemma});
    }
  }
  for (auto& [f, h] : hits) make_disjoint(h);
  return hits;
}

}  // namespace mgaudit::metrics
