#include <algorithm>

#include "mgaudit/common.hpp"
#include "mgaudit/corpus.hpp"
#include "mgaudit/text.hpp"

namespace mgaudit::corpus {

namespace {

FiredRule at(RuleId r, std::string sub, const AnnotatedDocument& doc, std::size_t s, std::size_t t) {
  const auto& tok = doc.sentences[s].tokens[t];
  return {r, std::move(sub), s, t, tok.begin, tok.end};
}

bool is_hn_noun(const AnnotatedToken& t, const lexdb::HumanNounDB& db) {
  return t.upos == "NOUN" && db.contains_lemma(text::normalize_lemma(t.lemma));
}

/// "possessive", "demonstrative" or "definite" for a singular determiner of
/// one of those kinds; empty otherwise.
std::string determiner_kind(const AnnotatedToken& t) {
  if (t.upos != "DET" || t.feat("Number") != "Sing") return {};
  if (t.feat("Poss") == "Yes") return "possessive";
  if (t.feat("PronType") == "Dem") return "demonstrative";
  if (t.feat("Definite") == "Def") return "definite";
  return {};
}

void run_qui(const AnnotatedDocument& doc, FilterDecision& d) {
  for (std::size_t s = 0; s < doc.sentences.size(); ++s) {
    const auto& toks = doc.sentences[s].tokens;
    for (std::size_t t = 0; t < toks.size(); ++t) {
      if (text::normalize_lemma(toks[t].lemma) == "qui" && toks[t].feat("PronType") == "Int")
        d.add(at(RuleId::qui_interrogative, "", doc, s, t));
    }
  }
}

void run_det_hn(const AnnotatedDocument& doc, const lexdb::HumanNounDB& db, DetHnMode mode, FilterDecision& d) {
  const bool dep = mode != DetHnMode::adjacency;
  const bool adj = mode != DetHnMode::dependency;
  for (std::size_t s = 0; s < doc.sentences.size(); ++s) {
    const auto& toks = doc.sentences[s].tokens;
    for (std::size_t t = 0; t < toks.size(); ++t) {
      auto kind = determiner_kind(toks[t]);
      if (kind.empty()) continue;
      const auto& tok = toks[t];
      if (dep && tok.head > 0 && tok.deprel.rfind("det", 0) == 0 &&
          is_hn_noun(toks[static_cast<std::size_t>(tok.head - 1)], db)) {
        d.add(at(RuleId::det_hn, kind + "/dependency", doc, s, t));
      } else if (adj && t + 1 < toks.size() && is_hn_noun(toks[t + 1], db)) {
        d.add(at(RuleId::det_hn, kind + "/adjacency", doc, s, t));
      }
    }
  }
}

AnnotatedDocument run_jargon(const AnnotatedDocument& doc, const RuleSet& rules, FilterDecision& d) {
  std::vector<std::size_t> drop;
  for (std::size_t s = 0; s < doc.sentences.size(); ++s) {
    const auto& toks = doc.sentences[s].tokens;
    for (std::size_t t = 0; t < toks.size(); ++t) {
      if (rules.jargon_terms.count(text::normalize_lemma(toks[t].lemma)) ||
          rules.jargon_terms.count(text::normalize_lemma(toks[t].form))) {
        d.add(at(RuleId::jargon, "sentence_removed", doc, s, t));
        drop.push_back(s);
        break;
      }
    }
  }
  if (drop.empty()) return doc;
  AnnotatedDocument out = doc;
  out.sentences.clear();
  for (std::size_t s = 0; s < doc.sentences.size(); ++s)
    if (!std::binary_search(drop.begin(), drop.end(), s)) out.sentences.push_back(doc.sentences[s]);
  out.rebuild_text();
  if (out.sentences.empty()) d.kept = false;
  return out;
}

}  // namespace

std::string_view to_string(RuleId r) {
  switch (r) {
    case RuleId::per: return "per";
    case RuleId::misc_given_name: return "misc_given_name";
    case RuleId::qui_interrogative: return "qui_interrogative";
    case RuleId::det_hn: return "det_hn";
    case RuleId::jargon: return "jargon";
  }
  return "";
}

RuleId parse_rule_id(std::string_view s) {
  for (auto r : all_rules())
    if (to_string(r) == s) return r;
  throw ConfigError("unknown filter rule '" + std::string(s) + "'");
}

std::set<RuleId> all_rules() {
  return {RuleId::per, RuleId::misc_given_name, RuleId::qui_interrogative, RuleId::det_hn, RuleId::jargon};
}

std::string_view to_string(DetHnMode m) {
  switch (m) {
    case DetHnMode::dependency: return "dependency";
    case DetHnMode::adjacency: return "adjacency";
    case DetHnMode::both: return "both";
  }
  return "";
}

DetHnMode parse_det_hn_mode(std::string_view s) {
  for (auto m : {DetHnMode::dependency, DetHnMode::adjacency, DetHnMode::both})
    if (to_string(m) == s) return m;
  throw ConfigError("unknown det_hn mode '" + std::string(s) + "'");
}

void FilterDecision::add(FiredRule r) {
  if (excludes(r.rule)) kept = false;
  fired_rules.push_back(std::move(r));
}

bool FilterDecision::fired(RuleId r) const {
  return std::any_of(fired_rules.begin(), fired_rules.end(), [&](const FiredRule& f) { return f.rule == r; });
}

FilterDecision detect_person_names(const AnnotatedDocument& doc, const std::set<std::string>& given_names) {
  if (!doc.has_ner)
    throw ConfigError("document '" + doc.doc_id + "' has no NER annotations; person-name rules need them");
  FilterDecision d;
  for (std::size_t s = 0; s < doc.sentences.size(); ++s) {
    const auto& toks = doc.sentences[s].tokens;
    for (std::size_t t = 0; t < toks.size(); ++t) {
      if (toks[t].ner == NerLabel::per) {
        d.add(at(RuleId::per, "", doc, s, t));
      } else if (toks[t].ner == NerLabel::misc && given_names.count(text::normalize_lemma(toks[t].form))) {
        d.add(at(RuleId::misc_given_name, "", doc, s, t));
      }
    }
  }
  return d;
}

FilterOutcome apply_generic_filters(const AnnotatedDocument& doc, const lexdb::HumanNounDB& hn_db,
                                    const RuleSet& rules) {
  FilterOutcome out;
  if (rules.enabled.count(RuleId::jargon) && rules.jargon_datasets.count(doc.dataset_tag))
    out.doc = run_jargon(doc, rules, out.decision);
  else
    out.doc = doc;
  // Later rules see the document with jargon sentences already removed.
  if (rules.enabled.count(RuleId::qui_interrogative)) run_qui(out.doc, out.decision);
  if (rules.enabled.count(RuleId::det_hn)) run_det_hn(out.doc, hn_db, rules.det_hn_mode, out.decision);
  return out;
}

FilterOutcome filter_document(const AnnotatedDocument& doc, const lexdb::HumanNounDB& hn_db, const RuleSet& rules) {
  auto out = apply_generic_filters(doc, hn_db, rules);
  bool per = rules.enabled.count(RuleId::per) > 0;
  bool misc = rules.enabled.count(RuleId::misc_given_name) > 0;
  if (per || misc) {
    auto names = detect_person_names(out.doc, misc ? rules.given_names : std::set<std::string>{});
    for (auto& f : names.fired_rules)
      if ((f.rule == RuleId::per && per) || f.rule == RuleId::misc_given_name) out.decision.add(std::move(f));
  }
  return out;
}

FilteredCorpus filter_corpus(const std::vector<AnnotatedDocument>& docs, const lexdb::HumanNounDB& hn_db,
                             const RuleSet& rules) {
  std::vector<std::size_t> order(docs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return docs[a].doc_id < docs[b].doc_id; });
  FilteredCorpus out;
  for (auto i : order) {
    auto r = filter_document(docs[i], hn_db, rules);
    if (r.decision.kept) out.kept.push_back(std::move(r.doc));
    out.decisions.emplace_back(docs[i].doc_id, std::move(r.decision));
  }
  return out;
}

nlohmann::ordered_json filter_report_entry(const std::string& doc_id, const FilterDecision& d) {
  nlohmann::ordered_json j;
  j["doc_id"] = doc_id;
  j["kept"] = d.kept;
  auto fired = nlohmann::ordered_json::array();
  for (const auto& f : d.fired_rules) {
    nlohmann::ordered_json r;
    r["rule"] = to_string(f.rule);
    r["sub_rule"] = f.sub_rule;
    r["sentence"] = f.sentence;
    r["token"] = f.token;
    r["begin"] = f.begin;
    r["end"] = f.end;
    fired.push_back(std::move(r));
  }
  j["fired_rules"] = std::move(fired);
  return j;
}

}  // namespace mgaudit::corpus
