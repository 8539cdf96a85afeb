#include "mgaudit/common.hpp"
#include "mgaudit/metrics.hpp"
#include "mgaudit/text.hpp"

namespace mgaudit::metrics {

namespace {

nlohmann::ordered_json optional_number(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

std::optional<double> percent(std::size_t num, std::size_t den) {
  if (den == 0) return std::nullopt;
  return 100.0 * static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

std::string_view to_string(Validation v) {
  switch (v) {
    case Validation::accepted: return "accepted";
    case Validation::rejected: return "rejected";
    case Validation::unvalidated: return "unvalidated";
  }
  return "unvalidated";
}

Validation parse_validation(std::string_view s) {
  if (s == "accepted") return Validation::accepted;
  if (s == "rejected") return Validation::rejected;
  if (s == "unvalidated") return Validation::unvalidated;
  throw DataError("unknown validation state '" + std::string(s) + "'");
}

UnvalidatedPolicy parse_unvalidated_policy(std::string_view s) {
  if (s == "exclude") return UnvalidatedPolicy::exclude;
  if (s == "accept") return UnvalidatedPolicy::accept;
  throw ConfigError("unknown unvalidated policy '" + std::string(s) + "' (expected exclude or accept)");
}

std::string class_name(const lexdb::HumanNounDB& db, std::string_view lemma, lexdb::Gender gender) {
  const auto* e = db.find(lemma, gender);
  if (!e) {
    auto other = gender == lexdb::Gender::masculine ? lexdb::Gender::feminine : lexdb::Gender::masculine;
    e = db.find(lemma, other);
  }
  if (!e || !e->hn_class) return "unannotated";
  return std::string(lexdb::to_string(*e->hn_class));
}

std::vector<corpus::CandidateOccurrence> analysis_candidates(const corpus::AnnotatedDocument& doc,
                                                             const lexdb::HumanNounDB& db,
                                                             const std::set<std::string>& stoplist) {
  return corpus::apply_ambiguity_stoplist(corpus::find_hn_candidates(doc, db), stoplist);
}

TextAnalysis analyze_text(const corpus::AnnotatedDocument& doc, std::string group, const AnalysisInputs& in,
                          const std::vector<Validation>* verdicts) {
  TextAnalysis a;
  a.doc_id = doc.doc_id;
  a.group = std::move(group);
  auto candidates = analysis_candidates(doc, in.db, in.stoplist);
  if (verdicts && verdicts->size() != candidates.size())
    throw DataError("document '" + doc.doc_id + "': " + std::to_string(verdicts->size()) + " verdicts for " +
                    std::to_string(candidates.size()) + " candidate occurrences");
  std::set<std::string> neutral;
  for (const auto& w : in.markers.neutral_words) neutral.insert(text::normalize_lemma(w));

  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& c = candidates[i];
    const auto& tok = doc.sentences[c.sentence].tokens[c.token];
    bool feminine = tok.feat("Gender") == "Fem";
    Occurrence o;
    o.lemma = c.lemma;
    o.form = c.form;
    o.begin = c.begin;
    o.end = c.end;
    o.is_mg = in.mg.contains(c.lemma) && !feminine && !neutral.count(c.lemma);
    o.validated = verdicts ? (*verdicts)[i] : Validation::unvalidated;
    o.hn_class = class_name(in.db, c.lemma, feminine ? lexdb::Gender::feminine : lexdb::Gender::masculine);
    bool counted = o.validated == Validation::accepted ||
                   (o.validated == Validation::unvalidated && in.policy == UnvalidatedPolicy::accept);
    if (counted) {
      ++a.hn_count;
      ++a.classes[o.hn_class];
      if (o.is_mg) {
        ++a.mg_count;
        a.mg_lemmas.insert(o.lemma);
      }
    }
    a.occurrences.push_back(std::move(o));
  }
  if (a.hn_count > 0) a.m_score = static_cast<double>(a.mg_count) / static_cast<double>(a.hn_count);
  a.markers = detect_markers(doc, in.markers);
  return a;
}

MScores aggregate_m_scores(const std::vector<TextAnalysis>& analyses) {
  std::size_t mg = 0, hn = 0, defined = 0;
  double sum = 0.0;
  for (const auto& a : analyses) {
    if (a.hn_count == 0) continue;
    mg += a.mg_count;
    hn += a.hn_count;
    sum += static_cast<double>(a.mg_count) / static_cast<double>(a.hn_count);
    ++defined;
  }
  MScores m;
  if (hn > 0) m.overall = static_cast<double>(mg) / static_cast<double>(hn);
  if (defined > 0) m.mean = sum / static_cast<double>(defined);
  return m;
}

BiasRates bias_rates(const std::vector<TextAnalysis>& analyses) {
  std::size_t with_mg = 0, with_hn = 0;
  for (const auto& a : analyses) {
    if (a.mg_count > 0) ++with_mg;
    if (a.hn_count > 0) ++with_hn;
  }
  return {percent(with_mg, analyses.size()), percent(with_mg, with_hn)};
}

std::map<MarkerFamily, std::optional<double>> marker_rates(const std::vector<TextAnalysis>& analyses) {
  std::map<MarkerFamily, std::optional<double>> out;
  for (auto f : kMarkerFamilies) {
    std::size_t n = 0;
    for (const auto& a : analyses) {
      auto it = a.markers.find(f);
      if (it != a.markers.end() && !it->second.empty()) ++n;
    }
    out[f] = percent(n, analyses.size());
  }
  return out;
}

std::map<std::string, std::size_t> class_frequencies(const std::vector<TextAnalysis>& analyses,
                                                     const lexdb::HumanNounDB& db) {
  std::set<std::string> lemmas;
  for (const auto& a : analyses) lemmas.insert(a.mg_lemmas.begin(), a.mg_lemmas.end());
  std::map<std::string, std::size_t> out;
  for (const auto& l : lemmas) ++out[class_name(db, l, lexdb::Gender::masculine)];
  return out;
}

nlohmann::ordered_json to_json(const TextAnalysis& a) {
  nlohmann::ordered_json j;
  j["doc_id"] = a.doc_id;
  j["group"] = a.group;
  j["hn_count"] = a.hn_count;
  j["mg_count"] = a.mg_count;
  j["m_score"] = optional_number(a.m_score);
  auto occ = nlohmann::ordered_json::array();
  for (const auto& o : a.occurrences) {
    nlohmann::ordered_json x;
    x["lemma"] = o.lemma;
    x["form"] = o.form;
    x["begin"] = o.begin;
    x["end"] = o.end;
    x["is_mg"] = o.is_mg;
    x["validated"] = to_string(o.validated);
    x["hn_class"] = o.hn_class;
    occ.push_back(std::move(x));
  }
  j["occurrences"] = std::move(occ);
  nlohmann::ordered_json markers = nlohmann::ordered_json::object();
  for (auto f : kMarkerFamilies) {
    auto arr = nlohmann::ordered_json::array();
    if (auto it = a.markers.find(f); it != a.markers.end()) {
      for (const auto& h : it->second)
        arr.push_back(nlohmann::ordered_json{{"begin", h.begin}, {"end", h.end}, {"text", h.text}, {"pattern", h.pattern}});
    }
    markers[std::string(to_string(f))] = std::move(arr);
  }
  j["markers"] = std::move(markers);
  j["classes"] = a.classes;
  j["mg_lemmas"] = a.mg_lemmas;
  return j;
}

TextAnalysis analysis_from_json(const nlohmann::json& j) {
  TextAnalysis a;
  a.doc_id = j.at("doc_id").get<std::string>();
  a.group = j.at("group").get<std::string>();
  a.hn_count = j.at("hn_count").get<std::size_t>();
  a.mg_count = j.at("mg_count").get<std::size_t>();
  if (!j.at("m_score").is_null()) a.m_score = j.at("m_score").get<double>();
  for (const auto& x : j.at("occurrences")) {
    Occurrence o;
    o.lemma = x.at("lemma").get<std::string>();
    o.form = x.at("form").get<std::string>();
    o.begin = x.at("begin").get<std::size_t>();
    o.end = x.at("end").get<std::size_t>();
    o.is_mg = x.at("is_mg").get<bool>();
    o.validated = parse_validation(x.at("validated").get<std::string>());
    o.hn_class = x.at("hn_class").get<std::string>();
    a.occurrences.push_back(std::move(o));
  }
  for (const auto& [k, arr] : j.at("markers").items()) {
    auto& hits = a.markers[parse_marker_family(k)];
    for (const auto& h : arr)
      hits.push_back({h.at("begin").get<std::size_t>(), h.at("end").get<std::size_t>(), h.at("text").get<std::string>(),
                      h.at("pattern").get<std::string>()});
  }
  a.classes = j.at("classes").get<std::map<std::string, std::size_t>>();
  a.mg_lemmas = j.at("mg_lemmas").get<std::set<std::string>>();
  if (a.mg_count > a.hn_count) throw DataError("analysis '" + a.doc_id + "' has more MG than HN occurrences");
  return a;
}

}  // namespace mgaudit::metrics
