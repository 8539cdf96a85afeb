#include <algorithm>
#include <array>
#include <sstream>
#include <utility>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "mgaudit/common.hpp"
#include "mgaudit/lexdb.hpp"
#include "mgaudit/text.hpp"

namespace mgaudit::lexdb {

namespace {

constexpr std::array<std::pair<HnClass, std::string_view>, 11> kClassNames{{
    {HnClass::profession, "profession"},
    {HnClass::demonym, "demonym"},
    {HnClass::doer, "doer"},
    {HnClass::speciality, "speciality"},
    {HnClass::attribute, "attribute"},
    {HnClass::relationship, "relationship"},
    {HnClass::status, "status"},
    {HnClass::title, "title"},
    {HnClass::patient, "patient"},
    {HnClass::recipient, "recipient"},
    {HnClass::other, "other"},
}};

}  // namespace

std::string_view to_string(Gender g) { return g == Gender::masculine ? "masculine" : "feminine"; }

std::string_view to_string(HnClass c) {
  for (auto& [k, name] : kClassNames)
    if (k == c) return name;
  return "other";
}

std::string_view to_string(ClassProvenance p) {
  switch (p) {
    case ClassProvenance::human:
      return "human";
    case ClassProvenance::model:
      return "model";
    case ClassProvenance::none:
      break;
  }
  return "none";
}

std::optional<Gender> parse_gender(std::string_view s) {
  auto v = text::normalize_lemma(s);
  if (v == "m" || v == "masc" || v == "masculine" || v == "masculin") return Gender::masculine;
  if (v == "f" || v == "fem" || v == "feminine" || v == "féminin") return Gender::feminine;
  return std::nullopt;
}

std::optional<HnClass> parse_hn_class(std::string_view s) {
  auto v = text::normalize_lemma(s);
  for (auto& [k, name] : kClassNames)
    if (name == v) return k;
  return std::nullopt;
}

std::optional<ClassProvenance> parse_provenance(std::string_view s) {
  if (s == "human") return ClassProvenance::human;
  if (s == "model") return ClassProvenance::model;
  if (s == "none") return ClassProvenance::none;
  return std::nullopt;
}

void validate(const LexicalEntry& e) {
  if (e.lemma.empty()) throw DataError("lexical entry with empty lemma");
  if (text::trim(e.lemma) != e.lemma) throw DataError("lemma has surrounding whitespace: '" + e.lemma + "'");
  if (e.sources.empty()) throw DataError("lexical entry '" + e.lemma + "' has no source");
  if (e.hn_class.has_value() != (e.class_provenance != ClassProvenance::none))
    throw DataError("lexical entry '" + e.lemma + "': hn_class and class_provenance disagree");
}

HumanNounDB::HumanNounDB(Map entries) : entries_(std::move(entries)) {
  for (const auto& [key, entry] : entries_) {
    if (key.lemma != entry.lemma || key.gender != entry.gender)
      throw DataError("entry key does not match entry '" + entry.lemma + "'");
    validate(entry);
    lemmas_.insert(key.lemma);
  }
}

const LexicalEntry* HumanNounDB::find(std::string_view lemma, Gender gender) const {
  auto it = entries_.find(EntryKey{std::string(lemma), gender});
  return it == entries_.end() ? nullptr : &it->second;
}

bool HumanNounDB::contains_lemma(std::string_view lemma) const {
  return lemmas_.find(lemma) != lemmas_.end();
}

MGLexicon::MGLexicon(std::map<std::string, LexicalEntry, std::less<>> entries)
    : entries_(std::move(entries)) {
  for (const auto& [lemma, e] : entries_) {
    if (e.gender != Gender::masculine || e.epicene)
      throw DataError("MG lexicon entry '" + lemma + "' is not masculine non-epicene");
  }
}

const LexicalEntry* MGLexicon::find(std::string_view lemma) const {
  auto it = entries_.find(lemma);
  return it == entries_.end() ? nullptr : &it->second;
}

// ---------------------------------------------------------------------------

MergeResult merge_lexicons(const std::vector<std::vector<LexicalEntry>>& parts,
                           const std::vector<std::string>& source_priority) {
  auto rank = [&](const std::set<std::string>& sources) {
    std::size_t best = source_priority.size();
    for (const auto& s : sources) {
      auto it = std::find(source_priority.begin(), source_priority.end(), s);
      if (it != source_priority.end())
        best = std::min(best, static_cast<std::size_t>(it - source_priority.begin()));
    }
    return best;
  };
  auto first_source = [](const std::set<std::string>& s) { return s.empty() ? std::string() : *s.begin(); };

  MergeResult result;
  HumanNounDB::Map merged;
  // Sources that contributed the current class label of each key.
  std::map<EntryKey, std::set<std::string>> label_sources;

  for (const auto& part : parts) {
    for (const auto& raw : part) {
      LexicalEntry e = raw;
      e.lemma = text::normalize_lemma(e.lemma);
      validate(e);
      EntryKey key{e.lemma, e.gender};
      auto [it, inserted] = merged.try_emplace(key, e);
      if (inserted) {
        it->second.epicene = false;
        label_sources[key] = e.sources;
        continue;
      }
      LexicalEntry& cur = it->second;
      cur.sources.insert(e.sources.begin(), e.sources.end());
      if (e.class_provenance > cur.class_provenance) {
        cur.hn_class = e.hn_class;
        cur.class_provenance = e.class_provenance;
        label_sources[key] = e.sources;
      } else if (e.class_provenance == ClassProvenance::human &&
                 cur.class_provenance == ClassProvenance::human && e.hn_class != cur.hn_class) {
        auto& cur_sources = label_sources[key];
        bool incoming_wins = rank(e.sources) < rank(cur_sources);
        ClassConflict conflict{key.lemma,
                               key.gender,
                               incoming_wins ? *e.hn_class : *cur.hn_class,
                               first_source(incoming_wins ? e.sources : cur_sources),
                               incoming_wins ? *cur.hn_class : *e.hn_class,
                               first_source(incoming_wins ? cur_sources : e.sources)};
        spdlog::warn("class conflict for ({}, {}): kept {} from {}, dropped {} from {}", conflict.lemma,
                     to_string(conflict.gender), to_string(conflict.kept), conflict.kept_source,
                     to_string(conflict.dropped), conflict.dropped_source);
        result.conflicts.push_back(std::move(conflict));
        if (incoming_wins) {
          cur.hn_class = e.hn_class;
          cur_sources = e.sources;
        }
      } else if (e.class_provenance == cur.class_provenance && e.class_provenance == ClassProvenance::model &&
                 e.hn_class != cur.hn_class && rank(e.sources) < rank(label_sources[key])) {
        cur.hn_class = e.hn_class;
        label_sources[key] = e.sources;
      }
    }
  }

  for (auto& [key, entry] : merged) {
    Gender other = key.gender == Gender::masculine ? Gender::feminine : Gender::masculine;
    entry.epicene = merged.count(EntryKey{key.lemma, other}) > 0;
  }
  result.db = HumanNounDB(std::move(merged));
  return result;
}

MGLexicon extract_mg_subset(const HumanNounDB& db) {
  std::map<std::string, LexicalEntry, std::less<>> out;
  for (const auto& [key, e] : db.entries()) {
    if (e.gender == Gender::masculine && !e.epicene) out.emplace(e.lemma, e);
  }
  return MGLexicon(std::move(out));
}

std::map<std::string, HnClass> default_class_mapping() {
  std::map<std::string, HnClass> m{
      {"NH-Mét", HnClass::profession}, {"NH-Fonc", HnClass::profession}, {"NH-Spé", HnClass::speciality},
      {"NH-Titre", HnClass::title},    {"NH-Grade", HnClass::title},
  };
  for (auto& [k, name] : kClassNames) m.emplace(std::string(name), k);
  return m;
}

HumanNounDB annotate_classes(const HumanNounDB& db, const std::map<std::string, HnClass>& gold,
                             const std::map<std::string, std::string>& predicted,
                             const std::map<std::string, HnClass>& mapping) {
  for (const auto& [lemma, raw] : predicted) {
    if (mapping.find(raw) == mapping.end())
      throw ConfigError("class mapping has no entry for predicted label '" + raw + "' (lemma '" + lemma + "')");
  }
  std::map<std::string, HnClass, std::less<>> gold_n;
  for (const auto& [k, v] : gold) gold_n.emplace(text::normalize_lemma(k), v);
  std::map<std::string, std::string, std::less<>> pred_n;
  for (const auto& [k, v] : predicted) pred_n.emplace(text::normalize_lemma(k), v);

  HumanNounDB::Map out = db.entries();
  for (auto& [key, e] : out) {
    if (auto g = gold_n.find(key.lemma); g != gold_n.end()) {
      e.hn_class = g->second;
      e.class_provenance = ClassProvenance::human;
    } else if (e.class_provenance != ClassProvenance::human) {
      if (auto p = pred_n.find(key.lemma); p != pred_n.end()) {
        e.hn_class = mapping.at(p->second);
        e.class_provenance = ClassProvenance::model;
      }
    }
  }
  return HumanNounDB(std::move(out));
}

// ---------------------------------------------------------------------------

std::string entry_to_json_line(const LexicalEntry& e) {
  nlohmann::ordered_json j;
  j["lemma"] = e.lemma;
  j["gender"] = to_string(e.gender);
  j["epicene"] = e.epicene;
  j["sources"] = e.sources;  // std::set iterates sorted
  if (e.hn_class)
    j["hn_class"] = to_string(*e.hn_class);
  else
    j["hn_class"] = nullptr;
  j["class_provenance"] = to_string(e.class_provenance);
  return j.dump();
}

LexicalEntry entry_from_json_line(std::string_view line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& ex) {
    throw DataError(std::string("lexicon line is not JSON: ") + ex.what());
  }
  try {
    LexicalEntry e;
    e.lemma = j.at("lemma").get<std::string>();
    auto g = parse_gender(j.at("gender").get<std::string>());
    if (!g) throw DataError("bad gender");
    e.gender = *g;
    e.epicene = j.at("epicene").get<bool>();
    for (const auto& s : j.at("sources")) e.sources.insert(s.get<std::string>());
    if (!j.at("hn_class").is_null()) {
      auto c = parse_hn_class(j.at("hn_class").get<std::string>());
      if (!c) throw DataError("bad hn_class");
      e.hn_class = *c;
    }
    auto p = parse_provenance(j.at("class_provenance").get<std::string>());
    if (!p) throw DataError("bad class_provenance");
    e.class_provenance = *p;
    validate(e);
    return e;
  } catch (const nlohmann::json::exception& ex) {
    throw DataError(std::string("lexicon line has wrong schema: ") + ex.what());
  }
}

void write_lexicon_jsonl(std::ostream& out, const HumanNounDB& db) {
  for (const auto& [key, e] : db.entries()) out << entry_to_json_line(e) << '\n';
}

void write_lexicon_jsonl(std::ostream& out, const MGLexicon& mg) {
  for (const auto& [lemma, e] : mg.entries()) out << entry_to_json_line(e) << '\n';
}

std::string lexicon_jsonl(const HumanNounDB& db) {
  std::ostringstream ss;
  write_lexicon_jsonl(ss, db);
  return ss.str();
}

HumanNounDB read_lexicon_jsonl(const std::filesystem::path& path) {
  HumanNounDB::Map entries;
  for_each_line(path, [&](std::size_t n, std::string_view line) {
    if (text::trim(line).empty()) return;
    try {
      auto e = entry_from_json_line(line);
      EntryKey key{e.lemma, e.gender};
      if (!entries.emplace(key, std::move(e)).second)
        throw DataError("duplicate (lemma, gender) key");
    } catch (const DataError& ex) {
      throw DataError(path.string() + ":" + std::to_string(n) + ": " + ex.what());
    }
  });
  return HumanNounDB(std::move(entries));
}

}  // namespace mgaudit::lexdb
