#include <algorithm>
#include <filesystem>

#include <json.hpp>

#include "mgaudit/common.hpp"
#include "mgaudit/lexdb.hpp"
#include "mgaudit/text.hpp"

namespace mgaudit::lexdb {

namespace {

/// RFC 4180-style field splitting: double-quoted fields may contain the
/// delimiter and "" escapes. Returns nullopt on an unterminated quote.
std::optional<std::vector<std::string>> split_fields(std::string_view line, char delim) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  bool at_field_start = true;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"' && at_field_start) {
      quoted = true;
      at_field_start = false;
    } else if (c == delim) {
      fields.push_back(std::move(cur));
      cur.clear();
      at_field_start = true;
    } else {
      cur.push_back(c);
      at_field_start = false;
    }
  }
  if (quoted) return std::nullopt;
  fields.push_back(std::move(cur));
  return fields;
}

struct Emitter {
  const IngestOptions& options;
  std::string source;
  IngestResult& result;

  void emit(std::string_view raw_lemma, Gender g, std::optional<HnClass> cls = std::nullopt) {
    std::string lemma = text::normalize_lemma(raw_lemma);
    if (lemma.empty() || options.exclude.count(lemma)) return;
    LexicalEntry e;
    e.lemma = std::move(lemma);
    e.gender = g;
    e.sources = {source};
    if (cls) {
      e.hn_class = cls;
      e.class_provenance = ClassProvenance::human;
    }
    result.entries.push_back(std::move(e));
  }

  void error(std::size_t line, std::string msg) { result.report.errors.push_back({line, std::move(msg)}); }
};

void check_header(const std::filesystem::path& path, std::string_view line, char delim,
                  const std::vector<std::string>& expected) {
  auto fields = split_fields(line, delim);
  std::vector<std::string> got;
  if (fields)
    for (auto& f : *fields) got.push_back(text::trim(f));
  if (got != expected) {
    std::string want;
    for (const auto& e : expected) want += (want.empty() ? "" : std::string(1, delim)) + e;
    throw DataError(path.string() + ": expected header '" + want + "'");
  }
}

void ingest_pairs(const std::filesystem::path& path, char delim, Emitter& em) {
  for_each_line(path, [&](std::size_t n, std::string_view line) {
    if (n == 1) {
      check_header(path, line, delim, {"masc_lemma", "fem_lemma"});
      return;
    }
    if (text::trim(line).empty()) return;
    ++em.result.report.records;
    auto fields = split_fields(line, delim);
    if (!fields || fields->size() != 2) {
      em.error(n, "expected 2 fields");
      return;
    }
    auto masc = text::trim((*fields)[0]);
    auto fem = text::trim((*fields)[1]);
    if (masc.empty() && fem.empty()) {
      em.error(n, "both lemmas empty");
      return;
    }
    if (!masc.empty()) em.emit(masc, Gender::masculine);
    if (!fem.empty()) em.emit(fem, Gender::feminine);
  });
}

void ingest_nhuma(const std::filesystem::path& path, Emitter& em) {
  for_each_line(path, [&](std::size_t n, std::string_view line) {
    if (n == 1) {
      check_header(path, line, ',', {"lemma", "gender", "hn_class"});
      return;
    }
    if (text::trim(line).empty()) return;
    ++em.result.report.records;
    auto fields = split_fields(line, ',');
    if (!fields || fields->size() != 3) {
      em.error(n, "expected 3 fields");
      return;
    }
    auto lemma = text::trim((*fields)[0]);
    if (lemma.empty()) {
      em.error(n, "empty lemma");
      return;
    }
    auto gender = parse_gender((*fields)[1]);
    if (!gender) {
      em.error(n, "unknown gender '" + (*fields)[1] + "'");
      return;
    }
    std::optional<HnClass> cls;
    auto raw_cls = text::trim((*fields)[2]);
    if (!raw_cls.empty()) {
      cls = parse_hn_class(raw_cls);
      if (!cls) {
        em.error(n, "unknown hn_class '" + raw_cls + "'");
        return;
      }
    }
    em.emit(lemma, *gender, cls);
  });
}

std::vector<Gender> record_genders(const nlohmann::json& j, Gender fallback) {
  std::vector<Gender> out;
  if (auto it = j.find("gender"); it != j.end() && it->is_string()) {
    if (auto g = parse_gender(it->get<std::string>())) return {*g};
  }
  if (auto it = j.find("tags"); it != j.end() && it->is_array()) {
    for (const auto& t : *it) {
      if (!t.is_string()) continue;
      if (t == "masculine") out.push_back(Gender::masculine);
      if (t == "feminine") out.push_back(Gender::feminine);
    }
  }
  if (out.empty()) out.push_back(fallback);
  return out;
}

std::optional<std::string> sense_gloss(const nlohmann::json& sense) {
  if (auto it = sense.find("gloss"); it != sense.end() && it->is_string()) return it->get<std::string>();
  if (auto it = sense.find("glosses"); it != sense.end() && it->is_array() && !it->empty() &&
                                       it->front().is_string())
    return it->front().get<std::string>();
  return std::nullopt;
}

void ingest_wiktextract(const std::filesystem::path& path, Emitter& em) {
  const auto& opts = em.options;
  auto nouns = opts.definition_nouns.empty() ? default_wiktionary_definition_nouns() : opts.definition_nouns;
  for_each_line(path, [&](std::size_t n, std::string_view line) {
    if (text::trim(line).empty()) return;
    ++em.result.report.records;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception&) {
      em.error(n, "invalid JSON");
      return;
    }
    if (!j.is_object() || !j.contains("word") || !j["word"].is_string() || !j.contains("senses") ||
        !j["senses"].is_array()) {
      em.error(n, "record needs string 'word' and array 'senses'");
      return;
    }
    if (auto pos = j.find("pos"); pos != j.end() && pos->is_string() && *pos != "noun") return;
    // 1-based index of the first sense whose gloss opens with a human noun.
    std::size_t index = 0;
    std::size_t first_human = 0;
    for (const auto& sense : j["senses"]) {
      ++index;
      auto gloss = sense.is_object() ? sense_gloss(sense) : std::nullopt;
      if (!gloss) continue;
      bool human = std::any_of(nouns.begin(), nouns.end(),
                               [&](const std::string& noun) { return definition_starts_with(*gloss, noun); });
      if (human) {
        first_human = index;
        break;
      }
    }
    if (first_human == 0 || first_human > opts.max_definition_index) return;
    for (Gender g : record_genders(j, opts.default_gender)) em.emit(j["word"].get<std::string>(), g);
  });
}

void ingest_dictionary(const std::filesystem::path& path, Emitter& em) {
  auto snapshot = load_dictionary_snapshot(path, &em.result.report);
  const auto& opts = em.options;
  auto nouns = opts.definition_nouns.empty() ? default_definition_nouns() : opts.definition_nouns;
  std::set<std::string> seeds;
  for (const auto& s : nouns) seeds.insert(text::normalize_lemma(s));
  auto found = recursive_definition_search(snapshot, seeds, opts.max_depth);
  for (const auto& entry : snapshot.entries) {
    auto lemma = text::normalize_lemma(entry.lemma);
    if (found.count(lemma)) em.emit(lemma, entry.gender.value_or(opts.default_gender));
  }
}

}  // namespace

std::string_view to_string(SourceAdapter a) {
  switch (a) {
    case SourceAdapter::demonette_csv:
      return "demonette_csv";
    case SourceAdapter::wikidata_tsv:
      return "wikidata_tsv";
    case SourceAdapter::nhuma_csv:
      return "nhuma_csv";
    case SourceAdapter::wiktextract_jsonl:
      return "wiktextract_jsonl";
    case SourceAdapter::dictionary_snapshot:
      return "dictionary_snapshot";
  }
  return "unknown";
}

SourceAdapter parse_source_adapter(std::string_view s) {
  for (auto a : {SourceAdapter::demonette_csv, SourceAdapter::wikidata_tsv, SourceAdapter::nhuma_csv,
                 SourceAdapter::wiktextract_jsonl, SourceAdapter::dictionary_snapshot}) {
    if (to_string(a) == s) return a;
  }
  throw ConfigError("unknown source adapter '" + std::string(s) + "'");
}

std::vector<std::string> default_definition_nouns() {
  return {"personne", "individu", "quelqu'un", "homme", "femme"};
}

std::vector<std::string> default_wiktionary_definition_nouns() {
  return {"personne", "quelqu'un", "homme", "femme"};
}

IngestResult ingest_source(SourceAdapter adapter, const std::filesystem::path& path,
                           const IngestOptions& options) {
  if (!std::filesystem::is_regular_file(path))
    throw IoError("cannot read lexical source " + path.string());
  IngestResult result;
  std::string source = options.source_id.empty() ? std::string(to_string(adapter)) : options.source_id;
  result.report.source = source;
  Emitter em{options, source, result};
  switch (adapter) {
    case SourceAdapter::demonette_csv:
      ingest_pairs(path, ',', em);
      break;
    case SourceAdapter::wikidata_tsv:
      ingest_pairs(path, '\t', em);
      break;
    case SourceAdapter::nhuma_csv:
      ingest_nhuma(path, em);
      break;
    case SourceAdapter::wiktextract_jsonl:
      ingest_wiktextract(path, em);
      break;
    case SourceAdapter::dictionary_snapshot:
      ingest_dictionary(path, em);
      break;
  }
  return result;
}

DictionarySnapshot load_dictionary_snapshot(const std::filesystem::path& path, IngestReport* report) {
  DictionarySnapshot snapshot;
  for_each_line(path, [&](std::size_t n, std::string_view line) {
    if (text::trim(line).empty()) return;
    if (report) ++report->records;
    auto fail = [&](std::string msg) {
      if (!report) throw DataError(path.string() + ":" + std::to_string(n) + ": " + msg);
      report->errors.push_back({n, std::move(msg)});
    };
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception&) {
      fail("invalid JSON");
      return;
    }
    if (!j.is_object() || !j.contains("lemma") || !j["lemma"].is_string() || !j.contains("definitions") ||
        !j["definitions"].is_array()) {
      fail("record needs string 'lemma' and array 'definitions'");
      return;
    }
    DictionarySnapshot::Entry entry;
    entry.lemma = j["lemma"].get<std::string>();
    for (const auto& d : j["definitions"]) {
      if (d.is_string()) entry.definitions.push_back(d.get<std::string>());
    }
    if (auto g = j.find("gender"); g != j.end() && g->is_string()) entry.gender = parse_gender(g->get<std::string>());
    snapshot.entries.push_back(std::move(entry));
  });
  return snapshot;
}

}  // namespace mgaudit::lexdb
