#include "mgaudit/pipeline.hpp"
#include "mgaudit/text.hpp"

namespace mgaudit::pipeline {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

[[noreturn]] void bad(const std::string& where, const std::string& msg) {
  throw ConfigError("config " + where + ": " + msg);
}

void only_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) bad(where, "must be an object");
  for (const auto& [k, v] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || k == a;
    if (!ok) bad(where, "unknown key '" + k + "'");
  }
}

const json& section(const json& j, const char* key) {
  static const json empty = json::object();
  return j.contains(key) && !j.at(key).is_null() ? j.at(key) : empty;
}

template <class T>
T get(const json& j, const char* key, const std::string& where, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    bad(where + "." + key, "has the wrong type");
  }
}

std::string required_string(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key) || !j.at(key).is_string() || j.at(key).get<std::string>().empty())
    bad(where + "." + key, "is required");
  return j.at(key).get<std::string>();
}

class Resolver {
 public:
  explicit Resolver(fs::path base) : base_(std::move(base)) {}

  fs::path path(const std::string& p) const {
    fs::path x(p);
    return (x.is_absolute() ? x : base_ / x).lexically_normal();
  }

  fs::path input(const json& j, const char* key, const std::string& where) const {
    auto p = path(required_string(j, key, where));
    if (!fs::exists(p)) bad(where + "." + key, "file not found: " + p.string());
    return p;
  }

  std::optional<fs::path> optional_input(const json& j, const char* key, const std::string& where) const {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return input(j, key, where);
  }

  std::vector<fs::path> inputs(const json& j, const char* key, const std::string& where) const {
    std::vector<fs::path> out;
    if (!j.contains(key) || j.at(key).is_null()) return out;
    if (!j.at(key).is_array()) bad(where + "." + key, "must be an array of paths");
    for (const auto& v : j.at(key)) {
      if (!v.is_string()) bad(where + "." + key, "must be an array of paths");
      auto p = path(v.get<std::string>());
      if (!fs::exists(p)) bad(where + "." + key, "file not found: " + p.string());
      out.push_back(p);
    }
    return out;
  }

 private:
  fs::path base_;
};

lexdb::IngestOptions ingest_options(const json& j, const std::string& where) {
  lexdb::IngestOptions o;
  if (j.is_null()) return o;
  only_keys(j, where, {"source_id", "definition_nouns", "max_definition_index", "max_depth", "default_gender"});
  o.source_id = get<std::string>(j, "source_id", where, "");
  o.definition_nouns = get<std::vector<std::string>>(j, "definition_nouns", where, {});
  o.max_definition_index = get<std::size_t>(j, "max_definition_index", where, o.max_definition_index);
  o.max_depth = get<std::size_t>(j, "max_depth", where, o.max_depth);
  if (j.contains("default_gender")) {
    auto g = lexdb::parse_gender(get<std::string>(j, "default_gender", where, ""));
    if (!g) bad(where + ".default_gender", "must be masculine or feminine");
    o.default_gender = *g;
  }
  return o;
}

std::set<std::string> normalized(const std::vector<std::string>& v) {
  std::set<std::string> out;
  for (const auto& s : v) out.insert(text::normalize_lemma(s));
  return out;
}

}  // namespace

RunConfig parse_run_config(const json& input, const fs::path& base_dir, const Overrides& overrides) {
  only_keys(input, "",
            {"output_dir", "seed", "lexicon", "hscorer", "corpus", "narrow", "generation", "models", "providers",
             "dispatch", "responses", "validation", "markers"});
  json j = input;
  if (overrides.seed) j["seed"] = *overrides.seed;
  if (overrides.target) j["narrow"]["target"] = *overrides.target;
  if (overrides.output_dir) j["output_dir"] = std::filesystem::absolute(*overrides.output_dir).string();

  RunConfig c;
  c.base_dir = base_dir;
  Resolver r(base_dir);
  c.effective = j;
  c.checksum = sha256_hex(j.dump());
  c.output_dir = r.path(get<std::string>(j, "output_dir", "output_dir", "out"));
  c.seed = get<std::uint64_t>(j, "seed", "seed", 42);

  // lexicon
  const auto& lex = section(j, "lexicon");
  only_keys(lex, "lexicon", {"sources", "source_priority", "exclude", "predicted_classes", "class_mapping"});
  if (!lex.contains("sources") || !lex.at("sources").is_array() || lex.at("sources").empty())
    bad("lexicon.sources", "needs at least one source");
  std::set<std::string> ids;
  for (std::size_t i = 0; i < lex.at("sources").size(); ++i) {
    const auto& s = lex.at("sources")[i];
    auto where = "lexicon.sources[" + std::to_string(i) + "]";
    only_keys(s, where, {"id", "adapter", "path", "role", "options"});
    LexiconSource src;
    src.adapter = lexdb::parse_source_adapter(required_string(s, "adapter", where));
    src.id = get<std::string>(s, "id", where, std::string(lexdb::to_string(src.adapter)));
    if (!ids.insert(src.id).second) bad(where + ".id", "duplicate source id '" + src.id + "'");
    src.path = r.input(s, "path", where);
    auto role = get<std::string>(s, "role", where, "trusted");
    if (role == "trusted")
      src.role = SourceRole::trusted;
    else if (role == "screened")
      src.role = SourceRole::screened;
    else
      bad(where + ".role", "must be trusted or screened");
    src.options = ingest_options(section(s, "options"), where + ".options");
    if (src.options.source_id.empty()) src.options.source_id = src.id;
    c.sources.push_back(std::move(src));
  }
  c.source_priority = get<std::vector<std::string>>(lex, "source_priority", "lexicon", {});
  c.exclude_list = r.optional_input(lex, "exclude", "lexicon");
  c.predicted_classes = r.optional_input(lex, "predicted_classes", "lexicon");
  c.class_mapping = lexdb::default_class_mapping();
  for (const auto& [raw, cls] : get<std::map<std::string, std::string>>(lex, "class_mapping", "lexicon", {})) {
    auto parsed = lexdb::parse_hn_class(cls);
    if (!parsed) bad("lexicon.class_mapping", "unknown class '" + cls + "'");
    c.class_mapping[raw] = *parsed;
  }

  // hscorer
  const auto& hs = section(j, "hscorer");
  only_keys(hs, "hscorer",
            {"wordnet", "human_anchors", "nonhuman_anchors", "indicators", "prototypes", "embeddings", "suffixes",
             "golden_hn", "golden_non_hn", "logistic_regression", "boosted_trees", "validation_fraction", "remote"});
  c.wordnet = r.input(hs, "wordnet", "hscorer");
  c.human_anchors = get<std::set<std::string>>(hs, "human_anchors", "hscorer", {});
  c.nonhuman_anchors = get<std::set<std::string>>(hs, "nonhuman_anchors", "hscorer", {});
  c.indicators = r.input(hs, "indicators", "hscorer");
  c.prototypes = r.input(hs, "prototypes", "hscorer");
  c.embeddings = r.input(hs, "embeddings", "hscorer");
  c.suffixes = r.input(hs, "suffixes", "hscorer");
  c.golden_hn = r.optional_input(hs, "golden_hn", "hscorer");
  c.golden_non_hn = r.input(hs, "golden_non_hn", "hscorer");
  c.training.logistic = hscorer::logistic_params_from_json(section(hs, "logistic_regression"));
  c.training.trees = hscorer::trees_params_from_json(section(hs, "boosted_trees"));
  if (!section(hs, "boosted_trees").contains("random_state")) c.training.trees.seed = c.seed;
  c.training.validation_fraction = get<double>(hs, "validation_fraction", "hscorer", 0.2);
  if (c.training.validation_fraction <= 0 || c.training.validation_fraction >= 1)
    bad("hscorer.validation_fraction", "must be in (0, 1)");
  c.training.split_seed = c.seed;
  if (hs.contains("remote") && !hs.at("remote").is_null()) {
    const auto& rm = hs.at("remote");
    only_keys(rm, "hscorer.remote", {"url", "policy"});
    c.remote_url = required_string(rm, "url", "hscorer.remote");
    c.remote_policy = hscorer::parse_remote_policy(get<std::string>(rm, "policy", "hscorer.remote", "fail"));
  }

  // corpus
  const auto& cp = section(j, "corpus");
  only_keys(cp, "corpus",
            {"instructions", "given_names", "stoplist", "rules", "det_hn_mode", "jargon_datasets", "jargon_terms"});
  c.instructions = r.inputs(cp, "instructions", "corpus");
  if (c.instructions.empty()) bad("corpus.instructions", "needs at least one CoNLL-U file");
  c.given_names = r.optional_input(cp, "given_names", "corpus");
  c.stoplist = r.optional_input(cp, "stoplist", "corpus");
  if (cp.contains("rules")) {
    c.rules.enabled.clear();
    for (const auto& id : get<std::vector<std::string>>(cp, "rules", "corpus", {}))
      c.rules.enabled.insert(corpus::parse_rule_id(id));
  }
  c.rules.det_hn_mode = corpus::parse_det_hn_mode(get<std::string>(cp, "det_hn_mode", "corpus", "dependency"));
  if (cp.contains("jargon_datasets"))
    c.rules.jargon_datasets = get<std::set<std::string>>(cp, "jargon_datasets", "corpus", {});
  if (cp.contains("jargon_terms"))
    c.rules.jargon_terms = normalized(get<std::vector<std::string>>(cp, "jargon_terms", "corpus", {}));

  const auto& nw = section(j, "narrow");
  only_keys(nw, "narrow", {"target"});
  c.narrow_target = get<std::size_t>(nw, "target", "narrow", 10000);
  if (c.narrow_target == 0) bad("narrow.target", "must be positive");

  // generation, models, providers
  const auto& gen = section(j, "generation");
  only_keys(gen, "generation", {"temperature", "max_tokens", "system_prompt"});
  c.generation.temperature = get<double>(gen, "temperature", "generation", 1.0);
  c.generation.max_tokens = get<int>(gen, "max_tokens", "generation", 1500);
  c.generation.system_prompt =
      get<std::string>(gen, "system_prompt", "generation", std::string(llm::kGenerationSystemPrompt));
  c.generation.validate();

  std::set<std::string> model_ids;
  for (const auto& m : section(j, "models").is_array() ? j.at("models") : json::array()) {
    only_keys(m, "models[]", {"id", "provider"});
    ModelSpec spec{required_string(m, "id", "models[]"), get<std::string>(m, "provider", "models[]", "")};
    if (!model_ids.insert(spec.id).second) bad("models", "duplicate model id '" + spec.id + "'");
    c.models.push_back(std::move(spec));
  }
  for (const auto& p : section(j, "providers").is_array() ? j.at("providers") : json::array())
    c.providers.push_back(llm::provider_config_from_json(p));
  for (const auto& m : c.models) {
    if (m.provider.empty()) continue;
    bool found = false;
    for (const auto& p : c.providers) found = found || p.name == m.provider;
    if (!found) bad("models", "model '" + m.id + "' names unknown provider '" + m.provider + "'");
  }

  const auto& dp = section(j, "dispatch");
  only_keys(dp, "dispatch", {"concurrency", "max_attempts", "initial_backoff_ms", "multiplier", "max_backoff_ms"});
  c.concurrency = get<std::size_t>(dp, "concurrency", "dispatch", 4);
  c.retry.max_attempts = get<int>(dp, "max_attempts", "dispatch", 5);
  c.retry.initial_backoff = std::chrono::milliseconds(get<long>(dp, "initial_backoff_ms", "dispatch", 1000));
  c.retry.multiplier = get<double>(dp, "multiplier", "dispatch", 2.0);
  c.retry.max_backoff = std::chrono::milliseconds(get<long>(dp, "max_backoff_ms", "dispatch", 60000));
  if (c.retry.max_attempts < 1) bad("dispatch.max_attempts", "must be at least 1");

  // responses, validation, markers
  const auto& rs = section(j, "responses");
  only_keys(rs, "responses", {"annotations"});
  c.response_annotations = r.inputs(rs, "annotations", "responses");

  if (j.contains("validation") && !j.at("validation").is_null()) {
    const auto& v = j.at("validation");
    only_keys(v, "validation", {"model", "provider", "unvalidated_policy"});
    if (v.contains("model"))
      c.validation_model = ModelSpec{required_string(v, "model", "validation"),
                                     get<std::string>(v, "provider", "validation", "")};
    c.unvalidated_policy =
        metrics::parse_unvalidated_policy(get<std::string>(v, "unvalidated_policy", "validation", "exclude"));
  }
  c.markers = r.optional_input(j, "markers", "");
  return c;
}

RunConfig load_run_config(const fs::path& path, const Overrides& overrides) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  auto base = fs::absolute(path).parent_path();
  return parse_run_config(j, base, overrides);
}

}  // namespace mgaudit::pipeline
