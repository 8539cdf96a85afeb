#include <algorithm>
#include <sstream>

#include <spdlog/spdlog.h>

#include "mgaudit/hscorer/features.hpp"
#include "mgaudit/pipeline.hpp"
#include "mgaudit/text.hpp"

namespace mgaudit::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

struct Pipeline::Context {
  Stage stage;
  fs::path out;
  StageRecord record;

  fs::path path(const std::string& rel) const { return out / rel; }

  void write(const std::string& rel, const std::string& contents) {
    auto p = path(rel);
    fs::create_directories(p.parent_path());
    write_file_atomic(p, contents);
    record.artifacts[rel] = sha256_hex(contents);
  }

  /// Records a file the stage produced through other means.
  void adopt(const std::string& rel) { record.artifacts[rel] = sha256_file(path(rel)); }
};

namespace {

struct Requirement {
  const char* artifact;
  Stage producer;
};

std::vector<Requirement> requirements(Stage s) {
  using namespace artifacts;
  switch (s) {
    case Stage::build_lexicon: return {};
    case Stage::train_hscorer:
      return {{kTrustedLexicon, Stage::build_lexicon}, {kScreenedLexicon, Stage::build_lexicon}};
    case Stage::filter: return {{kHnDb, Stage::train_hscorer}, {kMgLexicon, Stage::train_hscorer}};
    case Stage::narrow: return {{kCleanInstructions, Stage::filter}};
    case Stage::dispatch: return {{kNarrowedInstructions, Stage::narrow}};
    case Stage::validate:
      return {{kExchanges, Stage::dispatch}, {kHnDb, Stage::train_hscorer}, {kMgLexicon, Stage::train_hscorer}};
    case Stage::analyze:
      return {{kFilteredResponses, Stage::validate},
              {kValidations, Stage::validate},
              {kHnDb, Stage::train_hscorer},
              {kMgLexicon, Stage::train_hscorer}};
    case Stage::report: return {{kAnalyses, Stage::analyze}, {kHnDb, Stage::train_hscorer}};
  }
  return {};
}

std::set<std::string> normalized_list(const std::optional<fs::path>& p) {
  std::set<std::string> out;
  if (!p) return out;
  for (const auto& s : read_line_list(*p)) out.insert(text::normalize_lemma(s));
  return out;
}

std::vector<json> read_jsonl(const fs::path& path) {
  std::vector<json> out;
  for_each_line(path, [&](std::size_t n, std::string_view line) {
    if (text::trim(line).empty()) return;
    try {
      out.push_back(json::parse(line));
    } catch (const json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  });
  return out;
}

lexdb::MGLexicon load_mg(const fs::path& path) {
  auto db = lexdb::read_lexicon_jsonl(path);
  std::map<std::string, lexdb::LexicalEntry, std::less<>> entries;
  for (const auto& [key, e] : db.entries()) entries.emplace(key.lemma, e);
  return lexdb::MGLexicon(std::move(entries));
}

std::vector<lexdb::LexicalEntry> entry_list(const lexdb::HumanNounDB& db) {
  std::vector<lexdb::LexicalEntry> out;
  for (const auto& [k, e] : db.entries()) out.push_back(e);
  return out;
}

std::string mg_jsonl(const lexdb::MGLexicon& mg) {
  std::ostringstream os;
  lexdb::write_lexicon_jsonl(os, mg);
  return os.str();
}

/// Header "lemma,label", then one pair per line.
std::map<std::string, std::string> read_predicted_classes(const fs::path& path) {
  std::map<std::string, std::string> out;
  for_each_line(path, [&](std::size_t n, std::string_view line) {
    if (n == 1) {
      if (text::trim(line) != "lemma,label") throw DataError(path.string() + ": expected header 'lemma,label'");
      return;
    }
    if (text::trim(line).empty()) return;
    auto comma = line.find(',');
    if (comma == std::string_view::npos)
      throw DataError(path.string() + ":" + std::to_string(n) + ": expected 'lemma,label'");
    out[text::normalize_lemma(line.substr(0, comma))] = text::trim(line.substr(comma + 1));
  });
  return out;
}

std::string jsonl(const std::vector<ordered_json>& lines) {
  std::string out;
  for (const auto& l : lines) out += l.dump() + "\n";
  return out;
}

using DocKey = std::pair<std::string, std::string>;  // (group, doc_id)

bool by_group_then_id(const corpus::AnnotatedDocument& a, const corpus::AnnotatedDocument& b) {
  return std::tie(a.dataset_tag, a.doc_id) < std::tie(b.dataset_tag, b.doc_id);
}

std::vector<corpus::AnnotatedDocument> read_all(const std::vector<fs::path>& files) {
  std::vector<corpus::AnnotatedDocument> docs;
  for (const auto& f : files) {
    auto part = corpus::read_conllu(f);
    docs.insert(docs.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  return docs;
}

}  // namespace

Pipeline::Pipeline(RunConfig config, RunOptions options) : config_(std::move(config)), options_(std::move(options)) {
  auto existing = RunManifest::load(manifest_path());
  if (existing && existing->config_checksum != config_.checksum) {
    if (!options_.force)
      throw ConfigMismatchError("configuration changed since the run in " + config_.output_dir.string() +
                                " was started (manifest " + existing->config_checksum.substr(0, 12) + ", config " +
                                config_.checksum.substr(0, 12) + "); use --force to start over");
    spdlog::warn("configuration changed; --force given, discarding the previous manifest");
    existing.reset();
  }
  if (existing) {
    manifest_ = std::move(*existing);
  } else {
    manifest_.config_checksum = config_.checksum;
  }
  manifest_.tool_version = std::string(tool_version());
  if (options_.mock_transport) mock_ = llm::MockTransport::load(*options_.mock_transport);
}

Pipeline::~Pipeline() = default;

std::vector<fs::path> Pipeline::external_inputs(Stage stage) const {
  std::vector<fs::path> out;
  auto opt = [&](const std::optional<fs::path>& p) {
    if (p) out.push_back(*p);
  };
  switch (stage) {
    case Stage::build_lexicon:
      for (const auto& s : config_.sources) out.push_back(s.path);
      opt(config_.exclude_list);
      break;
    case Stage::train_hscorer:
      out.insert(out.end(), {config_.wordnet, config_.indicators, config_.prototypes, config_.embeddings,
                             config_.suffixes, config_.golden_non_hn});
      opt(config_.golden_hn);
      opt(config_.predicted_classes);
      break;
    case Stage::filter:
      out.insert(out.end(), config_.instructions.begin(), config_.instructions.end());
      opt(config_.given_names);
      opt(config_.stoplist);
      break;
    case Stage::narrow: break;
    case Stage::dispatch: opt(options_.mock_transport); break;
    case Stage::validate:
      out.insert(out.end(), config_.response_annotations.begin(), config_.response_annotations.end());
      opt(config_.given_names);
      opt(config_.stoplist);
      opt(options_.mock_transport);
      break;
    case Stage::analyze:
      opt(config_.stoplist);
      opt(config_.markers);
      break;
    case Stage::report: break;
  }
  return out;
}

StageOutcome Pipeline::run(Stage stage) {
  const std::string name(to_string(stage));
  Context ctx{stage, config_.output_dir, {}};

  for (const auto& req : requirements(stage)) {
    auto producer = std::string(to_string(req.producer));
    auto it = manifest_.stages.find(producer);
    auto p = ctx.path(req.artifact);
    if (it == manifest_.stages.end() || !it->second.complete || !fs::exists(p))
      throw DependencyError("stage " + name + " needs " + p.string() + ", which stage " + producer +
                            " has not produced; run " + producer + " first");
    auto sha = sha256_file(p);
    auto rec = it->second.artifacts.find(req.artifact);
    if (rec == it->second.artifacts.end() || rec->second != sha)
      throw DependencyError(p.string() + " changed after stage " + producer + " completed; rerun " + producer);
    ctx.record.inputs[req.artifact] = sha;
  }
  for (const auto& p : external_inputs(stage)) ctx.record.inputs[p.string()] = sha256_file(p);
  if (stage == Stage::dispatch || stage == Stage::validate)
    ctx.record.inputs["option:transport"] = options_.mock_transport ? "mock" : "http";
  if (stage == Stage::report) {
    std::string formats;
    for (auto f : options_.formats) formats += std::to_string(static_cast<int>(f));
    ctx.record.inputs["option:formats"] = formats.empty() ? "all" : formats;
  }

  if (auto it = manifest_.stages.find(name); it != manifest_.stages.end() && it->second.complete &&
                                             it->second.inputs == ctx.record.inputs) {
    bool intact = true;
    for (const auto& [rel, sha] : it->second.artifacts)
      intact = intact && fs::exists(ctx.path(rel)) && sha256_file(ctx.path(rel)) == sha;
    if (intact) {
      spdlog::info("{}: up to date, skipped", name);
      return StageOutcome::skipped;
    }
  }

  manifest_.stages[name].complete = false;
  manifest_.save(manifest_path());
  spdlog::info("{}: running", name);

  switch (stage) {
    case Stage::build_lexicon: stage_build_lexicon(ctx); break;
    case Stage::train_hscorer: stage_train_hscorer(ctx); break;
    case Stage::filter: stage_filter(ctx); break;
    case Stage::narrow: stage_narrow(ctx); break;
    case Stage::dispatch: stage_dispatch(ctx); break;
    case Stage::validate: stage_validate(ctx); break;
    case Stage::analyze: stage_analyze(ctx); break;
    case Stage::report: stage_report(ctx); break;
  }

  ctx.record.complete = true;
  manifest_.stages[name] = std::move(ctx.record);
  manifest_.save(manifest_path());
  spdlog::info("{}: done", name);
  return StageOutcome::ran;
}

void Pipeline::run_all() {
  for (auto s : kStages) run(s);
}

llm::ChatTransport& Pipeline::transport_for(const std::string& provider) {
  if (mock_) return *mock_;
  if (provider.empty()) throw ConfigError("a model has no provider and no mock transport was given");
  if (auto it = http_.find(provider); it != http_.end()) return *it->second;
  for (const auto& p : config_.providers)
    if (p.name == provider) return *http_.emplace(provider, std::make_unique<llm::HttpChatTransport>(p)).first->second;
  throw ConfigError("unknown provider '" + provider + "'");
}

llm::DispatchOptions Pipeline::dispatch_options() const {
  llm::DispatchOptions o;
  o.retry = config_.retry;
  o.concurrency = config_.concurrency;
  if (mock_) {
    // Replays are instantaneous; a fixed clock keeps the stored exchanges reproducible.
    o.sleep = [](std::chrono::milliseconds) {};
    o.clock = [] { return std::int64_t{0}; };
  }
  return o;
}

// ---------------------------------------------------------------------------

void Pipeline::stage_build_lexicon(Context& ctx) {
  auto exclude = normalized_list(config_.exclude_list);
  std::vector<std::vector<lexdb::LexicalEntry>> trusted, screened;
  auto sources = ordered_json::array();
  for (const auto& src : config_.sources) {
    auto opts = src.options;
    opts.exclude.insert(exclude.begin(), exclude.end());
    auto res = lexdb::ingest_source(src.adapter, src.path, opts);
    ordered_json r;
    r["id"] = src.id;
    r["adapter"] = lexdb::to_string(src.adapter);
    r["role"] = src.role == SourceRole::trusted ? "trusted" : "screened";
    r["records"] = res.report.records;
    r["entries"] = res.entries.size();
    auto errors = ordered_json::array();
    for (const auto& e : res.report.errors) errors.push_back({{"line", e.line}, {"message", e.message}});
    r["errors"] = std::move(errors);
    sources.push_back(std::move(r));
    if (!res.report.errors.empty())
      spdlog::warn("{}: {} malformed records skipped", src.id, res.report.errors.size());
    (src.role == SourceRole::trusted ? trusted : screened).push_back(std::move(res.entries));
  }
  auto merged_trusted = lexdb::merge_lexicons(trusted, config_.source_priority);
  auto merged_screened = lexdb::merge_lexicons(screened, config_.source_priority);

  auto conflicts = ordered_json::array();
  for (const auto& c : merged_trusted.conflicts)
    conflicts.push_back({{"lemma", c.lemma},
                         {"gender", lexdb::to_string(c.gender)},
                         {"kept", lexdb::to_string(c.kept)},
                         {"kept_source", c.kept_source},
                         {"dropped", lexdb::to_string(c.dropped)},
                         {"dropped_source", c.dropped_source}});
  ordered_json report;
  report["sources"] = std::move(sources);
  report["trusted_entries"] = merged_trusted.db.size();
  report["screened_entries"] = merged_screened.db.size();
  report["class_conflicts"] = std::move(conflicts);

  ctx.write(artifacts::kTrustedLexicon, lexdb::lexicon_jsonl(merged_trusted.db));
  ctx.write(artifacts::kScreenedLexicon, lexdb::lexicon_jsonl(merged_screened.db));
  ctx.write(artifacts::kIngestReport, report.dump(2) + "\n");
}

void Pipeline::stage_train_hscorer(Context& ctx) {
  hscorer::ScoringResources res{
      hscorer::WordNetSnapshot::load(config_.wordnet, config_.human_anchors, config_.nonhuman_anchors),
      hscorer::IndicatorLexicon::load(config_.indicators), hscorer::PrototypeLexicon::load(config_.prototypes),
      hscorer::EmbeddingTable::load(config_.embeddings), hscorer::SuffixSet::load(config_.suffixes)};
  res.validate();

  auto trusted = lexdb::read_lexicon_jsonl(ctx.path(artifacts::kTrustedLexicon));
  auto screened = lexdb::read_lexicon_jsonl(ctx.path(artifacts::kScreenedLexicon));

  std::set<std::string> positives;
  if (config_.golden_hn) {
    positives = normalized_list(config_.golden_hn);
  } else {
    for (const auto& [k, e] : trusted.entries()) positives.insert(k.lemma);
  }
  auto negatives = normalized_list(config_.golden_non_hn);
  for (const auto& w : negatives)
    if (positives.count(w)) throw DataError("'" + w + "' is listed both as a human and as a non-human noun");

  hscorer::LabeledData data;
  for (const auto& w : positives) data.add(hscorer::build_feature_vector(w, res).values(), 1);
  for (const auto& w : negatives) data.add(hscorer::build_feature_vector(w, res).values(), 0);

  auto lr = hscorer::train_member(hscorer::MemberKind::logistic_regression, data, config_.training);
  auto gbt = hscorer::train_member(hscorer::MemberKind::gradient_boosted_trees, data, config_.training);
  spdlog::info("validation accuracy: logistic regression {:.4f}, boosted trees {:.4f}", lr.validation_accuracy,
               gbt.validation_accuracy);

  ordered_json training;
  training["positives"] = positives.size();
  training["negatives"] = negatives.size();
  training["data_checksum"] = data.checksum();
  auto members = ordered_json::array();
  for (const auto* m : {&lr, &gbt})
    members.push_back({{"kind", hscorer::to_string(m->model->kind())},
                       {"validation_accuracy", m->validation_accuracy},
                       {"converged", m->converged},
                       {"rounds", m->training_loss.size()}});
  training["members"] = std::move(members);

  std::vector<hscorer::NamedMember> ensemble{{"logistic_regression", lr.model}, {"gradient_boosted_trees", gbt.model}};
  std::unique_ptr<hscorer::HttpRemoteScorer> remote;
  if (config_.remote_url) remote = std::make_unique<hscorer::HttpRemoteScorer>(*config_.remote_url);

  std::vector<ordered_json> screening;
  std::vector<lexdb::LexicalEntry> accepted;
  std::size_t degraded = 0;
  for (const auto& [key, e] : screened.entries()) {
    auto features = hscorer::build_feature_vector(key.lemma, res).values();
    auto v = hscorer::ensemble_classify(features, ensemble, remote.get(), config_.remote_policy, key.lemma);
    if (v.degraded) ++degraded;
    if (v.accepted) accepted.push_back(e);
    screening.push_back({{"lemma", key.lemma},
                         {"gender", lexdb::to_string(key.gender)},
                         {"accepted", v.accepted},
                         {"votes", v.votes},
                         {"degraded", v.degraded}});
  }
  training["screened"] = screening.size();
  training["screened_accepted"] = accepted.size();
  training["screened_degraded"] = degraded;

  auto merged = lexdb::merge_lexicons({entry_list(trusted), accepted}, config_.source_priority).db;
  if (config_.predicted_classes)
    merged = lexdb::annotate_classes(merged, {}, read_predicted_classes(*config_.predicted_classes),
                                     config_.class_mapping);
  auto mg = lexdb::extract_mg_subset(merged);
  training["hn_entries"] = merged.size();
  training["mg_entries"] = mg.size();

  ctx.write(artifacts::kLogisticModel, hscorer::member_artifact(lr).dump(2) + "\n");
  ctx.write(artifacts::kTreesModel, hscorer::member_artifact(gbt).dump() + "\n");
  ctx.write(artifacts::kTrainingReport, training.dump(2) + "\n");
  ctx.write(artifacts::kScreening, jsonl(screening));
  ctx.write(artifacts::kHnDb, lexdb::lexicon_jsonl(merged));
  ctx.write(artifacts::kMgLexicon, mg_jsonl(mg));
}

void Pipeline::stage_filter(Context& ctx) {
  auto db = lexdb::read_lexicon_jsonl(ctx.path(artifacts::kHnDb));
  auto mg = load_mg(ctx.path(artifacts::kMgLexicon));
  auto rules = config_.rules;
  rules.given_names = normalized_list(config_.given_names);
  auto stoplist = normalized_list(config_.stoplist);

  auto docs = read_all(config_.instructions);
  auto filtered = corpus::filter_corpus(docs, db, rules);
  std::vector<ordered_json> report;
  for (const auto& [id, d] : filtered.decisions) report.push_back(corpus::filter_report_entry(id, d));
  auto clean = corpus::remove_mg_instructions(filtered.kept, mg, stoplist);
  spdlog::info("instructions: {} read, {} after filters, {} without masculine generics", docs.size(),
               filtered.kept.size(), clean.size());

  ctx.write(artifacts::kFilteredInstructions, corpus::conllu_string(filtered.kept));
  ctx.write(artifacts::kInstructionFilterReport, jsonl(report));
  ctx.write(artifacts::kCleanInstructions, corpus::conllu_string(clean));
}

void Pipeline::stage_narrow(Context& ctx) {
  auto docs = corpus::read_conllu(ctx.path(artifacts::kCleanInstructions));
  std::map<std::string, std::vector<std::size_t>> by_dataset;
  for (std::size_t i = 0; i < docs.size(); ++i) by_dataset[docs[i].dataset_tag].push_back(i);
  std::map<std::string, std::size_t> counts;
  for (const auto& [tag, idx] : by_dataset) counts[tag] = idx.size();

  auto picked = corpus::narrow_proportional(counts, config_.narrow_target, config_.seed);
  std::vector<corpus::AnnotatedDocument> narrowed;
  ordered_json quotas = ordered_json::object();
  for (const auto& [tag, idx] : picked) {
    quotas[tag] = idx.size();
    for (auto k : idx) narrowed.push_back(docs[by_dataset.at(tag)[k]]);
  }
  ordered_json report;
  report["target"] = config_.narrow_target;
  report["seed"] = config_.seed;
  report["original"] = counts;
  report["quotas"] = std::move(quotas);

  ctx.write(artifacts::kNarrowedInstructions, corpus::conllu_string(narrowed));
  ctx.write(artifacts::kNarrowReport, report.dump(2) + "\n");
}

void Pipeline::stage_dispatch(Context& ctx) {
  auto docs = corpus::read_conllu(ctx.path(artifacts::kNarrowedInstructions));
  std::vector<llm::Instruction> instructions;
  for (const auto& d : docs) instructions.push_back({d.doc_id, d.text});

  fs::create_directories(ctx.path(artifacts::kExchanges).parent_path());
  llm::ExchangeStore store(ctx.path(artifacts::kExchanges));
  auto options = dispatch_options();
  for (const auto& m : config_.models) {
    auto gen = config_.generation;
    gen.model_id = m.id;
    auto result = llm::dispatch(instructions, gen, transport_for(m.provider), &store, options);
    std::size_t failed = 0;
    for (const auto& e : result.exchanges)
      if (e.status == llm::ExchangeStatus::error) ++failed;
    spdlog::info("{}: {} exchanges ({} resumed, {} failed)", m.id, result.exchanges.size(), result.skipped, failed);
  }
  store.compact();
  ctx.adopt(artifacts::kExchanges);
}

void Pipeline::stage_validate(Context& ctx) {
  auto db = lexdb::read_lexicon_jsonl(ctx.path(artifacts::kHnDb));
  auto rules = config_.rules;
  rules.given_names = normalized_list(config_.given_names);
  auto stoplist = normalized_list(config_.stoplist);

  llm::ExchangeStore exchanges(ctx.path(artifacts::kExchanges));
  std::set<std::string> models;
  for (const auto& m : config_.models) models.insert(m.id);

  // Responses of configured models are kept when a successful exchange
  // exists; other groups are reference texts taken as they are.
  std::map<std::string, std::vector<corpus::AnnotatedDocument>> groups;
  std::set<DocKey> seen;
  std::size_t failed_exchanges = 0, unmatched = 0;
  for (auto& d : read_all(config_.response_annotations)) {
    if (d.dataset_tag.empty()) throw DataError("response '" + d.doc_id + "' has no '# dataset =' group");
    if (!seen.insert({d.dataset_tag, d.doc_id}).second)
      throw DataError("response '" + d.dataset_tag + "/" + d.doc_id + "' is annotated twice");
    if (models.count(d.dataset_tag)) {
      const auto* e = exchanges.find(d.dataset_tag, d.doc_id);
      if (!e) {
        ++unmatched;
        continue;
      }
      if (e->status == llm::ExchangeStatus::error) {
        ++failed_exchanges;
        continue;
      }
    }
    groups[d.dataset_tag].push_back(std::move(d));
  }
  for (const auto& e : exchanges.sorted())
    if (e.status != llm::ExchangeStatus::error && models.count(e.model_id) && !seen.count({e.model_id, e.instruction_id}))
      throw DataError("response '" + e.model_id + "/" + e.instruction_id + "' has no annotation");
  if (failed_exchanges) spdlog::warn("{} annotated responses belong to failed exchanges and were skipped", failed_exchanges);
  if (unmatched) spdlog::info("{} annotated responses answer instructions outside this run and were skipped", unmatched);

  std::vector<corpus::AnnotatedDocument> kept;
  std::vector<ordered_json> report;
  for (const auto& [group, docs] : groups) {
    auto filtered = corpus::filter_corpus(docs, db, rules);
    for (const auto& [id, d] : filtered.decisions) {
      auto entry = corpus::filter_report_entry(id, d);
      ordered_json line{{"group", group}};
      for (auto& [k, v] : entry.items()) line[k] = v;
      report.push_back(std::move(line));
    }
    kept.insert(kept.end(), filtered.kept.begin(), filtered.kept.end());
  }
  std::stable_sort(kept.begin(), kept.end(), by_group_then_id);

  struct Pending {
    std::string group, doc_id;
    std::vector<std::string> ids;
  };
  std::vector<Pending> pending;
  std::vector<llm::Instruction> prompts;
  std::vector<ordered_json> validations;
  std::map<std::string, std::size_t> pending_index;
  for (const auto& d : kept) {
    auto candidates = metrics::analysis_candidates(d, db, stoplist);
    ordered_json v{{"group", d.dataset_tag}, {"doc_id", d.doc_id}};
    if (candidates.empty() || !config_.validation_model) {
      v["status"] = candidates.empty() ? "no_candidates" : "not_validated";
      v["ids"] = json::array();
      v["verdicts"] = std::vector<std::string>(candidates.size(), "unvalidated");
      validations.push_back(std::move(v));
      continue;
    }
    std::vector<std::string> nouns;
    for (const auto& c : candidates) nouns.push_back(c.form);
    auto prompt = llm::build_validation_prompt(d.text, nouns);
    auto id = d.dataset_tag + "/" + d.doc_id;
    pending_index[id] = validations.size();
    validations.push_back(std::move(v));
    pending.push_back({d.dataset_tag, d.doc_id, prompt.ids});
    prompts.push_back({id, prompt.user_prompt});
  }

  fs::create_directories(ctx.path(artifacts::kValidationExchanges).parent_path());
  llm::ExchangeStore store(ctx.path(artifacts::kValidationExchanges));
  if (config_.validation_model && !prompts.empty()) {
    auto gen = llm::validation_generation_config(config_.validation_model->id);
    auto result =
        llm::dispatch(prompts, gen, transport_for(config_.validation_model->provider), &store, dispatch_options());
    std::map<std::string, const llm::ChatExchange*> by_id;
    for (const auto& e : result.exchanges) by_id[e.instruction_id] = &e;
    std::size_t partial = 0, failed = 0;
    for (const auto& p : pending) {
      auto id = p.group + "/" + p.doc_id;
      auto& v = validations[pending_index.at(id)];
      const auto* e = by_id.at(id);
      std::vector<std::string> verdicts(p.ids.size(), "unvalidated");
      std::string status = "validated";
      if (e->status == llm::ExchangeStatus::error) {
        status = "failed";
      } else {
        auto parsed = llm::parse_validation_response(e->response_text, p.ids);
        if (parsed.malformed) {
          status = "failed";
        } else {
          for (std::size_t i = 0; i < p.ids.size(); ++i)
            if (auto it = parsed.verdicts.find(p.ids[i]); it != parsed.verdicts.end())
              verdicts[i] = it->second == 1 ? "accepted" : "rejected";
          if (!parsed.missing.empty() || !parsed.invalid.empty()) status = "partial";
        }
      }
      if (status == "partial") ++partial;
      if (status == "failed") ++failed;
      v["status"] = status;
      v["ids"] = p.ids;
      v["verdicts"] = verdicts;
    }
    spdlog::info("validation: {} texts sent, {} partial, {} failed", pending.size(), partial, failed);
  }
  store.compact();

  ctx.write(artifacts::kResponseFilterReport, jsonl(report));
  ctx.write(artifacts::kFilteredResponses, corpus::conllu_string(kept));
  ctx.adopt(artifacts::kValidationExchanges);
  ctx.write(artifacts::kValidations, jsonl(validations));
}

void Pipeline::stage_analyze(Context& ctx) {
  auto db = lexdb::read_lexicon_jsonl(ctx.path(artifacts::kHnDb));
  auto mg = load_mg(ctx.path(artifacts::kMgLexicon));
  auto stoplist = normalized_list(config_.stoplist);
  auto markers = config_.markers ? metrics::MarkerLexicon::load(*config_.markers) : metrics::MarkerLexicon::defaults();
  metrics::AnalysisInputs inputs{db, mg, stoplist, markers, config_.unvalidated_policy};

  std::map<DocKey, std::vector<metrics::Validation>> verdicts;
  for (const auto& v : read_jsonl(ctx.path(artifacts::kValidations))) {
    DocKey key{v.at("group").get<std::string>(), v.at("doc_id").get<std::string>()};
    auto& out = verdicts[key];
    for (const auto& s : v.at("verdicts")) out.push_back(metrics::parse_validation(s.get<std::string>()));
  }

  auto docs = corpus::read_conllu(ctx.path(artifacts::kFilteredResponses));
  std::stable_sort(docs.begin(), docs.end(), by_group_then_id);
  std::vector<ordered_json> lines;
  for (const auto& d : docs) {
    auto it = verdicts.find({d.dataset_tag, d.doc_id});
    if (it == verdicts.end())
      throw DataError("response '" + d.dataset_tag + "/" + d.doc_id + "' has no validation record");
    lines.push_back(metrics::to_json(metrics::analyze_text(d, d.dataset_tag, inputs, &it->second)));
  }
  ctx.write(artifacts::kAnalyses, jsonl(lines));
}

void Pipeline::stage_report(Context& ctx) {
  auto db = lexdb::read_lexicon_jsonl(ctx.path(artifacts::kHnDb));
  std::vector<metrics::TextAnalysis> analyses;
  for (const auto& j : read_jsonl(ctx.path(artifacts::kAnalyses))) analyses.push_back(metrics::analysis_from_json(j));
  auto report = metrics::build_report(analyses, db, std::string(tool_version()));

  auto formats = options_.formats;
  if (formats.empty()) formats = {metrics::ReportFormat::json, metrics::ReportFormat::csv, metrics::ReportFormat::plotdata};
  for (auto f : formats)
    for (const auto& [file, contents] : metrics::render_report(report, f)) ctx.write("report/" + file, contents);
}

}  // namespace mgaudit::pipeline
