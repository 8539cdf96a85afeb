#pragma once

// Stage-based orchestration: run configuration, the run manifest and the
// eight pipeline stages.

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mgaudit/common.hpp"
#include "mgaudit/corpus.hpp"
#include "mgaudit/hscorer/classifier.hpp"
#include "mgaudit/hscorer/ensemble.hpp"
#include "mgaudit/lexdb.hpp"
#include "mgaudit/llm.hpp"
#include "mgaudit/metrics.hpp"

namespace mgaudit::pipeline {

std::string_view tool_version();

/// An upstream stage has not produced what this stage needs.
class DependencyError : public Error {
 public:
  using Error::Error;
};

/// The manifest was written under a different configuration.
class ConfigMismatchError : public Error {
 public:
  using Error::Error;
};

enum class Stage { build_lexicon, train_hscorer, filter, narrow, dispatch, validate, analyze, report };

inline constexpr Stage kStages[] = {Stage::build_lexicon, Stage::train_hscorer, Stage::filter,  Stage::narrow,
                                    Stage::dispatch,      Stage::validate,      Stage::analyze, Stage::report};

std::string_view to_string(Stage s);
/// Throws UsageError on an unknown stage name.
Stage parse_stage(std::string_view s);

enum class SourceRole { trusted, screened };

struct LexiconSource {
  std::string id;
  lexdb::SourceAdapter adapter;
  std::filesystem::path path;
  SourceRole role = SourceRole::trusted;
  lexdb::IngestOptions options;
};

struct ModelSpec {
  std::string id;
  std::string provider;
};

/// Parsed configuration. Relative paths are resolved against the directory
/// of the configuration file.
struct RunConfig {
  std::filesystem::path base_dir;
  std::filesystem::path output_dir;
  std::uint64_t seed = 42;

  // lexicon
  std::vector<LexiconSource> sources;
  std::vector<std::string> source_priority;
  std::optional<std::filesystem::path> exclude_list;
  std::optional<std::filesystem::path> predicted_classes;  // CSV lemma,label
  std::map<std::string, lexdb::HnClass> class_mapping;

  // hscorer
  std::filesystem::path wordnet;
  std::set<std::string> human_anchors;
  std::set<std::string> nonhuman_anchors;
  std::filesystem::path indicators;
  std::filesystem::path prototypes;
  std::filesystem::path embeddings;
  std::filesystem::path suffixes;
  std::optional<std::filesystem::path> golden_hn;
  std::filesystem::path golden_non_hn;
  hscorer::TrainingOptions training;
  std::optional<std::string> remote_url;
  hscorer::RemotePolicy remote_policy = hscorer::RemotePolicy::fail;

  // corpus
  std::vector<std::filesystem::path> instructions;
  std::optional<std::filesystem::path> given_names;
  std::optional<std::filesystem::path> stoplist;
  corpus::RuleSet rules;
  std::size_t narrow_target = 10000;

  // generation and providers
  llm::GenerationConfig generation;
  std::vector<ModelSpec> models;
  std::vector<llm::ProviderConfig> providers;
  llm::RetryPolicy retry;
  std::size_t concurrency = 4;

  // responses and validation
  std::vector<std::filesystem::path> response_annotations;
  std::optional<ModelSpec> validation_model;
  metrics::UnvalidatedPolicy unvalidated_policy = metrics::UnvalidatedPolicy::exclude;
  std::optional<std::filesystem::path> markers;

  /// Canonical effective configuration (after overrides) and its SHA-256.
  nlohmann::json effective;
  std::string checksum;
};

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> target;
  std::optional<std::filesystem::path> output_dir;
};

/// Throws ConfigError on schema violations and on referenced input files
/// that do not exist.
RunConfig load_run_config(const std::filesystem::path& path, const Overrides& overrides = {});
RunConfig parse_run_config(const nlohmann::json& j, const std::filesystem::path& base_dir,
                           const Overrides& overrides = {});

struct StageRecord {
  bool complete = false;
  std::map<std::string, std::string> inputs;     // path -> sha256
  std::map<std::string, std::string> artifacts;  // path relative to output_dir -> sha256
};

struct RunManifest {
  std::string tool_version;
  std::string config_checksum;
  std::map<std::string, StageRecord> stages;

  nlohmann::ordered_json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);
  static std::optional<RunManifest> load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
};

struct RunOptions {
  bool force = false;
  std::optional<std::filesystem::path> mock_transport;
  /// Formats written by the report stage; empty means all three.
  std::set<metrics::ReportFormat> formats;
};

enum class StageOutcome { ran, skipped };

class Pipeline {
 public:
  Pipeline(RunConfig config, RunOptions options);
  ~Pipeline();
  Pipeline(const Pipeline&) = delete;
  Pipeline& operator=(const Pipeline&) = delete;

  /// Runs one stage. Upstream stages must be complete; a stage whose inputs
  /// and outputs still match the manifest is skipped.
  StageOutcome run(Stage stage);
  /// Every stage in order.
  void run_all();

  const RunManifest& manifest() const { return manifest_; }
  const RunConfig& config() const { return config_; }
  std::filesystem::path manifest_path() const { return config_.output_dir / "manifest.json"; }

 private:
  struct Context;

  void stage_build_lexicon(Context& ctx);
  void stage_train_hscorer(Context& ctx);
  void stage_filter(Context& ctx);
  void stage_narrow(Context& ctx);
  void stage_dispatch(Context& ctx);
  void stage_validate(Context& ctx);
  void stage_analyze(Context& ctx);
  void stage_report(Context& ctx);

  std::vector<std::filesystem::path> external_inputs(Stage stage) const;
  llm::ChatTransport& transport_for(const std::string& provider);
  llm::DispatchOptions dispatch_options() const;

  RunConfig config_;
  RunOptions options_;
  RunManifest manifest_;
  std::unique_ptr<llm::MockTransport> mock_;
  std::map<std::string, std::unique_ptr<llm::HttpChatTransport>> http_;
};

/// Artifact paths relative to the output directory.
namespace artifacts {
inline constexpr const char* kTrustedLexicon = "lexicon/trusted.jsonl";
inline constexpr const char* kScreenedLexicon = "lexicon/screened.jsonl";
inline constexpr const char* kIngestReport = "lexicon/ingest_report.json";
inline constexpr const char* kLogisticModel = "hscorer/logistic_regression.json";
inline constexpr const char* kTreesModel = "hscorer/gradient_boosted_trees.json";
inline constexpr const char* kTrainingReport = "hscorer/training_report.json";
inline constexpr const char* kScreening = "hscorer/screening.jsonl";
inline constexpr const char* kHnDb = "lexicon/hn_db.jsonl";
inline constexpr const char* kMgLexicon = "lexicon/mg.jsonl";
inline constexpr const char* kFilteredInstructions = "corpus/instructions_filtered.conllu";
inline constexpr const char* kInstructionFilterReport = "corpus/filter_report.jsonl";
inline constexpr const char* kCleanInstructions = "corpus/instructions_clean.conllu";
inline constexpr const char* kNarrowedInstructions = "corpus/instructions_narrowed.conllu";
inline constexpr const char* kNarrowReport = "corpus/narrow_report.json";
inline constexpr const char* kExchanges = "responses/exchanges.jsonl";
inline constexpr const char* kResponseFilterReport = "responses/filter_report.jsonl";
inline constexpr const char* kFilteredResponses = "responses/responses_filtered.conllu";
inline constexpr const char* kValidationExchanges = "responses/validation_exchanges.jsonl";
inline constexpr const char* kValidations = "responses/validations.jsonl";
inline constexpr const char* kAnalyses = "analysis/analyses.jsonl";
}  // namespace artifacts

}  // namespace mgaudit::pipeline
