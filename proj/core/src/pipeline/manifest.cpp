#include "mgaudit/pipeline.hpp"

#ifndef MGAUDIT_VERSION
#define MGAUDIT_VERSION "0.0.0"
#endif

namespace mgaudit::pipeline {

std::string_view tool_version() { return MGAUDIT_VERSION; }

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::build_lexicon: return "build-lexicon";
    case Stage::train_hscorer: return "train-hscorer";
    case Stage::filter: return "filter";
    case Stage::narrow: return "narrow";
    case Stage::dispatch: return "dispatch";
    case Stage::validate: return "validate";
    case Stage::analyze: return "analyze";
    case Stage::report: return "report";
  }
  return "?";
}

Stage parse_stage(std::string_view s) {
  for (auto st : kStages)
    if (to_string(st) == s) return st;
  throw UsageError("unknown stage '" + std::string(s) +
                   "' (expected build-lexicon, train-hscorer, filter, narrow, dispatch, validate, analyze, report "
                   "or all)");
}

nlohmann::ordered_json RunManifest::to_json() const {
  nlohmann::ordered_json j;
  j["tool_version"] = tool_version;
  j["config_checksum"] = config_checksum;
  auto st = nlohmann::ordered_json::object();
  for (auto s : kStages) {
    auto it = stages.find(std::string(pipeline::to_string(s)));
    if (it == stages.end()) continue;
    st[it->first] = {{"complete", it->second.complete},
                     {"inputs", it->second.inputs},
                     {"artifacts", it->second.artifacts}};
  }
  j["stages"] = std::move(st);
  return j;
}

RunManifest RunManifest::from_json(const nlohmann::json& j) {
  RunManifest m;
  try {
    m.tool_version = j.at("tool_version").get<std::string>();
    m.config_checksum = j.at("config_checksum").get<std::string>();
    for (const auto& [name, rec] : j.at("stages").items()) {
      parse_stage(name);
      StageRecord r;
      r.complete = rec.at("complete").get<bool>();
      r.inputs = rec.at("inputs").get<std::map<std::string, std::string>>();
      r.artifacts = rec.at("artifacts").get<std::map<std::string, std::string>>();
      m.stages[name] = std::move(r);
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed run manifest: ") + e.what());
  }
  return m;
}

std::optional<RunManifest> RunManifest::load(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) return std::nullopt;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return from_json(j);
}

void RunManifest::save(const std::filesystem::path& path) const {
  std::filesystem::create_directories(path.parent_path());
  write_file_atomic(path, to_json().dump(2) + "\n");
}

}  // namespace mgaudit::pipeline
