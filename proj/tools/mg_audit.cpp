// mg-audit: runs the audit pipeline stage by stage.

#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "mgaudit/pipeline.hpp"

namespace pl = mgaudit::pipeline;

int main(int argc, char** argv) {
  CLI::App app{"Masculine-generics audit of French LLM outputs", "mg-audit"};
  app.set_version_flag("--version", std::string(pl::tool_version()));

  std::string stage;
  std::string config_path;
  bool force = false;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> target;
  std::optional<std::string> mock;
  std::optional<std::string> output_dir;
  std::string format = "all";
  bool verbose = false;

  app.add_option("stage", stage,
                 "build-lexicon, train-hscorer, filter, narrow, dispatch, validate, analyze, report or all")
      ->required();
  app.add_option("--config", config_path, "Run configuration (JSON)")->required();
  app.add_flag("--force", force, "Discard a manifest written under a different configuration");
  app.add_option("--seed", seed, "Override the configured seed");
  app.add_option("--target", target, "Override the narrowing target");
  app.add_option("--mock-transport", mock, "Replay chat responses from a JSONL fixture file");
  app.add_option("--output-dir", output_dir, "Override the configured output directory");
  app.add_option("--format", format, "Report format: json, csv, plotdata or all");
  app.add_flag("-v,--verbose", verbose, "Debug logging");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);

  try {
    std::vector<pl::Stage> stages;
    if (stage == "all") {
      stages.assign(std::begin(pl::kStages), std::end(pl::kStages));
    } else {
      stages.push_back(pl::parse_stage(stage));
    }
    pl::RunOptions options;
    options.force = force;
    if (mock) options.mock_transport = std::filesystem::absolute(*mock);
    if (format != "all") options.formats.insert(mgaudit::metrics::parse_report_format(format));

    auto config = pl::load_run_config(config_path, {seed, target, output_dir});
    pl::Pipeline pipeline(std::move(config), std::move(options));
    for (auto s : stages) pipeline.run(s);
  } catch (const mgaudit::UsageError& e) {
    std::cerr << "mg-audit: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "mg-audit: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
