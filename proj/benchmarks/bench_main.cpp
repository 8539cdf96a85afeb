#include <benchmark/benchmark.h>

#include <random>

#include "mgaudit/hscorer/features.hpp"
#include "mgaudit/llm.hpp"
#include "mgaudit/metrics.hpp"
#include "mgaudit/pipeline.hpp"
#include "support.hpp"

using namespace mgaudit;

namespace {

const pipeline::RunConfig& mini_config() {
  static const pipeline::RunConfig c = pipeline::load_run_config(mgtest::mini_dir() / "config.json");
  return c;
}

const hscorer::ScoringResources& mini_resources() {
  static const hscorer::ScoringResources r = [] {
    const auto& c = mini_config();
    hscorer::ScoringResources res;
    res.wordnet = hscorer::WordNetSnapshot::load(c.wordnet, c.human_anchors, c.nonhuman_anchors);
    res.indicators = hscorer::IndicatorLexicon::load(c.indicators);
    res.prototypes = hscorer::PrototypeLexicon::load(c.prototypes);
    res.embeddings = hscorer::EmbeddingTable::load(c.embeddings);
    res.suffixes = hscorer::SuffixSet::load(c.suffixes);
    return res;
  }();
  return r;
}

void BM_FeatureVector(benchmark::State& state) {
  const auto& res = mini_resources();
  const std::vector<std::string> words{"plombier", "automate", "boulanger", "rouage", "inconnu"};
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(hscorer::build_feature_vector(words[i++ % words.size()], res));
}
BENCHMARK(BM_FeatureVector);

void BM_DetectMarkers(benchmark::State& state) {
  auto lex = metrics::MarkerLexicon::defaults();
  std::string text;
  for (int i = 0; i < state.range(0); ++i)
    text += "Bonjour à toutes et à tous, chaque utilisateur·ice peut écrire à l'auteur(ice) ou à iel. ";
  for (auto _ : state) benchmark::DoNotOptimize(metrics::detect_markers(text, lex));
  state.SetBytesProcessed(static_cast<int64_t>(state.iterations() * text.size()));
}
BENCHMARK(BM_DetectMarkers)->Arg(1)->Arg(16)->Arg(256);

void BM_AnalyzeText(benchmark::State& state) {
  auto db = mgtest::toy_db();
  auto mg = lexdb::extract_mg_subset(db);
  auto markers = metrics::MarkerLexicon::defaults();
  metrics::AnalysisInputs in{db, mg, mgtest::toy_stoplist(), markers, metrics::UnvalidatedPolicy::accept};
  std::mt19937_64 rng(1);
  std::vector<corpus::AnnotatedDocument> docs;
  for (int i = 0; i < 64; ++i) docs.push_back(mgtest::make_doc("d" + std::to_string(i), mgtest::random_text(rng).sentences));
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(metrics::analyze_text(docs[i++ % docs.size()], "g", in));
}
BENCHMARK(BM_AnalyzeText);

void BM_Apportion(benchmark::State& state) {
  std::map<std::string, std::size_t> counts{{"alpaca", 29179}, {"hh_rlhf", 10806}, {"oracle", 2600}, {"oasst2", 311}};
  for (auto _ : state) benchmark::DoNotOptimize(corpus::narrow_proportional(counts, 10000, 42));
}
BENCHMARK(BM_Apportion);

void BM_CohenKappa(benchmark::State& state) {
  std::mt19937_64 rng(3);
  std::vector<int> a(static_cast<std::size_t>(state.range(0))), b(a.size());
  for (auto& x : a) x = static_cast<int>(rng() % 2);
  for (auto& x : b) x = static_cast<int>(rng() % 2);
  for (auto _ : state) benchmark::DoNotOptimize(llm::cohen_kappa(a, b));
}
BENCHMARK(BM_CohenKappa)->Arg(100)->Arg(10000);

void BM_FilterCorpus(benchmark::State& state) {
  auto docs = corpus::read_conllu(mgtest::fixtures_dir() / "filter_corpus.conllu");
  auto db = mgtest::mini_trusted_db();
  auto rules = mgtest::mini_rules();
  for (auto _ : state) benchmark::DoNotOptimize(corpus::filter_corpus(docs, db, rules));
  state.SetItemsProcessed(static_cast<int64_t>(state.iterations() * docs.size()));
}
BENCHMARK(BM_FilterCorpus);

}  // namespace

BENCHMARK_MAIN();
