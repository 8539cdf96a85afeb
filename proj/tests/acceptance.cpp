// Acceptance checks: one PASS / FAIL / SKIP line per criterion. Exit status
// is non-zero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include <spdlog/spdlog.h>

#include "filter_fixtures.hpp"
#include "mgaudit/hscorer/classifier.hpp"
#include "mgaudit/hscorer/ensemble.hpp"
#include "mgaudit/llm.hpp"
#include "mgaudit/metrics.hpp"
#include "mgaudit/pipeline.hpp"
#include "support.hpp"

using namespace mgaudit;
namespace fs = std::filesystem;

namespace {

enum class Verdict { pass, fail, skip };

struct Outcome {
  Verdict verdict = Verdict::fail;
  std::string detail;
};

Outcome pass(std::string d) { return {Verdict::pass, std::move(d)}; }
Outcome fail(std::string d) { return {Verdict::fail, std::move(d)}; }
Outcome skip(std::string d) { return {Verdict::skip, std::move(d)}; }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double x, int prec = 3) {
  std::ostringstream o;
  o.precision(prec);
  o << std::fixed << x;
  return o.str();
}

// ---------------------------------------------------------------------------

Outcome m_score_oracle() {
  auto t0 = std::chrono::steady_clock::now();
  auto db = mgtest::toy_db();
  auto mg = lexdb::extract_mg_subset(db);
  auto markers = metrics::MarkerLexicon::defaults();
  metrics::AnalysisInputs in{db, mg, mgtest::toy_stoplist(), markers};
  std::mt19937_64 rng(2024), vrng(4048);
  std::vector<metrics::TextAnalysis> analyses;
  std::size_t sum_mg = 0, sum_hn = 0, defined = 0, mismatches = 0;
  double sum_scores = 0.0;
  for (int i = 0; i < 1000; ++i) {
    auto t = mgtest::random_text(rng);
    std::vector<metrics::Validation> verdicts;
    auto want = mgtest::oracle_scan(t, vrng, verdicts);
    auto a = metrics::analyze_text(mgtest::make_doc("t" + std::to_string(i), t.sentences), "g", in, &verdicts);
    std::optional<double> want_score;
    if (want.hn > 0) want_score = static_cast<double>(want.mg) / static_cast<double>(want.hn);
    if (a.hn_count != want.hn || a.mg_count != want.mg || a.m_score != want_score) ++mismatches;
    if (want.hn > 0) {
      sum_mg += want.mg;
      sum_hn += want.hn;
      sum_scores += *want_score;
      ++defined;
    }
    analyses.push_back(std::move(a));
  }
  auto agg = metrics::aggregate_m_scores(analyses);
  double want_overall = static_cast<double>(sum_mg) / static_cast<double>(sum_hn);
  double want_mean = sum_scores / static_cast<double>(defined);
  double secs = seconds_since(t0);
  std::string d = "1000 texts, " + std::to_string(mismatches) + " per-text mismatches, overall " +
                  fmt(*agg.overall, 6) + " vs " + fmt(want_overall, 6) + ", mean " + fmt(*agg.mean, 6) + " vs " +
                  fmt(want_mean, 6) + ", " + fmt(secs) + " s";
  bool ok = mismatches == 0 && agg.overall == want_overall && agg.mean == want_mean && secs < 10.0;
  return ok ? pass(d) : fail(d);
}

Outcome apportionment() {
  auto t0 = std::chrono::steady_clock::now();
  std::map<std::string, std::size_t> counts{{"alpaca", 29179}, {"hh_rlhf", 10806}, {"oracle", 2600}, {"oasst2", 311}};
  std::map<std::string, std::size_t> table{{"alpaca", 6803}, {"hh_rlhf", 2520}, {"oracle", 605}, {"oasst2", 72}};
  auto sampled = corpus::narrow_proportional(counts, 10000, 42);
  double secs = seconds_since(t0);
  std::size_t sum = 0;
  long worst = 0;
  std::string d;
  for (const auto& [k, idx] : sampled) {
    sum += idx.size();
    long diff = static_cast<long>(idx.size()) - static_cast<long>(table[k]);
    worst = std::max(worst, std::abs(diff));
    d += k + "=" + std::to_string(idx.size()) + " ";
  }
  d += "sum=" + std::to_string(sum) + ", max deviation " + std::to_string(worst) + ", " + fmt(secs, 4) + " s";
  bool ok = sum == 10000 && worst <= 2 && secs < 1.0 && sampled.size() == 4;
  return ok ? pass(d) : fail(d);
}

Outcome marker_detection() {
  auto lex = metrics::MarkerLexicon::defaults();
  using metrics::MarkerFamily;
  const std::pair<const char*, MarkerFamily> examples[] = {
      {"mesdames et messieurs", MarkerFamily::incl_greetings}, {"il ou elle", MarkerFamily::incl_pairs},
      {"iel", MarkerFamily::neutral_prons},                    {"auteur·ice", MarkerFamily::fem_ending},
      {"auteur(ice)", MarkerFamily::fem_ending},               {"auteurICE", MarkerFamily::fem_ending},
      {"utilisateur·ices", MarkerFamily::fem_ending}};
  std::size_t detected = 0;
  std::string missed;
  for (const auto& [ex, family] : examples) {
    std::string text = std::string("Voici : ") + ex + ", en contexte.";
    auto hits = metrics::detect_markers(text, lex);
    std::size_t total = 0;
    for (const auto& [f, hs] : hits) total += hs.size();
    bool ok = hits.at(family).size() == 1 && hits.at(family)[0].text == ex && total == 1;
    if (ok)
      ++detected;
    else
      missed += std::string(" ") + ex;
  }
  std::size_t control_hits = 0, sentences = 0;
  for (const auto& line : read_line_list(mgtest::fixtures_dir() / "marker_control.txt")) {
    ++sentences;
    for (const auto& [f, hs] : metrics::detect_markers(line, lex)) control_hits += hs.size();
  }
  std::string d = std::to_string(detected) + "/7 examples with the right family, " + std::to_string(control_hits) +
                  " hits on " + std::to_string(sentences) + " control sentences";
  if (!missed.empty()) d += ", missed:" + missed;
  return detected == 7 && control_hits == 0 && sentences == 50 ? pass(d) : fail(d);
}

hscorer::LabeledData separable(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  hscorer::LabeledData d;
  while (d.size() < 200) {
    double x = u(rng), y = u(rng);
    double m = 0.7 * x - 0.4 * y + 0.1;
    if (std::abs(m) < 0.15) continue;
    d.add({x, y}, m > 0 ? 1 : 0);
  }
  return d;
}

Outcome hscorer_properties() {
  using namespace hscorer;
  // gradient check
  std::mt19937_64 rng(77);
  std::normal_distribution<double> g;
  double worst = 0.0;
  for (int inst = 0; inst < 100; ++inst) {
    std::size_t dim = 1 + rng() % 8, n = 2 + rng() % 40;
    LabeledData data;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> row(dim);
      for (auto& x : row) x = g(rng);
      data.add(row, static_cast<int>(rng() % 2));
    }
    std::vector<double> w(dim);
    for (auto& x : w) x = g(rng);
    double b = g(rng);
    auto lg = logistic_loss(w, b, data);
    const double h = 1e-5;
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k <= dim; ++k) {
      auto wp = w, wm = w;
      double bp = b, bm = b;
      if (k < dim) {
        wp[k] += h;
        wm[k] -= h;
      } else {
        bp += h;
        bm -= h;
      }
      double fd = (logistic_loss(wp, bp, data).loss - logistic_loss(wm, bm, data).loss) / (2 * h);
      double an = k < dim ? lg.weight_gradient[k] : lg.bias_gradient;
      num += (fd - an) * (fd - an);
      den = std::max({den, std::abs(fd), std::abs(an)});
    }
    worst = std::max(worst, std::sqrt(num) / std::max(den, 1e-12));
  }

  auto data = separable(5);
  auto lr = train_member(MemberKind::logistic_regression, data);

  BoostedTreesParams p;
  p.rounds = 50;
  p.early_stopping_rounds = 0;
  p.max_depth = 3;
  p.min_child_weight = 1;
  p.reg_lambda = 1.0;
  auto fit = fit_boosted_trees(data, nullptr, p);
  bool monotone = fit.training_loss.size() == 50;
  for (std::size_t i = 1; i < fit.training_loss.size(); ++i)
    monotone = monotone && fit.training_loss[i] <= fit.training_loss[i - 1];

  std::size_t combos = 0, correct = 0;
  for (int k = 1; k <= 3; ++k) {
    for (int mask = 0; mask < (1 << k); ++mask) {
      std::map<std::string, bool> votes;
      for (int i = 0; i < k; ++i) votes["m" + std::to_string(i)] = (mask >> i) & 1;
      ++combos;
      if (combine_votes(votes).accepted == (mask == (1 << k) - 1)) ++correct;
    }
  }

  std::string d = "gradient max rel. error " + fmt(worst * 1e9, 3) + "e-9 over 100 instances, LR validation accuracy " +
                  fmt(lr.validation_accuracy) + ", GBT loss " + fmt(fit.training_loss.front(), 4) + " -> " +
                  fmt(fit.training_loss.back(), 4) + (monotone ? " non-increasing" : " INCREASED") + " over " +
                  std::to_string(fit.model->tree_count()) + " trees, ensemble " +
                  std::to_string(correct) + "/" + std::to_string(combos) + " vote combinations";
  bool ok = worst < 1e-5 && lr.validation_accuracy == 1.0 && monotone && correct == combos;
  return ok ? pass(d) : fail(d);
}

Outcome kappa() {
  auto same = llm::cohen_kappa({1, 0, 0, 1, 1, 0, 1}, {1, 0, 0, 1, 1, 0, 1});
  auto zero = llm::cohen_kappa({1, 1, 0, 0}, {1, 0, 0, 1});
  std::mt19937_64 rng(99);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    std::size_t n = 1 + rng() % 50;
    std::vector<int> a(n), b(n);
    for (auto& x : a) x = static_cast<int>(rng() % 2);
    for (auto& x : b) x = static_cast<int>(rng() % 2);
    worst = std::max(worst, std::abs(llm::cohen_kappa(a, b).kappa - llm::cohen_kappa(b, a).kappa));
  }
  std::string d = "identical " + fmt(same.kappa, 12) + ", hand case " + fmt(zero.kappa, 12) +
                  ", max asymmetry over 100 pairs " + fmt(worst, 12);
  bool ok = std::abs(same.kappa - 1.0) <= 1e-9 && std::abs(zero.kappa) <= 1e-9 && worst <= 1e-9;
  return ok ? pass(d) : fail(d);
}

Outcome filter_suite() {
  auto db = mgtest::filter_fixture_db();
  corpus::RuleSet rules;
  rules.given_names = mgtest::filter_fixture_names();
  std::size_t rules_ok = 0;
  std::string bad;
  for (const auto& f : mgtest::filter_fixtures()) {
    auto pos = corpus::filter_document(f.positive, db, rules);
    auto neg = corpus::filter_document(f.negative, db, rules);
    if (pos.decision.fired(f.rule) && neg.decision.fired_rules.empty())
      ++rules_ok;
    else
      bad += " " + std::string(corpus::to_string(f.rule));
  }

  auto docs = corpus::read_conllu(mgtest::fixtures_dir() / "filter_corpus.conllu");
  auto mini_db = mgtest::mini_trusted_db();
  auto mini = mgtest::mini_rules();
  auto once = corpus::filter_corpus(docs, mini_db, mini);
  auto twice = corpus::filter_corpus(once.kept, mini_db, mini);
  bool idempotent = corpus::conllu_string(once.kept) == corpus::conllu_string(twice.kept);
  for (const auto& [id, d] : twice.decisions) idempotent = idempotent && d.fired_rules.empty();

  auto mg = lexdb::extract_mg_subset(mini_db);
  auto clean = corpus::remove_mg_instructions(once.kept, mg);
  std::size_t mg_tokens = 0;
  for (const auto& d : clean)
    for (const auto& s : d.sentences)
      for (const auto& t : s.tokens) mg_tokens += mg.contains(text::normalize_lemma(t.lemma));

  std::string d = std::to_string(rules_ok) + "/5 rules fire on positive only, " + std::to_string(docs.size()) +
                  "-doc corpus " + (idempotent ? "idempotent" : "NOT idempotent") + " (" +
                  std::to_string(once.kept.size()) + " kept), " + std::to_string(mg_tokens) + " MG tokens in " +
                  std::to_string(clean.size()) + " clean docs";
  if (!bad.empty()) d += ", failing:" + bad;
  bool ok = rules_ok == 5 && docs.size() == 200 && idempotent && mg_tokens == 0;
  return ok ? pass(d) : fail(d);
}

pipeline::RunConfig mini_config(const fs::path& out) {
  pipeline::Overrides o;
  o.output_dir = out;
  return pipeline::load_run_config(mgtest::mini_dir() / "config.json", o);
}

pipeline::RunOptions mock_options() {
  pipeline::RunOptions o;
  o.mock_transport = mgtest::mini_dir() / "mock_transcripts.jsonl";
  return o;
}

std::map<std::string, std::string> report_files(const fs::path& out) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::directory_iterator(out / "report")) files[e.path().filename().string()] = read_file(e.path());
  return files;
}

struct MiniRuns {
  std::unique_ptr<mgtest::ScratchDir> a, b;
  double seconds = 0.0;
  std::string error;
};

MiniRuns& mini_runs() {
  static MiniRuns runs = [] {
    MiniRuns r;
    r.a = std::make_unique<mgtest::ScratchDir>("acceptance-a");
    r.b = std::make_unique<mgtest::ScratchDir>("acceptance-b");
    auto t0 = std::chrono::steady_clock::now();
    try {
      pipeline::Pipeline(mini_config(r.a->path()), mock_options()).run_all();
      pipeline::Pipeline(mini_config(r.b->path()), mock_options()).run_all();
    } catch (const std::exception& e) {
      r.error = e.what();
    }
    r.seconds = seconds_since(t0);
    return r;
  }();
  return runs;
}

Outcome e2e_determinism() {
  auto& runs = mini_runs();
  if (!runs.error.empty()) return fail("pipeline error: " + runs.error);
  auto a = report_files(runs.a->path());
  auto b = report_files(runs.b->path());
  std::size_t identical = 0;
  for (const auto& [name, body] : a)
    if (b.count(name) && b.at(name) == body) ++identical;
  std::string d = std::to_string(identical) + "/" + std::to_string(a.size()) +
                  " report files byte-identical across two runs, " + fmt(runs.seconds) + " s for both";
  bool ok = !a.empty() && identical == a.size() && a.size() == b.size() && runs.seconds < 60.0;
  return ok ? pass(d) : fail(d);
}

std::vector<std::vector<std::string>> csv_rows(const std::string& body) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(body);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

/// Each plot file is checked against the series its figure shows.
std::string layout_problems(const std::map<std::string, std::string>& files, const std::vector<std::string>& groups) {
  std::string problems;
  auto need = [&](bool cond, const std::string& what) {
    if (!cond) problems += " " + what;
  };
  const std::vector<std::string> families{"incl_greetings", "incl_pairs", "neutral_prons", "fem_ending",
                                          "neutral_words"};
  auto series_file = [&](const std::string& name, const std::string& key, const std::vector<std::string>& series) {
    if (!files.count(name)) return need(false, name + " missing");
    auto rows = csv_rows(files.at(name));
    need(!rows.empty() && rows[0] == std::vector<std::string>{"group", key, "value"}, name + " header");
    std::vector<std::pair<std::string, std::string>> want, got;
    for (const auto& g : groups)
      for (const auto& s : series) want.emplace_back(g, s);
    for (std::size_t i = 1; i < rows.size(); ++i)
      if (rows[i].size() == 3) got.emplace_back(rows[i][0], rows[i][1]);
    need(got == want, name + " series");
  };
  series_file("plot_bias_rates.csv", "series", {"all_responses", "responses_with_hn"});
  series_file("plot_m_scores.csv", "series", {"overall", "mean"});
  series_file("plot_marker_rates.csv", "family", families);
  if (files.count("plot_class_frequencies.csv")) {
    auto rows = csv_rows(files.at("plot_class_frequencies.csv"));
    std::vector<std::string> header{"class"};
    header.insert(header.end(), groups.begin(), groups.end());
    need(!rows.empty() && rows[0] == header, "class matrix header");
    std::vector<std::string> classes;
    for (std::size_t i = 1; i < rows.size(); ++i) classes.push_back(rows[i][0]);
    std::vector<std::string> want;
    for (auto c : {lexdb::HnClass::profession, lexdb::HnClass::demonym, lexdb::HnClass::doer,
                   lexdb::HnClass::speciality, lexdb::HnClass::attribute, lexdb::HnClass::relationship,
                   lexdb::HnClass::status, lexdb::HnClass::title, lexdb::HnClass::patient,
                   lexdb::HnClass::recipient, lexdb::HnClass::other})
      want.emplace_back(lexdb::to_string(c));
    want.emplace_back("unannotated");
    std::sort(want.begin(), want.end());
    need(classes == want, "class matrix rows");
  } else {
    need(false, "plot_class_frequencies.csv missing");
  }
  if (files.count("markers.csv")) {
    auto rows = csv_rows(files.at("markers.csv"));
    std::vector<std::string> header{"group"};
    header.insert(header.end(), families.begin(), families.end());
    need(!rows.empty() && rows[0] == header, "markers.csv columns");
  } else {
    need(false, "markers.csv missing");
  }
  return problems;
}

Outcome fixture_replay() {
  auto& runs = mini_runs();
  if (!runs.error.empty()) return fail("pipeline error: " + runs.error);
  auto expected = nlohmann::json::parse(read_file(mgtest::fixtures_dir() / "mini_expected_report.json"));
  auto report = nlohmann::json::parse(read_file(runs.a->path() / "report" / "audit_report.json"));
  auto narrow = nlohmann::json::parse(read_file(runs.a->path() / pipeline::artifacts::kNarrowReport));

  std::size_t fields = 0, matched = 0;
  std::string diffs;
  auto compare = [&](const std::string& where, const nlohmann::json& got, const nlohmann::json& want) {
    ++fields;
    if (got == want)
      ++matched;
    else
      diffs += " " + where + " (" + got.dump() + " vs " + want.dump() + ")";
  };
  for (const auto& [k, v] : expected["clean_instructions"].items()) compare("clean/" + k, narrow["original"][k], v);

  std::vector<std::string> groups;
  for (const auto& g : report["groups"]) groups.push_back(g["group"]);
  nlohmann::json got_groups = nlohmann::json::object();
  for (const auto& g : report["groups"]) got_groups[g["group"].get<std::string>()] = g;
  for (const auto& [name, want] : expected["groups"].items()) {
    if (!got_groups.contains(name)) {
      diffs += " missing group " + name;
      ++fields;
      continue;
    }
    const auto& got = got_groups[name];
    for (const auto& key : {"n_responses", "n_responses_with_hn", "n_responses_with_mg", "hn_total", "mg_total",
                            "bias_rate_all", "bias_rate_with_hn", "overall_m_score", "mean_m_score"})
      compare(name + "/" + key, got[key], want[key]);
    for (const auto& [fam, rate] : want["marker_rates"].items())
      compare(name + "/markers/" + fam, got["markers"][fam]["rate"], rate);
    compare(name + "/class_frequencies", got["class_frequencies"], want["class_frequencies"]);
  }
  bool same_groups = groups.size() == expected["groups"].size();

  auto problems = layout_problems(report_files(runs.a->path()), groups);
  std::string d = std::to_string(matched) + "/" + std::to_string(fields) + " ground-truth values exact over " +
                  std::to_string(groups.size()) + " groups, figure layout " + (problems.empty() ? "ok" : "broken:" + problems);
  if (!diffs.empty()) d += ", diffs:" + diffs;
  return matched == fields && same_groups && problems.empty() ? pass(d) : fail(d);
}

Outcome full_data_run() {
  const char* cfg = std::getenv("MG_AUDIT_FULL_CONFIG");
  if (!cfg || !*cfg)
    return skip("needs the reconstructed golden sets; set MG_AUDIT_FULL_CONFIG to a run configuration");
  try {
    auto t0 = std::chrono::steady_clock::now();
    auto config = pipeline::load_run_config(cfg);
    pipeline::Pipeline p(config, {});
    p.run(pipeline::Stage::build_lexicon);
    p.run(pipeline::Stage::train_hscorer);
    auto report = nlohmann::json::parse(read_file(config.output_dir / pipeline::artifacts::kTrainingReport));
    double lr = 0.0, gbt = 0.0;
    for (const auto& m : report["members"]) {
      if (m["kind"] == "logistic_regression") lr = m["validation_accuracy"];
      if (m["kind"] == "gradient_boosted_trees") gbt = m["validation_accuracy"];
    }
    std::string d = "LR " + fmt(lr) + " (0.914 +/- 0.02), GBT " + fmt(gbt) + " (0.937 +/- 0.02), " +
                    fmt(seconds_since(t0), 1) + " s";
    return std::abs(lr - 0.914) <= 0.02 && std::abs(gbt - 0.937) <= 0.02 ? pass(d) : fail(d);
  } catch (const std::exception& e) {
    return fail(std::string("full-data run failed: ") + e.what());
  }
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::err);
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"m-score-oracle", m_score_oracle},         {"apportionment", apportionment},
      {"marker-detection", marker_detection},     {"hscorer-properties", hscorer_properties},
      {"cohen-kappa", kappa},                     {"filter-suite", filter_suite},
      {"e2e-determinism", e2e_determinism},       {"fixture-replay", fixture_replay},
      {"full-data-accuracy", full_data_run},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = fail(std::string("exception: ") + e.what());
    }
    const char* tag = o.verdict == Verdict::pass ? "PASS" : o.verdict == Verdict::skip ? "SKIP" : "FAIL";
    if (o.verdict == Verdict::fail) ++failures;
    std::cout << tag << ' ' << name << ": " << o.detail << '\n';
  }
  std::cout.flush();
  return failures == 0 ? 0 : 1;
}
