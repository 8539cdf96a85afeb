#include <doctest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "mgaudit/lexdb.hpp"
#include "support.hpp"

using namespace mgaudit;
using namespace mgaudit::lexdb;
using mgtest::entry;

namespace {

std::filesystem::path write(const mgtest::ScratchDir& dir, const std::string& name, const std::string& body) {
  auto p = dir / name;
  std::ofstream(p, std::ios::binary) << body;
  return p;
}

std::set<EntryKey> keys(const HumanNounDB& db) {
  std::set<EntryKey> k;
  for (const auto& [key, e] : db.entries()) k.insert(key);
  return k;
}

}  // namespace

TEST_CASE("entry invariants") {
  auto e = entry("médecin", Gender::masculine);
  CHECK_NOTHROW(validate(e));
  auto padded = e;
  padded.lemma = " médecin";
  CHECK_THROWS_AS(validate(padded), DataError);
  auto no_source = e;
  no_source.sources.clear();
  CHECK_THROWS_AS(validate(no_source), DataError);
  auto class_without_provenance = e;
  class_without_provenance.hn_class = HnClass::profession;
  CHECK_THROWS_AS(validate(class_without_provenance), DataError);
}

TEST_CASE("demonette rows expand to a masculine and a feminine entry") {
  mgtest::ScratchDir dir("demonette");
  auto p = write(dir, "d.csv", "masc_lemma,fem_lemma\nChanteur,chanteuse\nmédecin,\nbroken\n");
  auto r = ingest_source(SourceAdapter::demonette_csv, p);
  REQUIRE(r.entries.size() == 3);
  CHECK(r.entries[0].lemma == "chanteur");
  CHECK(r.entries[0].gender == Gender::masculine);
  CHECK(r.entries[1].lemma == "chanteuse");
  CHECK(r.entries[1].gender == Gender::feminine);
  CHECK(r.entries[0].sources == std::set<std::string>{"demonette_csv"});
  CHECK(r.report.records == 3);
  REQUIRE(r.report.errors.size() == 1);
  CHECK(r.report.errors[0].line == 4);
}

TEST_CASE("a wrong header is fatal, a missing file too") {
  mgtest::ScratchDir dir("header");
  auto p = write(dir, "d.csv", "lemma,fem\navocat,avocate\n");
  CHECK_THROWS(ingest_source(SourceAdapter::demonette_csv, p));
  CHECK_THROWS_AS(ingest_source(SourceAdapter::demonette_csv, dir / "missing.csv"), IoError);
}

TEST_CASE("nhuma rows carry human-provenance classes") {
  mgtest::ScratchDir dir("nhuma");
  auto p = write(dir, "n.csv", "lemma,gender,hn_class\ncaporal,m,title\ncaporale,f,\nx,q,title\n");
  auto r = ingest_source(SourceAdapter::nhuma_csv, p, {.source_id = "nhuma"});
  REQUIRE(r.entries.size() == 2);
  CHECK(r.entries[0].hn_class == HnClass::title);
  CHECK(r.entries[0].class_provenance == ClassProvenance::human);
  CHECK(r.entries[0].sources == std::set<std::string>{"nhuma"});
  CHECK_FALSE(r.entries[1].hn_class.has_value());
  CHECK(r.entries[1].class_provenance == ClassProvenance::none);
  CHECK(r.report.errors.size() == 1);
}

TEST_CASE("wiktextract keeps a noun only when a human sense is among the first two") {
  mgtest::ScratchDir dir("wikt");
  std::string body =
      R"({"word":"plombier","pos":"noun","tags":["masculine"],"senses":[{"glosses":["Personne qui répare les tuyaux."]}]})"
      "\n"
      R"({"word":"automate","pos":"noun","senses":[{"glosses":["Machine."]},{"glosses":["Personne qui agit mécaniquement."]}]})"
      "\n"
      R"({"word":"rouage","pos":"noun","senses":[{"glosses":["Pièce."]},{"glosses":["Élément."]},{"glosses":["Personne qui sert d'intermédiaire."]}]})"
      "\n"
      R"({"word":"rapide","pos":"adj","senses":[{"glosses":["Qui va vite."]}]})"
      "\n"
      "{not json\n";
  auto p = write(dir, "w.jsonl", body);
  auto r = ingest_source(SourceAdapter::wiktextract_jsonl, p);
  std::set<std::string> lemmas;
  for (const auto& e : r.entries) lemmas.insert(e.lemma);
  CHECK(lemmas == std::set<std::string>{"plombier", "automate"});
  CHECK(r.report.errors.size() == 1);
}

TEST_CASE("ingestion emits at most two entries per record and never an empty lemma") {
  std::mt19937_64 rng(7);
  const std::vector<std::string> words{"a", "b", "ç", "Dé", "", " ", "e f"};
  for (int round = 0; round < 50; ++round) {
    mgtest::ScratchDir dir("bound");
    std::string body = "masc_lemma,fem_lemma\n";
    int n = 1 + static_cast<int>(rng() % 20);
    for (int i = 0; i < n; ++i) body += words[rng() % words.size()] + "," + words[rng() % words.size()] + "\n";
    auto r = ingest_source(SourceAdapter::demonette_csv, write(dir, "d.csv", body));
    CHECK(r.entries.size() <= 2 * r.report.records);
    for (const auto& e : r.entries) {
      CHECK_FALSE(e.lemma.empty());
      CHECK(e.lemma == mgaudit::text::trim(e.lemma));
    }
  }
}

TEST_CASE("recursive definition search") {
  DictionarySnapshot snap;
  snap.entries = {{"artisan", {"Personne qui exerce un métier manuel."}, {}},
                  {"forgeron", {"Artisan qui travaille le fer."}, {}},
                  {"plombier", {"une personne qui répare"}, {}},
                  {"marteau", {"Outil."}, {}}};
  SUBCASE("direct prefix match") {
    DictionarySnapshot one;
    one.entries = {{"plombier", {"personne qui répare"}, {}}};
    CHECK(recursive_definition_search(one, {"personne"}, 1) == std::set<std::string>{"plombier"});
  }
  SUBCASE("two levels") {
    CHECK(recursive_definition_search(snap, {"personne"}, 2) ==
          std::set<std::string>{"artisan", "forgeron", "plombier"});
  }
  SUBCASE("depth bound") {
    CHECK(recursive_definition_search(snap, {"personne"}, 1) == std::set<std::string>{"artisan", "plombier"});
  }
  SUBCASE("depth zero") { CHECK(recursive_definition_search(snap, {"personne"}, 0).empty()); }
  SUBCASE("seeds never returned") {
    DictionarySnapshot self;
    self.entries = {{"personne", {"Personne humaine."}, {}}};
    CHECK(recursive_definition_search(self, {"personne"}, 3).empty());
  }
}

TEST_CASE("deeper search returns a superset") {
  std::mt19937_64 rng(11);
  const std::vector<std::string> lemmas{"a1", "a2", "a3", "a4", "a5", "a6", "a7", "a8"};
  for (int round = 0; round < 100; ++round) {
    DictionarySnapshot snap;
    for (const auto& l : lemmas) {
      std::vector<std::string> defs;
      for (int d = 0; d < 2; ++d) {
        auto r = rng() % 10;
        std::string head = r < 2 ? "personne" : r < 8 ? lemmas[rng() % lemmas.size()] : "objet";
        defs.push_back((rng() % 2 ? "un " : "") + head + " qui fait");
      }
      snap.entries.push_back({l, defs, {}});
    }
    std::set<std::string> prev;
    for (std::size_t k = 0; k < 6; ++k) {
      auto cur = recursive_definition_search(snap, {"personne"}, k);
      CHECK(std::includes(cur.begin(), cur.end(), prev.begin(), prev.end()));
      prev = std::move(cur);
    }
  }
}

TEST_CASE("determiners are stripped before prefix comparison") {
  CHECK(definition_starts_with("Une personne qui chante", "personne"));
  CHECK(definition_starts_with("L'individu qui", "individu"));
  CHECK(definition_starts_with("quelqu'un qui", "quelqu'un"));
  CHECK_FALSE(definition_starts_with("Ensemble de personnes", "personne"));
}

TEST_CASE("merge deduplicates and unions sources") {
  auto a = entry("médecin", Gender::masculine, false, "s1");
  auto b = entry("médecin", Gender::masculine, false, "s2");
  auto r = merge_lexicons({{a}, {b}});
  REQUIRE(r.db.size() == 1);
  CHECK(r.db.find("médecin", Gender::masculine)->sources == std::set<std::string>{"s1", "s2"});
}

TEST_CASE("merge computes epicene structurally") {
  auto r = merge_lexicons({{entry("artiste", Gender::masculine), entry("artiste", Gender::feminine),
                            entry("avocat", Gender::masculine), entry("avocate", Gender::feminine)}});
  CHECK(r.db.find("artiste", Gender::masculine)->epicene);
  CHECK(r.db.find("artiste", Gender::feminine)->epicene);
  CHECK_FALSE(r.db.find("avocat", Gender::masculine)->epicene);
}

TEST_CASE("class conflicts: human beats model, priority list settles human ties") {
  auto h1 = entry("chef", Gender::masculine, false, "a");
  h1.hn_class = HnClass::title;
  h1.class_provenance = ClassProvenance::human;
  auto h2 = entry("chef", Gender::masculine, false, "b");
  h2.hn_class = HnClass::profession;
  h2.class_provenance = ClassProvenance::human;
  auto m = entry("chef", Gender::masculine, false, "c");
  m.hn_class = HnClass::doer;
  m.class_provenance = ClassProvenance::model;

  auto r = merge_lexicons({{m}, {h2}, {h1}}, {"a", "b"});
  const auto* e = r.db.find("chef", Gender::masculine);
  CHECK(e->hn_class == HnClass::title);
  CHECK(e->class_provenance == ClassProvenance::human);
  REQUIRE(r.conflicts.size() == 1);
  CHECK(r.conflicts[0].kept_source == "a");
  CHECK(r.conflicts[0].dropped == HnClass::profession);

  auto unlisted = merge_lexicons({{h2}, {h1}});
  CHECK(unlisted.db.find("chef", Gender::masculine)->hn_class == HnClass::profession);
}

TEST_CASE("merge is idempotent and its key set is permutation invariant") {
  std::mt19937_64 rng(3);
  const std::vector<std::string> lemmas{"a", "b", "c", "d", "e", "f"};
  for (int round = 0; round < 100; ++round) {
    std::vector<std::vector<LexicalEntry>> parts(1 + rng() % 4);
    for (auto& p : parts) {
      int n = static_cast<int>(rng() % 6);
      for (int i = 0; i < n; ++i) {
        auto e = entry(lemmas[rng() % lemmas.size()], rng() % 2 ? Gender::masculine : Gender::feminine, false,
                       "s" + std::to_string(rng() % 3));
        if (rng() % 3 == 0) {
          e.hn_class = static_cast<HnClass>(rng() % 11);
          e.class_provenance = rng() % 2 ? ClassProvenance::human : ClassProvenance::model;
        }
        p.push_back(e);
      }
    }
    auto once = merge_lexicons(parts).db;
    std::vector<LexicalEntry> flat;
    for (const auto& [k, e] : once.entries()) flat.push_back(e);
    CHECK(merge_lexicons({flat, flat}).db == once);
    CHECK(merge_lexicons({flat}).db == once);

    auto shuffled = parts;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    for (auto& p : shuffled) std::shuffle(p.begin(), p.end(), rng);
    CHECK(keys(merge_lexicons(shuffled).db) == keys(once));
  }
}

TEST_CASE("MG subset holds exactly the masculine non-epicene entries") {
  auto db = mgtest::db_of({entry("avocat", Gender::masculine), entry("avocate", Gender::feminine),
                           entry("artiste", Gender::masculine), entry("artiste", Gender::feminine)});
  auto mg = extract_mg_subset(db);
  REQUIRE(mg.size() == 1);
  CHECK(mg.contains("avocat"));

  CHECK(extract_mg_subset(mgtest::db_of({entry("avocate", Gender::feminine)})).empty());
  CHECK(extract_mg_subset(HumanNounDB{}).empty());
}

TEST_CASE("MG subset property on random databases") {
  std::mt19937_64 rng(5);
  for (int round = 0; round < 200; ++round) {
    std::vector<LexicalEntry> es;
    int n = static_cast<int>(rng() % 12);
    for (int i = 0; i < n; ++i)
      es.push_back(entry("w" + std::to_string(rng() % 6), rng() % 2 ? Gender::masculine : Gender::feminine));
    auto db = mgtest::db_of(es);
    auto mg = extract_mg_subset(db);
    std::size_t expected = 0;
    for (const auto& [k, e] : db.entries())
      if (e.gender == Gender::masculine && !e.epicene) ++expected;
    CHECK(mg.size() == expected);
    for (const auto& [lemma, e] : mg.entries()) {
      CHECK(e.gender == Gender::masculine);
      CHECK_FALSE(e.epicene);
      const auto* src = db.find(lemma, Gender::masculine);
      REQUIRE(src != nullptr);
      CHECK(*src == e);
    }
  }
}

TEST_CASE("annotate_classes") {
  auto db = mgtest::db_of({entry("caporal", Gender::masculine), entry("boulanger", Gender::masculine),
                           entry("voisin", Gender::masculine)});
  auto mapping = default_class_mapping();
  auto out = annotate_classes(db, {{"boulanger", HnClass::profession}},
                              {{"caporal", "NH-Grade"}, {"boulanger", "NH-Spé"}}, mapping);
  CHECK(out.find("caporal", Gender::masculine)->hn_class == HnClass::title);
  CHECK(out.find("caporal", Gender::masculine)->class_provenance == ClassProvenance::model);
  CHECK(out.find("boulanger", Gender::masculine)->hn_class == HnClass::profession);
  CHECK(out.find("boulanger", Gender::masculine)->class_provenance == ClassProvenance::human);
  CHECK(out.find("voisin", Gender::masculine)->class_provenance == ClassProvenance::none);

  CHECK_THROWS_AS(annotate_classes(db, {}, {{"caporal", "NH-Unknown"}}, mapping), ConfigError);
}

TEST_CASE("class mapping covers the tagger labels") {
  auto m = default_class_mapping();
  CHECK(m.at("NH-Mét") == HnClass::profession);
  CHECK(m.at("NH-Fonc") == HnClass::profession);
  CHECK(m.at("NH-Spé") == HnClass::speciality);
  CHECK(m.at("NH-Titre") == HnClass::title);
  CHECK(m.at("NH-Grade") == HnClass::title);
  CHECK(m.at("profession") == HnClass::profession);
}

TEST_CASE("lexicon JSONL round trip") {
  auto e = entry("chef", Gender::masculine, false, "b");
  e.sources.insert("a");
  e.hn_class = HnClass::title;
  e.class_provenance = ClassProvenance::model;
  auto line = entry_to_json_line(e);
  CHECK(line ==
        R"({"lemma":"chef","gender":"masculine","epicene":false,"sources":["a","b"],"hn_class":"title","class_provenance":"model"})");
  CHECK(entry_from_json_line(line) == e);

  auto db = mgtest::db_of({e, entry("cheffe", Gender::feminine)});
  mgtest::ScratchDir dir("jsonl");
  std::ofstream(dir / "db.jsonl") << lexicon_jsonl(db);
  CHECK(read_lexicon_jsonl(dir / "db.jsonl") == db);
}

TEST_CASE("ingesting the same file twice gives the same database") {
  auto a = ingest_source(SourceAdapter::demonette_csv, mgtest::mini_dir() / "demonette.csv");
  auto b = ingest_source(SourceAdapter::demonette_csv, mgtest::mini_dir() / "demonette.csv");
  CHECK(merge_lexicons({a.entries}).db == merge_lexicons({b.entries}).db);
  CHECK(merge_lexicons({a.entries, b.entries}).db == merge_lexicons({a.entries}).db);
}
