#include <doctest.h>

#include <fstream>

#include "mgaudit/common.hpp"
#include "mgaudit/text.hpp"
#include "support.hpp"

using namespace mgaudit;

TEST_CASE("sha256 of known vectors") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("atomic write replaces contents and leaves no temporaries") {
  mgtest::ScratchDir dir("common");
  auto p = dir / "sub/out.txt";
  std::filesystem::create_directories(p.parent_path());
  write_file_atomic(p, "first");
  write_file_atomic(p, "second");
  CHECK(read_file(p) == "second");
  CHECK(sha256_file(p) == sha256_hex("second"));
  std::size_t files = 0;
  for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(p.parent_path())) ++files;
  CHECK(files == 1);
}

TEST_CASE("read_file on a missing path is an IoError") {
  CHECK_THROWS_AS(read_file("/nonexistent/definitely/missing"), IoError);
}

TEST_CASE("line lists skip comments, blanks, BOM and CR") {
  mgtest::ScratchDir dir("lines");
  {
    std::ofstream out(dir / "l.txt", std::ios::binary);
    out << "\xEF\xBB\xBF" << "alpha\r\n# comment\n\n  beta  \n";
  }
  auto l = read_line_list(dir / "l.txt");
  REQUIRE(l.size() == 2);
  CHECK(l[0] == "alpha");
  CHECK(l[1] == "beta");
}

TEST_CASE("normalize_lemma: trim, NFC, lowercase, apostrophe folding") {
  CHECK(text::normalize_lemma("  Médecin ") == "médecin");
  // decomposed e + combining acute
  CHECK(text::normalize_lemma("Me\xCC\x81" "decin") == "médecin");
  CHECK(text::normalize_lemma("QUELQU\xE2\x80\x99UN") == "quelqu'un");
  CHECK(text::normalize_lemma("ÉTUDIANT") == "étudiant");
}

TEST_CASE("word tokens split on apostrophes and punctuation") {
  auto w = text::word_strings("Quelqu'un, l'auteur·ice (2024)!");
  std::vector<std::string> want{"quelqu", "un", "l", "auteur", "ice", "2024"};
  CHECK(w == want);
  auto toks = text::word_tokens("Été chaud");
  REQUIRE(toks.size() == 2);
  CHECK(toks[0].lower == "été");
  CHECK(toks[0].begin == 0);
  CHECK(toks[0].end == 5);  // É and é are two bytes each
}

TEST_CASE("malformed UTF-8 decodes to replacement characters") {
  auto cps = text::decode_utf8("a\xFF" "b");
  REQUIRE(cps.size() == 3);
  CHECK(cps[1].value == 0xFFFD);
  CHECK(cps[1].end - cps[1].begin == 1);
}
