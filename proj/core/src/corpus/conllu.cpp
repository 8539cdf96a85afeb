#include <charconv>
#include <ostream>
#include <sstream>

#include "mgaudit/common.hpp"
#include "mgaudit/corpus.hpp"

namespace mgaudit::corpus {

namespace {

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    auto next = s.find(sep, pos);
    out.push_back(s.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

bool parse_int(std::string_view s, int& out) {
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size();
}

std::optional<std::string_view> comment_value(std::string_view line, std::string_view key) {
  // "# key = value"
  auto rest = line.substr(1);
  while (!rest.empty() && rest.front() == ' ') rest.remove_prefix(1);
  if (rest.substr(0, key.size()) != key) return std::nullopt;
  rest.remove_prefix(key.size());
  while (!rest.empty() && rest.front() == ' ') rest.remove_prefix(1);
  if (rest.empty() || rest.front() != '=') return std::nullopt;
  rest.remove_prefix(1);
  while (!rest.empty() && rest.front() == ' ') rest.remove_prefix(1);
  while (!rest.empty() && rest.back() == ' ') rest.remove_suffix(1);
  return rest;
}

std::string join_misc(const AnnotatedToken& t) {
  std::vector<std::string> parts;
  if (t.ner) parts.push_back("NER=" + std::string(*t.ner == NerLabel::none ? "O" : to_string(*t.ner)));
  if (!t.space_after) parts.emplace_back("SpaceAfter=No");
  parts.insert(parts.end(), t.misc.begin(), t.misc.end());
  if (parts.empty()) return "_";
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? "|" : "") + parts[i];
  return out;
}

class Parser {
 public:
  explicit Parser(std::string origin) : origin_(std::move(origin)) {}

  void line(std::size_t n, std::string_view l) {
    line_no_ = n;
    if (l.empty() || l.find_first_not_of(" \t") == std::string_view::npos) {
      end_sentence();
      return;
    }
    if (l.front() == '#') {
      if (auto id = comment_value(l, "newdoc id")) {
        end_sentence();
        docs_.emplace_back();
        docs_.back().doc_id = std::string(*id);
      } else if (auto tag = comment_value(l, "dataset")) {
        current_doc().dataset_tag = std::string(*tag);
      } else if (auto sid = comment_value(l, "sent_id")) {
        sent_.sent_id = std::string(*sid);
      }
      return;
    }
    token_line(l);
  }

  std::vector<AnnotatedDocument> finish() {
    end_sentence();
    for (auto& d : docs_) d.rebuild_text();
    return std::move(docs_);
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw DataError(origin_ + ":" + std::to_string(line_no_) + ": " + msg);
  }

  AnnotatedDocument& current_doc() {
    if (docs_.empty()) fail("content before the first '# newdoc id = ...' line");
    return docs_.back();
  }

  void token_line(std::string_view l) {
    auto cols = split(l, '\t');
    if (cols.size() != 10) fail("expected 10 tab-separated columns, got " + std::to_string(cols.size()));
    current_doc();
    auto id = cols[0];
    if (id.find('.') != std::string_view::npos) return;  // empty node
    if (auto dash = id.find('-'); dash != std::string_view::npos) {
      MultiwordToken m;
      if (!parse_int(id.substr(0, dash), m.first) || !parse_int(id.substr(dash + 1), m.last) || m.last < m.first)
        fail("bad range id '" + std::string(id) + "'");
      m.form = std::string(cols[1]);
      for (auto item : split(cols[9], '|'))
        if (item == "SpaceAfter=No") m.space_after = false;
      sent_.multiword.push_back(std::move(m));
      return;
    }
    int n = 0;
    if (!parse_int(id, n)) fail("bad token id '" + std::string(id) + "'");
    if (n != static_cast<int>(sent_.tokens.size()) + 1)
      fail("token id " + std::to_string(n) + " out of sequence");

    AnnotatedToken t;
    t.form = std::string(cols[1]);
    t.lemma = std::string(cols[2]);
    t.upos = std::string(cols[3]);
    t.xpos = std::string(cols[4]);
    if (cols[5] != "_") {
      for (auto f : split(cols[5], '|')) {
        auto eq = f.find('=');
        if (eq == std::string_view::npos || eq == 0) fail("bad feature '" + std::string(f) + "'");
        t.feats[std::string(f.substr(0, eq))] = std::string(f.substr(eq + 1));
      }
    }
    if (!parse_int(cols[6], t.head) || t.head < 0) fail("bad head '" + std::string(cols[6]) + "'");
    t.deprel = std::string(cols[7]);
    if (cols[9] != "_") {
      for (auto item : split(cols[9], '|')) {
        if (item.substr(0, 4) == "NER=") {
          auto label = parse_ner_label(item.substr(4));
          if (!label) fail("unknown NER label '" + std::string(item.substr(4)) + "'");
          t.ner = *label;
          current_doc().has_ner = true;
        } else if (item == "SpaceAfter=No") {
          t.space_after = false;
        } else if (!item.empty()) {
          t.misc.emplace_back(item);
        }
      }
    }
    sent_.tokens.push_back(std::move(t));
  }

  void end_sentence() {
    if (sent_.tokens.empty()) {
      sent_ = Sentence{};
      return;
    }
    const int n = static_cast<int>(sent_.tokens.size());
    for (const auto& t : sent_.tokens)
      if (t.head > n) fail("head " + std::to_string(t.head) + " outside a sentence of " + std::to_string(n) + " tokens");
    for (const auto& m : sent_.multiword)
      if (m.last > n) fail("range " + std::to_string(m.first) + "-" + std::to_string(m.last) + " outside the sentence");
    current_doc().sentences.push_back(std::move(sent_));
    sent_ = Sentence{};
  }

  std::string origin_;
  std::size_t line_no_ = 0;
  std::vector<AnnotatedDocument> docs_;
  Sentence sent_;
};

}  // namespace

std::string_view to_string(NerLabel l) {
  switch (l) {
    case NerLabel::none: return "O";
    case NerLabel::per: return "PER";
    case NerLabel::misc: return "MISC";
    case NerLabel::org: return "ORG";
    case NerLabel::loc: return "LOC";
  }
  return "O";
}

std::optional<NerLabel> parse_ner_label(std::string_view s) {
  if (s == "O" || s == "_") return NerLabel::none;
  if (s.size() > 2 && (s.substr(0, 2) == "B-" || s.substr(0, 2) == "I-")) s.remove_prefix(2);
  if (s == "PER") return NerLabel::per;
  if (s == "MISC") return NerLabel::misc;
  if (s == "ORG") return NerLabel::org;
  if (s == "LOC") return NerLabel::loc;
  return std::nullopt;
}

std::string_view AnnotatedToken::feat(std::string_view key) const {
  auto it = feats.find(std::string(key));
  return it == feats.end() ? std::string_view() : std::string_view(it->second);
}

void AnnotatedDocument::rebuild_text() {
  text.clear();
  for (auto& s : sentences) {
    if (!text.empty()) text += ' ';
    std::size_t i = 0;
    while (i < s.tokens.size()) {
      const MultiwordToken* range = nullptr;
      for (const auto& m : s.multiword)
        if (m.first == static_cast<int>(i) + 1) range = &m;
      if (range) {
        std::size_t b = text.size();
        text += range->form;
        for (int k = range->first; k <= range->last; ++k) {
          s.tokens[static_cast<std::size_t>(k - 1)].begin = b;
          s.tokens[static_cast<std::size_t>(k - 1)].end = text.size();
        }
        i = static_cast<std::size_t>(range->last);
        if (range->space_after && i < s.tokens.size()) text += ' ';
        continue;
      }
      auto& t = s.tokens[i];
      t.begin = text.size();
      text += t.form;
      t.end = text.size();
      ++i;
      if (t.space_after && i < s.tokens.size()) text += ' ';
    }
  }
}

std::size_t AnnotatedDocument::token_count() const {
  std::size_t n = 0;
  for (const auto& s : sentences) n += s.tokens.size();
  return n;
}

std::vector<AnnotatedDocument> parse_conllu(std::string_view contents, const std::string& origin) {
  Parser p(origin);
  std::size_t n = 0, pos = 0;
  if (contents.substr(0, 3) == "\xEF\xBB\xBF") pos = 3;
  while (pos <= contents.size()) {
    auto next = contents.find('\n', pos);
    auto line = contents.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    p.line(++n, line);
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return p.finish();
}

std::vector<AnnotatedDocument> read_conllu(const std::filesystem::path& path) {
  return parse_conllu(read_file(path), path.string());
}

void write_conllu(std::ostream& out, const std::vector<AnnotatedDocument>& docs) {
  for (const auto& d : docs) {
    out << "# newdoc id = " << d.doc_id << '\n';
    if (!d.dataset_tag.empty()) out << "# dataset = " << d.dataset_tag << '\n';
    for (const auto& s : d.sentences) {
      if (!s.sent_id.empty()) out << "# sent_id = " << s.sent_id << '\n';
      if (!s.tokens.empty())
        out << "# text = " << std::string_view(d.text).substr(s.tokens.front().begin, s.tokens.back().end - s.tokens.front().begin)
            << '\n';
      for (std::size_t i = 0; i < s.tokens.size(); ++i) {
        for (const auto& m : s.multiword) {
          if (m.first == static_cast<int>(i) + 1)
            out << m.first << '-' << m.last << '\t' << m.form << "\t_\t_\t_\t_\t_\t_\t_\t"
                << (m.space_after ? "_" : "SpaceAfter=No") << '\n';
        }
        const auto& t = s.tokens[i];
        std::string feats;
        for (const auto& [k, v] : t.feats) feats += (feats.empty() ? "" : "|") + k + "=" + v;
        out << (i + 1) << '\t' << t.form << '\t' << t.lemma << '\t' << t.upos << '\t' << t.xpos << '\t'
            << (feats.empty() ? "_" : feats) << '\t' << t.head << '\t' << t.deprel << "\t_\t" << join_misc(t) << '\n';
      }
      out << '\n';
    }
  }
}

std::string conllu_string(const std::vector<AnnotatedDocument>& docs) {
  std::ostringstream os;
  write_conllu(os, docs);
  return os.str();
}

}  // namespace mgaudit::corpus
