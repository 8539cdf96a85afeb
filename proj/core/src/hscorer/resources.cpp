#include "mgaudit/hscorer/resources.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <functional>

#include <json.hpp>

#include "mgaudit/common.hpp"
#include "mgaudit/text.hpp"

namespace mgaudit::hscorer {

namespace {

std::set<std::string> normalized_set(const nlohmann::json& arr, const std::string& what) {
  if (!arr.is_array()) throw ConfigError(what + " must be an array of strings");
  std::set<std::string> out;
  for (const auto& v : arr) {
    if (!v.is_string()) throw ConfigError(what + " must be an array of strings");
    out.insert(text::normalize_lemma(v.get<std::string>()));
  }
  return out;
}

void check_disjoint(const std::set<std::string>& a, const std::set<std::string>& b, const std::string& what) {
  for (const auto& x : a)
    if (b.count(x)) throw ConfigError(what + ": '" + x + "' is both human and non-human");
}

std::pair<std::set<std::string>, std::set<std::string>> load_pair(const std::filesystem::path& path,
                                                                  const std::string& what) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(what + " " + path.string() + ": " + e.what());
  }
  if (!j.is_object() || !j.contains("human") || !j.contains("nonhuman"))
    throw ConfigError(what + " " + path.string() + " needs 'human' and 'nonhuman' arrays");
  return {normalized_set(j["human"], what), normalized_set(j["nonhuman"], what)};
}

}  // namespace

WordNetSnapshot::WordNetSnapshot(std::vector<Synset> synsets, std::set<std::string> human_anchors,
                                 std::set<std::string> nonhuman_anchors)
    : synsets_(std::move(synsets)), human_(std::move(human_anchors)), nonhuman_(std::move(nonhuman_anchors)) {
  index();
}

void WordNetSnapshot::index() {
  by_id_.clear();
  by_lemma_.clear();
  for (std::size_t i = 0; i < synsets_.size(); ++i) {
    if (!by_id_.emplace(synsets_[i].id, i).second)
      throw DataError("duplicate synset id '" + synsets_[i].id + "'");
    for (const auto& l : synsets_[i].lemmas) {
      auto& v = by_lemma_[text::normalize_lemma(l)];
      if (std::find(v.begin(), v.end(), i) == v.end()) v.push_back(i);
    }
  }
  for (const auto& s : synsets_) {
    for (const auto& h : s.hypernyms)
      if (!by_id_.count(h)) throw DataError("synset '" + s.id + "' references unknown hypernym '" + h + "'");
  }
  for (const auto& a : human_)
    if (!by_id_.count(a)) throw ConfigError("unknown human anchor synset '" + a + "'");
  for (const auto& a : nonhuman_)
    if (!by_id_.count(a)) throw ConfigError("unknown non-human anchor synset '" + a + "'");
  check_disjoint(human_, nonhuman_, "anchor synsets");

  // Cycle check: iterative three-colour DFS.
  std::vector<int> colour(synsets_.size(), 0);
  for (std::size_t root = 0; root < synsets_.size(); ++root) {
    if (colour[root] != 0) continue;
    std::vector<std::pair<std::size_t, std::size_t>> stack{{root, 0}};
    colour[root] = 1;
    while (!stack.empty()) {
      auto& [node, next] = stack.back();
      const auto& hyps = synsets_[node].hypernyms;
      if (next < hyps.size()) {
        std::size_t child = by_id_.at(hyps[next++]);
        if (colour[child] == 1) throw DataError("hypernym cycle through '" + synsets_[child].id + "'");
        if (colour[child] == 0) {
          colour[child] = 1;
          stack.push_back({child, 0});
        }
      } else {
        colour[node] = 2;
        stack.pop_back();
      }
    }
  }
}

WordNetSnapshot WordNetSnapshot::load(const std::filesystem::path& path, std::set<std::string> human_anchors,
                                      std::set<std::string> nonhuman_anchors) {
  std::vector<Synset> synsets;
  for_each_line(path, [&](std::size_t n, std::string_view line) {
    if (text::trim(line).empty()) return;
    try {
      auto j = nlohmann::json::parse(line);
      Synset s;
      s.id = j.at("id").get<std::string>();
      s.lemmas = j.at("lemmas").get<std::vector<std::string>>();
      s.definition = j.value("definition", std::string());
      s.hypernyms = j.value("hypernyms", std::vector<std::string>{});
      synsets.push_back(std::move(s));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  });
  return WordNetSnapshot(std::move(synsets), std::move(human_anchors), std::move(nonhuman_anchors));
}

const Synset* WordNetSnapshot::find(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  return it == by_id_.end() ? nullptr : &synsets_[it->second];
}

std::vector<const Synset*> WordNetSnapshot::synsets_for(std::string_view lemma) const {
  std::vector<const Synset*> out;
  auto it = by_lemma_.find(text::normalize_lemma(lemma));
  if (it == by_lemma_.end()) return out;
  for (auto i : it->second) out.push_back(&synsets_[i]);
  return out;
}

std::vector<std::vector<std::string>> WordNetSnapshot::hypernym_paths(std::string_view id) const {
  const Synset* s = find(id);
  if (!s) return {};
  if (s->hypernyms.empty()) return {{s->id}};
  std::vector<std::vector<std::string>> out;
  for (const auto& h : s->hypernyms) {
    for (auto& p : hypernym_paths(h)) {
      p.push_back(s->id);
      out.push_back(std::move(p));
    }
  }
  return out;
}

void IndicatorLexicon::validate() const { check_disjoint(human, nonhuman, "indicator lexicon"); }

IndicatorLexicon IndicatorLexicon::load(const std::filesystem::path& path) {
  auto [h, n] = load_pair(path, "indicator lexicon");
  IndicatorLexicon lex{std::move(h), std::move(n)};
  lex.validate();
  return lex;
}

void PrototypeLexicon::validate() const { check_disjoint(human, nonhuman, "prototype lexicon"); }

PrototypeLexicon PrototypeLexicon::load(const std::filesystem::path& path) {
  auto [h, n] = load_pair(path, "prototype lexicon");
  PrototypeLexicon lex{std::move(h), std::move(n)};
  lex.validate();
  return lex;
}

EmbeddingTable::EmbeddingTable(std::size_t dimension) : dimension_(dimension) {
  if (dimension == 0) throw ConfigError("embedding dimension must be positive");
}

void EmbeddingTable::add(std::string token, std::span<const float> vector) {
  if (vector.size() != dimension_)
    throw DataError("embedding for '" + token + "' has " + std::to_string(vector.size()) + " components, expected " +
                    std::to_string(dimension_));
  auto [it, inserted] = index_.emplace(std::move(token), data_.size() / dimension_);
  if (!inserted) {
    std::copy(vector.begin(), vector.end(), data_.begin() + static_cast<std::ptrdiff_t>(it->second * dimension_));
    return;
  }
  data_.insert(data_.end(), vector.begin(), vector.end());
}

std::optional<std::span<const float>> EmbeddingTable::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) it = index_.find(text::normalize_lemma(token));
  if (it == index_.end()) return std::nullopt;
  return std::span<const float>(data_.data() + it->second * dimension_, dimension_);
}

EmbeddingTable EmbeddingTable::load(const std::filesystem::path& path) {
  std::optional<EmbeddingTable> table;
  std::vector<float> buf;
  for_each_line(path, [&](std::size_t n, std::string_view line) {
    auto where = [&] { return path.string() + ":" + std::to_string(n); };
    std::vector<std::string_view> parts;
    std::size_t pos = 0;
    while (pos < line.size()) {
      while (pos < line.size() && line[pos] == ' ') ++pos;
      if (pos >= line.size()) break;
      auto end = line.find(' ', pos);
      if (end == std::string_view::npos) end = line.size();
      parts.push_back(line.substr(pos, end - pos));
      pos = end;
    }
    if (n == 1) {
      std::size_t vocab = 0, dim = 0;
      if (parts.size() != 2 ||
          std::from_chars(parts[0].data(), parts[0].data() + parts[0].size(), vocab).ec != std::errc() ||
          std::from_chars(parts[1].data(), parts[1].data() + parts[1].size(), dim).ec != std::errc() || dim == 0)
        throw DataError(where() + ": expected header 'vocab_size dimension'");
      table.emplace(dim);
      return;
    }
    if (parts.empty()) return;
    if (parts.size() != table->dimension() + 1)
      throw DataError(where() + ": expected " + std::to_string(table->dimension()) + " components");
    buf.resize(table->dimension());
    for (std::size_t i = 0; i < buf.size(); ++i) {
      // from_chars for float is not available on every supported toolchain
      std::string s(parts[i + 1]);
      char* end = nullptr;
      buf[i] = std::strtof(s.c_str(), &end);
      if (end != s.c_str() + s.size()) throw DataError(where() + ": bad number '" + s + "'");
    }
    table->add(std::string(parts[0]), buf);
  });
  if (!table) throw DataError(path.string() + ": empty embedding file");
  return std::move(*table);
}

void SuffixSet::validate() const {
  for (const auto& s : suffixes)
    if (s.empty()) throw ConfigError("suffix set contains an empty suffix");
}

SuffixSet SuffixSet::load(const std::filesystem::path& path) {
  SuffixSet set;
  for (auto& s : read_line_list(path)) set.suffixes.push_back(text::normalize_lemma(s));
  set.validate();
  return set;
}

void ScoringResources::validate() const {
  indicators.validate();
  prototypes.validate();
  suffixes.validate();
  for (const auto* group : {&prototypes.human, &prototypes.nonhuman}) {
    for (const auto& p : *group)
      if (!embeddings.find(p)) throw ConfigError("prototype '" + p + "' has no embedding vector");
  }
}

}  // namespace mgaudit::hscorer
