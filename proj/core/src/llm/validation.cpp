#include <spdlog/spdlog.h>

#include "mgaudit/llm.hpp"

namespace mgaudit::llm {

namespace {

constexpr std::string_view kInstructions =
    "Given a text and nouns, for each noun, determine if it is a human noun in context.\n"
    "Some nouns may appear multiple times in the text. In such cases, they are distinguished by ID ('noun_1', "
    "'noun_2'...), following the order in which they appear.\n"
    "Do not assume that all occurrences of the same noun are either human or non-human; instead, assess each "
    "occurrence individually based on its unique context.\n"
    "Only respond in this format, where human_noun is the noun being considered.\n"
    "{\n"
    "  \"human_noun\": 0,\n"
    "  \"human_noun_2\": 1\n"
    "}\n"
    "\n"
    "## Examples\n"
    "Text: Les facteurs d'employabilité des facteurs, chargés de distribuer le courrier, vont évoluer.\n"
    "Nouns: facteurs, facteurs_2\n"
    "Output: { \"facteurs\": 0, \"facteurs_2\": 1 }\n"
    "\n"
    "Text: Le président a annoncé aux citoyens une série de mesures pour renforcer l'économie du pays.\n"
    "Nouns: président, citoyens, mesures\n"
    "Output: { \"président\": 1, \"citoyens\": 1, \"mesures\": 0 }\n"
    "\n"
    "Text: Il croit aux esprits et aux fantômes depuis qu'il est enfant.\n"
    "Nouns: esprits, fantômes, enfant\n"
    "Output: { \"esprits\": 0, \"fantômes\": 0, \"enfant\": 1 }\n"
    "\n";

/// Byte range of the first balanced {...} in `s`, honouring JSON strings.
std::optional<std::string_view> first_object(std::string_view s) {
  for (std::size_t start = s.find('{'); start != std::string_view::npos; start = s.find('{', start + 1)) {
    int depth = 0;
    bool in_string = false, escaped = false;
    for (std::size_t i = start; i < s.size(); ++i) {
      char c = s[i];
      if (in_string) {
        if (escaped)
          escaped = false;
        else if (c == '\\')
          escaped = true;
        else if (c == '"')
          in_string = false;
        continue;
      }
      if (c == '"') {
        in_string = true;
      } else if (c == '{') {
        ++depth;
      } else if (c == '}') {
        if (--depth == 0) {
          auto candidate = s.substr(start, i - start + 1);
          if (nlohmann::json::accept(candidate)) return candidate;
          break;
        }
      }
    }
  }
  return std::nullopt;
}

std::optional<int> binary_value(const nlohmann::json& v) {
  if (v.is_number_integer()) {
    auto i = v.get<long long>();
    if (i == 0 || i == 1) return static_cast<int>(i);
  } else if (v.is_number_float()) {
    double d = v.get<double>();
    if (d == 0.0 || d == 1.0) return static_cast<int>(d);
  } else if (v.is_boolean()) {
    return v.get<bool>() ? 1 : 0;
  } else if (v.is_string()) {
    auto s = v.get<std::string>();
    if (s == "0" || s == "1") return s == "1" ? 1 : 0;
  }
  return std::nullopt;
}

}  // namespace

std::vector<std::string> occurrence_ids(const std::vector<std::string>& nouns) {
  std::map<std::string, std::size_t> seen;
  std::vector<std::string> ids;
  ids.reserve(nouns.size());
  for (const auto& n : nouns) {
    auto k = ++seen[n];
    ids.push_back(k == 1 ? n : n + "_" + std::to_string(k));
  }
  return ids;
}

ValidationPrompt build_validation_prompt(std::string_view text, const std::vector<std::string>& nouns) {
  if (nouns.empty()) throw DataError("validation prompt needs at least one noun");
  ValidationPrompt p;
  p.system_prompt = std::string(kValidationSystemPrompt);
  p.ids = occurrence_ids(nouns);
  std::string joined;
  for (std::size_t i = 0; i < p.ids.size(); ++i) joined += (i ? ", " : "") + p.ids[i];
  p.user_prompt = std::string(kInstructions);
  p.user_prompt += "Text: ";
  p.user_prompt += text;
  p.user_prompt += "\nNouns: " + joined + "\nOutput:";
  return p;
}

ParsedValidation parse_validation_response(std::string_view raw, const std::vector<std::string>& expected_ids) {
  ParsedValidation out;
  auto obj = first_object(raw);
  if (!obj) {
    out.malformed = true;
    out.error = "no JSON object in response";
    return out;
  }
  auto j = nlohmann::json::parse(*obj);
  std::set<std::string> expected(expected_ids.begin(), expected_ids.end());
  for (const auto& [key, value] : j.items()) {
    if (!expected.count(key)) {
      out.extraneous.push_back(key);
      continue;
    }
    if (auto v = binary_value(value))
      out.verdicts[key] = *v;
    else
      out.invalid.push_back(key);
  }
  for (const auto& id : expected_ids)
    if (!j.contains(id)) out.missing.push_back(id);
  if (!out.extraneous.empty())
    spdlog::warn("validation response has {} unexpected key(s), first '{}'", out.extraneous.size(),
                 out.extraneous.front());
  return out;
}

}  // namespace mgaudit::llm
