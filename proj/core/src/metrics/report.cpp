#include "mgaudit/common.hpp"
#include "mgaudit/metrics.hpp"

namespace mgaudit::metrics {

namespace {

nlohmann::ordered_json optional_number(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

/// Shortest round-trip decimal, empty for undefined values.
std::string cell(const std::optional<double>& v) { return v ? nlohmann::json(*v).dump() : std::string(); }

std::string cell(std::size_t v) { return std::to_string(v); }

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

class Csv {
 public:
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ += (i ? "," : "") + quote(cells[i]);
    out_ += '\n';
  }
  std::string str() const { return out_; }

 private:
  std::string out_;
};

std::vector<std::string> all_classes(const AuditReport& r) {
  std::set<std::string> names;
  for (auto c : {lexdb::HnClass::profession, lexdb::HnClass::demonym, lexdb::HnClass::doer, lexdb::HnClass::speciality,
                 lexdb::HnClass::attribute, lexdb::HnClass::relationship, lexdb::HnClass::status, lexdb::HnClass::title,
                 lexdb::HnClass::patient, lexdb::HnClass::recipient, lexdb::HnClass::other})
    names.insert(std::string(lexdb::to_string(c)));
  names.insert("unannotated");
  for (const auto& g : r.groups)
    for (const auto& [k, v] : g.class_frequencies) names.insert(k);
  return {names.begin(), names.end()};
}

nlohmann::ordered_json marker_rate(const GroupReport& g, MarkerFamily f) {
  auto it = g.marker_rates.find(f);
  if (it == g.marker_rates.end() || !it->second) return nullptr;
  return *it->second;
}

std::size_t class_count(const GroupReport& g, const std::string& c) {
  auto it = g.class_frequencies.find(c);
  return it == g.class_frequencies.end() ? 0 : it->second;
}

}  // namespace

AuditReport build_report(const std::vector<TextAnalysis>& analyses, const lexdb::HumanNounDB& db,
                         std::string tool_version) {
  std::map<std::string, std::vector<TextAnalysis>> by_group;
  for (const auto& a : analyses) by_group[a.group].push_back(a);
  AuditReport r;
  r.tool_version = std::move(tool_version);
  for (const auto& [group, list] : by_group) {
    GroupReport g;
    g.group = group;
    g.n_responses = list.size();
    for (const auto& a : list) {
      if (a.hn_count > 0) ++g.n_responses_with_hn;
      if (a.mg_count > 0) ++g.n_responses_with_mg;
      g.hn_total += a.hn_count;
      g.mg_total += a.mg_count;
      for (const auto& o : a.occurrences)
        if (o.validated == Validation::unvalidated) ++g.unvalidated_occurrences;
      for (auto f : kMarkerFamilies) {
        auto it = a.markers.find(f);
        if (it != a.markers.end() && !it->second.empty()) ++g.marker_responses[f];
      }
    }
    for (auto f : kMarkerFamilies) g.marker_responses[f];
    g.rates = bias_rates(list);
    g.m_scores = aggregate_m_scores(list);
    g.marker_rates = marker_rates(list);
    g.class_frequencies = class_frequencies(list, db);
    r.groups.push_back(std::move(g));
  }
  return r;
}

nlohmann::ordered_json to_json(const AuditReport& r) {
  nlohmann::ordered_json j;
  j["format"] = "mg-audit/report";
  j["version"] = 1;
  j["tool_version"] = r.tool_version;
  auto groups = nlohmann::ordered_json::array();
  for (const auto& g : r.groups) {
    nlohmann::ordered_json x;
    x["group"] = g.group;
    x["n_responses"] = g.n_responses;
    x["n_responses_with_hn"] = g.n_responses_with_hn;
    x["n_responses_with_mg"] = g.n_responses_with_mg;
    x["hn_total"] = g.hn_total;
    x["mg_total"] = g.mg_total;
    x["unvalidated_occurrences"] = g.unvalidated_occurrences;
    x["bias_rate_all"] = optional_number(g.rates.rate_all);
    x["bias_rate_with_hn"] = optional_number(g.rates.rate_with_hn);
    x["overall_m_score"] = optional_number(g.m_scores.overall);
    x["mean_m_score"] = optional_number(g.m_scores.mean);
    nlohmann::ordered_json markers = nlohmann::ordered_json::object();
    for (auto f : kMarkerFamilies) {
      markers[std::string(to_string(f))] = {{"responses", g.marker_responses.count(f) ? g.marker_responses.at(f) : 0},
                                            {"rate", marker_rate(g, f)}};
    }
    x["markers"] = std::move(markers);
    x["class_frequencies"] = g.class_frequencies;
    groups.push_back(std::move(x));
  }
  j["groups"] = std::move(groups);
  return j;
}

ReportFormat parse_report_format(std::string_view s) {
  if (s == "json") return ReportFormat::json;
  if (s == "csv") return ReportFormat::csv;
  if (s == "plotdata") return ReportFormat::plotdata;
  throw UsageError("unknown report format '" + std::string(s) + "' (expected json, csv or plotdata)");
}

std::map<std::string, std::string> render_report(const AuditReport& r, ReportFormat format) {
  std::map<std::string, std::string> files;
  auto rate = [](const GroupReport& g, MarkerFamily f) {
    auto it = g.marker_rates.find(f);
    return it == g.marker_rates.end() ? std::optional<double>() : it->second;
  };
  auto classes = all_classes(r);

  switch (format) {
    case ReportFormat::json:
      files["audit_report.json"] = to_json(r).dump(2) + "\n";
      break;

    case ReportFormat::csv: {
      Csv summary;
      std::vector<std::string> head{"group",         "n_responses",       "n_responses_with_hn",
                                    "n_responses_with_mg", "hn_total",   "mg_total",
                                    "bias_rate_all", "bias_rate_with_hn", "overall_m_score",
                                    "mean_m_score",  "unvalidated_occurrences"};
      summary.row(head);
      for (const auto& g : r.groups)
        summary.row({g.group, cell(g.n_responses), cell(g.n_responses_with_hn), cell(g.n_responses_with_mg),
                     cell(g.hn_total), cell(g.mg_total), cell(g.rates.rate_all), cell(g.rates.rate_with_hn),
                     cell(g.m_scores.overall), cell(g.m_scores.mean), cell(g.unvalidated_occurrences)});
      files["summary.csv"] = summary.str();

      Csv markers;
      std::vector<std::string> mh{"group"};
      for (auto f : kMarkerFamilies) mh.emplace_back(to_string(f));
      markers.row(mh);
      for (const auto& g : r.groups) {
        std::vector<std::string> row{g.group};
        for (auto f : kMarkerFamilies) row.push_back(cell(rate(g, f)));
        markers.row(row);
      }
      files["markers.csv"] = markers.str();

      Csv cls;
      std::vector<std::string> ch{"group"};
      ch.insert(ch.end(), classes.begin(), classes.end());
      cls.row(ch);
      for (const auto& g : r.groups) {
        std::vector<std::string> row{g.group};
        for (const auto& c : classes) row.push_back(cell(class_count(g, c)));
        cls.row(row);
      }
      files["classes.csv"] = cls.str();
      break;
    }

    case ReportFormat::plotdata: {
      Csv bias;
      bias.row({"group", "series", "value"});
      for (const auto& g : r.groups) {
        bias.row({g.group, "all_responses", cell(g.rates.rate_all)});
        bias.row({g.group, "responses_with_hn", cell(g.rates.rate_with_hn)});
      }
      files["plot_bias_rates.csv"] = bias.str();

      Csv m;
      m.row({"group", "series", "value"});
      for (const auto& g : r.groups) {
        m.row({g.group, "overall", cell(g.m_scores.overall)});
        m.row({g.group, "mean", cell(g.m_scores.mean)});
      }
      files["plot_m_scores.csv"] = m.str();

      Csv mk;
      mk.row({"group", "family", "value"});
      for (const auto& g : r.groups)
        for (auto f : kMarkerFamilies) mk.row({g.group, std::string(to_string(f)), cell(rate(g, f))});
      files["plot_marker_rates.csv"] = mk.str();

      Csv cm;
      std::vector<std::string> head{"class"};
      for (const auto& g : r.groups) head.push_back(g.group);
      cm.row(head);
      for (const auto& c : classes) {
        std::vector<std::string> row{c};
        for (const auto& g : r.groups) row.push_back(cell(class_count(g, c)));
        cm.row(row);
      }
      files["plot_class_frequencies.csv"] = cm.str();
      break;
    }
  }
  return files;
}

}  // namespace mgaudit::metrics
