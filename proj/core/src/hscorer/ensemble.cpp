#include "mgaudit/hscorer/ensemble.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <json.hpp>

namespace mgaudit::hscorer {

HttpRemoteScorer::HttpRemoteScorer(std::string base_url, std::chrono::milliseconds timeout)
    : base_url_(std::move(base_url)), timeout_(timeout) {
  while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();
  if (base_url_.empty()) throw ConfigError("remote scorer URL is empty");
}

bool HttpRemoteScorer::vote(std::string_view word, std::string_view context) {
  httplib::Client client(base_url_);
  auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout_);
  auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout_ - secs);
  client.set_connection_timeout(secs.count(), static_cast<time_t>(usecs.count()));
  client.set_read_timeout(secs.count(), static_cast<time_t>(usecs.count()));

  nlohmann::json body{{"word", word}, {"context", context}};
  auto res = client.Post("/score", body.dump(), "application/json");
  if (!res) throw RemoteUnavailable("remote scorer " + base_url_ + ": " + httplib::to_string(res.error()));
  if (res->status != 200)
    throw RemoteUnavailable("remote scorer " + base_url_ + " answered HTTP " + std::to_string(res->status));
  try {
    auto j = nlohmann::json::parse(res->body);
    int v = j.at("vote").get<int>();
    if (v != 0 && v != 1) throw RemoteUnavailable("remote scorer returned vote " + std::to_string(v));
    return v == 1;
  } catch (const nlohmann::json::exception& e) {
    throw RemoteUnavailable("remote scorer returned an unreadable body: " + std::string(e.what()));
  }
}

std::string_view to_string(RemotePolicy p) { return p == RemotePolicy::fail ? "fail" : "degrade"; }

RemotePolicy parse_remote_policy(std::string_view s) {
  if (s == "fail") return RemotePolicy::fail;
  if (s == "degrade") return RemotePolicy::degrade;
  throw ConfigError("unknown remote policy '" + std::string(s) + "' (expected fail or degrade)");
}

EnsembleVerdict combine_votes(std::map<std::string, bool> votes) {
  if (votes.empty()) throw DataError("ensemble has no members");
  EnsembleVerdict v;
  v.votes = std::move(votes);
  v.accepted = true;
  for (const auto& [id, vote] : v.votes) v.accepted = v.accepted && vote;
  return v;
}

EnsembleVerdict ensemble_classify(std::span<const double> features, std::span<const NamedMember> members,
                                  RemoteScorer* remote, RemotePolicy policy, std::string_view word,
                                  std::string_view context) {
  if (members.empty() && !remote) throw DataError("ensemble has no members");
  std::map<std::string, bool> votes;
  for (const auto& m : members) {
    if (!votes.emplace(m.id, m.model->vote(features)).second)
      throw ConfigError("duplicate ensemble member id '" + m.id + "'");
  }
  bool degraded = false;
  if (remote) {
    try {
      votes[remote->id()] = remote->vote(word, context);
    } catch (const RemoteUnavailable& e) {
      if (policy == RemotePolicy::fail) throw;
      spdlog::warn("remote scorer skipped for '{}': {}", word, e.what());
      degraded = true;
    }
  }
  auto v = combine_votes(std::move(votes));
  v.degraded = degraded;
  return v;
}

}  // namespace mgaudit::hscorer
