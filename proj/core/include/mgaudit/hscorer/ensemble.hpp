#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mgaudit/common.hpp"
#include "mgaudit/hscorer/classifier.hpp"

namespace mgaudit::hscorer {

/// Raised by a remote scorer that cannot produce a vote.
class RemoteUnavailable : public Error {
 public:
  using Error::Error;
};

/// Out-of-process ensemble member (e.g. a hosted sequence classifier).
class RemoteScorer {
 public:
  virtual ~RemoteScorer() = default;
  virtual std::string id() const = 0;
  virtual bool vote(std::string_view word, std::string_view context) = 0;
};

/// POST {base_url}/score with {"word": ..., "context": ...}; expects
/// {"vote": 0|1}.
class HttpRemoteScorer final : public RemoteScorer {
 public:
  explicit HttpRemoteScorer(std::string base_url, std::chrono::milliseconds timeout = std::chrono::seconds(10));
  std::string id() const override { return "remote"; }
  bool vote(std::string_view word, std::string_view context) override;

 private:
  std::string base_url_;
  std::chrono::milliseconds timeout_;
};

enum class RemotePolicy { fail, degrade };

std::string_view to_string(RemotePolicy p);
RemotePolicy parse_remote_policy(std::string_view s);

struct NamedMember {
  std::string id;
  std::shared_ptr<const ClassifierMember> model;
};

struct EnsembleVerdict {
  std::map<std::string, bool> votes;
  bool accepted = false;
  /// The remote scorer was configured but skipped under RemotePolicy::degrade.
  bool degraded = false;
};

/// Full agreement: accepted iff every member present votes human. With
/// RemotePolicy::fail an unreachable remote rethrows RemoteUnavailable.
EnsembleVerdict ensemble_classify(std::span<const double> features, std::span<const NamedMember> members,
                                  RemoteScorer* remote = nullptr, RemotePolicy policy = RemotePolicy::fail,
                                  std::string_view word = {}, std::string_view context = {});

/// Conjunction over already-collected votes. Throws DataError when empty.
EnsembleVerdict combine_votes(std::map<std::string, bool> votes);

}  // namespace mgaudit::hscorer
