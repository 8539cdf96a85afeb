#pragma once

// Chat-completion dispatch, the exchange store, the human-noun validation
// protocol and annotation agreement.

#include <array>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mgaudit/common.hpp"

namespace mgaudit::llm {

inline constexpr std::string_view kGenerationSystemPrompt = "You are a helpful French assistant.";
inline constexpr std::string_view kValidationSystemPrompt =
    "You are an assistant that validates human noun classifications in French texts.";

struct GenerationConfig {
  std::string model_id;
  double temperature = 1.0;
  int max_tokens = 1500;
  std::string system_prompt{kGenerationSystemPrompt};

  /// Throws ConfigError on a negative temperature or non-positive max_tokens.
  void validate() const;
};

/// Generation settings of the validation calls.
GenerationConfig validation_generation_config(std::string model_id);

struct ChatRequest {
  std::string request_id;
  std::string model_id;
  std::string system_prompt;
  std::string user_prompt;
  double temperature = 1.0;
  int max_tokens = 1500;
  bool json_response = false;
};

nlohmann::ordered_json to_json(const ChatRequest& r);
ChatRequest chat_request_from_json(const nlohmann::json& j);

enum class TransportStatus { ok, truncated, auth_error, rate_limited, timeout, failed };

std::string_view to_string(TransportStatus s);

struct ChatResponse {
  TransportStatus status = TransportStatus::failed;
  std::string text;
  std::string error;
};

class ChatTransport {
 public:
  virtual ~ChatTransport() = default;
  /// Must be safe to call from several threads.
  virtual ChatResponse complete(const ChatRequest& request) = 0;
};

/// Replays canned responses. Fixture lines are {"instruction_id",
/// "response_text"} with an optional "model_id"; a model-specific entry wins
/// over a model-less one.
class MockTransport final : public ChatTransport {
 public:
  MockTransport() = default;
  static std::unique_ptr<MockTransport> load(const std::filesystem::path& fixtures);

  void add(std::string instruction_id, std::string response_text, std::string model_id = {});
  /// The next `failures.size()` calls for this id return these statuses.
  void script_failures(const std::string& instruction_id, std::vector<TransportStatus> failures);

  ChatResponse complete(const ChatRequest& request) override;
  std::size_t call_count(const std::string& instruction_id) const;
  std::size_t size() const { return responses_.size(); }

 private:
  std::map<std::pair<std::string, std::string>, std::string> responses_;  // (model, id)
  std::map<std::string, std::vector<TransportStatus>> failures_;
  std::map<std::string, std::size_t> calls_;
  mutable std::mutex mutex_;
};

struct ProviderConfig {
  std::string name;
  /// Base URL of an OpenAI-compatible API, e.g. https://api.example.com/v1
  std::string endpoint;
  /// Environment variable holding the API key.
  std::string credential_env;
  double requests_per_second = 0.0;  // 0 = unlimited
  std::chrono::milliseconds timeout{120000};
};

ProviderConfig provider_config_from_json(const nlohmann::json& j);

/// POST {endpoint}/chat/completions with a bearer token read from the
/// configured environment variable.
class HttpChatTransport final : public ChatTransport {
 public:
  explicit HttpChatTransport(ProviderConfig config);
  ChatResponse complete(const ChatRequest& request) override;

 private:
  void throttle();

  ProviderConfig config_;
  std::string scheme_host_;
  std::string base_path_;
  std::string api_key_;
  std::mutex rate_mutex_;
  std::chrono::steady_clock::time_point next_slot_{};
};

// ---------------------------------------------------------------------------
// Exchanges

enum class ExchangeStatus { ok, error, truncated };

std::string_view to_string(ExchangeStatus s);
ExchangeStatus parse_exchange_status(std::string_view s);

struct ChatExchange {
  std::string instruction_id;
  std::string model_id;
  ChatRequest request;
  std::string response_text;  // empty iff status == error
  ExchangeStatus status = ExchangeStatus::error;
  std::string error;
  std::int64_t started_at_ms = 0;
  std::int64_t finished_at_ms = 0;
  int attempt_count = 0;
};

nlohmann::ordered_json to_json(const ChatExchange& e);
ChatExchange exchange_from_json(const nlohmann::json& j);

/// Append-only JSONL. Re-opening an existing store loads what it holds; a
/// truncated last line (interrupted write) is dropped with a warning.
class ExchangeStore {
 public:
  explicit ExchangeStore(std::filesystem::path path);

  bool contains(const std::string& model_id, const std::string& instruction_id) const;
  const ChatExchange* find(const std::string& model_id, const std::string& instruction_id) const;
  void append(const ChatExchange& e);
  /// Every exchange ordered by (model_id, instruction_id).
  std::vector<ChatExchange> sorted() const;
  /// Rewrites the file in sorted order, atomically.
  void compact();
  std::size_t size() const;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::map<std::pair<std::string, std::string>, ChatExchange> exchanges_;
  mutable std::mutex mutex_;
};

class AuthenticationError : public Error {
 public:
  using Error::Error;
};

struct RetryPolicy {
  int max_attempts = 5;
  std::chrono::milliseconds initial_backoff{1000};
  double multiplier = 2.0;
  std::chrono::milliseconds max_backoff{60000};
};

struct DispatchOptions {
  RetryPolicy retry;
  std::size_t concurrency = 4;
  /// Defaults to std::this_thread::sleep_for.
  std::function<void(std::chrono::milliseconds)> sleep;
  /// Milliseconds since the epoch; defaults to the system clock.
  std::function<std::int64_t()> clock;
};

struct Instruction {
  std::string id;
  std::string text;
};

struct DispatchResult {
  std::vector<ChatExchange> exchanges;  // ordered by instruction id
  std::size_t skipped = 0;              // already in the store
};

/// One exchange per instruction. Rate limits, timeouts and transient failures
/// are retried with exponential backoff; after the last attempt the exchange
/// is recorded with status error. An authentication failure throws
/// AuthenticationError. Each exchange is appended to `store` (if given) as
/// soon as it completes, and instructions already present are skipped.
DispatchResult dispatch(const std::vector<Instruction>& instructions, const GenerationConfig& config,
                        ChatTransport& transport, ExchangeStore* store = nullptr, const DispatchOptions& options = {});

/// Sends one request with the retry policy; used by dispatch and validation.
ChatExchange send_with_retry(const ChatRequest& request, const std::string& instruction_id, ChatTransport& transport,
                             const DispatchOptions& options);

// ---------------------------------------------------------------------------
// Human-noun validation protocol

/// "facteurs", "facteurs_2", ...: the n-th repeat of a noun gets suffix _n.
std::vector<std::string> occurrence_ids(const std::vector<std::string>& nouns);

struct ValidationPrompt {
  std::string system_prompt;
  std::string user_prompt;
  std::vector<std::string> ids;
};

/// Nouns in textual order. Throws DataError on an empty list.
ValidationPrompt build_validation_prompt(std::string_view text, const std::vector<std::string>& nouns);

struct ParsedValidation {
  std::map<std::string, int> verdicts;  // id -> 0/1
  std::vector<std::string> missing;     // expected ids absent from the answer
  std::vector<std::string> invalid;     // present but not 0/1
  std::vector<std::string> extraneous;  // unexpected keys, ignored
  bool malformed = false;               // no JSON object could be read
  std::string error;
};

/// Reads the first JSON object in `raw` (surrounding prose and code fences
/// are tolerated). Values 0/1, true/false and "0"/"1" are accepted.
ParsedValidation parse_validation_response(std::string_view raw, const std::vector<std::string>& expected_ids);

// ---------------------------------------------------------------------------
// Agreement

struct AgreementResult {
  double kappa = 0.0;
  /// confusion[i][j]: items labelled i by the first annotator and j by the second.
  std::array<std::array<std::size_t, 2>, 2> confusion{};
  std::size_t n_items = 0;
  double observed = 0.0;
  double expected = 0.0;
};

/// Cohen's kappa for binary labels. Throws DataError on length mismatch,
/// empty input or labels other than 0/1. Defined as 1 when chance agreement
/// is 1.
AgreementResult cohen_kappa(const std::vector<int>& a, const std::vector<int>& b);

}  // namespace mgaudit::llm
