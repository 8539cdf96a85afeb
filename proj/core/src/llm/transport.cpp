#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "mgaudit/llm.hpp"
#include "mgaudit/text.hpp"

namespace mgaudit::llm {

void GenerationConfig::validate() const {
  if (temperature < 0) throw ConfigError("temperature must be >= 0");
  if (max_tokens <= 0) throw ConfigError("max_tokens must be positive");
}

GenerationConfig validation_generation_config(std::string model_id) {
  GenerationConfig c;
  c.model_id = std::move(model_id);
  c.temperature = 0.0;
  c.max_tokens = 500;
  c.system_prompt = std::string(kValidationSystemPrompt);
  return c;
}

nlohmann::ordered_json to_json(const ChatRequest& r) {
  nlohmann::ordered_json j;
  j["request_id"] = r.request_id;
  j["model_id"] = r.model_id;
  j["system_prompt"] = r.system_prompt;
  j["user_prompt"] = r.user_prompt;
  j["temperature"] = r.temperature;
  j["max_tokens"] = r.max_tokens;
  j["json_response"] = r.json_response;
  return j;
}

ChatRequest chat_request_from_json(const nlohmann::json& j) {
  ChatRequest r;
  r.request_id = j.at("request_id").get<std::string>();
  r.model_id = j.at("model_id").get<std::string>();
  r.system_prompt = j.at("system_prompt").get<std::string>();
  r.user_prompt = j.at("user_prompt").get<std::string>();
  r.temperature = j.at("temperature").get<double>();
  r.max_tokens = j.at("max_tokens").get<int>();
  r.json_response = j.value("json_response", false);
  return r;
}

std::string_view to_string(TransportStatus s) {
  switch (s) {
    case TransportStatus::ok: return "ok";
    case TransportStatus::truncated: return "truncated";
    case TransportStatus::auth_error: return "auth_error";
    case TransportStatus::rate_limited: return "rate_limited";
    case TransportStatus::timeout: return "timeout";
    case TransportStatus::failed: return "failed";
  }
  return "failed";
}

// ---------------------------------------------------------------------------

std::unique_ptr<MockTransport> MockTransport::load(const std::filesystem::path& fixtures) {
  auto t = std::make_unique<MockTransport>();
  for_each_line(fixtures, [&](std::size_t n, std::string_view line) {
    if (text::trim(line).empty()) return;
    try {
      auto j = nlohmann::json::parse(line);
      t->add(j.at("instruction_id").get<std::string>(), j.at("response_text").get<std::string>(),
            j.value("model_id", std::string()));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(fixtures.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  });
  return t;
}

void MockTransport::add(std::string instruction_id, std::string response_text, std::string model_id) {
  std::lock_guard lock(mutex_);
  responses_[{std::move(model_id), std::move(instruction_id)}] = std::move(response_text);
}

void MockTransport::script_failures(const std::string& instruction_id, std::vector<TransportStatus> failures) {
  std::lock_guard lock(mutex_);
  failures_[instruction_id] = std::move(failures);
}

ChatResponse MockTransport::complete(const ChatRequest& request) {
  std::lock_guard lock(mutex_);
  ++calls_[request.request_id];
  if (auto f = failures_.find(request.request_id); f != failures_.end() && !f->second.empty()) {
    auto status = f->second.front();
    f->second.erase(f->second.begin());
    return {status, "", "scripted " + std::string(to_string(status))};
  }
  auto it = responses_.find({request.model_id, request.request_id});
  if (it == responses_.end()) it = responses_.find({std::string(), request.request_id});
  if (it == responses_.end()) return {TransportStatus::failed, "", "no fixture for '" + request.request_id + "'"};
  return {TransportStatus::ok, it->second, ""};
}

std::size_t MockTransport::call_count(const std::string& instruction_id) const {
  std::lock_guard lock(mutex_);
  auto it = calls_.find(instruction_id);
  return it == calls_.end() ? 0 : it->second;
}

// ---------------------------------------------------------------------------

ProviderConfig provider_config_from_json(const nlohmann::json& j) {
  ProviderConfig p;
  p.name = j.at("name").get<std::string>();
  p.endpoint = j.at("endpoint").get<std::string>();
  p.credential_env = j.value("credential_env", std::string());
  p.requests_per_second = j.value("requests_per_second", 0.0);
  p.timeout = std::chrono::milliseconds(j.value("timeout_ms", 120000));
  if (p.requests_per_second < 0) throw ConfigError("provider " + p.name + ": requests_per_second must be >= 0");
  return p;
}

HttpChatTransport::HttpChatTransport(ProviderConfig config) : config_(std::move(config)) {
  auto scheme_end = config_.endpoint.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("provider " + config_.name + ": endpoint needs a scheme");
  auto path_start = config_.endpoint.find('/', scheme_end + 3);
  scheme_host_ = config_.endpoint.substr(0, path_start);
  base_path_ = path_start == std::string::npos ? "" : config_.endpoint.substr(path_start);
  while (!base_path_.empty() && base_path_.back() == '/') base_path_.pop_back();
  if (!config_.credential_env.empty()) {
    const char* key = std::getenv(config_.credential_env.c_str());
    if (!key || !*key)
      throw AuthenticationError("provider " + config_.name + ": environment variable " + config_.credential_env +
                                " is not set");
    api_key_ = key;
  }
}

void HttpChatTransport::throttle() {
  if (config_.requests_per_second <= 0) return;
  auto interval = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
      std::chrono::duration<double>(1.0 / config_.requests_per_second));
  std::chrono::steady_clock::time_point slot;
  {
    std::lock_guard lock(rate_mutex_);
    auto now = std::chrono::steady_clock::now();
    slot = std::max(now, next_slot_);
    next_slot_ = slot + interval;
  }
  std::this_thread::sleep_until(slot);
}

ChatResponse HttpChatTransport::complete(const ChatRequest& request) {
  throttle();
  httplib::Client client(scheme_host_);
  auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout).count();
  client.set_connection_timeout(secs);
  client.set_read_timeout(secs);
  client.set_write_timeout(secs);

  nlohmann::json body{{"model", request.model_id},
                      {"messages",
                       {{{"role", "system"}, {"content", request.system_prompt}},
                        {{"role", "user"}, {"content", request.user_prompt}}}},
                      {"temperature", request.temperature},
                      {"max_tokens", request.max_tokens}};
  if (request.json_response) body["response_format"] = {{"type", "json_object"}};

  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
  auto res = client.Post(base_path_ + "/chat/completions", headers, body.dump(), "application/json");
  if (!res) {
    auto err = res.error();
    auto status = (err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout) ? TransportStatus::timeout
                                                                                             : TransportStatus::failed;
    return {status, "", httplib::to_string(err)};
  }
  if (res->status == 401 || res->status == 403) return {TransportStatus::auth_error, "", "HTTP " + std::to_string(res->status)};
  if (res->status == 429) return {TransportStatus::rate_limited, "", "HTTP 429"};
  if (res->status == 408 || res->status == 504) return {TransportStatus::timeout, "", "HTTP " + std::to_string(res->status)};
  if (res->status != 200) return {TransportStatus::failed, "", "HTTP " + std::to_string(res->status)};
  try {
    auto j = nlohmann::json::parse(res->body);
    const auto& choice = j.at("choices").at(0);
    auto content = choice.at("message").at("content");
    std::string text = content.is_string() ? content.get<std::string>() : std::string();
    auto finish = choice.value("finish_reason", std::string());
    return {finish == "length" ? TransportStatus::truncated : TransportStatus::ok, std::move(text), ""};
  } catch (const nlohmann::json::exception& e) {
    return {TransportStatus::failed, "", std::string("unreadable completion: ") + e.what()};
  }
}

}  // namespace mgaudit::llm
