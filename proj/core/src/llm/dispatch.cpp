#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "mgaudit/llm.hpp"
#include "mgaudit/text.hpp"

namespace mgaudit::llm {

std::string_view to_string(ExchangeStatus s) {
  switch (s) {
    case ExchangeStatus::ok: return "ok";
    case ExchangeStatus::error: return "error";
    case ExchangeStatus::truncated: return "truncated";
  }
  return "error";
}

ExchangeStatus parse_exchange_status(std::string_view s) {
  if (s == "ok") return ExchangeStatus::ok;
  if (s == "error") return ExchangeStatus::error;
  if (s == "truncated") return ExchangeStatus::truncated;
  throw DataError("unknown exchange status '" + std::string(s) + "'");
}

nlohmann::ordered_json to_json(const ChatExchange& e) {
  nlohmann::ordered_json j;
  j["instruction_id"] = e.instruction_id;
  j["model_id"] = e.model_id;
  j["request"] = to_json(e.request);
  j["response_text"] = e.response_text;
  j["status"] = to_string(e.status);
  j["error"] = e.error;
  j["started_at_ms"] = e.started_at_ms;
  j["finished_at_ms"] = e.finished_at_ms;
  j["attempt_count"] = e.attempt_count;
  return j;
}

ChatExchange exchange_from_json(const nlohmann::json& j) {
  ChatExchange e;
  e.instruction_id = j.at("instruction_id").get<std::string>();
  e.model_id = j.at("model_id").get<std::string>();
  e.request = chat_request_from_json(j.at("request"));
  e.response_text = j.at("response_text").get<std::string>();
  e.status = parse_exchange_status(j.at("status").get<std::string>());
  e.error = j.value("error", std::string());
  e.started_at_ms = j.value("started_at_ms", std::int64_t{0});
  e.finished_at_ms = j.value("finished_at_ms", std::int64_t{0});
  e.attempt_count = j.value("attempt_count", 0);
  if (e.response_text.empty() != (e.status == ExchangeStatus::error))
    throw DataError("exchange " + e.instruction_id + ": response text must be empty exactly when status is error");
  return e;
}

// ---------------------------------------------------------------------------

ExchangeStore::ExchangeStore(std::filesystem::path path) : path_(std::move(path)) {
  if (!std::filesystem::exists(path_)) return;
  auto contents = read_file(path_);
  std::vector<std::string_view> lines;
  std::string_view rest = contents;
  while (!rest.empty()) {
    auto nl = rest.find('\n');
    lines.push_back(rest.substr(0, nl));
    if (nl == std::string_view::npos) break;
    rest.remove_prefix(nl + 1);
  }
  bool dirty = !contents.empty() && contents.back() != '\n';
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (text::trim(lines[i]).empty()) continue;
    try {
      auto e = exchange_from_json(nlohmann::json::parse(lines[i]));
      exchanges_[{e.model_id, e.instruction_id}] = std::move(e);
    } catch (const std::exception& ex) {
      if (i + 1 != lines.size())
        throw DataError(path_.string() + ":" + std::to_string(i + 1) + ": " + ex.what());
      spdlog::warn("{}: dropping incomplete last record", path_.string());
      dirty = true;
    }
  }
  if (dirty) compact();
}

bool ExchangeStore::contains(const std::string& model_id, const std::string& instruction_id) const {
  std::lock_guard lock(mutex_);
  return exchanges_.count({model_id, instruction_id}) > 0;
}

const ChatExchange* ExchangeStore::find(const std::string& model_id, const std::string& instruction_id) const {
  std::lock_guard lock(mutex_);
  auto it = exchanges_.find({model_id, instruction_id});
  return it == exchanges_.end() ? nullptr : &it->second;
}

void ExchangeStore::append(const ChatExchange& e) {
  auto line = to_json(e).dump() + "\n";
  std::lock_guard lock(mutex_);
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  std::ofstream out(path_, std::ios::binary | std::ios::app);
  if (!out) throw IoError("cannot append to " + path_.string());
  out << line;
  out.flush();
  if (!out) throw IoError("write failed on " + path_.string());
  exchanges_[{e.model_id, e.instruction_id}] = e;
}

std::vector<ChatExchange> ExchangeStore::sorted() const {
  std::lock_guard lock(mutex_);
  std::vector<ChatExchange> out;
  out.reserve(exchanges_.size());
  for (const auto& [k, e] : exchanges_) out.push_back(e);
  return out;
}

void ExchangeStore::compact() {
  std::string contents;
  {
    std::lock_guard lock(mutex_);
    for (const auto& [k, e] : exchanges_) contents += to_json(e).dump() + "\n";
  }
  write_file_atomic(path_, contents);
}

std::size_t ExchangeStore::size() const {
  std::lock_guard lock(mutex_);
  return exchanges_.size();
}

// ---------------------------------------------------------------------------

namespace {

std::int64_t now_ms(const DispatchOptions& o) {
  if (o.clock) return o.clock();
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
      .count();
}

void pause(const DispatchOptions& o, std::chrono::milliseconds d) {
  if (o.sleep)
    o.sleep(d);
  else
    std::this_thread::sleep_for(d);
}

}  // namespace

ChatExchange send_with_retry(const ChatRequest& request, const std::string& instruction_id, ChatTransport& transport,
                             const DispatchOptions& options) {
  ChatExchange e;
  e.instruction_id = instruction_id;
  e.model_id = request.model_id;
  e.request = request;
  e.started_at_ms = now_ms(options);
  const int max_attempts = std::max(1, options.retry.max_attempts);
  auto backoff = options.retry.initial_backoff;
  while (true) {
    auto res = transport.complete(request);
    ++e.attempt_count;
    if (res.status == TransportStatus::auth_error)
      throw AuthenticationError("authentication failed for model " + request.model_id + ": " + res.error);
    bool usable = (res.status == TransportStatus::ok || res.status == TransportStatus::truncated) && !res.text.empty();
    if (usable) {
      e.response_text = std::move(res.text);
      e.status = res.status == TransportStatus::ok ? ExchangeStatus::ok : ExchangeStatus::truncated;
      e.error.clear();
      break;
    }
    e.error = res.error.empty() ? "empty response" : res.error;
    if (e.attempt_count >= max_attempts) {
      e.status = ExchangeStatus::error;
      e.response_text.clear();
      spdlog::warn("{} / {}: giving up after {} attempts ({})", request.model_id, instruction_id, e.attempt_count,
                   e.error);
      break;
    }
    spdlog::debug("{} / {}: attempt {} failed ({}), retrying", request.model_id, instruction_id, e.attempt_count,
                  e.error);
    pause(options, backoff);
    auto next = std::chrono::duration<double, std::milli>(backoff) * options.retry.multiplier;
    backoff = std::min(std::chrono::duration_cast<std::chrono::milliseconds>(next), options.retry.max_backoff);
  }
  e.finished_at_ms = now_ms(options);
  return e;
}

DispatchResult dispatch(const std::vector<Instruction>& instructions, const GenerationConfig& config,
                        ChatTransport& transport, ExchangeStore* store, const DispatchOptions& options) {
  config.validate();
  if (config.model_id.empty()) throw ConfigError("dispatch needs a model id");
  {
    std::set<std::string> seen;
    for (const auto& i : instructions)
      if (!seen.insert(i.id).second) throw DataError("duplicate instruction id '" + i.id + "'");
  }

  DispatchResult result;
  std::vector<const Instruction*> pending;
  for (const auto& i : instructions) {
    if (store && store->contains(config.model_id, i.id)) {
      result.exchanges.push_back(*store->find(config.model_id, i.id));
      ++result.skipped;
    } else {
      pending.push_back(&i);
    }
  }

  std::vector<ChatExchange> done(pending.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    while (!stop) {
      std::size_t k = next++;
      if (k >= pending.size()) return;
      ChatRequest req;
      req.request_id = pending[k]->id;
      req.model_id = config.model_id;
      req.system_prompt = config.system_prompt;
      req.user_prompt = pending[k]->text;
      req.temperature = config.temperature;
      req.max_tokens = config.max_tokens;
      try {
        done[k] = send_with_retry(req, pending[k]->id, transport, options);
        if (store) store->append(done[k]);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        stop = true;
      }
    }
  };

  std::size_t threads = std::clamp<std::size_t>(options.concurrency, 1, std::max<std::size_t>(1, pending.size()));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  for (auto& e : done) result.exchanges.push_back(std::move(e));
  std::sort(result.exchanges.begin(), result.exchanges.end(),
            [](const ChatExchange& a, const ChatExchange& b) { return a.instruction_id < b.instruction_id; });
  return result;
}

}  // namespace mgaudit::llm
