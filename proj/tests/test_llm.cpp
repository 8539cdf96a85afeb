#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <random>
#include <thread>

#include <httplib.h>

#include "mgaudit/hscorer/ensemble.hpp"
#include "mgaudit/llm.hpp"
#include "support.hpp"

using namespace mgaudit;
using namespace mgaudit::llm;

namespace {

DispatchOptions instant(int attempts = 5, std::size_t concurrency = 1) {
  DispatchOptions o;
  o.retry.max_attempts = attempts;
  o.concurrency = concurrency;
  o.sleep = [](std::chrono::milliseconds) {};
  o.clock = [] { return std::int64_t{0}; };
  return o;
}

std::vector<Instruction> instructions(int n) {
  std::vector<Instruction> out;
  for (int i = 0; i < n; ++i) {
    char id[16];
    std::snprintf(id, sizeof id, "i-%03d", i);
    out.push_back({id, "question " + std::to_string(i)});
  }
  return out;
}

/// Fails with an authentication error after `budget` calls.
class Interrupting final : public ChatTransport {
 public:
  Interrupting(ChatTransport& inner, std::size_t budget) : inner_(inner), budget_(budget) {}
  ChatResponse complete(const ChatRequest& r) override {
    std::lock_guard lock(m_);
    if (budget_ == 0) return {TransportStatus::auth_error, "", "interrupted"};
    --budget_;
    return inner_.complete(r);
  }

 private:
  ChatTransport& inner_;
  std::size_t budget_;
  std::mutex m_;
};

struct LocalServer {
  httplib::Server server;
  std::thread thread;
  int port = 0;

  LocalServer() = default;
  void start() {
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~LocalServer() {
    server.stop();
    if (thread.joinable()) thread.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port); }
};

}  // namespace

TEST_CASE("generation config defaults and validation") {
  GenerationConfig g;
  CHECK(g.temperature == 1.0);
  CHECK(g.max_tokens == 1500);
  CHECK(g.system_prompt == "You are a helpful French assistant.");
  g.model_id = "m";
  CHECK_NOTHROW(g.validate());
  g.temperature = -0.1;
  CHECK_THROWS_AS(g.validate(), ConfigError);
  g.temperature = 0;
  g.max_tokens = 0;
  CHECK_THROWS_AS(g.validate(), ConfigError);
  auto v = validation_generation_config("judge");
  CHECK(v.temperature == 0.0);
  CHECK(v.max_tokens == 500);
  CHECK(v.system_prompt == kValidationSystemPrompt);
}

TEST_CASE("dispatch against canned responses") {
  MockTransport t;
  t.add("a", "réponse a");
  t.add("b", "réponse b");
  t.add("c", "réponse c");
  GenerationConfig g{"m"};
  auto r = dispatch({{"c", "?"}, {"a", "?"}, {"b", "?"}}, g, t, nullptr, instant());
  REQUIRE(r.exchanges.size() == 3);
  CHECK(r.exchanges[0].instruction_id == "a");
  CHECK(r.exchanges[0].response_text == "réponse a");
  for (const auto& e : r.exchanges) {
    CHECK(e.status == ExchangeStatus::ok);
    CHECK(e.attempt_count == 1);
    CHECK(e.request.temperature == 1.0);
  }
}

TEST_CASE("model-specific canned responses win") {
  MockTransport t;
  t.add("a", "generic");
  t.add("a", "special", "m2");
  GenerationConfig g1{"m1"}, g2{"m2"};
  CHECK(dispatch({{"a", "?"}}, g1, t, nullptr, instant()).exchanges[0].response_text == "generic");
  CHECK(dispatch({{"a", "?"}}, g2, t, nullptr, instant()).exchanges[0].response_text == "special");
}

TEST_CASE("retries with exponential backoff") {
  MockTransport t;
  t.add("a", "ok");
  t.script_failures("a", {TransportStatus::rate_limited, TransportStatus::timeout});
  std::vector<long long> sleeps;
  auto o = instant();
  o.retry.initial_backoff = std::chrono::milliseconds(100);
  o.retry.multiplier = 3;
  o.retry.max_backoff = std::chrono::milliseconds(250);
  o.sleep = [&](std::chrono::milliseconds d) { sleeps.push_back(d.count()); };
  GenerationConfig g{"m"};
  auto r = dispatch({{"a", "?"}}, g, t, nullptr, o);
  CHECK(r.exchanges[0].status == ExchangeStatus::ok);
  CHECK(r.exchanges[0].attempt_count == 3);
  CHECK(sleeps == std::vector<long long>{100, 250});
}

TEST_CASE("exhausted retries record an error exchange") {
  MockTransport t;
  t.add("a", "ok");
  t.script_failures("a", {TransportStatus::failed, TransportStatus::failed, TransportStatus::failed});
  GenerationConfig g{"m"};
  auto e = dispatch({{"a", "?"}}, g, t, nullptr, instant(2)).exchanges[0];
  CHECK(e.status == ExchangeStatus::error);
  CHECK(e.response_text.empty());
  CHECK(e.attempt_count == 2);
}

TEST_CASE("authentication failures are fatal") {
  MockTransport t;
  t.add("a", "ok");
  t.script_failures("a", {TransportStatus::auth_error});
  GenerationConfig g{"m"};
  CHECK_THROWS_AS(dispatch({{"a", "?"}}, g, t, nullptr, instant()), AuthenticationError);
}

TEST_CASE("a missing canned response is an error, truncation is kept") {
  MockTransport t;
  t.add("b", "partial");
  t.script_failures("b", {TransportStatus::truncated});
  GenerationConfig g{"m"};
  auto r = dispatch({{"a", "?"}, {"b", "?"}}, g, t, nullptr, instant(1));
  CHECK(r.exchanges[0].status == ExchangeStatus::error);
  CHECK(r.exchanges[0].response_text.empty());
}

TEST_CASE("exchange store survives reopening and a torn last line") {
  mgtest::ScratchDir dir("store");
  auto p = dir / "x.jsonl";
  {
    ExchangeStore s(p);
    ChatExchange e;
    e.instruction_id = "b";
    e.model_id = "m";
    e.response_text = "B";
    e.status = ExchangeStatus::ok;
    s.append(e);
    e.instruction_id = "a";
    e.response_text = "A";
    s.append(e);
  }
  { std::ofstream(p, std::ios::app) << R"({"instruction_id":"c","mod)"; }
  ExchangeStore s(p);
  CHECK(s.size() == 2);
  CHECK(s.find("m", "a")->response_text == "A");
  s.compact();
  auto lines = read_file(p);
  CHECK(lines.find("\"a\"") < lines.find("\"b\""));
  CHECK(lines.find("\"c\"") == std::string::npos);
}

TEST_CASE("dispatch resumes to the same store whatever the interruption point") {
  MockTransport t;
  auto ins = instructions(12);
  for (const auto& i : ins) t.add(i.id, "answer " + i.id);
  GenerationConfig g{"m"};

  mgtest::ScratchDir ref_dir("ref");
  ExchangeStore ref(ref_dir / "s.jsonl");
  dispatch(ins, g, t, &ref, instant(3, 3));
  ref.compact();
  auto want = read_file(ref.path());

  for (std::size_t cut = 0; cut <= ins.size(); ++cut) {
    mgtest::ScratchDir dir("resume");
    {
      ExchangeStore s(dir / "s.jsonl");
      Interrupting flaky(t, cut);
      try {
        dispatch(ins, g, flaky, &s, instant(3, 3));
      } catch (const AuthenticationError&) {
      }
    }
    ExchangeStore s(dir / "s.jsonl");
    auto r = dispatch(ins, g, t, &s, instant(3, 3));
    CHECK(r.skipped == std::min(cut, ins.size()));
    s.compact();
    CHECK(read_file(s.path()) == want);
  }
}

TEST_CASE("exchange JSON round trip") {
  ChatExchange e;
  e.instruction_id = "x";
  e.model_id = "m";
  e.request.request_id = "x";
  e.request.model_id = "m";
  e.request.user_prompt = "Bonjour ?";
  e.response_text = "Salut";
  e.status = ExchangeStatus::truncated;
  e.started_at_ms = 5;
  e.finished_at_ms = 9;
  e.attempt_count = 2;
  auto back = exchange_from_json(nlohmann::json::parse(to_json(e).dump()));
  CHECK(back.response_text == "Salut");
  CHECK(back.status == ExchangeStatus::truncated);
  CHECK(back.request.user_prompt == "Bonjour ?");
  CHECK(back.attempt_count == 2);
  CHECK(to_json(back).dump() == to_json(e).dump());
}

TEST_CASE("occurrence ids") {
  CHECK(occurrence_ids({"facteurs", "facteurs"}) == std::vector<std::string>{"facteurs", "facteurs_2"});
  CHECK(occurrence_ids({"président"}) == std::vector<std::string>{"président"});
  CHECK(occurrence_ids({"a", "b", "c"}) == std::vector<std::string>{"a", "b", "c"});
  CHECK(occurrence_ids({"a", "b", "a", "a"}) == std::vector<std::string>{"a", "b", "a_2", "a_3"});
}

TEST_CASE("validation prompt") {
  auto p = build_validation_prompt("Les facteurs et les facteurs.", {"facteurs", "facteurs"});
  CHECK(p.system_prompt == kValidationSystemPrompt);
  CHECK(p.ids == std::vector<std::string>{"facteurs", "facteurs_2"});
  const std::string tail = "Text: Les facteurs et les facteurs.\nNouns: facteurs, facteurs_2\nOutput:";
  REQUIRE(p.user_prompt.size() > tail.size());
  CHECK(p.user_prompt.substr(p.user_prompt.size() - tail.size()) == tail);
  CHECK(p.user_prompt.find("## Examples\n") != std::string::npos);
  CHECK(p.user_prompt.find("{{") == std::string::npos);
  CHECK_THROWS_AS(build_validation_prompt("x", {}), DataError);
}

TEST_CASE("validation response parsing") {
  auto a = parse_validation_response(R"({ "facteurs": 0, "facteurs_2": 1 })", {"facteurs", "facteurs_2"});
  CHECK(a.verdicts == std::map<std::string, int>{{"facteurs", 0}, {"facteurs_2", 1}});
  CHECK(a.missing.empty());

  auto b = parse_validation_response(R"({ "président": 1, "citoyens": 1, "mesures": 0 })",
                                     {"président", "citoyens", "mesures"});
  CHECK(b.verdicts.size() == 3);

  auto c = parse_validation_response("not json", {"x"});
  CHECK(c.malformed);
  CHECK(c.verdicts.empty());

  auto d = parse_validation_response("Voici :\n```json\n{\"x\": true, \"y\": \"0\", \"z\": 2, \"w\": 1}\n```",
                                     {"x", "y", "z", "v"});
  CHECK(d.verdicts == std::map<std::string, int>{{"x", 1}, {"y", 0}});
  CHECK(d.invalid == std::vector<std::string>{"z"});
  CHECK(d.missing == std::vector<std::string>{"v"});
  CHECK(d.extraneous == std::vector<std::string>{"w"});

  auto e = parse_validation_response(R"(prose {"note": "a } b"} {"x": 1})", {"x"});
  CHECK(e.missing == std::vector<std::string>{"x"});
  CHECK(e.extraneous == std::vector<std::string>{"note"});
}

TEST_CASE("prompt ids round trip through a well-formed answer") {
  std::mt19937_64 rng(13);
  const std::vector<std::string> vocab{"chef", "client", "facteur", "guide", "élève"};
  for (int round = 0; round < 200; ++round) {
    std::vector<std::string> nouns(1 + rng() % 8);
    for (auto& n : nouns) n = vocab[rng() % vocab.size()];
    auto p = build_validation_prompt("texte", nouns);
    nlohmann::json answer = nlohmann::json::object();
    for (const auto& id : p.ids) answer[id] = static_cast<int>(rng() % 2);
    auto parsed = parse_validation_response(answer.dump(), p.ids);
    std::vector<std::string> out;
    for (const auto& [id, v] : parsed.verdicts) out.push_back(id);
    auto in = p.ids;
    std::sort(in.begin(), in.end());
    CHECK(out == in);
    CHECK(parsed.missing.empty());
  }
}

TEST_CASE("cohen kappa reference cases") {
  auto same = cohen_kappa({1, 0, 1, 1, 0}, {1, 0, 1, 1, 0});
  CHECK(same.kappa == doctest::Approx(1.0).epsilon(1e-9));
  auto zero = cohen_kappa({1, 1, 0, 0}, {1, 0, 0, 1});
  CHECK(zero.observed == doctest::Approx(0.5));
  CHECK(zero.expected == doctest::Approx(0.5));
  CHECK(std::abs(zero.kappa) < 1e-9);
  CHECK(zero.confusion[1][1] == 1);
  CHECK(zero.confusion[1][0] == 1);
  CHECK(zero.confusion[0][1] == 1);
  CHECK(zero.confusion[0][0] == 1);
  CHECK(cohen_kappa({1, 1}, {1, 1}).kappa == 1.0);
  CHECK_THROWS_AS(cohen_kappa({1}, {1, 0}), DataError);
  CHECK_THROWS_AS(cohen_kappa({}, {}), DataError);
  CHECK_THROWS_AS(cohen_kappa({2}, {1}), DataError);
}

TEST_CASE("cohen kappa properties on random pairs") {
  std::mt19937_64 rng(31);
  for (int round = 0; round < 500; ++round) {
    std::size_t n = 1 + rng() % 40;
    std::vector<int> a(n), b(n);
    for (auto& x : a) x = static_cast<int>(rng() % 2);
    for (auto& x : b) x = static_cast<int>(rng() % 2);
    auto ab = cohen_kappa(a, b);
    auto ba = cohen_kappa(b, a);
    CHECK(std::abs(ab.kappa - ba.kappa) < 1e-9);
    CHECK(std::abs(ab.kappa - mgtest::reference_kappa(a, b)) < 1e-9);
    CHECK(ab.kappa >= -1.0 - 1e-12);
    CHECK(ab.kappa <= 1.0 + 1e-12);
    std::size_t sum = 0;
    for (auto& row : ab.confusion)
      for (auto c : row) sum += c;
    CHECK(sum == n);
    bool constant = std::all_of(a.begin(), a.end(), [&](int x) { return x == a[0]; });
    if (!constant) CHECK(std::abs(cohen_kappa(a, a).kappa - 1.0) < 1e-9);
  }
}

TEST_CASE("HTTP chat transport against a local server") {
  LocalServer srv;
  std::string seen_auth, seen_body;
  srv.server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    seen_auth = req.get_header_value("Authorization");
    seen_body = req.body;
    auto j = nlohmann::json::parse(req.body);
    auto user = j["messages"][1]["content"].get<std::string>();
    if (user == "limit") {
      res.status = 429;
      return;
    }
    if (user == "deny") {
      res.status = 401;
      return;
    }
    nlohmann::json out = {{"choices", {{{"message", {{"role", "assistant"}, {"content", "Bonjour"}}},
                                        {"finish_reason", user == "long" ? "length" : "stop"}}}}};
    res.set_content(out.dump(), "application/json");
  });
  srv.start();

  ::setenv("MGAUDIT_TEST_KEY", "secret", 1);
  ProviderConfig cfg;
  cfg.name = "local";
  cfg.endpoint = srv.url() + "/v1";
  cfg.credential_env = "MGAUDIT_TEST_KEY";
  cfg.timeout = std::chrono::milliseconds(5000);
  HttpChatTransport http(cfg);

  ChatRequest req;
  req.model_id = "m";
  req.system_prompt = "sys";
  req.user_prompt = "salut";
  req.temperature = 1.0;
  auto ok = http.complete(req);
  CHECK(ok.status == TransportStatus::ok);
  CHECK(ok.text == "Bonjour");
  CHECK(seen_auth == "Bearer secret");
  auto body = nlohmann::json::parse(seen_body);
  CHECK(body["model"] == "m");
  CHECK(body["temperature"] == 1.0);
  CHECK(body["messages"][0]["content"] == "sys");

  req.user_prompt = "long";
  CHECK(http.complete(req).status == TransportStatus::truncated);
  req.user_prompt = "limit";
  CHECK(http.complete(req).status == TransportStatus::rate_limited);
  req.user_prompt = "deny";
  CHECK(http.complete(req).status == TransportStatus::auth_error);
}

TEST_CASE("HTTP remote scorer") {
  LocalServer srv;
  srv.server.Post("/score", [](const httplib::Request& req, httplib::Response& res) {
    auto j = nlohmann::json::parse(req.body);
    if (j["word"] == "boom") {
      res.status = 500;
      return;
    }
    res.set_content(nlohmann::json{{"vote", j["word"] == "plombier" ? 1 : 0}}.dump(), "application/json");
  });
  srv.start();
  hscorer::HttpRemoteScorer remote(srv.url(), std::chrono::milliseconds(5000));
  CHECK(remote.vote("plombier", ""));
  CHECK_FALSE(remote.vote("table", "une table"));
  CHECK_THROWS_AS(remote.vote("boom", ""), hscorer::RemoteUnavailable);
  hscorer::HttpRemoteScorer nobody("http://127.0.0.1:1", std::chrono::milliseconds(500));
  CHECK_THROWS_AS(nobody.vote("x", ""), hscorer::RemoteUnavailable);
}
