#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <httplib.h>

#include <atomic>
#include <cstdlib>
#include <nlohmann/json.hpp>
#include <thread>

#include "agentnet/backend.hpp"
#include "agentnet/errors.hpp"
#include "agentnet/memory.hpp"

using namespace agentnet;

namespace {

BackendConfig mock_config(std::uint64_t seed = 0) {
    BackendConfig cfg;
    cfg.mode = BackendMode::mock;
    cfg.mock_seed = seed;
    cfg.mock_reply_tokens = 16;
    return cfg;
}

std::vector<ChatMessage> sample_messages(const std::string& salt = "") {
    return {{"system", "You are a solution author."},
            {"user", "Draft the artifact now. " + salt}};
}

// In-process chat-completions stub. Each instance binds an ephemeral port.
class StubServer {
  public:
    explicit StubServer(std::function<void(const httplib::Request&, httplib::Response&)> handler)
        : handler_(std::move(handler)) {
        server_.Post("/chat/completions", [this](const httplib::Request& req,
                                                 httplib::Response& res) { handler_(req, res); });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    ~StubServer() {
        server_.stop();
        thread_.join();
    }

    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

  private:
    httplib::Server server_;
    std::function<void(const httplib::Request&, httplib::Response&)> handler_;
    int port_ = 0;
    std::thread thread_;
};

void reply_ok(httplib::Response& res, const std::string& text, std::uint64_t prompt = 0,
              std::uint64_t completion = 0) {
    nlohmann::json j;
    j["choices"] = {{{"message", {{"role", "assistant"}, {"content", text}}}}};
    if (prompt || completion)
        j["usage"] = {{"prompt_tokens", prompt}, {"completion_tokens", completion}};
    res.set_content(j.dump(), "application/json");
}

BackendConfig live_config(const std::string& url) {
    BackendConfig cfg;
    cfg.mode = BackendMode::live;
    cfg.endpoint_url = url;
    cfg.model_name = "stub-model";
    cfg.max_retries = 3;
    cfg.retry_base_delay_seconds = 0.01;
    cfg.timeout_seconds = 5.0;
    return cfg;
}

}  // namespace

TEST_CASE("mock replies are a pure function of seed, messages and template") {
    MockBackend b(mock_config(7));
    const CallContext ctx{"actor.default", false};
    const auto r1 = b.complete(sample_messages(), 0.2, 12, ctx);
    const auto r2 = b.complete(sample_messages(), 0.9, 12, ctx);
    CHECK(r1.text == r2.text);

    const auto other_msg = b.complete(sample_messages("x"), 0.2, 12, ctx);
    CHECK(other_msg.text != r1.text);

    const auto other_tpl = b.complete(sample_messages(), 0.2, 12, {"actor.alt", false});
    CHECK(other_tpl.text != r1.text);

    MockBackend b2(mock_config(8));
    const auto other_seed = b2.complete(sample_messages(), 0.2, 12, ctx);
    CHECK(other_seed.text != r1.text);
}

TEST_CASE("mock actor replies are fenced and hit the requested token count exactly") {
    MockBackend b(mock_config());
    for (std::int64_t want : {3, 4, 10, 64}) {
        const auto r = b.complete(sample_messages(), 0.2, want, {"actor.default", false});
        CAPTURE(want);
        CHECK(count_tokens(r.text) == std::uint64_t(want));
        CHECK(r.reply_tokens == std::uint64_t(want));
        const auto inner = extract_artifact(r.text);
        REQUIRE(inner.has_value());
        // Fencing costs exactly two wire tokens.
        CHECK(count_tokens(*inner) == std::uint64_t(want) - 2);
        CHECK(fence_artifact(*inner) == r.text);
    }
    // Below fencing size the reply degrades to bare words, still exact.
    const auto tiny = b.complete(sample_messages(), 0.2, 2, {"actor.default", false});
    CHECK(count_tokens(tiny.text) == 2);
    CHECK_FALSE(extract_artifact(tiny.text).has_value());
}

TEST_CASE("mock falls back to the configured reply length") {
    MockBackend b(mock_config());
    const auto r = b.complete(sample_messages(), 0.2, 0, {"actor.default", false});
    CHECK(count_tokens(r.text) == 16);
    const auto r2 = b.complete(sample_messages(), 0.2, -1, {"actor.default", false});
    CHECK(count_tokens(r2.text) == 16);
}

TEST_CASE("mock critic replies approve or instruct, at the exact length") {
    MockBackend b(mock_config(3));
    int approvals = 0;
    const int trials = 400;
    for (int k = 0; k < trials; ++k) {
        const auto r =
            b.complete(sample_messages(std::to_string(k)), 0.7, 10, {"critic.default", true});
        CHECK(count_tokens(r.text) == 10);
        const bool approved = r.text.rfind(kApproveToken, 0) == 0;
        const bool revision = r.text.rfind("revise-", 0) == 0;
        CHECK((approved || revision));
        approvals += approved ? 1 : 0;
    }
    // Approval fires on one digest residue out of eight.
    CHECK(approvals > trials / 8 / 2);
    CHECK(approvals < trials / 8 * 2);
}

TEST_CASE("mock reports wire prompt tokens") {
    MockBackend b(mock_config());
    const std::vector<ChatMessage> msgs{{"system", "one two three"}, {"user", "four five"}};
    const auto r = b.complete(msgs, 0.2, 8, {"actor.default", false});
    CHECK(r.prompt_tokens == 5);
}

TEST_CASE("artifact fencing round-trips and rejects unfenced text") {
    CHECK(fence_artifact("alpha beta") == "<ARTIFACT> alpha beta </ARTIFACT>");
    CHECK(extract_artifact("<ARTIFACT> alpha beta </ARTIFACT>") == "alpha beta");
    CHECK(extract_artifact("pre <ARTIFACT> x </ARTIFACT> post") == "x");
    CHECK(extract_artifact("<ARTIFACT> a </ARTIFACT> mid <ARTIFACT> b </ARTIFACT>") ==
          "a </ARTIFACT> mid <ARTIFACT> b");
    CHECK_FALSE(extract_artifact("no fences here").has_value());
    CHECK_FALSE(extract_artifact("<ARTIFACT> unterminated").has_value());
    CHECK_FALSE(extract_artifact("backwards </ARTIFACT> then <ARTIFACT>").has_value());
}

TEST_CASE("make_backend dispatches on mode") {
    auto mock = make_backend(mock_config());
    CHECK(dynamic_cast<MockBackend*>(mock.get()) != nullptr);
    CHECK_THROWS_AS(make_backend(live_config("")), ConfigError);
}

TEST_CASE("live backend posts a chat completion with auth and model fields") {
    nlohmann::json seen_body;
    std::string seen_auth;
    StubServer server([&](const httplib::Request& req, httplib::Response& res) {
        seen_body = nlohmann::json::parse(req.body);
        if (req.has_header("Authorization")) seen_auth = req.get_header_value("Authorization");
        reply_ok(res, "stub reply text", 21, 3);
    });

    setenv("AGENTNET_TEST_KEY", "sk-test-123", 1);
    BackendConfig cfg = live_config(server.url());
    cfg.api_key_env_var = "AGENTNET_TEST_KEY";
    LiveBackend b(cfg);
    const auto r = b.complete(sample_messages(), 0.4, 32, {});

    CHECK(r.text == "stub reply text");
    CHECK(r.prompt_tokens == 21);
    CHECK(r.reply_tokens == 3);
    CHECK(seen_auth == "Bearer sk-test-123");
    CHECK(seen_body["model"] == "stub-model");
    CHECK(seen_body["temperature"] == doctest::Approx(0.4));
    CHECK(seen_body["max_tokens"] == 32);
    REQUIRE(seen_body["messages"].size() == 2);
    CHECK(seen_body["messages"][0]["role"] == "system");
    CHECK(seen_body["messages"][1]["content"].get<std::string>().rfind("Draft", 0) == 0);
}

TEST_CASE("live backend omits max_tokens when no limit is requested") {
    nlohmann::json seen_body;
    StubServer server([&](const httplib::Request& req, httplib::Response& res) {
        seen_body = nlohmann::json::parse(req.body);
        reply_ok(res, "three word reply");
    });
    LiveBackend b(live_config(server.url()));
    const auto r = b.complete(sample_messages(), 0.0, 0, {});
    CHECK_FALSE(seen_body.contains("max_tokens"));
    // Token counts fall back to a wire count when usage is absent.
    CHECK(r.reply_tokens == 3);
}

TEST_CASE("live backend retries server errors and rate limits") {
    std::atomic<int> hits{0};
    StubServer server([&](const httplib::Request&, httplib::Response& res) {
        const int n = ++hits;
        if (n == 1) {
            res.status = 500;
        } else if (n == 2) {
            res.status = 429;
        } else {
            reply_ok(res, "recovered");
        }
    });
    LiveBackend b(live_config(server.url()));
    const auto r = b.complete(sample_messages(), 0.2, 8, {});
    CHECK(r.text == "recovered");
    CHECK(hits.load() == 3);
}

TEST_CASE("live backend surfaces exhausted retries as a backend error") {
    std::atomic<int> hits{0};
    StubServer server([&](const httplib::Request&, httplib::Response& res) {
        ++hits;
        res.status = 503;
    });
    BackendConfig cfg = live_config(server.url());
    cfg.max_retries = 2;
    LiveBackend b(cfg);
    CHECK_THROWS_AS(b.complete(sample_messages(), 0.2, 8, {}), BackendError);
    CHECK(hits.load() == 3);
}

TEST_CASE("live backend treats a client error as fatal, not retryable") {
    std::atomic<int> hits{0};
    StubServer server([&](const httplib::Request&, httplib::Response& res) {
        ++hits;
        res.status = 400;
        res.set_content("bad request", "text/plain");
    });
    LiveBackend b(live_config(server.url()));
    CHECK_THROWS_AS(b.complete(sample_messages(), 0.2, 8, {}), BackendError);
    CHECK(hits.load() == 1);
}

TEST_CASE("live backend rejects malformed completion payloads") {
    StubServer server([&](const httplib::Request&, httplib::Response& res) {
        res.set_content("{\"choices\":[]}", "application/json");
    });
    LiveBackend b(live_config(server.url()));
    CHECK_THROWS_AS(b.complete(sample_messages(), 0.2, 8, {}), BackendError);
}

TEST_CASE("live backend configuration is validated up front") {
    BackendConfig cfg = live_config("http://127.0.0.1:1");
    cfg.model_name.clear();
    CHECK_THROWS_AS(LiveBackend{cfg}, ConfigError);
}
