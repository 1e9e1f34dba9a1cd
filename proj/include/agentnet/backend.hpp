#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace agentnet {

struct ChatMessage {
    std::string role;  // system | user | assistant
    std::string content;
};

enum class BackendMode { mock, live };

struct BackendConfig {
    BackendMode mode = BackendMode::mock;
    // live
    std::string endpoint_url;  // base including any /v1 prefix
    std::string model_name;
    std::string api_key_env_var = "AGENTNET_API_KEY";
    double timeout_seconds = 30.0;
    std::uint32_t max_retries = 3;
    double retry_base_delay_seconds = 0.5;
    std::uint32_t requests_per_minute = 0;  // 0 = unlimited
    // mock
    std::uint64_t mock_seed = 0;
    std::uint32_t mock_reply_tokens = 64;  // fallback reply length
};

// Side-channel identity of the requesting agent. The mock derives its reply
// from this plus the messages; the live backend ignores it.
struct CallContext {
    std::string template_id;
    bool critic = false;
};

struct CompletionResult {
    std::string text;
    std::uint64_t prompt_tokens = 0;  // backend-reported when live, else wire count
    std::uint64_t reply_tokens = 0;
};

class Backend {
  public:
    virtual ~Backend() = default;
    // max_reply_tokens <= 0 falls back to the config default.
    virtual CompletionResult complete(const std::vector<ChatMessage>& messages,
                                      double temperature, std::int64_t max_reply_tokens,
                                      const CallContext& ctx = {}) = 0;
    virtual const BackendConfig& config() const = 0;
};

// Deterministic stand-in: the reply is a pure function of (mock_seed, the
// full message contents, the requesting template id), padded or truncated to
// the requested token length. Actor templates reply with a fenced artifact
// embedding a digest of the inputs; critic templates reply with either an
// instruction or <APPROVE> (probability 1/8, seed-determined).
class MockBackend final : public Backend {
  public:
    explicit MockBackend(BackendConfig cfg) : cfg_(std::move(cfg)) {}
    CompletionResult complete(const std::vector<ChatMessage>& messages, double temperature,
                              std::int64_t max_reply_tokens, const CallContext& ctx) override;
    const BackendConfig& config() const override { return cfg_; }

  private:
    BackendConfig cfg_;
};

// OpenAI-compatible chat completions client with exponential backoff on
// transport errors, HTTP 5xx, and 429. The bearer token comes from the
// environment variable named in the config.
class LiveBackend final : public Backend {
  public:
    explicit LiveBackend(BackendConfig cfg);
    CompletionResult complete(const std::vector<ChatMessage>& messages, double temperature,
                              std::int64_t max_reply_tokens, const CallContext& ctx) override;
    const BackendConfig& config() const override { return cfg_; }

  private:
    void throttle();
    BackendConfig cfg_;
    std::string api_key_;
    std::mutex mu_;
    std::vector<std::chrono::steady_clock::time_point> recent_;
};

std::unique_ptr<Backend> make_backend(const BackendConfig& cfg);

// Text between the first <ARTIFACT> and the last </ARTIFACT>, trimmed of
// one leading/trailing space; nullopt when either delimiter is missing.
std::optional<std::string> extract_artifact(const std::string& reply);

// Wire form used when presenting an artifact to an agent. Inverse of
// extract_artifact for the engine's own artifacts.
std::string fence_artifact(const std::string& content);

inline constexpr const char* kApproveToken = "<APPROVE>";

}  // namespace agentnet
