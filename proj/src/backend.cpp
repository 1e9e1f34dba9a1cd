#include "agentnet/backend.hpp"

#include <cstdlib>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "agentnet/errors.hpp"
#include "agentnet/memory.hpp"
#include "agentnet/rng.hpp"

namespace agentnet {

namespace {

std::uint64_t mix_messages(std::uint64_t seed, const std::vector<ChatMessage>& messages,
                           const std::string& template_id) {
    std::uint64_t h = splitmix64(seed ^ 0x5eedf00dULL);
    h = fnv1a(template_id, h);
    for (const auto& m : messages) {
        h = fnv1a(m.role, h);
        h = fnv1a("\x1f", h);
        h = fnv1a(m.content, h);
        h = fnv1a("\x1e", h);
    }
    return splitmix64(h);
}

std::string hex8(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(8, '0');
    for (int k = 7; k >= 0; --k) {
        out[k] = digits[v & 0xf];
        v >>= 4;
    }
    return out;
}

void pad_words(std::ostringstream& out, std::uint64_t h, std::uint64_t count) {
    for (std::uint64_t k = 0; k < count; ++k)
        out << " w" << hex8(splitmix64(h + 0x9e37 + k) & 0xffffffffULL).substr(3);
}

}  // namespace

CompletionResult MockBackend::complete(const std::vector<ChatMessage>& messages,
                                       double /*temperature*/, std::int64_t max_reply_tokens,
                                       const CallContext& ctx) {
    const std::uint64_t want =
        max_reply_tokens > 0 ? static_cast<std::uint64_t>(max_reply_tokens)
                             : cfg_.mock_reply_tokens;
    const std::uint64_t h = mix_messages(cfg_.mock_seed, messages, ctx.template_id);

    std::ostringstream body;
    if (ctx.critic) {
        // First token decides approval; the digest ties the reply to its inputs.
        if (h % 8 == 0)
            body << kApproveToken;
        else
            body << "revise-" << hex8(h);
        if (want > 1) pad_words(body, h, want - 1);
    } else {
        if (want >= 3) {
            body << "<ARTIFACT> d" << hex8(h);
            if (want > 3) pad_words(body, h ^ 0xabcdULL, want - 3);
            body << " </ARTIFACT>";
        } else {
            body << "d" << hex8(h);
            if (want > 1) pad_words(body, h, want - 1);
        }
    }

    CompletionResult r;
    r.text = body.str();
    std::uint64_t prompt = 0;
    for (const auto& m : messages) prompt += count_tokens(m.content);
    r.prompt_tokens = prompt;
    r.reply_tokens = count_tokens(r.text);
    return r;
}

LiveBackend::LiveBackend(BackendConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.endpoint_url.empty())
        throw ConfigError("live backend requires endpoint_url");
    if (cfg_.model_name.empty())
        throw ConfigError("live backend requires model_name");
    if (const char* key = std::getenv(cfg_.api_key_env_var.c_str())) api_key_ = key;
}

void LiveBackend::throttle() {
    if (cfg_.requests_per_minute == 0) return;
    using clock = std::chrono::steady_clock;
    std::unique_lock lock(mu_);
    while (true) {
        const auto now = clock::now();
        std::erase_if(recent_, [&](auto t) { return now - t > std::chrono::minutes(1); });
        if (recent_.size() < cfg_.requests_per_minute) {
            recent_.push_back(now);
            return;
        }
        const auto wake = recent_.front() + std::chrono::minutes(1);
        lock.unlock();
        std::this_thread::sleep_until(wake);
        lock.lock();
    }
}

CompletionResult LiveBackend::complete(const std::vector<ChatMessage>& messages,
                                       double temperature, std::int64_t max_reply_tokens,
                                       const CallContext&) {
    nlohmann::json body;
    body["model"] = cfg_.model_name;
    body["temperature"] = temperature;
    if (max_reply_tokens > 0) body["max_tokens"] = max_reply_tokens;
    auto arr = nlohmann::json::array();
    for (const auto& m : messages) arr.push_back({{"role", m.role}, {"content", m.content}});
    body["messages"] = std::move(arr);
    const std::string payload = body.dump();

    std::string last_error;
    for (std::uint32_t attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
        if (attempt > 0) {
            const double delay = cfg_.retry_base_delay_seconds * double(1u << (attempt - 1));
            std::this_thread::sleep_for(std::chrono::duration<double>(delay));
        }
        throttle();

        httplib::Client client(cfg_.endpoint_url);
        client.set_connection_timeout(std::chrono::duration<double>(cfg_.timeout_seconds));
        client.set_read_timeout(std::chrono::duration<double>(cfg_.timeout_seconds));
        httplib::Headers headers;
        if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

        auto res = client.Post("/chat/completions", headers, payload, "application/json");
        if (!res) {
            last_error = "transport failure: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 429 || res->status >= 500) {
            last_error = "http status " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200)
            throw BackendError("chat completion rejected with status " +
                               std::to_string(res->status) + ": " + res->body);
        try {
            const auto j = nlohmann::json::parse(res->body);
            CompletionResult r;
            r.text = j.at("choices").at(0).at("message").at("content").get<std::string>();
            if (j.contains("usage")) {
                r.prompt_tokens = j["usage"].value("prompt_tokens", 0ull);
                r.reply_tokens = j["usage"].value("completion_tokens", 0ull);
            }
            if (r.reply_tokens == 0) r.reply_tokens = count_tokens(r.text);
            return r;
        } catch (const nlohmann::json::exception& e) {
            throw BackendError(std::string("malformed chat completion response: ") + e.what());
        }
    }
    throw BackendError("chat completion failed after " + std::to_string(cfg_.max_retries + 1) +
                       " attempts; last error: " + last_error);
}

std::unique_ptr<Backend> make_backend(const BackendConfig& cfg) {
    if (cfg.mode == BackendMode::mock) return std::make_unique<MockBackend>(cfg);
    return std::make_unique<LiveBackend>(cfg);
}

std::optional<std::string> extract_artifact(const std::string& reply) {
    static const std::string open = "<ARTIFACT>", close = "</ARTIFACT>";
    const auto begin = reply.find(open);
    if (begin == std::string::npos) return std::nullopt;
    const auto end = reply.rfind(close);
    if (end == std::string::npos || end < begin + open.size()) return std::nullopt;
    std::string inner = reply.substr(begin + open.size(), end - begin - open.size());
    if (!inner.empty() && inner.front() == ' ') inner.erase(inner.begin());
    if (!inner.empty() && inner.back() == ' ') inner.pop_back();
    return inner;
}

std::string fence_artifact(const std::string& content) {
    return "<ARTIFACT> " + content + " </ARTIFACT>";
}

}  // namespace agentnet
