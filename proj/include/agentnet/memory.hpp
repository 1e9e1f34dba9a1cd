#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "agentnet/artifact.hpp"
#include "agentnet/profiles.hpp"
#include "agentnet/topology.hpp"

namespace agentnet {

// Whitespace-delimited word count. The unit of every token figure in this
// library's mock mode; live backends may substitute a model tokenizer.
std::uint64_t count_tokens(std::string_view text);

// Average message lengths used by the context growth model:
//   t task statement, p profile, i instruction, s artifact (wire form).
struct TokenParams {
    std::uint64_t t = 0;
    std::uint64_t p = 0;
    std::uint64_t i = 0;
    std::uint64_t s = 0;
    std::uint32_t m = 3;  // exchange-pair budget per leg
};

// Closed-form context totals for the mesh sink agent.
// With control (artifact-only propagation, linear in n):
//   t + p + s + m(i+s) * ((n-1) + 2(n-2))
// Without control (full dialogue propagation, quadratic in n):
//   t + p + s + (2m-1)(i+s) * (n(n-1)/2 + 2(n-2))
std::uint64_t closed_form_tokens(std::uint32_t n, const TokenParams& tp, bool memory_control);

// Leading coefficients of the two regimes: C = (2m-1)(i+s)/2 multiplies the
// quadratic term, Cbar = 3m(i+s) the linear one.
double closed_form_constant_c(const TokenParams& tp);
double closed_form_constant_cbar(const TokenParams& tp);

// Per-agent call accounting. prompt_tokens of a call counts the messages
// newly admitted to that agent's context (its running context growth);
// reply_tokens counts the reply. Running totals sum prompt tokens.
class TokenLedger {
  public:
    struct Call {
        std::uint32_t call_index = 0;
        std::uint64_t prompt_tokens = 0;
        std::uint64_t reply_tokens = 0;
    };

    TokenLedger() = default;
    TokenLedger(TokenLedger&& other) noexcept
        : calls_(std::move(other.calls_)), totals_(std::move(other.totals_)) {}
    TokenLedger& operator=(TokenLedger&& other) noexcept {
        calls_ = std::move(other.calls_);
        totals_ = std::move(other.totals_);
        return *this;
    }

    void record_call(const AgentId& agent, std::uint64_t prompt_tokens,
                     std::uint64_t reply_tokens);

    std::uint64_t total(const AgentId& agent) const;
    std::uint64_t grand_total() const;
    std::uint64_t call_count() const;
    const std::map<AgentId, std::vector<Call>>& calls() const { return calls_; }

    // Deterministic export: agents in canonical id order, calls in index
    // order. Header: agent_id,call_index,prompt_tokens,reply_tokens.
    std::string to_csv() const;

  private:
    std::map<AgentId, std::vector<Call>> calls_;
    std::map<AgentId, std::uint64_t> totals_;
    mutable std::mutex mu_;
};

// One artifact slot per node, written exactly once per run.
class LongTermStore {
  public:
    void write(NodeId node, Artifact a);
    bool has(NodeId node) const;
    const Artifact& read(NodeId node) const;
    std::size_t size() const { return slots_.size(); }
    std::map<NodeId, Artifact> snapshot() const;

  private:
    std::map<NodeId, Artifact> slots_;
    mutable std::mutex mu_;
};

// Scratch dialogue for one interaction unit. Cleared when the unit ends and
// never readable from another unit; messages carry their unit tag so the
// isolation property is checkable from the trace.
struct ShortTermBuffer {
    std::string unit_key;
    std::vector<std::string> messages;

    void clear() { messages.clear(); }
};

struct RunTrace;  // scheduler.hpp

// Measured context volume at the sink, queried from a finished run's trace.
// With memory control this is the sink actor's accumulated conversation
// (profile + task header, every prompt increment, every own reply, each
// counted once). Without control it is the distinct dialogue volume admitted
// into the sink's context: the refinement-leg dialogues of every edge that
// reaches the sink plus the sink's merge-leg dialogues, plus the profile,
// task, and seed-artifact singletons. Mirrors the closed forms above; exact
// for mesh under constant mock lengths and full leg budgets.
std::uint64_t measured_sink_context(const RunTrace& trace, const Topology& t,
                                    bool memory_control);

}  // namespace agentnet
