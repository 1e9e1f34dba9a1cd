#include "agentnet/memory.hpp"

#include <cctype>
#include <sstream>

#include "agentnet/errors.hpp"
#include "agentnet/scheduler.hpp"

namespace agentnet {

std::uint64_t count_tokens(std::string_view text) {
    std::uint64_t count = 0;
    bool in_word = false;
    for (char c : text) {
        bool ws = std::isspace(static_cast<unsigned char>(c)) != 0;
        if (!ws && !in_word) count += 1;
        in_word = !ws;
    }
    return count;
}

std::uint64_t closed_form_tokens(std::uint32_t n, const TokenParams& tp, bool memory_control) {
    if (n < 2) throw ConfigError("closed_form_tokens needs n >= 2");
    const std::uint64_t header = tp.t + tp.p + tp.s;
    const std::uint64_t pair = tp.i + tp.s;
    const std::uint64_t nn = n;
    if (memory_control) return header + std::uint64_t(tp.m) * pair * (3 * nn - 5);
    return header + (2 * std::uint64_t(tp.m) - 1) * pair * (nn * (nn - 1) / 2 + 2 * (nn - 2));
}

double closed_form_constant_c(const TokenParams& tp) {
    return (2.0 * tp.m - 1.0) * double(tp.i + tp.s) / 2.0;
}

double closed_form_constant_cbar(const TokenParams& tp) {
    return 3.0 * tp.m * double(tp.i + tp.s);
}

void TokenLedger::record_call(const AgentId& agent, std::uint64_t prompt_tokens,
                              std::uint64_t reply_tokens) {
    std::lock_guard<std::mutex> lk(mu_);
    auto& rows = calls_[agent];
    Call c;
    c.call_index = static_cast<std::uint32_t>(rows.size());
    c.prompt_tokens = prompt_tokens;
    c.reply_tokens = reply_tokens;
    rows.push_back(c);
    totals_[agent] += prompt_tokens;
}

std::uint64_t TokenLedger::total(const AgentId& agent) const {
    std::lock_guard<std::mutex> lk(mu_);
    auto it = totals_.find(agent);
    return it == totals_.end() ? 0 : it->second;
}

std::uint64_t TokenLedger::grand_total() const {
    std::lock_guard<std::mutex> lk(mu_);
    std::uint64_t sum = 0;
    for (const auto& [agent, total] : totals_) sum += total;
    return sum;
}

std::uint64_t TokenLedger::call_count() const {
    std::lock_guard<std::mutex> lk(mu_);
    std::uint64_t count = 0;
    for (const auto& [agent, rows] : calls_) count += rows.size();
    return count;
}

std::string TokenLedger::to_csv() const {
    std::lock_guard<std::mutex> lk(mu_);
    std::ostringstream out;
    out << "agent_id,call_index,prompt_tokens,reply_tokens\n";
    for (const auto& [agent, rows] : calls_)
        for (const Call& c : rows)
            out << agent.str() << ',' << c.call_index << ',' << c.prompt_tokens << ','
                << c.reply_tokens << '\n';
    return out.str();
}

void LongTermStore::write(NodeId node, Artifact a) {
    std::lock_guard<std::mutex> lk(mu_);
    auto [it, inserted] = slots_.emplace(node, std::move(a));
    if (!inserted)
        throw ConfigError("long-term slot for node " + std::to_string(node) +
                          " was already written");
}

bool LongTermStore::has(NodeId node) const {
    std::lock_guard<std::mutex> lk(mu_);
    return slots_.count(node) != 0;
}

const Artifact& LongTermStore::read(NodeId node) const {
    std::lock_guard<std::mutex> lk(mu_);
    auto it = slots_.find(node);
    if (it == slots_.end())
        throw ConfigError("long-term slot for node " + std::to_string(node) + " is empty");
    return it->second;
}

std::map<NodeId, Artifact> LongTermStore::snapshot() const {
    std::lock_guard<std::mutex> lk(mu_);
    return slots_;
}

std::uint64_t measured_sink_context(const RunTrace& trace, const Topology& t,
                                    bool memory_control) {
    if (trace.config.memory_control != memory_control)
        throw ConfigError("trace was recorded under the other memory regime");
    auto sinks = sinks_of(t);
    if (sinks.size() != 1) throw ConfigError("measured_sink_context needs exactly one sink");
    const AgentId sink = actor_id(sinks[0]);

    // Both regimes reduce to the same query: everything that entered the sink
    // actor's conversation, each message counted once. With control that is
    // header + presentations + its leg exchanges. Without control the history
    // deltas additionally admit every upstream refinement dialogue exactly
    // once, so the sum covers all dialogue that reaches the sink.
    std::uint64_t sum = 0;
    for (const auto& et : trace.edge_transcripts)
        for (const auto& msg : et.messages)
            if (msg.conversation == sink) sum += msg.tokens;
    for (const auto& nt : trace.node_transcripts)
        for (const auto& msg : nt.messages)
            if (msg.conversation == sink) sum += msg.tokens;
    return sum;
}

}  // namespace agentnet
