#include "agentnet/report.hpp"

#include <nlohmann/json.hpp>
#include <ostream>

#include "agentnet/errors.hpp"

namespace agentnet {

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json message_json(const TraceMessage& msg) {
    ordered_json j;
    j["unit"] = msg.unit_key;
    j["leg"] = to_string(msg.leg);
    j["leg_seq"] = msg.leg_seq;
    j["round"] = msg.round;
    j["conversation"] = msg.conversation.str();
    j["author"] = msg.author.str();
    j["request"] = msg.request;
    j["tag"] = to_string(msg.tag);
    j["tokens"] = msg.tokens;
    j["text"] = msg.text;
    return j;
}

ordered_json artifact_json(const Artifact& a) {
    ordered_json j;
    j["id"] = a.id;
    if (a.producer)
        j["producer"] = *a.producer;
    else
        j["producer"] = nullptr;
    j["version"] = a.version;
    j["token_count"] = a.token_count;
    j["lineage"] = a.lineage;
    j["content"] = a.content;
    return j;
}

}  // namespace

void write_trace_jsonl(const RunTrace& trace, std::ostream& out) {
    for (const auto& et : trace.edge_transcripts)
        for (const auto& msg : et.messages) out << message_json(msg).dump() << '\n';
    for (const auto& nt : trace.node_transcripts)
        for (const auto& msg : nt.messages) out << message_json(msg).dump() << '\n';
}

std::string run_summary_json(const RunTrace& trace, bool include_meta) {
    ordered_json j;
    j["topology"]["kind"] = to_string(trace.topology.kind);
    j["topology"]["nodes"] = trace.topology.node_count;
    j["topology"]["edges"] = trace.topology.edges.size();

    const RunConfig& cfg = trace.config;
    j["config"]["task"] = cfg.task;
    j["config"]["rounds_per_leg"] = cfg.m;
    j["config"]["seed"] = cfg.seed;
    j["config"]["memory_control"] = cfg.memory_control;
    j["config"]["approval"] = cfg.approval;
    j["config"]["aggregation"] =
        cfg.aggregation == AggregationMode::dialogue ? "dialogue" : "single_call";
    j["config"]["workers"] = cfg.workers;

    std::uint32_t merge_legs = 0;
    std::uint32_t merge_pairs = 0;
    std::uint32_t fallbacks = 0;
    for (const auto& nt : trace.node_transcripts) {
        merge_legs += nt.merge_legs;
        merge_pairs += nt.merge_pairs;
        fallbacks += nt.extraction_fallback ? 1 : 0;
    }
    for (const auto& et : trace.edge_transcripts) fallbacks += et.extraction_fallback ? 1 : 0;

    std::uint64_t reply_total = 0;
    for (const auto& [agent, rows] : trace.ledger.calls())
        for (const auto& c : rows) reply_total += c.reply_tokens;

    j["counts"]["actors"] = trace.topology.node_count;
    j["counts"]["critics"] = trace.topology.edges.size();
    j["counts"]["backend_calls"] = trace.ledger.call_count();
    j["counts"]["edge_exchange_pairs"] = trace.total_edge_exchange_pairs();
    j["counts"]["merge_legs"] = merge_legs;
    j["counts"]["merge_pairs"] = merge_pairs;
    j["counts"]["extraction_fallbacks"] = fallbacks;

    j["tokens"]["prompt_total"] = trace.ledger.grand_total();
    j["tokens"]["reply_total"] = reply_total;
    auto sinks = sinks_of(trace.topology);
    if (sinks.size() == 1 && !trace.aborted)
        j["tokens"]["sink_context"] =
            measured_sink_context(trace, trace.topology, cfg.memory_control);

    j["aborted"] = trace.aborted;
    if (trace.aborted) j["error"] = trace.error;
    if (!trace.aborted) j["final_artifact"] = artifact_json(trace.final_artifact);
    if (include_meta) j["meta"]["wall_seconds"] = trace.wall_seconds;
    return j.dump(2) + "\n";
}

void write_ledger_csv(const RunTrace& trace, std::ostream& out) { out << trace.ledger.to_csv(); }

}  // namespace agentnet
