#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "agentnet/artifact.hpp"
#include "agentnet/backend.hpp"
#include "agentnet/memory.hpp"
#include "agentnet/profiles.hpp"
#include "agentnet/topology.hpp"

namespace agentnet {

// One critic-mediated interaction along an edge.
struct InteractionUnit {
    Edge edge;
    std::uint32_t order_index = 0;  // edge agent's slot in the interleaved agent sequence
    std::vector<NodeId> upstream_artifact_sources;  // parents of src
    std::uint32_t rounds_budget = 3;                // m exchange pairs per leg
};

// Topological execution plan. The interleaved agent sequence places every
// node agent before its outgoing edge agents and every edge agent before its
// dst node agent, so index(src) < index(edge) < index(dst) for all edges.
struct Schedule {
    Topology topology;
    std::vector<NodeId> node_order;              // Kahn order, lowest id first on ties
    std::vector<InteractionUnit> units;          // execution order
    std::vector<std::uint32_t> node_agent_index; // interleaved slot per node
};

// Throws CycleError (with witness) when t is cyclic.
Schedule compute_schedule(const Topology& t, std::uint32_t m = 3);

enum class AggregationMode { dialogue, single_call };

struct RunConfig {
    std::string task = "Produce a concise implementation plan for the requested system.";
    std::uint32_t m = 3;
    std::uint64_t seed = 0;
    bool memory_control = true;
    // When off, legs always spend their full budget; critics never end a leg
    // early with <APPROVE>.
    bool approval = true;
    AggregationMode aggregation = AggregationMode::dialogue;
    std::uint32_t workers = 1;
};

// --- trace -----------------------------------------------------------------
//
// Every backend call appends to exactly one agent's conversation: the new
// input messages (request=true) followed by the reply (request=false). A
// message that moves between conversations (a critic instruction handed to
// an actor, an artifact presented for review) is recorded once per
// conversation it enters, which makes per-agent context growth a pure sum
// over that agent's rows.

enum class LegKind { produce, feedback, refine, merge };

enum class MessageTag {
    profile,       // system role text, first call of an agent
    task,          // task statement, first call of an agent
    history,       // accumulated upstream dialogue (no-memory-control mode)
    presentation,  // fenced artifact shown to an agent
    instruction,   // critic directive (includes forwarded and re-sent copies)
    reattach,      // prior-round echo (no-memory-control mode)
    draft,         // actor reply
};

std::string to_string(LegKind k);
std::string to_string(MessageTag t);

struct TraceMessage {
    std::string unit_key;     // "p:<v>" | "e:<src>-><dst>" | "n:<v>"
    LegKind leg = LegKind::produce;
    std::uint32_t leg_seq = 0;  // merge legs: global leg index at the node
    std::uint32_t round = 0;    // exchange pair, 1-based
    AgentId conversation;       // whose context this message entered
    AgentId author;
    bool request = true;
    MessageTag tag = MessageTag::draft;
    std::uint64_t tokens = 0;
    std::string text;
};

struct EdgeTranscript {
    Edge edge;
    std::uint32_t feedback_pairs = 0;
    std::uint32_t refine_pairs = 0;
    bool feedback_approved = false;
    bool refine_approved = false;
    bool extraction_fallback = false;
    std::vector<TraceMessage> messages;
};

// Initial production at a source, or merge work at a convergent node.
struct NodeTranscript {
    NodeId node = 0;
    LegKind role = LegKind::produce;
    std::uint32_t merge_legs = 0;
    std::uint32_t merge_pairs = 0;
    bool extraction_fallback = false;
    std::vector<TraceMessage> messages;
};

struct RunTrace {
    Topology topology;
    RunConfig config;
    std::vector<EdgeTranscript> edge_transcripts;  // sorted by edge
    std::vector<NodeTranscript> node_transcripts;  // sorted by node
    std::map<NodeId, Artifact> node_artifacts;     // long-term store snapshot
    std::map<std::string, Artifact> artifacts;     // every artifact by id
    Artifact final_artifact;
    TokenLedger ledger;
    bool aborted = false;
    std::string error;
    double wall_seconds = 0.0;

    std::uint64_t total_edge_exchange_pairs() const;
};

// Runs one interaction unit: a feedback leg between the src side and the
// edge critic, then a refinement leg between the critic and the dst actor.
// Exposed for unit-level testing; execute() drives the same path with
// cross-unit bookkeeping (first-exposure seeding, history deltas).
struct EdgeInteractionResult {
    Artifact refined;
    EdgeTranscript transcript;
};
EdgeInteractionResult run_edge_interaction(const InteractionUnit& u, const Artifact& artifact_in,
                                           const AgentAssignment& a, Backend& b,
                                           const RunConfig& cfg, TokenLedger* ledger = nullptr);

// Left-fold pairwise merge, one backend call per fold. artifacts must be
// non-empty and sorted by producer; a singleton is returned unchanged. The
// merged artifact carries the aggregation marker, version 1 + max input
// version, and the full input list as lineage. Note: execute() defaults to
// dialogue aggregation (merge legs) instead, which matches the context
// closed forms; this single-call fold is the cheap alternative.
Artifact aggregate_incoming(const std::vector<Artifact>& artifacts, NodeId node, Backend& b);

// Executes the plan: sources produce, units run in schedule order (or
// concurrently when independent), convergent nodes merge, the unique sink's
// artifact is the result. Topology must have exactly one sink; apply
// append_final_sink first otherwise.
RunTrace execute(const Schedule& s, const AgentAssignment& a, Backend& b, const RunConfig& cfg);

}  // namespace agentnet
