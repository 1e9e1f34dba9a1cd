#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace agentnet {

using NodeId = std::uint32_t;

struct Edge {
    NodeId src = 0;
    NodeId dst = 0;
    auto operator<=>(const Edge&) const = default;
};

enum class TopologyKind { chain, star, tree, mesh, layer, random_pruned, custom };

std::string to_string(TopologyKind k);
TopologyKind topology_kind_from_string(const std::string& name);

// A directed graph over nodes 0..node_count-1. Plain data on purpose:
// validate() reports violations instead of the constructor enforcing them,
// so malformed graphs can be represented and diagnosed.
struct Topology {
    std::uint32_t node_count = 0;
    std::vector<Edge> edges;  // kept sorted lexicographically
    TopologyKind kind = TopologyKind::custom;
    std::optional<std::uint64_t> seed;
};

struct Violation {
    enum class Kind { self_loop, duplicate_edge, cycle, disconnected, bad_endpoint };
    Kind kind;
    std::string detail;
    // cycle: witness walk; disconnected: one node per stranded component.
    std::vector<NodeId> nodes;
};

struct ValidationReport {
    std::vector<Violation> violations;
    bool ok() const { return violations.empty(); }
};

struct TopologyMetrics {
    std::uint32_t node_count = 0;
    std::uint64_t edge_count = 0;
    double density = 0.0;  // edges / (n*(n-1)/2); defined as 0 for n < 2
    std::optional<double> avg_path_length;       // undirected projection
    double clustering_coefficient = 0.0;         // undirected projection
    std::uint32_t divergent_node_count = 0;      // out-degree > in-degree
    std::uint32_t convergent_node_count = 0;     // in-degree > out-degree
    std::uint32_t source_count = 0;
    std::uint32_t sink_count = 0;
};

// Generates one of the named families over n nodes. seed only matters for
// the random kind (edge pruning order); it is recorded on the result either
// way. Throws ConfigError for n == 0.
Topology generate(TopologyKind kind, std::uint32_t n, std::uint64_t seed = 0);

ValidationReport validate(const Topology& t);

TopologyMetrics metrics(const Topology& t);

// Flips every edge. Involution up to the kind field, which becomes custom.
Topology reverse(const Topology& t);

// Adds node n plus an edge from every existing sink when the graph has more
// than one sink; otherwise returns the input unchanged. Idempotent.
Topology append_final_sink(const Topology& t);

// Closed-form edge count of the random kind's pruning target:
// ceil((mesh_edges + (n-1)) / 2), the midpoint of mesh and tree budgets.
std::uint64_t random_target_edges(std::uint32_t n);

std::vector<NodeId> sources_of(const Topology& t);
std::vector<NodeId> sinks_of(const Topology& t);
std::vector<NodeId> parents_of(const Topology& t, NodeId v);

// Serialization. JSON is the full-fidelity format; DOT round-trips the
// subset this library emits (graph attribute line + edge statements).
std::string topology_to_json(const Topology& t);
Topology topology_from_json(const std::string& text);
std::string topology_to_dot(const Topology& t);
Topology topology_from_dot(const std::string& text);

}  // namespace agentnet
