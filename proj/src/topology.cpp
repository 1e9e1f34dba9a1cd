#include "agentnet/topology.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <map>
#include <queue>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "agentnet/errors.hpp"
#include "agentnet/rng.hpp"

namespace agentnet {

namespace {

std::vector<std::vector<NodeId>> undirected_adjacency(const Topology& t) {
    std::vector<std::vector<NodeId>> adj(t.node_count);
    for (const Edge& e : t.edges) {
        if (e.src < t.node_count && e.dst < t.node_count && e.src != e.dst) {
            adj[e.src].push_back(e.dst);
            adj[e.dst].push_back(e.src);
        }
    }
    return adj;
}

// Count reachable nodes from 0 over the undirected projection, skipping
// edges marked dead. Used by the random generator's bridge checks.
bool weakly_connected(std::uint32_t n, const std::vector<Edge>& edges,
                      const std::vector<bool>& dead) {
    if (n == 0) return true;
    std::vector<std::vector<NodeId>> adj(n);
    for (std::size_t i = 0; i < edges.size(); ++i) {
        if (dead[i]) continue;
        adj[edges[i].src].push_back(edges[i].dst);
        adj[edges[i].dst].push_back(edges[i].src);
    }
    std::vector<bool> seen(n, false);
    std::deque<NodeId> q{0};
    seen[0] = true;
    std::uint32_t count = 1;
    while (!q.empty()) {
        NodeId v = q.front();
        q.pop_front();
        for (NodeId w : adj[v]) {
            if (!seen[w]) {
                seen[w] = true;
                ++count;
                q.push_back(w);
            }
        }
    }
    return count == n;
}

// Undirected bridges via Tarjan's low-link pass, iterative. Returns a flag
// per edge index in `edges` (dead edges skipped).
std::vector<bool> undirected_bridges(std::uint32_t n, const std::vector<Edge>& edges,
                                     const std::vector<bool>& dead) {
    struct Arc {
        NodeId to;
        std::size_t edge_index;
    };
    std::vector<std::vector<Arc>> adj(n);
    for (std::size_t i = 0; i < edges.size(); ++i) {
        if (dead[i]) continue;
        adj[edges[i].src].push_back({edges[i].dst, i});
        adj[edges[i].dst].push_back({edges[i].src, i});
    }
    std::vector<bool> bridge(edges.size(), false);
    std::vector<int> disc(n, -1), low(n, 0);
    int timer = 0;
    struct Frame {
        NodeId v;
        std::size_t arc = 0;
        std::size_t via_edge;
    };
    for (NodeId root = 0; root < n; ++root) {
        if (disc[root] != -1) continue;
        std::vector<Frame> stack{{root, 0, static_cast<std::size_t>(-1)}};
        disc[root] = low[root] = timer++;
        while (!stack.empty()) {
            Frame& f = stack.back();
            if (f.arc < adj[f.v].size()) {
                const Arc a = adj[f.v][f.arc++];
                if (a.edge_index == f.via_edge) continue;
                if (disc[a.to] == -1) {
                    disc[a.to] = low[a.to] = timer++;
                    stack.push_back({a.to, 0, a.edge_index});
                } else {
                    low[f.v] = std::min(low[f.v], disc[a.to]);
                }
            } else {
                const Frame done = f;
                stack.pop_back();
                if (!stack.empty()) {
                    Frame& parent = stack.back();
                    low[parent.v] = std::min(low[parent.v], low[done.v]);
                    if (low[done.v] > disc[parent.v]) bridge[done.via_edge] = true;
                }
            }
        }
    }
    return bridge;
}

}  // namespace

std::string to_string(TopologyKind k) {
    switch (k) {
        case TopologyKind::chain: return "chain";
        case TopologyKind::star: return "star";
        case TopologyKind::tree: return "tree";
        case TopologyKind::mesh: return "mesh";
        case TopologyKind::layer: return "layer";
        case TopologyKind::random_pruned: return "random";
        case TopologyKind::custom: return "custom";
    }
    return "custom";
}

TopologyKind topology_kind_from_string(const std::string& name) {
    if (name == "chain") return TopologyKind::chain;
    if (name == "star") return TopologyKind::star;
    if (name == "tree") return TopologyKind::tree;
    if (name == "mesh") return TopologyKind::mesh;
    if (name == "layer") return TopologyKind::layer;
    if (name == "random") return TopologyKind::random_pruned;
    if (name == "custom") return TopologyKind::custom;
    throw ConfigError("unknown topology kind: " + name);
}

std::uint64_t random_target_edges(std::uint32_t n) {
    if (n < 2) return 0;
    const std::uint64_t mesh_edges = static_cast<std::uint64_t>(n) * (n - 1) / 2;
    const std::uint64_t tree_edges = n - 1;
    return (mesh_edges + tree_edges + 1) / 2;  // ceil of the midpoint
}

Topology generate(TopologyKind kind, std::uint32_t n, std::uint64_t seed) {
    if (n == 0) throw ConfigError("topology size must be at least 1");
    Topology t;
    t.node_count = n;
    t.kind = kind;
    t.seed = seed;
    switch (kind) {
        case TopologyKind::chain:
            for (NodeId v = 0; v + 1 < n; ++v) t.edges.push_back({v, v + 1});
            break;
        case TopologyKind::star:
            for (NodeId v = 1; v < n; ++v) t.edges.push_back({0, v});
            break;
        case TopologyKind::tree:
            // Complete binary tree, level-filled left to right (heap layout).
            for (NodeId v = 1; v < n; ++v) t.edges.push_back({(v - 1) / 2, v});
            break;
        case TopologyKind::mesh:
            for (NodeId i = 0; i < n; ++i)
                for (NodeId j = i + 1; j < n; ++j) t.edges.push_back({i, j});
            break;
        case TopologyKind::layer: {
            const auto layers = static_cast<std::uint32_t>(std::ceil(std::sqrt(double(n))));
            const std::uint32_t base = n / layers, extra = n % layers;
            std::vector<std::vector<NodeId>> groups;
            NodeId next = 0;
            for (std::uint32_t l = 0; l < layers; ++l) {
                const std::uint32_t size = base + (l < extra ? 1 : 0);  // larger layers first
                std::vector<NodeId> g;
                for (std::uint32_t k = 0; k < size; ++k) g.push_back(next++);
                groups.push_back(std::move(g));
            }
            for (std::size_t l = 0; l + 1 < groups.size(); ++l)
                for (NodeId a : groups[l])
                    for (NodeId b : groups[l + 1]) t.edges.push_back({a, b});
            break;
        }
        case TopologyKind::random_pruned: {
            // Start from the mesh and repeatedly drop a uniformly chosen
            // non-bridge edge until the midpoint edge budget is reached.
            for (NodeId i = 0; i < n; ++i)
                for (NodeId j = i + 1; j < n; ++j) t.edges.push_back({i, j});
            const std::uint64_t target = random_target_edges(n);
            Rng rng(seed);
            std::vector<bool> dead(t.edges.size(), false);
            std::uint64_t alive = t.edges.size();
            while (alive > target) {
                const std::vector<bool> bridge = undirected_bridges(n, t.edges, dead);
                std::vector<std::size_t> removable;
                for (std::size_t i = 0; i < t.edges.size(); ++i)
                    if (!dead[i] && !bridge[i]) removable.push_back(i);
                if (removable.empty()) break;  // cannot happen while alive > n-1
                dead[removable[rng.uniform_below(removable.size())]] = true;
                --alive;
            }
            std::vector<Edge> kept;
            kept.reserve(alive);
            for (std::size_t i = 0; i < t.edges.size(); ++i)
                if (!dead[i]) kept.push_back(t.edges[i]);
            t.edges = std::move(kept);
            break;
        }
        case TopologyKind::custom:
            throw ConfigError("custom topologies are built, not generated");
    }
    std::sort(t.edges.begin(), t.edges.end());
    return t;
}

ValidationReport validate(const Topology& t) {
    ValidationReport report;
    for (const Edge& e : t.edges) {
        if (e.src >= t.node_count || e.dst >= t.node_count) {
            report.violations.push_back({Violation::Kind::bad_endpoint,
                                         "edge endpoint outside 0.." +
                                             std::to_string(t.node_count ? t.node_count - 1 : 0),
                                         {e.src, e.dst}});
        }
        if (e.src == e.dst)
            report.violations.push_back(
                {Violation::Kind::self_loop, "self loop at node " + std::to_string(e.src), {e.src}});
    }
    if (!report.violations.empty()) return report;

    std::vector<Edge> sorted = t.edges;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 1; i < sorted.size(); ++i) {
        if (sorted[i] == sorted[i - 1])
            report.violations.push_back({Violation::Kind::duplicate_edge,
                                         std::to_string(sorted[i].src) + "->" +
                                             std::to_string(sorted[i].dst) + " appears twice",
                                         {sorted[i].src, sorted[i].dst}});
    }

    // Kahn peel; leftovers witness a cycle.
    std::vector<std::uint32_t> indeg(t.node_count, 0);
    std::vector<std::vector<NodeId>> succ(t.node_count);
    for (const Edge& e : t.edges) {
        ++indeg[e.dst];
        succ[e.src].push_back(e.dst);
    }
    std::deque<NodeId> q;
    for (NodeId v = 0; v < t.node_count; ++v)
        if (indeg[v] == 0) q.push_back(v);
    std::vector<bool> peeled(t.node_count, false);
    std::uint32_t peeled_count = 0;
    while (!q.empty()) {
        NodeId v = q.front();
        q.pop_front();
        peeled[v] = true;
        ++peeled_count;
        for (NodeId w : succ[v])
            if (--indeg[w] == 0) q.push_back(w);
    }
    if (peeled_count < t.node_count) {
        NodeId start = 0;
        while (peeled[start]) ++start;
        // Walk successors inside the residue until a node repeats.
        std::vector<NodeId> walk{start};
        std::map<NodeId, std::size_t> seen_at{{start, 0}};
        NodeId cur = start;
        while (true) {
            NodeId next = t.node_count;
            for (NodeId w : succ[cur]) {
                if (!peeled[w]) {
                    next = w;
                    break;
                }
            }
            walk.push_back(next);
            auto it = seen_at.find(next);
            if (it != seen_at.end()) {
                std::vector<NodeId> cycle(walk.begin() + it->second, walk.end());
                report.violations.push_back(
                    {Violation::Kind::cycle, "cycle through node " + std::to_string(next), cycle});
                break;
            }
            seen_at[next] = walk.size() - 1;
            cur = next;
        }
    }

    if (t.node_count > 0) {
        auto adj = undirected_adjacency(t);
        std::vector<int> comp(t.node_count, -1);
        int comps = 0;
        for (NodeId v = 0; v < t.node_count; ++v) {
            if (comp[v] != -1) continue;
            std::deque<NodeId> bfs{v};
            comp[v] = comps;
            while (!bfs.empty()) {
                NodeId x = bfs.front();
                bfs.pop_front();
                for (NodeId w : adj[x])
                    if (comp[w] == -1) {
                        comp[w] = comps;
                        bfs.push_back(w);
                    }
            }
            ++comps;
        }
        if (comps > 1) {
            std::vector<NodeId> representatives;
            std::set<int> seen;
            for (NodeId v = 0; v < t.node_count; ++v)
                if (seen.insert(comp[v]).second) representatives.push_back(v);
            report.violations.push_back({Violation::Kind::disconnected,
                                         std::to_string(comps) + " weak components",
                                         representatives});
        }
    }
    return report;
}

TopologyMetrics metrics(const Topology& t) {
    TopologyMetrics m;
    m.node_count = t.node_count;
    m.edge_count = t.edges.size();
    const std::uint64_t pairs =
        t.node_count < 2 ? 0 : static_cast<std::uint64_t>(t.node_count) * (t.node_count - 1) / 2;
    m.density = pairs == 0 ? 0.0 : static_cast<double>(m.edge_count) / static_cast<double>(pairs);

    std::vector<std::uint32_t> indeg(t.node_count, 0), outdeg(t.node_count, 0);
    for (const Edge& e : t.edges) {
        ++outdeg[e.src];
        ++indeg[e.dst];
    }
    for (NodeId v = 0; v < t.node_count; ++v) {
        if (outdeg[v] > indeg[v]) ++m.divergent_node_count;
        if (indeg[v] > outdeg[v]) ++m.convergent_node_count;
        if (indeg[v] == 0) ++m.source_count;
        if (outdeg[v] == 0) ++m.sink_count;
    }

    // Undirected projection with deduplicated neighbor sets.
    std::vector<std::set<NodeId>> nbr(t.node_count);
    for (const Edge& e : t.edges) {
        if (e.src == e.dst) continue;
        nbr[e.src].insert(e.dst);
        nbr[e.dst].insert(e.src);
    }

    if (pairs > 0) {
        std::uint64_t reached_pairs = 0, dist_sum = 0;
        for (NodeId v = 0; v < t.node_count; ++v) {
            std::vector<int> dist(t.node_count, -1);
            std::deque<NodeId> q{v};
            dist[v] = 0;
            while (!q.empty()) {
                NodeId x = q.front();
                q.pop_front();
                for (NodeId w : nbr[x])
                    if (dist[w] == -1) {
                        dist[w] = dist[x] + 1;
                        q.push_back(w);
                    }
            }
            for (NodeId w = v + 1; w < t.node_count; ++w)
                if (dist[w] > 0) {
                    ++reached_pairs;
                    dist_sum += static_cast<std::uint64_t>(dist[w]);
                }
        }
        if (reached_pairs > 0)
            m.avg_path_length = static_cast<double>(dist_sum) / static_cast<double>(reached_pairs);
    }

    double coeff_sum = 0.0;
    for (NodeId v = 0; v < t.node_count; ++v) {
        const std::size_t k = nbr[v].size();
        if (k < 2) continue;
        std::uint64_t links = 0;
        for (auto it = nbr[v].begin(); it != nbr[v].end(); ++it) {
            auto jt = it;
            for (++jt; jt != nbr[v].end(); ++jt)
                if (nbr[*it].count(*jt)) ++links;
        }
        coeff_sum += 2.0 * static_cast<double>(links) / (double(k) * double(k - 1));
    }
    m.clustering_coefficient = t.node_count == 0 ? 0.0 : coeff_sum / double(t.node_count);
    return m;
}

Topology reverse(const Topology& t) {
    Topology r;
    r.node_count = t.node_count;
    r.kind = TopologyKind::custom;
    r.seed = t.seed;
    r.edges.reserve(t.edges.size());
    for (const Edge& e : t.edges) r.edges.push_back({e.dst, e.src});
    std::sort(r.edges.begin(), r.edges.end());
    return r;
}

Topology append_final_sink(const Topology& t) {
    const std::vector<NodeId> sinks = sinks_of(t);
    if (sinks.size() <= 1) return t;
    Topology out = t;
    const NodeId fresh = t.node_count;
    out.node_count = t.node_count + 1;
    for (NodeId s : sinks) out.edges.push_back({s, fresh});
    std::sort(out.edges.begin(), out.edges.end());
    out.kind = TopologyKind::custom;
    return out;
}

std::vector<NodeId> sources_of(const Topology& t) {
    std::vector<std::uint32_t> indeg(t.node_count, 0);
    for (const Edge& e : t.edges) ++indeg[e.dst];
    std::vector<NodeId> out;
    for (NodeId v = 0; v < t.node_count; ++v)
        if (indeg[v] == 0) out.push_back(v);
    return out;
}

std::vector<NodeId> sinks_of(const Topology& t) {
    std::vector<std::uint32_t> outdeg(t.node_count, 0);
    for (const Edge& e : t.edges) ++outdeg[e.src];
    std::vector<NodeId> out;
    for (NodeId v = 0; v < t.node_count; ++v)
        if (outdeg[v] == 0) out.push_back(v);
    return out;
}

std::vector<NodeId> parents_of(const Topology& t, NodeId v) {
    std::vector<NodeId> out;
    for (const Edge& e : t.edges)
        if (e.dst == v) out.push_back(e.src);
    std::sort(out.begin(), out.end());
    return out;
}

std::string topology_to_json(const Topology& t) {
    nlohmann::ordered_json j;
    j["kind"] = to_string(t.kind);
    j["n"] = t.node_count;
    if (t.seed)
        j["seed"] = *t.seed;
    else
        j["seed"] = nullptr;
    auto edges = nlohmann::ordered_json::array();
    std::vector<Edge> sorted = t.edges;
    std::sort(sorted.begin(), sorted.end());
    for (const Edge& e : sorted) edges.push_back({e.src, e.dst});
    j["edges"] = std::move(edges);
    return j.dump(2) + "\n";
}

Topology topology_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("topology json parse failure: ") + e.what());
    }
    Topology t;
    try {
        t.kind = topology_kind_from_string(j.at("kind").get<std::string>());
        t.node_count = j.at("n").get<std::uint32_t>();
        if (j.contains("seed") && !j["seed"].is_null()) t.seed = j["seed"].get<std::uint64_t>();
        for (const auto& pair : j.at("edges")) {
            if (!pair.is_array() || pair.size() != 2)
                throw ConfigError("topology json edge must be a [src, dst] pair");
            t.edges.push_back({pair[0].get<NodeId>(), pair[1].get<NodeId>()});
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("topology json schema failure: ") + e.what());
    }
    std::sort(t.edges.begin(), t.edges.end());
    return t;
}

std::string topology_to_dot(const Topology& t) {
    std::ostringstream out;
    out << "digraph topology {\n";
    out << "  graph [kind=\"" << to_string(t.kind) << "\", n=\"" << t.node_count << "\"";
    if (t.seed) out << ", seed=\"" << *t.seed << "\"";
    out << "];\n";
    for (NodeId v = 0; v < t.node_count; ++v) out << "  " << v << ";\n";
    std::vector<Edge> sorted = t.edges;
    std::sort(sorted.begin(), sorted.end());
    for (const Edge& e : sorted) out << "  " << e.src << " -> " << e.dst << ";\n";
    out << "}\n";
    return out.str();
}

Topology topology_from_dot(const std::string& text) {
    Topology t;
    t.kind = TopologyKind::custom;
    bool saw_n = false;
    std::istringstream in(text);
    std::string line;
    auto attr = [](const std::string& s, const std::string& key) -> std::optional<std::string> {
        const std::string needle = key + "=\"";
        const auto pos = s.find(needle);
        if (pos == std::string::npos) return std::nullopt;
        const auto end = s.find('"', pos + needle.size());
        if (end == std::string::npos) return std::nullopt;
        return s.substr(pos + needle.size(), end - pos - needle.size());
    };
    NodeId max_node = 0;
    bool any_node = false;
    while (std::getline(in, line)) {
        if (line.find("graph [") != std::string::npos) {
            if (auto k = attr(line, "kind")) t.kind = topology_kind_from_string(*k);
            if (auto n = attr(line, "n")) {
                t.node_count = static_cast<std::uint32_t>(std::stoul(*n));
                saw_n = true;
            }
            if (auto s = attr(line, "seed")) t.seed = std::stoull(*s);
            continue;
        }
        const auto arrow = line.find("->");
        std::istringstream ls(line);
        if (arrow != std::string::npos) {
            NodeId a, b;
            std::string arrow_tok;
            if (ls >> a >> arrow_tok >> b) {
                t.edges.push_back({a, b});
                max_node = std::max({max_node, a, b});
                any_node = true;
            }
        } else {
            NodeId v;
            if (ls >> v) {
                max_node = std::max(max_node, v);
                any_node = true;
            }
        }
    }
    if (!saw_n) t.node_count = any_node ? max_node + 1 : 0;
    if (t.node_count == 0) throw ConfigError("dot input has no nodes");
    std::sort(t.edges.begin(), t.edges.end());
    return t;
}

}  // namespace agentnet
