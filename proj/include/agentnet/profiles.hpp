#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "agentnet/topology.hpp"

namespace agentnet {

enum class AgentKind { actor, critic };

std::string to_string(AgentKind k);

struct AgentProfile {
    AgentKind kind = AgentKind::actor;
    std::string template_id;
    std::string role_text;
    double temperature = 0.2;  // critics default to 0.7
    std::uint32_t max_reply_tokens = 256;
};

// Template pool the assignment draws from. Load/save round-trip JSON.
struct ProfileLibrary {
    std::vector<AgentProfile> templates;

    std::vector<const AgentProfile*> actors() const;
    std::vector<const AgentProfile*> critics() const;
};

ProfileLibrary default_library();
std::string library_to_json(const ProfileLibrary& lib);
ProfileLibrary library_from_json(const std::string& text);

// Identity of one agent instance: an actor per node, a critic per edge.
struct AgentId {
    AgentKind kind = AgentKind::actor;
    NodeId node = 0;  // actor: its node; critic: edge src
    NodeId dst = 0;   // critic only: edge dst

    auto operator<=>(const AgentId&) const = default;
    std::string str() const;
};

inline AgentId actor_id(NodeId v) { return {AgentKind::actor, v, 0}; }
inline AgentId critic_id(Edge e) { return {AgentKind::critic, e.src, e.dst}; }

// Deterministic role assignment: actors cycle through the library's actor
// templates in node order, critics through the critic templates in edge
// order. seed is reserved for future stochastic assignment policies.
struct AgentAssignment {
    std::map<NodeId, AgentProfile> node_actors;
    std::map<Edge, AgentProfile> edge_critics;

    std::size_t agent_count() const { return node_actors.size() + edge_critics.size(); }
    const AgentProfile& profile_of(const AgentId& id) const;
};

AgentAssignment agentize(const Topology& t, const ProfileLibrary& lib, std::uint64_t seed = 0);

}  // namespace agentnet
