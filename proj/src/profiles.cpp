#include "agentnet/profiles.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

#include "agentnet/errors.hpp"

namespace agentnet {

std::string to_string(AgentKind k) { return k == AgentKind::actor ? "actor" : "critic"; }

std::string AgentId::str() const {
    if (kind == AgentKind::actor) return "actor:" + std::to_string(node);
    return "critic:" + std::to_string(node) + "->" + std::to_string(dst);
}

std::vector<const AgentProfile*> ProfileLibrary::actors() const {
    std::vector<const AgentProfile*> out;
    for (const auto& p : templates)
        if (p.kind == AgentKind::actor) out.push_back(&p);
    return out;
}

std::vector<const AgentProfile*> ProfileLibrary::critics() const {
    std::vector<const AgentProfile*> out;
    for (const auto& p : templates)
        if (p.kind == AgentKind::critic) out.push_back(&p);
    return out;
}

ProfileLibrary default_library() {
    ProfileLibrary lib;
    lib.templates.push_back(
        {AgentKind::actor, "actor.default",
         "You are a solution author. Produce and refine work artifacts, wrapping every "
         "artifact in <ARTIFACT> and </ARTIFACT> delimiters.",
         0.2, 512});
    lib.templates.push_back(
        {AgentKind::critic, "critic.default",
         "You are a reviewer. Inspect the presented artifact and reply with one concrete, "
         "self-contained revision instruction, or <APPROVE> if no further change is needed.",
         0.7, 256});
    return lib;
}

std::string library_to_json(const ProfileLibrary& lib) {
    nlohmann::ordered_json j;
    auto arr = nlohmann::ordered_json::array();
    for (const auto& p : lib.templates) {
        nlohmann::ordered_json e;
        e["kind"] = to_string(p.kind);
        e["template_id"] = p.template_id;
        e["role_text"] = p.role_text;
        e["temperature"] = p.temperature;
        e["max_reply_tokens"] = p.max_reply_tokens;
        arr.push_back(std::move(e));
    }
    j["templates"] = std::move(arr);
    return j.dump(2) + "\n";
}

ProfileLibrary library_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("profile library parse failure: ") + e.what());
    }
    ProfileLibrary lib;
    try {
        for (const auto& e : j.at("templates")) {
            AgentProfile p;
            const std::string kind = e.at("kind").get<std::string>();
            if (kind == "actor")
                p.kind = AgentKind::actor;
            else if (kind == "critic")
                p.kind = AgentKind::critic;
            else
                throw ConfigError("profile kind must be actor or critic, got " + kind);
            p.template_id = e.at("template_id").get<std::string>();
            p.role_text = e.at("role_text").get<std::string>();
            p.temperature = e.value("temperature", p.kind == AgentKind::actor ? 0.2 : 0.7);
            p.max_reply_tokens = e.value("max_reply_tokens", 256u);
            lib.templates.push_back(std::move(p));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("profile library schema failure: ") + e.what());
    }
    return lib;
}

const AgentProfile& AgentAssignment::profile_of(const AgentId& id) const {
    if (id.kind == AgentKind::actor) {
        auto it = node_actors.find(id.node);
        if (it == node_actors.end()) throw ConfigError("no actor assigned to node " + id.str());
        return it->second;
    }
    auto it = edge_critics.find(Edge{id.node, id.dst});
    if (it == edge_critics.end()) throw ConfigError("no critic assigned to edge " + id.str());
    return it->second;
}

AgentAssignment agentize(const Topology& t, const ProfileLibrary& lib, std::uint64_t) {
    const auto actors = lib.actors();
    const auto critics = lib.critics();
    if (actors.empty()) throw ConfigError("profile library has no actor template");
    if (critics.empty() && !t.edges.empty())
        throw ConfigError("profile library has no critic template");

    AgentAssignment a;
    for (NodeId v = 0; v < t.node_count; ++v)
        a.node_actors[v] = *actors[v % actors.size()];

    std::vector<Edge> edges = t.edges;
    std::sort(edges.begin(), edges.end());
    for (std::size_t i = 0; i < edges.size(); ++i)
        a.edge_critics[edges[i]] = *critics[i % critics.size()];
    return a;
}

}  // namespace agentnet
