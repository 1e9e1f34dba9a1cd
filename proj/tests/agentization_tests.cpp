#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "agentnet/errors.hpp"
#include "agentnet/profiles.hpp"
#include "agentnet/topology.hpp"

using namespace agentnet;

namespace {

ProfileLibrary two_actor_library() {
    ProfileLibrary lib;
    lib.templates.push_back({AgentKind::actor, "actor.a", "first author", 0.2, 64});
    lib.templates.push_back({AgentKind::actor, "actor.b", "second author", 0.3, 64});
    lib.templates.push_back({AgentKind::critic, "critic.a", "only reviewer", 0.7, 32});
    return lib;
}

}  // namespace

TEST_CASE("default library ships one actor and one critic template") {
    const ProfileLibrary lib = default_library();
    REQUIRE(lib.actors().size() == 1);
    REQUIRE(lib.critics().size() == 1);
    CHECK(lib.actors()[0]->temperature == doctest::Approx(0.2));
    CHECK(lib.critics()[0]->temperature == doctest::Approx(0.7));
    CHECK(lib.actors()[0]->role_text.find("<ARTIFACT>") != std::string::npos);
    CHECK(lib.critics()[0]->role_text.find("<APPROVE>") != std::string::npos);
}

TEST_CASE("agentize places one actor per node and one critic per edge") {
    const Topology t = generate(TopologyKind::mesh, 4);
    const AgentAssignment a = agentize(t, default_library());
    CHECK(a.node_actors.size() == 4);
    CHECK(a.edge_critics.size() == 6);
    CHECK(a.agent_count() == 10);
    for (const auto& [node, prof] : a.node_actors) CHECK(prof.kind == AgentKind::actor);
    for (const auto& [edge, prof] : a.edge_critics) CHECK(prof.kind == AgentKind::critic);
}

TEST_CASE("agentize cycles through actor templates in node order") {
    const Topology t = generate(TopologyKind::chain, 5);
    const AgentAssignment a = agentize(t, two_actor_library());
    CHECK(a.node_actors.at(0).template_id == "actor.a");
    CHECK(a.node_actors.at(1).template_id == "actor.b");
    CHECK(a.node_actors.at(2).template_id == "actor.a");
    CHECK(a.node_actors.at(3).template_id == "actor.b");
    CHECK(a.node_actors.at(4).template_id == "actor.a");
    for (const auto& [edge, prof] : a.edge_critics) CHECK(prof.template_id == "critic.a");
}

TEST_CASE("agentize requires an actor template, and a critic template when edges exist") {
    ProfileLibrary actorless;
    actorless.templates.push_back({AgentKind::critic, "critic.x", "reviewer", 0.7, 32});
    CHECK_THROWS_AS(agentize(generate(TopologyKind::chain, 2), actorless), ConfigError);

    ProfileLibrary criticless;
    criticless.templates.push_back({AgentKind::actor, "actor.x", "author", 0.2, 64});
    CHECK_THROWS_AS(agentize(generate(TopologyKind::chain, 2), criticless), ConfigError);
    // A single node has no edges, so no critic template is needed.
    const AgentAssignment solo = agentize(generate(TopologyKind::chain, 1), criticless);
    CHECK(solo.node_actors.size() == 1);
    CHECK(solo.edge_critics.empty());
}

TEST_CASE("profile_of resolves both agent kinds") {
    const Topology t = generate(TopologyKind::chain, 3);
    const AgentAssignment a = agentize(t, two_actor_library());
    CHECK(a.profile_of(actor_id(1)).template_id == "actor.b");
    CHECK(a.profile_of(critic_id({0, 1})).template_id == "critic.a");
    CHECK_THROWS_AS(a.profile_of(actor_id(99)), ConfigError);
}

TEST_CASE("agent ids print canonically and order actors before critics") {
    CHECK(actor_id(3).str() == "actor:3");
    CHECK(critic_id({0, 1}).str() == "critic:0->1");
    CHECK(actor_id(7) < critic_id({0, 1}));
    CHECK(critic_id({0, 1}) < critic_id({0, 2}));
    CHECK(critic_id({0, 2}) < critic_id({1, 0}));
}

TEST_CASE("library JSON round-trip preserves every template field") {
    const ProfileLibrary lib = two_actor_library();
    const ProfileLibrary back = library_from_json(library_to_json(lib));
    REQUIRE(back.templates.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(back.templates[i].kind == lib.templates[i].kind);
        CHECK(back.templates[i].template_id == lib.templates[i].template_id);
        CHECK(back.templates[i].role_text == lib.templates[i].role_text);
        CHECK(back.templates[i].temperature == doctest::Approx(lib.templates[i].temperature));
        CHECK(back.templates[i].max_reply_tokens == lib.templates[i].max_reply_tokens);
    }
}

TEST_CASE("malformed library JSON raises a configuration error") {
    CHECK_THROWS_AS(library_from_json("not json"), ConfigError);
    CHECK_THROWS_AS(library_from_json("{}"), ConfigError);
    CHECK_THROWS_AS(library_from_json(R"({"templates":[{"kind":"actor"}]})"), ConfigError);
}

TEST_CASE("assignment is deterministic") {
    const Topology t = generate(TopologyKind::layer, 9);
    const AgentAssignment a = agentize(t, two_actor_library());
    const AgentAssignment b = agentize(t, two_actor_library());
    REQUIRE(a.node_actors.size() == b.node_actors.size());
    for (const auto& [node, prof] : a.node_actors)
        CHECK(prof.template_id == b.node_actors.at(node).template_id);
}
