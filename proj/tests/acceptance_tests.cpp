#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "agentnet/analysis.hpp"
#include "agentnet/backend.hpp"
#include "agentnet/errors.hpp"
#include "agentnet/memory.hpp"
#include "agentnet/profiles.hpp"
#include "agentnet/report.hpp"
#include "agentnet/rng.hpp"
#include "agentnet/scheduler.hpp"
#include "agentnet/topology.hpp"

using namespace agentnet;

// Final gate: each case checks one shipping requirement end to end and
// prints a single verdict line so the suite doubles as a checklist.

namespace {

void report(int index, const char* label, bool pass) {
    std::printf("ACCEPTANCE %d %s - %s\n", index, pass ? "PASS" : "FAIL", label);
    std::fflush(stdout);
}

const TopologyKind kAllKinds[] = {TopologyKind::chain,  TopologyKind::star,
                                  TopologyKind::tree,   TopologyKind::mesh,
                                  TopologyKind::layer,  TopologyKind::random_pruned};

std::uint64_t expected_edge_count(TopologyKind k, std::uint32_t n) {
    const std::uint64_t mesh = std::uint64_t(n) * (n - 1) / 2;
    switch (k) {
        case TopologyKind::chain:
        case TopologyKind::star:
        case TopologyKind::tree:
            return n - 1;
        case TopologyKind::mesh:
            return mesh;
        case TopologyKind::layer: {
            const auto layers = std::uint32_t(std::ceil(std::sqrt(double(n))));
            const std::uint32_t base = n / layers, extra = n % layers;
            std::uint64_t total = 0;
            std::uint32_t prev = 0;
            for (std::uint32_t l = 0; l < layers; ++l) {
                const std::uint32_t size = base + (l < extra ? 1 : 0);
                if (l > 0) total += std::uint64_t(prev) * size;
                prev = size;
            }
            return total;
        }
        case TopologyKind::random_pruned:
            return (mesh + (n - 1) + 1) / 2;
        case TopologyKind::custom:
            break;
    }
    return 0;
}

ProfileLibrary ten_token_library() {
    ProfileLibrary lib;
    lib.templates.push_back({AgentKind::actor, "actor.ten",
                             "You draft artifacts between ARTIFACT fences when asked to here",
                             0.2, 10});
    lib.templates.push_back({AgentKind::critic, "critic.ten",
                             "You critique drafts and reply with one concise instruction each",
                             0.7, 10});
    return lib;
}

RunConfig ten_token_config(bool memory_control, bool approval) {
    RunConfig cfg;
    cfg.task = "please design one small tool for counting words right now";
    cfg.m = 3;
    cfg.memory_control = memory_control;
    cfg.approval = approval;
    return cfg;
}

RunTrace run_ten(const Topology& t, bool memory_control, bool approval,
                 std::uint32_t workers = 1) {
    const AgentAssignment a = agentize(t, ten_token_library());
    const Schedule s = compute_schedule(t, 3);
    BackendConfig bc;
    bc.mock_reply_tokens = 10;
    MockBackend b(bc);
    RunConfig cfg = ten_token_config(memory_control, approval);
    cfg.workers = workers;
    return execute(s, a, b, cfg);
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

TEST_CASE("1: every topology family validates at every scale") {
    const auto start = std::chrono::steady_clock::now();
    bool pass = true;
    for (auto k : kAllKinds)
        for (std::uint32_t n = 1; n <= 32; ++n)
            for (std::uint64_t seed = 0; seed < 5; ++seed) {
                const Topology t = generate(k, n, seed);
                pass = pass && validate(t).ok();
                pass = pass && t.edges.size() == expected_edge_count(k, n);
            }
    const double elapsed = seconds_since(start);
    pass = pass && elapsed < 5.0;
    report(1, "six families x n=1..32 x 5 seeds validate with exact edge counts", pass);
    CHECK(pass);
    CHECK(elapsed < 5.0);
}

TEST_CASE("2: the execution plan always orders src, critic, dst") {
    bool pass = true;
    std::uint64_t violations = 0;
    for (auto k : kAllKinds)
        for (std::uint32_t n = 1; n <= 32; ++n)
            for (std::uint64_t seed = 0; seed < 5; ++seed) {
                const Schedule s = compute_schedule(generate(k, n, seed));
                for (const auto& u : s.units) {
                    const bool ok = s.node_agent_index[u.edge.src] < u.order_index &&
                                    u.order_index < s.node_agent_index[u.edge.dst];
                    violations += ok ? 0 : 1;
                }
            }
    pass = violations == 0;
    report(2, "interleaved agent ordering holds with zero violations", pass);
    CHECK(violations == 0);
}

TEST_CASE("3: sink context growth matches the closed forms") {
    TokenParams tp;
    tp.t = tp.p = tp.i = tp.s = 10;
    tp.m = 3;
    bool exact_controlled = true, bounded_uncontrolled = true;
    std::vector<double> ns, controlled, uncontrolled;
    for (std::uint32_t n : {4u, 8u, 16u}) {
        const Topology t = generate(TopologyKind::mesh, n);
        const RunTrace ctrl = run_ten(t, true, false);
        const RunTrace open = run_ten(t, false, false);
        const std::uint64_t measured_ctrl = measured_sink_context(ctrl, t, true);
        const std::uint64_t measured_open = measured_sink_context(open, t, false);
        const std::uint64_t closed_ctrl = closed_form_tokens(n, tp, true);
        const std::uint64_t closed_open = closed_form_tokens(n, tp, false);
        exact_controlled = exact_controlled && measured_ctrl == closed_ctrl;
        const double rel = std::abs(double(measured_open) - double(closed_open)) /
                           double(closed_open);
        bounded_uncontrolled = bounded_uncontrolled && rel <= 0.05;
        ns.push_back(double(n));
        controlled.push_back(double(measured_ctrl));
        uncontrolled.push_back(double(measured_open));
    }
    const PolyFit lin_ctrl = polyfit(ns, controlled, 1);
    const PolyFit lin_open = polyfit(ns, uncontrolled, 1);
    const PolyFit quad_open = polyfit(ns, uncontrolled, 2);
    const bool linear_ok = lin_ctrl.r2 > 0.99;
    const bool quadratic_ok = quad_open.sse < 0.5 * lin_open.sse;
    const bool pass = exact_controlled && bounded_uncontrolled && linear_ok && quadratic_ok;
    report(3, "context grows linearly with control, quadratically without", pass);
    CHECK(exact_controlled);
    CHECK(bounded_uncontrolled);
    CHECK(linear_ok);
    CHECK(quadratic_ok);
}

TEST_CASE("4: every edge interaction spends a bounded exchange budget") {
    bool full_budget_exact = true, bounds_hold = true;
    for (auto k : kAllKinds)
        for (std::uint32_t n : {4u, 8u}) {
            const Topology t = append_final_sink(generate(k, n, 2));
            const RunTrace spend_all = run_ten(t, true, false);
            std::uint64_t total = 0;
            for (const auto& et : spend_all.edge_transcripts) {
                full_budget_exact =
                    full_budget_exact && et.feedback_pairs + et.refine_pairs == 6;
                total += et.feedback_pairs + et.refine_pairs;
            }
            full_budget_exact = full_budget_exact && total == 6 * t.edges.size();

            const RunTrace approved = run_ten(t, true, true);
            for (const auto& et : approved.edge_transcripts) {
                const std::uint32_t pairs = et.feedback_pairs + et.refine_pairs;
                bounds_hold = bounds_hold && pairs >= 2 && pairs <= 6;
            }
        }
    const bool pass = full_budget_exact && bounds_hold;
    report(4, "pairs per edge stay within [2, 2m], exactly 2m|E| at full budget", pass);
    CHECK(full_budget_exact);
    CHECK(bounds_hold);
}

TEST_CASE("5: curve fitting recovers known scaling parameters") {
    const auto start = std::chrono::steady_clock::now();
    ScalingFit truth;
    truth.alpha = 3.0;
    truth.beta = 1.5;
    truth.gamma = 0.3;
    truth.delta = 0.55;

    auto samples = [&](double sigma, std::uint64_t seed) {
        Rng rng(seed);
        std::vector<ScalePoint> points;
        for (int k = 0; k <= 6; ++k) {
            ScalePoint p;
            p.node_count = 1u << k;
            p.quality = logistic_log2(double(p.node_count), truth) + sigma * rng.normal();
            points.push_back(p);
        }
        return points;
    };
    auto within = [&](const ScalingFit& f, double tol) {
        return std::abs(f.alpha - truth.alpha) <= tol * std::abs(truth.alpha) &&
               std::abs(f.beta - truth.beta) <= tol * std::abs(truth.beta) &&
               std::abs(f.gamma - truth.gamma) <= tol * std::abs(truth.gamma) &&
               std::abs(f.delta - truth.delta) <= tol * std::abs(truth.delta);
    };

    const ScalingFit clean = fit_scaling_curve(samples(0.0, 0));
    const bool clean_ok = within(clean, 0.01);
    const ScalingFit noisy = fit_scaling_curve(samples(0.01, 14));
    const bool noisy_ok = within(noisy, 0.10);
    const double elapsed = seconds_since(start);
    const bool pass = clean_ok && noisy_ok && elapsed < 1.0;
    report(5, "logistic parameters recovered within 1% clean, 10% under noise", pass);
    CHECK(clean_ok);
    CHECK(noisy_ok);
    CHECK(elapsed < 1.0);
}

TEST_CASE("6: the rare-token estimate agrees with simulation") {
    bool agree = true;
    Rng rng(12345);
    const std::uint64_t trials = 1000000;
    for (std::uint64_t rank : {1ull, 2ull, 10ull})
        for (std::uint64_t n : {1ull, 4ull, 256ull}) {
            std::uint64_t hits = 0;
            const double p_hit = 1.0 / double(rank);
            for (std::uint64_t trial = 0; trial < trials; ++trial) {
                for (std::uint64_t draw = 0; draw < n; ++draw) {
                    if (rng.uniform01() < p_hit) {
                        ++hits;
                        break;
                    }
                }
            }
            const double closed = tail_probability(rank, n);
            const double estimate = double(hits) / double(trials);
            const double se = std::sqrt(std::max(closed * (1.0 - closed), 1e-12) /
                                        double(trials));
            agree = agree && std::abs(closed - estimate) <= 3.0 * se + 1e-9;
        }

    bool monotone = true;
    for (std::uint64_t rank = 1; rank <= 20; ++rank)
        for (std::uint64_t n = 1; n <= 20; ++n) {
            monotone = monotone &&
                       tail_probability(rank, n + 1) >= tail_probability(rank, n) &&
                       tail_probability(rank + 1, n) <= tail_probability(rank, n);
        }
    const bool pass = agree && monotone;
    report(6, "closed-form tail probability within 3 SE of a 1e6-draw simulation", pass);
    CHECK(agree);
    CHECK(monotone);
}

TEST_CASE("7: outputs are identical across worker counts") {
    const Topology t = append_final_sink(generate(TopologyKind::layer, 16));
    std::string baseline_trace, baseline_ledger, baseline_final;
    bool pass = true;
    for (std::uint32_t workers : {1u, 2u, 8u}) {
        const AgentAssignment a = agentize(t, default_library());
        const Schedule s = compute_schedule(t, 3);
        BackendConfig bc;
        bc.mock_reply_tokens = 24;
        MockBackend b(bc);
        RunConfig cfg;
        cfg.workers = workers;
        const RunTrace trace = execute(s, a, b, cfg);
        std::ostringstream out;
        write_trace_jsonl(trace, out);
        if (workers == 1) {
            baseline_trace = out.str();
            baseline_ledger = trace.ledger.to_csv();
            baseline_final = trace.final_artifact.content;
        } else {
            pass = pass && out.str() == baseline_trace;
            pass = pass && trace.ledger.to_csv() == baseline_ledger;
            pass = pass && trace.final_artifact.content == baseline_final;
        }
    }
    report(7, "1, 2 and 8 workers produce byte-identical traces and ledgers", pass);
    CHECK(pass);
}

TEST_CASE("8: a dense 46-agent network completes comfortably") {
    const auto start = std::chrono::steady_clock::now();
    const Topology t = generate(TopologyKind::mesh, 46);
    const RunTrace trace = run_ten(t, true, false, 4);
    const double elapsed = seconds_since(start);
    const bool pass = !trace.aborted && elapsed < 600.0;
    report(8, "mesh(46) with memory control finishes inside ten minutes", pass);
    CHECK_FALSE(trace.aborted);
    CHECK(elapsed < 600.0);
    TokenParams tp;
    tp.t = tp.p = tp.i = tp.s = 10;
    tp.m = 3;
    CHECK(measured_sink_context(trace, t, true) == closed_form_tokens(46, tp, true));
}

TEST_CASE("9: reversing a topology swaps its flow statistics") {
    bool pass = true;
    for (std::uint32_t n : {4u, 9u, 16u}) {
        const Topology t = generate(TopologyKind::star, n);
        const TopologyMetrics before = metrics(t);
        const TopologyMetrics after = metrics(reverse(t));
        pass = pass && before.divergent_node_count == 1;
        pass = pass && before.convergent_node_count == n - 1;
        pass = pass && after.divergent_node_count == before.convergent_node_count;
        pass = pass && after.convergent_node_count == before.divergent_node_count;
        pass = pass && after.source_count == before.sink_count;
        pass = pass && after.sink_count == before.source_count;
    }
    report(9, "reverse() exactly swaps divergent/convergent and source/sink counts", pass);
    CHECK(pass);
}
