#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "agentnet/analysis.hpp"
#include "agentnet/backend.hpp"
#include "agentnet/errors.hpp"
#include "agentnet/memory.hpp"
#include "agentnet/profiles.hpp"
#include "agentnet/report.hpp"
#include "agentnet/scheduler.hpp"
#include "agentnet/topology.hpp"

namespace py = pybind11;
using namespace agentnet;

namespace {

Topology generate_named(const std::string& kind, std::uint32_t n, std::uint64_t seed) {
    return generate(topology_kind_from_string(kind), n, seed);
}

py::list validate_as_dicts(const Topology& t) {
    py::list out;
    for (const Violation& v : validate(t).violations) {
        py::dict d;
        const char* kind = "";
        switch (v.kind) {
            case Violation::Kind::self_loop: kind = "self_loop"; break;
            case Violation::Kind::duplicate_edge: kind = "duplicate_edge"; break;
            case Violation::Kind::cycle: kind = "cycle"; break;
            case Violation::Kind::disconnected: kind = "disconnected"; break;
            case Violation::Kind::bad_endpoint: kind = "bad_endpoint"; break;
        }
        d["kind"] = kind;
        d["detail"] = v.detail;
        d["nodes"] = v.nodes;
        out.append(std::move(d));
    }
    return out;
}

py::dict metrics_as_dict(const Topology& t) {
    const TopologyMetrics m = metrics(t);
    py::dict d;
    d["node_count"] = m.node_count;
    d["edge_count"] = m.edge_count;
    d["density"] = m.density;
    d["avg_path_length"] =
        m.avg_path_length ? py::cast(*m.avg_path_length) : py::none().cast<py::object>();
    d["clustering_coefficient"] = m.clustering_coefficient;
    d["divergent_node_count"] = m.divergent_node_count;
    d["convergent_node_count"] = m.convergent_node_count;
    d["source_count"] = m.source_count;
    d["sink_count"] = m.sink_count;
    return d;
}

std::string run_network(const std::string& kind, std::uint32_t n, std::uint64_t seed,
                        const std::string& task, std::uint32_t m, bool memory_control,
                        bool approval, const std::string& aggregation, std::uint32_t workers,
                        std::uint32_t mock_reply_tokens, const std::string& profiles_json) {
    const Topology t =
        append_final_sink(generate(topology_kind_from_string(kind), n, seed));
    const ProfileLibrary lib =
        profiles_json.empty() ? default_library() : library_from_json(profiles_json);
    const AgentAssignment assign = agentize(t, lib, seed);

    RunConfig rc;
    if (!task.empty()) rc.task = task;
    rc.m = m;
    rc.seed = seed;
    rc.memory_control = memory_control;
    rc.approval = approval;
    if (aggregation == "dialogue")
        rc.aggregation = AggregationMode::dialogue;
    else if (aggregation == "single_call")
        rc.aggregation = AggregationMode::single_call;
    else
        throw ConfigError("aggregation must be dialogue or single_call");
    rc.workers = workers;

    BackendConfig bc;
    bc.mock_seed = seed;
    bc.mock_reply_tokens = mock_reply_tokens;
    MockBackend backend(bc);

    const Schedule sched = compute_schedule(t, rc.m);
    const RunTrace trace = execute(sched, assign, backend, rc);
    if (trace.aborted) throw BackendError(trace.error);
    return run_summary_json(trace, false);
}

py::dict fit_from_pairs(const std::vector<std::pair<std::uint32_t, double>>& samples) {
    std::vector<ScalePoint> points;
    for (const auto& [n, q] : samples) {
        ScalePoint p;
        p.node_count = n;
        p.quality = q;
        p.replicate_count = 1;
        points.push_back(p);
    }
    const ScalingFit f = fit_scaling_curve(points);
    py::dict d;
    d["alpha"] = f.alpha;
    d["beta"] = f.beta;
    d["gamma"] = f.gamma;
    d["delta"] = f.delta;
    d["residual_sse"] = f.residual_sse;
    d["iterations"] = f.iterations;
    return d;
}

py::list density_curve(const std::vector<std::string>& kinds,
                       const std::vector<std::uint32_t>& scales, std::uint64_t seed) {
    std::vector<TopologyKind> parsed;
    for (const auto& k : kinds) parsed.push_back(topology_kind_from_string(k));
    py::list out;
    for (const DensityPoint& p : sample_density_curve(parsed, scales, seed))
        out.append(py::make_tuple(to_string(p.kind), p.n, p.density));
    return out;
}

std::uint64_t closed_form(std::uint32_t n, std::uint64_t t, std::uint64_t p, std::uint64_t i,
                          std::uint64_t s, std::uint32_t m, bool memory_control) {
    TokenParams tp;
    tp.t = t;
    tp.p = p;
    tp.i = i;
    tp.s = s;
    tp.m = m;
    return closed_form_tokens(n, tp, memory_control);
}

}  // namespace

PYBIND11_MODULE(agentnet, mod) {
    mod.doc() = "Critic-guided agent network engine";

    py::class_<Topology>(mod, "Topology")
        .def_property_readonly("node_count", [](const Topology& t) { return t.node_count; })
        .def_property_readonly("kind", [](const Topology& t) { return to_string(t.kind); })
        .def_property_readonly("edges",
                               [](const Topology& t) {
                                   py::list out;
                                   for (const Edge& e : t.edges)
                                       out.append(py::make_tuple(e.src, e.dst));
                                   return out;
                               })
        .def("to_json", &topology_to_json)
        .def("to_dot", &topology_to_dot)
        .def("__repr__", [](const Topology& t) {
            return "<Topology " + to_string(t.kind) + " n=" + std::to_string(t.node_count) +
                   " edges=" + std::to_string(t.edges.size()) + ">";
        });

    mod.def("generate", &generate_named, py::arg("kind"), py::arg("n"), py::arg("seed") = 0,
            "Generate a named topology family over n nodes.");
    mod.def("from_json", &topology_from_json, py::arg("text"));
    mod.def("validate", &validate_as_dicts, py::arg("topology"),
            "List of violation dicts; empty means the graph is a usable plan.");
    mod.def("metrics", &metrics_as_dict, py::arg("topology"));
    mod.def("reverse", &reverse, py::arg("topology"));
    mod.def("append_final_sink", &append_final_sink, py::arg("topology"));

    mod.def("run", &run_network, py::arg("kind") = "chain", py::arg("n") = 4,
            py::arg("seed") = 0, py::arg("task") = "", py::arg("m") = 3,
            py::arg("memory_control") = true, py::arg("approval") = true,
            py::arg("aggregation") = "dialogue", py::arg("workers") = 1,
            py::arg("mock_reply_tokens") = 64, py::arg("profiles_json") = "",
            "Execute one mock-backed network run; returns the summary as a JSON string.");

    mod.def("count_tokens", [](const std::string& s) { return count_tokens(s); },
            py::arg("text"));
    mod.def("closed_form_tokens", &closed_form, py::arg("n"), py::arg("t") = 10,
            py::arg("p") = 10, py::arg("i") = 10, py::arg("s") = 10, py::arg("m") = 3,
            py::arg("memory_control") = true,
            "Sink context volume predicted for a full mesh of n agents.");

    mod.def("fit_scaling_curve", &fit_from_pairs, py::arg("points"),
            "Fit the log2-logistic quality curve to (node_count, quality) pairs.");
    mod.def("tail_probability", &tail_probability, py::arg("rank"), py::arg("sample_count"));
    mod.def("density_curve", &density_curve, py::arg("kinds"), py::arg("scales"),
            py::arg("seed") = 0);
}
