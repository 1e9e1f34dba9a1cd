#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "agentnet/analysis.hpp"
#include "agentnet/backend.hpp"
#include "agentnet/errors.hpp"
#include "agentnet/memory.hpp"
#include "agentnet/profiles.hpp"
#include "agentnet/report.hpp"
#include "agentnet/rng.hpp"
#include "agentnet/scheduler.hpp"
#include "agentnet/topology.hpp"

namespace {

using agentnet::TopologyKind;
namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitWriteFailure = 1;
constexpr int kExitInvalidArgs = 2;
constexpr int kExitBackendUnavailable = 3;

struct Options {
    std::string kind = "chain";
    std::uint32_t n = 4;
    std::uint64_t seed = 0;
    std::string task = "Design a small command line tool that prints a calendar.";
    std::uint32_t m = 3;
    bool memory_control = true;
    bool approval = true;
    std::string aggregation = "dialogue";
    std::uint32_t workers = 1;
    std::string out_dir = "run_out";
    std::string profiles_path;
    // backend
    std::string mode = "mock";
    std::string endpoint_url;
    std::string model_name;
    std::string api_key_env = "AGENTNET_API_KEY";
    double timeout_seconds = 30.0;
    std::uint32_t max_retries = 3;
    std::uint32_t requests_per_minute = 0;
    std::uint32_t mock_reply_tokens = 64;
};

// Config file fills defaults; command line flags override.
void apply_config_file(Options& o, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw agentnet::ConfigError("cannot read config file: " + path);
    nlohmann::json j = nlohmann::json::parse(in);
    auto get = [&](const char* key, auto& slot) {
        if (j.contains(key)) slot = j.at(key).get<std::decay_t<decltype(slot)>>();
    };
    get("kind", o.kind);
    get("n", o.n);
    get("seed", o.seed);
    get("task", o.task);
    get("m", o.m);
    get("memory_control", o.memory_control);
    get("approval", o.approval);
    get("aggregation", o.aggregation);
    get("workers", o.workers);
    get("out_dir", o.out_dir);
    get("profiles_path", o.profiles_path);
    if (j.contains("backend")) {
        const nlohmann::json& b = j.at("backend");
        auto getb = [&](const char* key, auto& slot) {
            if (b.contains(key)) slot = b.at(key).get<std::decay_t<decltype(slot)>>();
        };
        getb("mode", o.mode);
        getb("endpoint_url", o.endpoint_url);
        getb("model_name", o.model_name);
        getb("api_key_env_var", o.api_key_env);
        getb("timeout_seconds", o.timeout_seconds);
        getb("max_retries", o.max_retries);
        getb("requests_per_minute", o.requests_per_minute);
        getb("mock_reply_tokens", o.mock_reply_tokens);
    }
}

agentnet::BackendConfig backend_config(const Options& o, std::uint64_t seed) {
    agentnet::BackendConfig bc;
    if (o.mode == "mock") {
        bc.mode = agentnet::BackendMode::mock;
    } else if (o.mode == "live") {
        bc.mode = agentnet::BackendMode::live;
    } else {
        throw agentnet::ConfigError("backend mode must be mock or live");
    }
    bc.endpoint_url = o.endpoint_url;
    bc.model_name = o.model_name;
    bc.api_key_env_var = o.api_key_env;
    bc.timeout_seconds = o.timeout_seconds;
    bc.max_retries = o.max_retries;
    bc.requests_per_minute = o.requests_per_minute;
    bc.mock_seed = seed;
    bc.mock_reply_tokens = o.mock_reply_tokens;
    return bc;
}

agentnet::RunConfig run_config(const Options& o) {
    agentnet::RunConfig rc;
    rc.task = o.task;
    rc.m = o.m;
    rc.seed = o.seed;
    rc.memory_control = o.memory_control;
    rc.approval = o.approval;
    if (o.aggregation == "dialogue")
        rc.aggregation = agentnet::AggregationMode::dialogue;
    else if (o.aggregation == "single_call")
        rc.aggregation = agentnet::AggregationMode::single_call;
    else
        throw agentnet::ConfigError("aggregation must be dialogue or single_call");
    rc.workers = o.workers;
    if (rc.m == 0) throw agentnet::ConfigError("m must be at least 1");
    return rc;
}

agentnet::ProfileLibrary load_library(const Options& o) {
    if (o.profiles_path.empty()) return agentnet::default_library();
    std::ifstream in(o.profiles_path);
    if (!in) throw agentnet::ConfigError("cannot read profiles file: " + o.profiles_path);
    std::stringstream buf;
    buf << in.rdbuf();
    return agentnet::library_from_json(buf.str());
}

void write_file(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary);
    out << content;
    if (!out) throw std::ios_base::failure("cannot write " + path.string());
}

std::vector<TopologyKind> parse_kinds(const std::string& csv) {
    std::vector<TopologyKind> kinds;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) kinds.push_back(agentnet::topology_kind_from_string(item));
    if (kinds.empty()) throw agentnet::ConfigError("no topology kinds given");
    return kinds;
}

std::vector<std::uint32_t> parse_scales(const std::string& csv) {
    std::vector<std::uint32_t> scales;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) scales.push_back(std::uint32_t(std::stoul(item)));
    if (scales.empty()) throw agentnet::ConfigError("no scales given");
    return scales;
}

int cmd_topo(const Options& o, const std::string& format, const std::string& out_path,
             bool do_reverse, bool do_append_sink) {
    agentnet::Topology t =
        agentnet::generate(agentnet::topology_kind_from_string(o.kind), o.n, o.seed);
    if (do_reverse) t = agentnet::reverse(t);
    if (do_append_sink) t = agentnet::append_final_sink(t);

    std::string path = out_path.empty() ? ("topology." + format) : out_path;
    if (format == "json")
        write_file(path, agentnet::topology_to_json(t));
    else if (format == "dot")
        write_file(path, agentnet::topology_to_dot(t));
    else
        throw agentnet::ConfigError("format must be json or dot");

    agentnet::TopologyMetrics m = agentnet::metrics(t);
    std::cout << "nodes " << m.node_count << "\n"
              << "edges " << m.edge_count << "\n"
              << "density " << m.density << "\n"
              << "avg_path_length "
              << (m.avg_path_length ? std::to_string(*m.avg_path_length) : std::string("-"))
              << "\n"
              << "clustering " << m.clustering_coefficient << "\n"
              << "divergent " << m.divergent_node_count << "\n"
              << "convergent " << m.convergent_node_count << "\n"
              << "sources " << m.source_count << "\n"
              << "sinks " << m.sink_count << "\n"
              << "written " << path << "\n";

    agentnet::ValidationReport rep = agentnet::validate(t);
    for (const auto& v : rep.violations) std::cout << "violation " << v.detail << "\n";
    return rep.ok() ? kExitOk : kExitInvalidArgs;
}

int cmd_run(const Options& o, bool print_artifact) {
    agentnet::Topology t = agentnet::append_final_sink(
        agentnet::generate(agentnet::topology_kind_from_string(o.kind), o.n, o.seed));
    agentnet::ProfileLibrary lib = load_library(o);
    agentnet::AgentAssignment assign = agentnet::agentize(t, lib, o.seed);
    agentnet::RunConfig rc = run_config(o);
    auto backend = agentnet::make_backend(backend_config(o, o.seed));
    agentnet::Schedule sched = agentnet::compute_schedule(t, rc.m);
    agentnet::RunTrace trace = agentnet::execute(sched, assign, *backend, rc);
    if (trace.aborted) throw agentnet::BackendError(trace.error);

    fs::path dir(o.out_dir);
    std::ostringstream trace_text;
    agentnet::write_trace_jsonl(trace, trace_text);
    write_file(dir / "trace.jsonl", trace_text.str());
    write_file(dir / "summary.json", agentnet::run_summary_json(trace));
    write_file(dir / "ledger.csv", trace.ledger.to_csv());
    write_file(dir / "topology.json", agentnet::topology_to_json(t));
    write_file(dir / "topology.dot", agentnet::topology_to_dot(t));

    std::cout << "final_artifact " << trace.final_artifact.id << " version "
              << trace.final_artifact.version << " tokens " << trace.final_artifact.token_count
              << "\n"
              << "backend_calls " << trace.ledger.call_count() << "\n"
              << "prompt_tokens_total " << trace.ledger.grand_total() << "\n"
              << "sink_context "
              << agentnet::measured_sink_context(trace, t, rc.memory_control) << "\n"
              << "outputs " << dir.string() << "\n";
    if (print_artifact) std::cout << trace.final_artifact.content << "\n";
    return kExitOk;
}

int cmd_sweep(const Options& o, const std::string& kinds_csv, const std::string& scales_csv,
              std::uint32_t replicates, const std::string& quality_name) {
    agentnet::SweepConfig sc;
    sc.backend = backend_config(o, o.seed);
    sc.library = load_library(o);
    sc.base = run_config(o);
    sc.kinds = parse_kinds(kinds_csv);
    sc.scales = parse_scales(scales_csv);
    sc.replicates = replicates;
    sc.seed = o.seed;
    sc.workers = o.workers;

    agentnet::QualityFn quality;
    if (quality_name == "length")
        quality = agentnet::quality_artifact_length;
    else if (quality_name == "refinement")
        quality = agentnet::quality_refinement_depth;
    else
        throw agentnet::ConfigError("quality must be length or refinement");

    agentnet::SweepResult result = agentnet::sweep(sc, quality);

    fs::path dir(o.out_dir);
    write_file(dir / "sweep_rows.csv", agentnet::sweep_rows_csv(result.rows));

    std::ostringstream points_csv;
    points_csv << "kind,n,quality,replicates\n";
    for (const auto& p : result.points) {
        points_csv << agentnet::to_string(p.topology_kind) << ',' << p.node_count << ',';
        if (p.valid) points_csv << p.quality;
        points_csv << ',' << p.replicate_count << '\n';
    }
    write_file(dir / "sweep_points.csv", points_csv.str());

    nlohmann::ordered_json agg;
    agg["points"] = nlohmann::ordered_json::array();
    for (const auto& p : result.points) {
        nlohmann::ordered_json pj;
        pj["kind"] = agentnet::to_string(p.topology_kind);
        pj["n"] = p.node_count;
        pj["quality"] = p.quality;
        pj["replicates"] = p.replicate_count;
        pj["valid"] = p.valid;
        agg["points"].push_back(pj);
    }
    agg["fits"] = nlohmann::ordered_json::object();
    const agentnet::ScalingFit* first_fit = nullptr;
    static agentnet::ScalingFit fit_slot;
    for (TopologyKind kind : sc.kinds) {
        std::vector<agentnet::ScalePoint> pts;
        for (const auto& p : result.points)
            if (p.topology_kind == kind && p.valid) pts.push_back(p);
        try {
            agentnet::ScalingFit fit = agentnet::fit_scaling_curve(pts);
            nlohmann::ordered_json fj;
            fj["alpha"] = fit.alpha;
            fj["beta"] = fit.beta;
            fj["gamma"] = fit.gamma;
            fj["delta"] = fit.delta;
            fj["residual_sse"] = fit.residual_sse;
            agg["fits"][agentnet::to_string(kind)] = fj;
            if (!first_fit) {
                fit_slot = fit;
                first_fit = &fit_slot;
            }
        } catch (const agentnet::InsufficientDataError&) {
        }
    }
    write_file(dir / "sweep_summary.json", agg.dump(2) + "\n");
    write_file(dir / "scaling.svg",
               agentnet::render_scaling_svg(result.points, first_fit, "quality vs scale"));

    std::cout << "rows " << result.rows.size() << "\npoints " << result.points.size()
              << "\noutputs " << dir.string() << "\n";
    return kExitOk;
}

int cmd_fit(const std::string& points_path, const std::string& svg_path) {
    std::ifstream in(points_path);
    if (!in) throw agentnet::ConfigError("cannot read points file: " + points_path);
    std::string line;
    if (!std::getline(in, line)) throw agentnet::ConfigError("empty points file");

    std::vector<std::string> cols;
    {
        std::stringstream ss(line);
        std::string c;
        while (std::getline(ss, c, ',')) cols.push_back(c);
    }
    int n_col = -1, q_col = -1, kind_col = -1;
    for (std::size_t i = 0; i < cols.size(); ++i) {
        if (cols[i] == "n" || cols[i] == "node_count") n_col = int(i);
        if (cols[i] == "quality") q_col = int(i);
        if (cols[i] == "kind") kind_col = int(i);
    }
    if (n_col < 0 || q_col < 0)
        throw agentnet::ConfigError("points file needs n and quality columns");

    std::vector<agentnet::ScalePoint> points;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (int(cells.size()) <= std::max(n_col, q_col)) continue;
        if (cells[q_col].empty()) continue;
        agentnet::ScalePoint p;
        p.node_count = std::uint32_t(std::stoul(cells[n_col]));
        p.quality = std::stod(cells[q_col]);
        p.replicate_count = 1;
        if (kind_col >= 0 && int(cells.size()) > kind_col && !cells[kind_col].empty())
            p.topology_kind = agentnet::topology_kind_from_string(cells[kind_col]);
        points.push_back(p);
    }

    agentnet::ScalingFit fit = agentnet::fit_scaling_curve(points);
    nlohmann::ordered_json j;
    j["alpha"] = fit.alpha;
    j["beta"] = fit.beta;
    j["gamma"] = fit.gamma;
    j["delta"] = fit.delta;
    j["residual_sse"] = fit.residual_sse;
    j["iterations"] = fit.iterations;
    std::cout << j.dump(2) << "\n";
    if (!svg_path.empty())
        write_file(svg_path, agentnet::render_scaling_svg(points, &fit, "fitted scaling curve"));
    return kExitOk;
}

int cmd_tokens(std::uint32_t n, const agentnet::TokenParams& tp) {
    std::cout << "with_control " << agentnet::closed_form_tokens(n, tp, true) << "\n"
              << "without_control " << agentnet::closed_form_tokens(n, tp, false) << "\n"
              << "quadratic_constant " << agentnet::closed_form_constant_c(tp) << "\n"
              << "linear_constant " << agentnet::closed_form_constant_cbar(tp) << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    Options o;
    // The config file must be known before flag parsing so flags win.
    for (int i = 1; i < argc; ++i) {
        std::string arg = argv[i];
        try {
            if (arg == "--config" && i + 1 < argc)
                apply_config_file(o, argv[i + 1]);
            else if (arg.rfind("--config=", 0) == 0)
                apply_config_file(o, arg.substr(9));
        } catch (const std::exception& ex) {
            std::cerr << "error: " << ex.what() << "\n";
            return kExitInvalidArgs;
        }
    }

    CLI::App app{"agent network orchestration engine"};
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config", config_path, "JSON config file (flags override it)");

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON config file (flags override it)");
        cmd->add_option("--kind", o.kind, "chain|star|tree|mesh|layer|random|custom");
        cmd->add_option("--n", o.n, "node count");
        cmd->add_option("--seed", o.seed, "root seed");
    };

    // topo
    CLI::App* topo = app.add_subcommand("topo", "generate and inspect a topology");
    add_common(topo);
    std::string topo_format = "json", topo_out;
    bool topo_reverse = false, topo_append = false;
    topo->add_option("--format", topo_format, "json|dot");
    topo->add_option("--out", topo_out, "output path (default topology.<format>)");
    topo->add_flag("--reverse", topo_reverse, "flip every edge");
    topo->add_flag("--append-sink", topo_append, "add a collecting sink when several exist");

    auto add_run_flags = [&](CLI::App* cmd) {
        add_common(cmd);
        cmd->add_option("--task", o.task, "task statement");
        cmd->add_option("--m", o.m, "exchange pairs per leg");
        cmd->add_flag("--no-memory-control{false}", o.memory_control,
                      "propagate full dialogue history");
        cmd->add_flag("--no-approval{false}", o.approval, "always spend the full leg budget");
        cmd->add_option("--aggregation", o.aggregation, "dialogue|single_call");
        cmd->add_option("--workers", o.workers, "concurrent units");
        cmd->add_option("--out-dir", o.out_dir, "output directory");
        cmd->add_option("--profiles", o.profiles_path, "profile library JSON");
        cmd->add_option("--mode", o.mode, "mock|live");
        cmd->add_flag_callback("--mock", [&] { o.mode = "mock"; });
        cmd->add_flag_callback("--live", [&] { o.mode = "live"; });
        cmd->add_option("--endpoint", o.endpoint_url, "live endpoint base URL");
        cmd->add_option("--model", o.model_name, "live model name");
        cmd->add_option("--api-key-env", o.api_key_env, "env var holding the API key");
        cmd->add_option("--timeout", o.timeout_seconds, "request timeout seconds");
        cmd->add_option("--max-retries", o.max_retries, "retry attempts");
        cmd->add_option("--rpm", o.requests_per_minute, "requests per minute cap");
        cmd->add_option("--mock-reply-tokens", o.mock_reply_tokens,
                        "fallback mock reply length");
    };

    CLI::App* run = app.add_subcommand("run", "execute one network run");
    add_run_flags(run);
    bool run_print = false;
    run->add_flag("--print", run_print, "print the final artifact content");

    CLI::App* swp = app.add_subcommand("sweep", "run a scale sweep and fit the curve");
    add_run_flags(swp);
    std::string sweep_kinds = "chain", sweep_scales = "1,2,4,8", sweep_quality = "length";
    std::uint32_t sweep_replicates = 3;
    swp->add_option("--kinds", sweep_kinds, "comma separated topology kinds");
    swp->add_option("--scales", sweep_scales, "comma separated node counts");
    swp->add_option("--replicates", sweep_replicates, "runs per point");
    swp->add_option("--quality", sweep_quality, "length|refinement");

    CLI::App* fit = app.add_subcommand("fit", "fit the scaling curve to a points CSV");
    std::string fit_points, fit_svg;
    fit->add_option("--points", fit_points, "CSV with n and quality columns")->required();
    fit->add_option("--svg", fit_svg, "optional SVG output path");

    CLI::App* tok = app.add_subcommand("tokens", "print the context growth closed forms");
    std::uint32_t tok_n = 4;
    agentnet::TokenParams tp{10, 10, 10, 10, 3};
    tok->add_option("--n", tok_n, "node count");
    tok->add_option("--m", tp.m, "exchange pairs per leg");
    tok->add_option("--t", tp.t, "task tokens");
    tok->add_option("--p", tp.p, "profile tokens");
    tok->add_option("--i", tp.i, "instruction tokens");
    tok->add_option("--s", tp.s, "artifact tokens");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitInvalidArgs;
    }

    try {
        if (topo->parsed()) return cmd_topo(o, topo_format, topo_out, topo_reverse, topo_append);
        if (run->parsed()) return cmd_run(o, run_print);
        if (swp->parsed())
            return cmd_sweep(o, sweep_kinds, sweep_scales, sweep_replicates, sweep_quality);
        if (fit->parsed()) return cmd_fit(fit_points, fit_svg);
        if (tok->parsed()) return cmd_tokens(tok_n, tp);
    } catch (const agentnet::BackendError& ex) {
        std::cerr << "backend error: " << ex.what() << "\n";
        return kExitBackendUnavailable;
    } catch (const std::ios_base::failure& ex) {
        std::cerr << "write error: " << ex.what() << "\n";
        return kExitWriteFailure;
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return kExitInvalidArgs;
    }
    return kExitInvalidArgs;
}
