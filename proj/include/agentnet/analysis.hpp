#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "agentnet/backend.hpp"
#include "agentnet/profiles.hpp"
#include "agentnet/scheduler.hpp"
#include "agentnet/topology.hpp"

namespace agentnet {

// Scores a final artifact in [0, 1]. The engine treats quality as pluggable;
// the two built-ins below exist for deterministic testing.
using QualityFn = std::function<double(const Artifact&)>;

// length saturation: tokens / (tokens + 100)
double quality_artifact_length(const Artifact& a);
// refinement saturation: version / (version + 16)
double quality_refinement_depth(const Artifact& a);

struct ScalePoint {
    std::uint32_t node_count = 1;
    double quality = 0.0;  // mean over successful replicates
    std::uint32_t replicate_count = 0;
    TopologyKind topology_kind = TopologyKind::chain;
    bool valid = true;  // false when every replicate failed
};

struct ScalingFit {
    double alpha = 0.0;
    double beta = 0.0;
    double gamma = 0.0;
    double delta = 0.0;
    double residual_sse = 0.0;
    std::uint64_t iterations = 0;
};

// gamma / (1 + exp(-beta (log2 x - alpha))) + delta
double logistic_log2(double x, const ScalingFit& f);

// Derivative-free simplex least squares over (alpha, beta, gamma, delta).
// Deterministic initialization: delta0 = min quality, gamma0 = range,
// alpha0 = midpoint of the log2 scales, beta0 = 1. Stops when the simplex
// spread falls below 1e-9 or after 1e5 steps; restarts twice from the
// incumbent with a tightened simplex. Needs 4+ distinct node counts
// (InsufficientDataError) and finite qualities (std::invalid_argument).
ScalingFit fit_scaling_curve(const std::vector<ScalePoint>& points);

// Chance that a token of Zipf rank r (hit probability 1/r) appears at least
// once in sample_count independent draws: 1 - (1 - 1/r)^n. rank = 0 is a
// domain error.
double tail_probability(std::uint64_t rank, std::uint64_t sample_count);

struct SweepRow {
    TopologyKind kind = TopologyKind::chain;
    std::uint32_t n = 1;
    std::uint32_t replicate = 0;
    bool ok = false;
    double quality = 0.0;
    std::uint64_t tokens_total = 0;  // prompt + reply over every call
    double wall_seconds = 0.0;
};

struct SweepConfig {
    BackendConfig backend;      // mock gets a derived mock_seed per run
    ProfileLibrary library;     // empty templates -> default_library()
    RunConfig base;
    std::vector<TopologyKind> kinds{TopologyKind::chain};
    std::vector<std::uint32_t> scales{1, 2, 4, 8};
    std::uint32_t replicates = 3;
    std::uint64_t seed = 0;     // root; per-run seeds derive from it
    std::uint32_t workers = 1;  // concurrent runs
};

struct SweepResult {
    std::vector<SweepRow> rows;       // every replicate, failures included
    std::vector<ScalePoint> points;   // one per (kind, scale)
};

// For each (kind, scale, replicate): generate with a derived seed, agentize,
// schedule, execute, score the final artifact. A failed run becomes a missing
// replicate; a point with no surviving replicate is flagged invalid.
SweepResult sweep(const SweepConfig& cfg, const QualityFn& quality);

// kind,n,replicate,quality,tokens_total,wall_seconds (failures: empty cells)
std::string sweep_rows_csv(const std::vector<SweepRow>& rows);

struct DensityPoint {
    TopologyKind kind = TopologyKind::chain;
    std::uint32_t n = 0;
    double density = 0.0;
};

std::vector<DensityPoint> sample_density_curve(const std::vector<TopologyKind>& kinds,
                                               const std::vector<std::uint32_t>& scales,
                                               std::uint64_t seed = 0);
std::string density_csv(const std::vector<DensityPoint>& points);

// Ordinary least squares y = c0 + c1 x + ... low order first.
struct PolyFit {
    std::vector<double> coeffs;
    double sse = 0.0;
    double r2 = 0.0;
};
PolyFit polyfit(const std::vector<double>& xs, const std::vector<double>& ys, int degree);

// Quality vs log2(scale) scatter with the fitted curve overlaid. Pass
// fit = nullptr for points only. Self-contained static SVG.
std::string render_scaling_svg(const std::vector<ScalePoint>& points, const ScalingFit* fit,
                               const std::string& title);

}  // namespace agentnet
