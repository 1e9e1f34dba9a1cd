#include "agentnet/analysis.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "agentnet/errors.hpp"
#include "agentnet/rng.hpp"

namespace agentnet {

double quality_artifact_length(const Artifact& a) {
    return double(a.token_count) / (double(a.token_count) + 100.0);
}

double quality_refinement_depth(const Artifact& a) {
    return double(a.version) / (double(a.version) + 16.0);
}

double logistic_log2(double x, const ScalingFit& f) {
    double e = -f.beta * (std::log2(x) - f.alpha);
    e = std::clamp(e, -500.0, 500.0);
    return f.gamma / (1.0 + std::exp(e)) + f.delta;
}

namespace {

using Vec4 = std::array<double, 4>;  // alpha, beta, gamma, delta

double simplex_spread(const std::vector<Vec4>& verts) {
    double spread = 0.0;
    for (std::size_t i = 1; i < verts.size(); ++i)
        for (std::size_t d = 0; d < 4; ++d)
            spread = std::max(spread, std::abs(verts[i][d] - verts[0][d]));
    return spread;
}

}  // namespace

ScalingFit fit_scaling_curve(const std::vector<ScalePoint>& points) {
    std::vector<double> xs;
    std::vector<double> ys;
    std::map<std::uint32_t, bool> distinct;
    for (const ScalePoint& p : points) {
        if (!p.valid) continue;
        if (p.node_count < 1) throw std::invalid_argument("node_count must be >= 1");
        if (!std::isfinite(p.quality)) throw std::invalid_argument("quality must be finite");
        xs.push_back(std::log2(double(p.node_count)));
        ys.push_back(p.quality);
        distinct[p.node_count] = true;
    }
    if (distinct.size() < 4)
        throw InsufficientDataError("fit needs at least 4 distinct scales");

    auto objective = [&](const Vec4& v) {
        double sse = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            double e = std::clamp(-v[1] * (xs[i] - v[0]), -500.0, 500.0);
            double pred = v[2] / (1.0 + std::exp(e)) + v[3];
            double r = pred - ys[i];
            sse += r * r;
        }
        return sse;
    };

    const double qmin = *std::min_element(ys.begin(), ys.end());
    const double qmax = *std::max_element(ys.begin(), ys.end());
    const double xmin = *std::min_element(xs.begin(), xs.end());
    const double xmax = *std::max_element(xs.begin(), xs.end());
    Vec4 best{(xmin + xmax) / 2.0, 1.0, qmax - qmin, qmin};
    const Vec4 step{0.5, 0.5, std::max(0.25 * std::abs(best[2]), 0.05),
                    std::max(0.25 * std::abs(best[3]), 0.05)};

    std::uint64_t iterations = 0;
    const std::uint64_t budget = 100000;
    for (int phase = 0; phase < 3 && iterations < budget; ++phase) {
        const double shrink = std::pow(0.1, phase);
        std::vector<Vec4> verts(5, best);
        for (std::size_t d = 0; d < 4; ++d) verts[d + 1][d] += step[d] * shrink;
        std::vector<double> fv(5);
        for (std::size_t i = 0; i < 5; ++i) fv[i] = objective(verts[i]);

        while (iterations < budget) {
            std::vector<std::size_t> order{0, 1, 2, 3, 4};
            std::sort(order.begin(), order.end(),
                      [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
            std::vector<Vec4> sv(5);
            std::vector<double> sf(5);
            for (std::size_t i = 0; i < 5; ++i) {
                sv[i] = verts[order[i]];
                sf[i] = fv[order[i]];
            }
            verts = sv;
            fv = sf;
            if (simplex_spread(verts) < 1e-9) break;
            ++iterations;

            Vec4 centroid{0, 0, 0, 0};
            for (std::size_t i = 0; i < 4; ++i)
                for (std::size_t d = 0; d < 4; ++d) centroid[d] += verts[i][d] / 4.0;
            auto blend = [&](double w) {
                Vec4 v;
                for (std::size_t d = 0; d < 4; ++d)
                    v[d] = centroid[d] + w * (centroid[d] - verts[4][d]);
                return v;
            };
            Vec4 reflected = blend(1.0);
            double fr = objective(reflected);
            if (fr < fv[0]) {
                Vec4 expanded = blend(2.0);
                double fe = objective(expanded);
                if (fe < fr) {
                    verts[4] = expanded;
                    fv[4] = fe;
                } else {
                    verts[4] = reflected;
                    fv[4] = fr;
                }
            } else if (fr < fv[3]) {
                verts[4] = reflected;
                fv[4] = fr;
            } else {
                Vec4 contracted = blend(-0.5);
                double fc = objective(contracted);
                if (fc < fv[4]) {
                    verts[4] = contracted;
                    fv[4] = fc;
                } else {
                    for (std::size_t i = 1; i < 5; ++i) {
                        for (std::size_t d = 0; d < 4; ++d)
                            verts[i][d] = verts[0][d] + 0.5 * (verts[i][d] - verts[0][d]);
                        fv[i] = objective(verts[i]);
                    }
                }
            }
        }
        if (fv[0] < objective(best)) best = verts[0];
    }

    ScalingFit fit;
    fit.alpha = best[0];
    fit.beta = best[1];
    fit.gamma = best[2];
    fit.delta = best[3];
    fit.residual_sse = objective(best);
    fit.iterations = iterations;
    return fit;
}

double tail_probability(std::uint64_t rank, std::uint64_t sample_count) {
    if (rank == 0) throw std::domain_error("rank must be positive");
    return 1.0 - std::pow(1.0 - 1.0 / double(rank), double(sample_count));
}

namespace {

SweepRow sweep_one(const SweepConfig& cfg, const ProfileLibrary& lib, const QualityFn& quality,
                   TopologyKind kind, std::uint32_t n, std::uint32_t rep) {
    SweepRow row;
    row.kind = kind;
    row.n = n;
    row.replicate = rep;
    const std::string label =
        "sweep:" + to_string(kind) + ":" + std::to_string(n) + ":" + std::to_string(rep);
    const std::uint64_t seed = derive_seed(cfg.seed, label);
    try {
        Topology t = append_final_sink(generate(kind, n, seed));
        AgentAssignment a = agentize(t, lib, seed);
        RunConfig rc = cfg.base;
        rc.seed = seed;
        BackendConfig bc = cfg.backend;
        if (bc.mode == BackendMode::mock) bc.mock_seed = seed;
        auto backend = make_backend(bc);
        Schedule s = compute_schedule(t, rc.m);
        RunTrace trace = execute(s, a, *backend, rc);
        if (trace.aborted) throw BackendError(trace.error);
        row.ok = true;
        row.quality = quality(trace.final_artifact);
        for (const auto& [agent, calls] : trace.ledger.calls())
            for (const auto& c : calls) row.tokens_total += c.prompt_tokens + c.reply_tokens;
        row.wall_seconds = trace.wall_seconds;
    } catch (const std::exception&) {
        row.ok = false;
    }
    return row;
}

}  // namespace

SweepResult sweep(const SweepConfig& cfg, const QualityFn& quality) {
    if (cfg.scales.empty()) throw ConfigError("sweep needs at least one scale");
    const ProfileLibrary lib =
        cfg.library.templates.empty() ? default_library() : cfg.library;

    struct Job {
        TopologyKind kind;
        std::uint32_t n;
        std::uint32_t rep;
    };
    std::vector<Job> jobs;
    for (TopologyKind kind : cfg.kinds)
        for (std::uint32_t n : cfg.scales)
            for (std::uint32_t rep = 0; rep < cfg.replicates; ++rep) jobs.push_back({kind, n, rep});

    SweepResult result;
    result.rows.resize(jobs.size());
    const std::uint32_t workers = std::max(1u, cfg.workers);
    if (workers == 1) {
        for (std::size_t i = 0; i < jobs.size(); ++i)
            result.rows[i] =
                sweep_one(cfg, lib, quality, jobs[i].kind, jobs[i].n, jobs[i].rep);
    } else {
        std::vector<std::thread> pool;
        for (std::uint32_t w = 0; w < workers; ++w)
            pool.emplace_back([&, w] {
                for (std::size_t i = w; i < jobs.size(); i += workers)
                    result.rows[i] =
                        sweep_one(cfg, lib, quality, jobs[i].kind, jobs[i].n, jobs[i].rep);
            });
        for (auto& th : pool) th.join();
    }

    for (TopologyKind kind : cfg.kinds)
        for (std::uint32_t n : cfg.scales) {
            ScalePoint p;
            p.node_count = n;
            p.topology_kind = kind;
            double sum = 0.0;
            for (const SweepRow& row : result.rows)
                if (row.kind == kind && row.n == n && row.ok) {
                    sum += row.quality;
                    p.replicate_count += 1;
                }
            p.valid = p.replicate_count > 0;
            p.quality = p.valid ? sum / p.replicate_count : 0.0;
            result.points.push_back(p);
        }
    return result;
}

std::string sweep_rows_csv(const std::vector<SweepRow>& rows) {
    std::ostringstream out;
    out << "kind,n,replicate,quality,tokens_total,wall_seconds\n";
    char buf[64];
    for (const SweepRow& r : rows) {
        out << to_string(r.kind) << ',' << r.n << ',' << r.replicate << ',';
        if (r.ok) {
            std::snprintf(buf, sizeof buf, "%.6f", r.quality);
            out << buf << ',' << r.tokens_total << ',';
            std::snprintf(buf, sizeof buf, "%.3f", r.wall_seconds);
            out << buf;
        } else {
            out << ",,";
        }
        out << '\n';
    }
    return out.str();
}

std::vector<DensityPoint> sample_density_curve(const std::vector<TopologyKind>& kinds,
                                               const std::vector<std::uint32_t>& scales,
                                               std::uint64_t seed) {
    if (scales.empty()) throw ConfigError("density curve needs at least one scale");
    std::vector<DensityPoint> out;
    for (TopologyKind kind : kinds)
        for (std::uint32_t n : scales) {
            Topology t = generate(kind, n, seed);
            out.push_back({kind, n, metrics(t).density});
        }
    return out;
}

std::string density_csv(const std::vector<DensityPoint>& points) {
    std::ostringstream out;
    out << "kind,n,density\n";
    char buf[32];
    for (const DensityPoint& p : points) {
        std::snprintf(buf, sizeof buf, "%.6f", p.density);
        out << to_string(p.kind) << ',' << p.n << ',' << buf << '\n';
    }
    return out.str();
}

PolyFit polyfit(const std::vector<double>& xs, const std::vector<double>& ys, int degree) {
    if (degree < 0 || xs.size() != ys.size() || xs.size() <= std::size_t(degree))
        throw std::invalid_argument("polyfit: need more points than coefficients");
    const int k = degree + 1;
    std::vector<std::vector<double>> m(k, std::vector<double>(k + 1, 0.0));
    for (std::size_t i = 0; i < xs.size(); ++i) {
        std::vector<double> pow(2 * k - 1, 1.0);
        for (int p = 1; p < 2 * k - 1; ++p) pow[p] = pow[p - 1] * xs[i];
        for (int r = 0; r < k; ++r) {
            for (int c = 0; c < k; ++c) m[r][c] += pow[r + c];
            m[r][k] += pow[r] * ys[i];
        }
    }
    for (int col = 0; col < k; ++col) {
        int pivot = col;
        for (int r = col + 1; r < k; ++r)
            if (std::abs(m[r][col]) > std::abs(m[pivot][col])) pivot = r;
        std::swap(m[col], m[pivot]);
        if (std::abs(m[col][col]) < 1e-12)
            throw std::invalid_argument("polyfit: singular system");
        for (int r = 0; r < k; ++r) {
            if (r == col) continue;
            double f = m[r][col] / m[col][col];
            for (int c = col; c <= k; ++c) m[r][c] -= f * m[col][c];
        }
    }
    PolyFit fit;
    fit.coeffs.resize(k);
    for (int r = 0; r < k; ++r) fit.coeffs[r] = m[r][k] / m[r][r];

    double mean = 0.0;
    for (double y : ys) mean += y / double(ys.size());
    double sst = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double pred = 0.0;
        double px = 1.0;
        for (int p = 0; p < k; ++p) {
            pred += fit.coeffs[p] * px;
            px *= xs[i];
        }
        fit.sse += (pred - ys[i]) * (pred - ys[i]);
        sst += (ys[i] - mean) * (ys[i] - mean);
    }
    fit.r2 = sst > 0.0 ? 1.0 - fit.sse / sst : (fit.sse == 0.0 ? 1.0 : 0.0);
    return fit;
}

namespace {

const char* kPalette[] = {"#4477aa", "#ee6677", "#228833", "#ccbb44", "#66ccee", "#aa3377"};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

}  // namespace

std::string render_scaling_svg(const std::vector<ScalePoint>& points, const ScalingFit* fit,
                               const std::string& title) {
    const double width = 640, height = 420;
    const double ml = 60, mr = 20, mt = 40, mb = 50;
    double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
    bool first = true;
    for (const ScalePoint& p : points) {
        if (!p.valid) continue;
        double lx = std::log2(double(p.node_count));
        if (first) {
            xmin = xmax = lx;
            ymin = ymax = p.quality;
            first = false;
        }
        xmin = std::min(xmin, lx);
        xmax = std::max(xmax, lx);
        ymin = std::min(ymin, p.quality);
        ymax = std::max(ymax, p.quality);
    }
    xmin -= 0.5;
    xmax += 0.5;
    double pad = std::max(0.05, (ymax - ymin) * 0.15);
    ymin = std::max(0.0, ymin - pad);
    ymax = ymax + pad;
    auto sx = [&](double lx) { return ml + (lx - xmin) / (xmax - xmin) * (width - ml - mr); };
    auto sy = [&](double q) {
        return height - mb - (q - ymin) / (ymax - ymin) * (height - mt - mb);
    };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\" font-size=\"16\">" << title << "</text>\n";
    svg << "<line x1=\"" << ml << "\" y1=\"" << height - mb << "\" x2=\"" << width - mr
        << "\" y2=\"" << height - mb << "\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\""
        << height - mb << "\" stroke=\"black\"/>\n";

    for (int k = int(std::ceil(xmin)); k <= int(std::floor(xmax)); ++k) {
        double x = sx(k);
        svg << "<line x1=\"" << x << "\" y1=\"" << height - mb << "\" x2=\"" << x << "\" y2=\""
            << height - mb + 5 << "\" stroke=\"black\"/>\n";
        svg << "<text x=\"" << x << "\" y=\"" << height - mb + 20
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
            << (1ull << std::max(0, k)) << "</text>\n";
    }
    for (double q = std::ceil(ymin * 4) / 4; q <= ymax + 1e-9; q += 0.25) {
        double y = sy(q);
        svg << "<line x1=\"" << ml - 5 << "\" y1=\"" << y << "\" x2=\"" << ml << "\" y2=\"" << y
            << "\" stroke=\"black\"/>\n";
        svg << "<text x=\"" << ml - 8 << "\" y=\"" << y + 4
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(q)
            << "</text>\n";
    }
    svg << "<text x=\"" << (ml + width - mr) / 2 << "\" y=\"" << height - 12
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">agents</text>\n";
    svg << "<text x=\"16\" y=\"" << (mt + height - mb) / 2
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
        << "transform=\"rotate(-90 16 " << (mt + height - mb) / 2 << ")\">quality</text>\n";

    if (fit) {
        svg << "<polyline fill=\"none\" stroke=\"#333333\" stroke-width=\"1.5\" points=\"";
        for (int i = 0; i <= 128; ++i) {
            double lx = xmin + (xmax - xmin) * i / 128.0;
            double q = std::clamp(logistic_log2(std::pow(2.0, lx), *fit), ymin, ymax);
            svg << fmt(sx(lx)) << ',' << fmt(sy(q)) << ' ';
        }
        svg << "\"/>\n";
    }

    std::map<TopologyKind, std::size_t> color;
    for (const ScalePoint& p : points) {
        if (!p.valid) continue;
        auto [it, inserted] = color.emplace(p.topology_kind, color.size() % 6);
        svg << "<circle cx=\"" << fmt(sx(std::log2(double(p.node_count)))) << "\" cy=\""
            << fmt(sy(p.quality)) << "\" r=\"4\" fill=\"" << kPalette[it->second] << "\"/>\n";
    }
    double ly = mt + 6;
    for (const auto& [kind, ci] : color) {
        svg << "<circle cx=\"" << width - mr - 110 << "\" cy=\"" << ly << "\" r=\"4\" fill=\""
            << kPalette[ci] << "\"/>\n";
        svg << "<text x=\"" << width - mr - 100 << "\" y=\"" << ly + 4
            << "\" font-family=\"sans-serif\" font-size=\"11\">" << to_string(kind)
            << "</text>\n";
        ly += 16;
    }
    svg << "</svg>\n";
    return svg.str();
}

}  // namespace agentnet
