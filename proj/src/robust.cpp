#include "planerect/robust.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <random>

#include <Eigen/Dense>

#include "planerect/error.hpp"

namespace planerect {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::mt19937_64 iteration_rng(std::uint64_t seed, std::uint64_t iteration) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(iteration), static_cast<std::uint32_t>(iteration >> 32)};
    return std::mt19937_64(seq);
}

// Picks one group among candidates with probability proportional to size.
int pick_group(std::mt19937_64 &rng, const std::vector<int> &candidates, const Pool &pool) {
    std::vector<double> w;
    for (int g : candidates) {
        w.push_back(static_cast<double>(pool.frames[g].size()));
    }
    std::discrete_distribution<int> d(w.begin(), w.end());
    return candidates[d(rng)];
}

std::vector<int> pick_regions(std::mt19937_64 &rng, int groupSize, int count) {
    std::vector<int> all(groupSize);
    std::iota(all.begin(), all.end(), 0);
    for (int k = 0; k < count; ++k) {
        std::uniform_int_distribution<int> d(k, groupSize - 1);
        std::swap(all[k], all[d(rng)]);
    }
    all.resize(count);
    return all;
}

template <typename Region>
MinimalSample<Region> gather(const std::vector<std::vector<Region>> &groups, const SampleIndices &idx, Config c) {
    MinimalSample<Region> s;
    s.config = c;
    for (const auto &[g, regions] : idx.groups) {
        std::vector<Region> out;
        for (int r : regions) {
            out.push_back(groups[g][r]);
        }
        s.groups.push_back(std::move(out));
    }
    return s;
}

struct IterationResult {
    double score = kInf;
    RectifyModel model;
    bool degenerate = false;
    bool failed = false;
    bool concentric = false;
    bool collinear = false;
    int feasible = 0;
    int real = 0;
};

double score_model(const RectifyModel &m, const Pool &pool, const RansacOptions &opts) {
    if (opts.scoring == Scoring::WarpGT) {
        return warp_error(m, *opts.scene).rms;
    }
    return equal_scale_score(m, pool, opts.tau).cost;
}

IterationResult run_iteration(const Pool &pool, const RansacOptions &opts, int it) {
    IterationResult res;
    const auto idx = draw_sample(pool, opts.variant.config, opts.seed, static_cast<std::uint64_t>(it));
    if (!idx) {
        res.degenerate = true;
        return res;
    }
    SolverConfig cfg = opts.solver;
    cfg.seed = opts.seed * 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(it);
    std::vector<Root> roots;
    try {
        roots = minimal_solutions(pool, *idx, opts.variant, cfg, &res.real);
    } catch (const Error &e) {
        if (e.kind() == ErrorKind::DegenerateSample) {
            res.degenerate = true;
            const std::string what = e.what();
            res.concentric = what.find("ConcentricPoints") != std::string::npos;
            res.collinear = what.find("Collinear") != std::string::npos;
        } else {
            res.failed = true;
        }
        return res;
    }
    res.feasible = static_cast<int>(roots.size());
    for (const Root &r : roots) {
        const RectifyModel m = r.model();
        const double s = score_model(m, pool, opts);
        if (s < res.score) {
            res.score = s;
            res.model = m;
        }
    }
    return res;
}

EstimationResult reduce(const Pool &pool, const RansacOptions &opts, const std::vector<IterationResult> &its) {
    EstimationResult out;
    out.samplesTried = static_cast<int>(its.size());
    int concentric = 0;
    int collinear = 0;
    for (std::size_t k = 0; k < its.size(); ++k) {
        const auto &r = its[k];
        out.degenerateSamples += r.degenerate;
        out.failedSamples += r.failed;
        out.feasibleModels += r.feasible;
        out.realRoots += r.real;
        concentric += r.concentric;
        collinear += r.collinear;
        if (r.score < out.bestScore) {
            out.bestScore = r.score;
            out.model = r.model;
            out.bestIteration = static_cast<int>(k);
        }
    }
    if (2 * concentric > out.samplesTried) {
        out.flags.insert(EstimateFlag::ConcentricPoints);
    }
    if (2 * collinear > out.samplesTried) {
        out.flags.insert(EstimateFlag::CollinearSamples);
    }
    if (out.bestIteration < 0) {
        std::string why = "no feasible model after " + std::to_string(out.samplesTried) + " samples (" +
                          std::to_string(out.degenerateSamples) + " degenerate";
        for (auto f : out.flags) {
            why += ", " + std::string(to_string(f));
        }
        throw Error(ErrorKind::NoFeasibleModel, why + ")");
    }
    if (opts.refine) {
        const RectifyModel r = refine(out.model, pool, opts.tau);
        out.refined = r.l.l1 != out.model.l.l1 || r.l.l2 != out.model.l.l2 || r.lambda != out.model.lambda;
        out.model = r;
        out.bestScore = score_model(out.model, pool, opts);
    }
    const ConsensusScore cs = equal_scale_score(out.model, pool, opts.tau);
    out.consensusSize = cs.consensusSize;
    out.inlierPairFraction = cs.totalPairs > 0 ? static_cast<double>(cs.inlierPairs) / cs.totalPairs : 0.0;
    if (out.inlierPairFraction < 0.5) {
        out.flags.insert(EstimateFlag::LowConsensus);
    }
    if (vanishing_line_through_origin(out.model)) {
        out.flags.insert(EstimateFlag::VLThroughOrigin);
    } else if (std::abs(out.model.l.l3) < kNearOriginDistance * std::hypot(out.model.l.l1, out.model.l.l2)) {
        out.flags.insert(EstimateFlag::VLNearOrigin);
    }
    return out;
}

void check_options(const Pool &pool, const RansacOptions &opts) {
    if (opts.iterations < 1) {
        throw Error(ErrorKind::InvalidArgument, "iterations must be at least 1");
    }
    if (opts.scoring == Scoring::WarpGT && opts.scene == nullptr) {
        throw Error(ErrorKind::InvalidArgument, "warp scoring needs a ground-truth scene");
    }
    if (opts.variant.method == Method::CS && pool.scales.size() != pool.frames.size()) {
        throw Error(ErrorKind::InvalidArgument, "pool has no scale observations");
    }
}

// Scale of one pooled region under m, or nullopt when it cannot be rectified.
std::optional<double> region_scale(const RectifyModel &m, const AffineFrame &f) {
    try {
        return rectified_scale(f, m).scale;
    } catch (const Error &) {
        return std::nullopt;
    }
}

std::vector<std::vector<std::optional<double>>> pool_scales(const RectifyModel &m, const Pool &pool) {
    std::vector<std::vector<std::optional<double>>> out;
    for (const auto &group : pool.frames) {
        std::vector<std::optional<double>> g;
        for (const auto &f : group) {
            g.push_back(region_scale(m, f));
        }
        out.push_back(std::move(g));
    }
    return out;
}

double relative_difference(const std::optional<double> &a, const std::optional<double> &b) {
    if (!a || !b || *a * *b <= 0.0) {
        return kInf;
    }
    return std::abs(*a - *b) / std::max(std::abs(*a), std::abs(*b));
}

} // namespace

Variant parse_variant(std::string_view name, double fixedLambda) {
    static const std::map<std::string_view, Variant> table = {
        {"des222", {Method::DES, Config::C222}}, {"des32", {Method::DES, Config::C32}},
        {"des4", {Method::DES, Config::C4}},     {"des22-fixed", {Method::DES, Config::C22Fixed}},
        {"cs222", {Method::CS, Config::C222}},   {"cs32", {Method::CS, Config::C32}},
        {"cs4", {Method::CS, Config::C4}},
    };
    const auto it = table.find(name);
    if (it == table.end()) {
        throw Error(ErrorKind::InvalidArgument, "unknown variant '" + std::string(name) + "'");
    }
    Variant v = it->second;
    v.fixedLambda = fixedLambda;
    return v;
}

std::string to_string(const Variant &v) {
    std::string s = v.method == Method::DES ? "des" : "cs";
    switch (v.config) {
    case Config::C222: return s + "222";
    case Config::C32: return s + "32";
    case Config::C4: return s + "4";
    case Config::C22Fixed: return s + "22-fixed";
    }
    return s;
}

std::string_view to_string(EstimateFlag f) {
    switch (f) {
    case EstimateFlag::LowConsensus: return "LowConsensus";
    case EstimateFlag::VLThroughOrigin: return "VLThroughOrigin";
    case EstimateFlag::VLNearOrigin: return "VLNearOrigin";
    case EstimateFlag::ConcentricPoints: return "ConcentricPoints";
    case EstimateFlag::CollinearSamples: return "CollinearSamples";
    }
    return "?";
}

int Pool::region_count() const {
    int n = 0;
    for (const auto &g : frames) {
        n += static_cast<int>(g.size());
    }
    return n;
}

Pool make_pool(const FrameGroups &normalized) { return make_pool(normalized, cs_observations(normalized)); }

Pool make_pool(const FrameGroups &normalized, const ScaleGroups &scales) {
    Pool p;
    for (const auto &group : normalized) {
        std::vector<AffineFrame> g;
        for (const auto &f : group) {
            g.push_back(orient(f));
        }
        p.frames.push_back(std::move(g));
    }
    p.scales = scales;
    return p;
}

std::vector<Eigen::Vector2d> warp_grid_plane(const GroundTruthScene &scene) {
    std::vector<Eigen::Vector2d> out;
    for (int j = 0; j < kWarpGridSide; ++j) {
        for (int i = 0; i < kWarpGridSide; ++i) {
            const double u = -1.0 + 2.0 * i / (kWarpGridSide - 1);
            const double v = -1.0 + 2.0 * j / (kWarpGridSide - 1);
            out.push_back(scene.planeCenter + scene.planeHalfExtent * Eigen::Vector2d(u, v));
        }
    }
    return out;
}

std::vector<ImagePoint> warp_grid_image(const GroundTruthScene &scene) {
    std::vector<ImagePoint> out;
    for (const auto &p : warp_grid_plane(scene)) {
        out.push_back(scene.project(p));
    }
    return out;
}

WarpErrorReport warp_error_rectified(const std::vector<ImagePoint> &rectified, const GroundTruthScene &scene) {
    const auto plane = warp_grid_plane(scene);
    const auto image = warp_grid_image(scene);
    const auto n = static_cast<Eigen::Index>(plane.size());
    if (static_cast<Eigen::Index>(rectified.size()) != n) {
        throw Error(ErrorKind::InvalidArgument, "rectified grid has the wrong size");
    }
    // Center and scale the rectified points so the least-squares system stays
    // well conditioned whatever the model's affine frame.
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    for (const auto &r : rectified) {
        mean += r;
    }
    mean /= static_cast<double>(n);
    double spread = 0.0;
    for (const auto &r : rectified) {
        spread += (r - mean).norm();
    }
    spread = spread > 0.0 ? spread / static_cast<double>(n) : 1.0;
    Eigen::MatrixXd A(n, 3);
    Eigen::MatrixXd B(n, 2);
    for (Eigen::Index k = 0; k < n; ++k) {
        const Eigen::Vector2d r = (rectified[k] - mean) / spread;
        A.row(k) << r.x(), r.y(), 1.0;
        B.row(k) = plane[k].transpose();
    }
    const Eigen::MatrixXd X = A.colPivHouseholderQr().solve(B); // 3x2
    WarpErrorReport rep;
    Eigen::Matrix<double, 2, 3> T = X.transpose();
    // Express the fit in the original rectified coordinates.
    rep.affineAmbiguity.leftCols<2>() = T.leftCols<2>() / spread;
    rep.affineAmbiguity.col(2) = T.col(2) - rep.affineAmbiguity.leftCols<2>() * mean;
    double sum = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
        const Eigen::Vector2d aligned = (A.row(k) * X).transpose();
        double d = kInf;
        try {
            const ImagePoint back = scene.project(aligned);
            d = (scene.normalizer.to_pixel(back) - scene.normalizer.to_pixel(image[k])).norm();
        } catch (const Error &) {
        }
        if (!std::isfinite(d)) {
            d = kInf;
        }
        rep.perPoint.push_back(d);
        sum += d * d;
    }
    rep.rms = std::sqrt(sum / static_cast<double>(n));
    return rep;
}

WarpErrorReport warp_error(const RectifyModel &model, const GroundTruthScene &scene) {
    std::vector<ImagePoint> rect;
    try {
        for (const auto &p : warp_grid_image(scene)) {
            rect.push_back(rectify(p, model));
        }
    } catch (const Error &e) {
        if (e.kind() != ErrorKind::NearVanishingLine) {
            throw;
        }
        WarpErrorReport rep;
        rep.rms = kInf;
        rep.perPoint.assign(kWarpGridSide * kWarpGridSide, kInf);
        return rep;
    }
    return warp_error_rectified(rect, scene);
}

double rel_lambda_error(const RectifyModel &model, const GroundTruthScene &scene) {
    if (scene.lambdaGT == 0.0) {
        throw Error(ErrorKind::GroundTruthZero, "relative error undefined for lambda = 0");
    }
    return std::abs(model.lambda - scene.lambdaGT) / std::abs(scene.lambdaGT);
}

std::optional<SampleIndices> draw_sample(const Pool &pool, Config config, std::uint64_t seed,
                                         std::uint64_t iteration) {
    auto rng = iteration_rng(seed, iteration);
    std::vector<int> sizes = group_sizes(config);
    // Largest requirement first so a 3-group is chosen before the pair.
    std::sort(sizes.rbegin(), sizes.rend());
    SampleIndices out;
    std::vector<char> used(pool.frames.size(), 0);
    for (int need : sizes) {
        std::vector<int> candidates;
        for (std::size_t g = 0; g < pool.frames.size(); ++g) {
            if (!used[g] && static_cast<int>(pool.frames[g].size()) >= need) {
                candidates.push_back(static_cast<int>(g));
            }
        }
        if (candidates.empty()) {
            return std::nullopt;
        }
        const int g = pick_group(rng, candidates, pool);
        used[g] = 1;
        out.groups.emplace_back(g, pick_regions(rng, static_cast<int>(pool.frames[g].size()), need));
    }
    return out;
}

PolySystem build_system(const Pool &pool, const SampleIndices &idx, const Variant &v) {
    if (v.method == Method::CS) {
        return build_cs(gather(pool.scales, idx, v.config));
    }
    if (v.config == Config::C22Fixed) {
        return build_des_fixed_lambda(gather(pool.frames, idx, v.config), v.fixedLambda);
    }
    return build_des(gather(pool.frames, idx, v.config));
}

std::vector<Root> minimal_solutions(const Pool &pool, const SampleIndices &idx, const Variant &v,
                                    const SolverConfig &cfg, int *realCount) {
    const SolutionSet sol = solve(build_system(pool, idx, v), cfg);
    if (realCount) {
        *realCount = static_cast<int>(sol.roots.size());
    }
    std::vector<Root> out;
    for (const Root &r : sol.roots) {
        if (r.feasible) {
            out.push_back(r);
        }
    }
    return out;
}

ConsensusScore equal_scale_score(const RectifyModel &m, const Pool &pool, double tau) {
    ConsensusScore s;
    const auto scales = pool_scales(m, pool);
    for (const auto &g : scales) {
        std::vector<char> in(g.size(), 0);
        for (std::size_t a = 0; a < g.size(); ++a) {
            for (std::size_t b = a + 1; b < g.size(); ++b) {
                const double r = relative_difference(g[a], g[b]);
                ++s.totalPairs;
                if (r < tau) {
                    ++s.inlierPairs;
                    in[a] = in[b] = 1;
                    s.cost += r * r;
                } else {
                    s.cost += tau * tau;
                }
            }
        }
        s.consensusSize += static_cast<int>(std::count(in.begin(), in.end(), 1));
    }
    return s;
}

std::vector<std::array<int, 3>> inlier_pairs(const RectifyModel &m, const Pool &pool, double tau) {
    std::vector<std::array<int, 3>> out;
    const auto scales = pool_scales(m, pool);
    for (std::size_t g = 0; g < scales.size(); ++g) {
        for (std::size_t a = 0; a < scales[g].size(); ++a) {
            for (std::size_t b = a + 1; b < scales[g].size(); ++b) {
                if (relative_difference(scales[g][a], scales[g][b]) < tau) {
                    out.push_back({static_cast<int>(g), static_cast<int>(a), static_cast<int>(b)});
                }
            }
        }
    }
    return out;
}

double equal_scale_objective(const RectifyModel &m, const Pool &pool, const std::vector<std::array<int, 3>> &pairs) {
    double sum = 0.0;
    for (const auto &[g, a, b] : pairs) {
        const auto sa = region_scale(m, pool.frames[g][a]);
        const auto sb = region_scale(m, pool.frames[g][b]);
        if (!sa || !sb || *sa * *sb <= 0.0) {
            return kInf;
        }
        const double r = std::log(std::abs(*sa) / std::abs(*sb));
        sum += r * r;
    }
    return sum;
}

RectifyModel refine(const RectifyModel &model, const Pool &pool, double tau) {
    const auto pairs = inlier_pairs(model, pool, tau);
    if (pairs.size() < 3) {
        return model;
    }
    auto residuals = [&](const Eigen::Vector3d &x, Eigen::VectorXd &r) {
        const RectifyModel m(x[0], x[1], x[2]);
        r.resize(static_cast<Eigen::Index>(pairs.size()));
        for (std::size_t k = 0; k < pairs.size(); ++k) {
            const auto &[g, a, b] = pairs[k];
            const auto sa = region_scale(m, pool.frames[g][a]);
            const auto sb = region_scale(m, pool.frames[g][b]);
            if (!sa || !sb || *sa * *sb <= 0.0) {
                return false;
            }
            r[static_cast<Eigen::Index>(k)] = std::log(std::abs(*sa) / std::abs(*sb));
        }
        return true;
    };
    Eigen::Vector3d x(model.l.l1, model.l.l2, model.lambda);
    Eigen::VectorXd r;
    if (!residuals(x, r)) {
        return model;
    }
    double cost = r.squaredNorm();
    double mu = 1e-3;
    for (int it = 0; it < 100 && cost > 0.0; ++it) {
        Eigen::MatrixXd J(r.size(), 3);
        bool ok = true;
        for (int v = 0; v < 3 && ok; ++v) {
            const double h = 1e-7 * std::max(1.0, std::abs(x[v]));
            Eigen::Vector3d xp = x, xm = x;
            xp[v] += h;
            xm[v] -= h;
            Eigen::VectorXd rp, rm;
            ok = residuals(xp, rp) && residuals(xm, rm);
            if (ok) {
                J.col(v) = (rp - rm) / (2.0 * h);
            }
        }
        if (!ok) {
            break;
        }
        const Eigen::Matrix3d jtj = J.transpose() * J;
        const Eigen::Vector3d g = J.transpose() * r;
        bool accepted = false;
        while (mu < 1e10) {
            Eigen::Matrix3d a = jtj;
            a.diagonal() += mu * (jtj.diagonal().array() + 1e-12).matrix();
            const Eigen::Vector3d dx = a.ldlt().solve(-g);
            const Eigen::Vector3d xn = x + dx;
            Eigen::VectorXd rn;
            if (dx.allFinite() && residuals(xn, rn) && rn.squaredNorm() < cost) {
                const double rel = (cost - rn.squaredNorm()) / cost;
                x = xn;
                r = rn;
                cost = rn.squaredNorm();
                mu = std::max(mu * 0.3, 1e-12);
                accepted = true;
                if (rel < 1e-14 || dx.norm() < 1e-15 * (1.0 + x.norm())) {
                    return RectifyModel(x[0], x[1], x[2]);
                }
                break;
            }
            mu *= 10.0;
        }
        if (!accepted) {
            break;
        }
    }
    return RectifyModel(x[0], x[1], x[2]);
}

EstimationResult ransac_serial(const Pool &pool, const RansacOptions &opts) {
    check_options(pool, opts);
    std::vector<IterationResult> its(opts.iterations);
    for (int it = 0; it < opts.iterations; ++it) {
        its[it] = run_iteration(pool, opts, it);
    }
    return reduce(pool, opts, its);
}

EstimationResult ransac(const Pool &pool, const RansacOptions &opts) {
    if (!opts.parallel) {
        return ransac_serial(pool, opts);
    }
    check_options(pool, opts);
    std::vector<IterationResult> its(opts.iterations);
    std::vector<std::exception_ptr> errors(opts.iterations);
#pragma omp parallel for schedule(dynamic, 1)
    for (int it = 0; it < opts.iterations; ++it) {
        try {
            its[it] = run_iteration(pool, opts, it);
        } catch (...) {
            errors[it] = std::current_exception();
        }
    }
    for (const auto &e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
    return reduce(pool, opts, its);
}

double Census::fraction_exactly_one_feasible() const {
    if (trials.empty()) {
        return 0.0;
    }
    const auto n = std::count_if(trials.begin(), trials.end(), [](const CensusTrial &t) { return t.nFeasible == 1; });
    return static_cast<double>(n) / static_cast<double>(trials.size());
}

int Census::max_real() const {
    int m = 0;
    for (const auto &t : trials) {
        m = std::max(m, t.nReal);
    }
    return m;
}

Census solution_census(const std::vector<GroundTruthScene> &scenes, double sigma, const Variant &v, std::uint64_t seed,
                       const SolverConfig &cfg) {
    Census c;
    for (std::size_t k = 0; k < scenes.size(); ++k) {
        const auto &scene = scenes[k];
        const FrameGroups noisy = normalize(add_noise(scene, {sigma}, seed + k), scene.normalizer);
        const Pool pool = make_pool(noisy);
        CensusTrial t;
        const auto idx = draw_sample(pool, v.config, seed, k);
        if (idx) {
            try {
                const PolySystem sys = build_system(pool, *idx, v);
                SolverConfig run = cfg;
                run.seed = seed + k;
                const SolutionSet sol = solve(sys, run);
                t.nReal = static_cast<int>(sol.roots.size());
                t.nFeasible = sol.feasible_count();
                t.converged = sol.stats.converged;
            } catch (const Error &) {
            }
        }
        c.trials.push_back(t);
        ++c.realHistogram[t.nReal];
        ++c.feasibleHistogram[t.nFeasible];
    }
    return c;
}

} // namespace planerect
