#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "planerect/constraints.hpp"
#include "planerect/error.hpp"
#include "planerect/geometry.hpp"
#include "planerect/polysolve.hpp"
#include "planerect/robust.hpp"
#include "planerect/studies.hpp"
#include "planerect/synth.hpp"

using namespace planerect;

namespace {

constexpr int kNoiselessScenes = 200;
constexpr double kNoiselessResidual = 1e-6;
constexpr double kNoiselessRmsPx = 1e-4;
constexpr double kNoiselessFraction = 0.99;
constexpr double kNoiselessSeconds = 300.0;

constexpr int kCensusScenes = 200;
constexpr double kOneFeasibleFraction = 0.90;

constexpr int kProposalScenes = 50;
constexpr int kProposalSamples = 10;
constexpr double kGoodRmsPx = 5.0;
constexpr double kGoodProposalFraction = 0.25;

constexpr int kRansacScenes = 200;
constexpr double kRansacGoodFraction = 0.60;
constexpr double kRansacMedianRelLambda = 0.5;

constexpr int kDistortionScenes = 40;
constexpr double kDistortionSpread = 2.0;
constexpr int kFixedLambdaScenes = 30;

constexpr int kJacobianEvaluations = 1000;
constexpr double kJacobianRelTol = 1e-5;

constexpr int kSpuriousSamples = 50;
constexpr int kDegenerateScenes = 10;

constexpr int kOracleSystems = 50;
constexpr int kOracleGrid = 40;
constexpr double kOracleMatchTol = 1e-6;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char *f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof(buf), f, args...);
    return buf;
}

GroundTruthScene generic_scene(std::uint64_t seed, double lambda = -4.0) {
    SceneSpec s;
    s.seed = seed;
    s.lambda = lambda;
    s.groupSizes = {2, 2, 2, 3, 3, 4, 4};
    return gen_scene(s);
}

const Root *nearest_gt(const SolutionSet &sol, const GroundTruthScene &scene) {
    const Eigen::Vector3d gt(scene.vlineGT.l1, scene.vlineGT.l2, scene.lambdaGT);
    const Root *best = nullptr;
    double bestD = 0.0;
    for (const Root &r : sol.roots) {
        const double d = (r.value - gt).norm();
        if (!best || d < bestD) {
            best = &r;
            bestD = d;
        }
    }
    return best;
}

Outcome noiseless_recovery() {
    const auto t0 = Clock::now();
    std::string detail;
    bool pass = true;
    for (const char *name : {"des222", "des32", "des4", "cs222", "cs32", "cs4"}) {
        const Variant v = parse_variant(name);
        int ok = 0;
        for (int k = 0; k < kNoiselessScenes; ++k) {
            const GroundTruthScene scene = generic_scene(10000 + k);
            const Pool pool = v.method == Method::CS ? make_pool(scene.normalized_frames(), cs_observations_exact(scene))
                                                     : make_pool(scene.normalized_frames());
            const auto idx = draw_sample(pool, v.config, 11, k);
            SolverConfig cfg;
            cfg.seed = 100 + k;
            cfg.parallel = false;
            try {
                const PolySystem sys = build_system(pool, *idx, v);
                const SolutionSet sol = solve(sys, cfg);
                const Root *r = nearest_gt(sol, scene);
                if (r && residual(sys, r->value) < kNoiselessResidual &&
                    warp_error(r->model(), scene).rms < kNoiselessRmsPx) {
                    ++ok;
                }
            } catch (const Error &) {
            }
        }
        const double frac = static_cast<double>(ok) / kNoiselessScenes;
        pass = pass && frac >= kNoiselessFraction;
        detail += fmt("%s %.3f ", name, frac);
    }
    const double secs = seconds_since(t0);
    pass = pass && secs <= kNoiselessSeconds;
    return {pass, detail + fmt("(%.1f s)", secs)};
}

Outcome solution_counts() {
    std::vector<GroundTruthScene> scenes;
    for (int k = 0; k < kCensusScenes; ++k) {
        scenes.push_back(generic_scene(20000 + k));
    }
    SolverConfig cfg;
    cfg.parallel = false;
    const std::vector<std::pair<const char *, int>> bounds = {
        {"des222", 54}, {"des32", 45}, {"des4", 36}, {"des22-fixed", 9}};
    bool pass = true;
    std::string detail;
    for (const auto &[name, bound] : bounds) {
        const Census c = solution_census(scenes, 0.0, parse_variant(name), 21, cfg);
        int over = 0;
        for (const auto &t : c.trials) {
            over += t.nReal > bound;
        }
        pass = pass && over == 0;
        detail += fmt("%s max %d/%d ", name, c.max_real(), bound);
    }
    return {pass, detail};
}

Outcome feasibility_census() {
    StudyOptions o;
    o.scenes = kCensusScenes;
    o.seed = 3;
    o.solver = SolverConfig{};
    o.solver.parallel = false;
    const std::vector<double> sigmas = {0.0, 0.5, 1.0};
    const auto rows = census_study(o, sigmas);
    bool pass = true;
    std::string detail;
    for (std::size_t level = 0; level < sigmas.size(); ++level) {
        int one = 0;
        for (int t = 0; t < o.scenes; ++t) {
            one += rows[level * o.scenes + t].nFeasible == 1;
        }
        const double frac = static_cast<double>(one) / o.scenes;
        pass = pass && frac >= kOneFeasibleFraction;
        detail += fmt("sigma %.1f: %.3f ", sigmas[level], frac);
    }
    return {pass, detail};
}

Outcome proposal_quality() {
    StudyOptions o;
    o.scenes = kProposalScenes;
    o.seed = 4;
    const auto rows = proposal_study(o, 1.0, kProposalSamples);
    int good = 0;
    for (const auto &r : rows) {
        good += r.rmsWarp < kGoodRmsPx;
    }
    const double frac = static_cast<double>(good) / rows.size();
    return {frac >= kGoodProposalFraction && rows.size() >= 500,
            fmt("%zu samples, %.3f below %.0f px", rows.size(), frac, kGoodRmsPx)};
}

Outcome ransac_sensitivity() {
    StudyOptions o;
    o.scenes = kRansacScenes;
    o.seed = 5;
    const auto rows = noise_study(o, {2.0});
    int good = 0;
    std::vector<double> rel;
    for (const auto &r : rows) {
        good += r.rmsWarp < kGoodRmsPx;
        rel.push_back(std::isnan(r.relLambdaErr) ? std::numeric_limits<double>::infinity() : r.relLambdaErr);
    }
    const double frac = static_cast<double>(good) / rows.size();
    const double med = median(rel);
    return {frac >= kRansacGoodFraction && med < kRansacMedianRelLambda,
            fmt("%.3f below %.0f px, median rel lambda error %.3f", frac, kGoodRmsPx, med)};
}

Outcome distortion_stability() {
    StudyOptions o;
    o.scenes = kDistortionScenes;
    o.seed = 6;
    const std::vector<double> lambdas = {-5, -4, -3, -2, -1, 0};
    const auto rows = distortion_study(o, lambdas, 1.0);
    std::vector<double> med;
    std::string detail = "median rms";
    for (std::size_t level = 0; level < lambdas.size(); ++level) {
        std::vector<double> v;
        for (int t = 0; t < o.scenes; ++t) {
            v.push_back(rows[level * o.scenes + t].rmsWarp);
        }
        med.push_back(median(v));
        detail += fmt(" %.2f", med.back());
    }
    const double spread = *std::max_element(med.begin(), med.end()) / *std::min_element(med.begin(), med.end());
    bool pass = spread < kDistortionSpread;
    detail += fmt(" (spread %.2f); fixed-lambda mismatch median rms", spread);

    StudyOptions f;
    f.scenes = kFixedLambdaScenes;
    f.seed = 7;
    double prev = -1.0;
    for (double lf : {-4.0, -3.0, -2.0, -1.0, 0.0}) {
        f.variant = parse_variant("des22-fixed", lf);
        std::vector<double> v;
        for (const auto &r : noise_study(f, {0.0})) {
            v.push_back(r.rmsWarp);
        }
        const double m = median(v);
        pass = pass && m > prev;
        prev = m;
        detail += fmt(" %.3g", m);
    }
    return {pass, detail};
}

Outcome jacobian_correctness() {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> coord(-0.3, 0.3);
    std::uniform_real_distribution<double> line(-1.5, 1.5);
    std::uniform_real_distribution<double> lam(-6.0, 0.5);
    int done = 0;
    int ok = 0;
    double worst = 0.0;
    while (done < kJacobianEvaluations) {
        const RectifyModel m(line(rng), line(rng), lam(rng));
        const ImagePoint p(coord(rng), coord(rng));
        if (std::abs(vanishing_denominator(p, m)) < 0.1) {
            continue;
        }
        const double h = 1e-6;
        Eigen::Matrix2d J;
        for (int k = 0; k < 2; ++k) {
            ImagePoint e = ImagePoint::Zero();
            e[k] = h;
            J.col(k) = (rectify(p + e, m) - rectify(p - e, m)) / (2.0 * h);
        }
        const double fd = J.determinant();
        const double rel = std::abs(change_of_scale(p, m) - fd) / std::abs(fd);
        worst = std::max(worst, rel);
        ok += rel < kJacobianRelTol;
        ++done;
    }
    return {ok == done, fmt("%d/%d within %.0e, worst %.2e", ok, done, kJacobianRelTol, worst)};
}

Outcome spurious_family() {
    BuildOptions anchored;
    anchored.square = SquareSelection::Anchored;
    int spurious = 0;
    int leaked = 0;
    int gtFound = 0;
    SolverConfig cfg;
    cfg.parallel = false;
    for (int k = 0; k < kSpuriousSamples; ++k) {
        const GroundTruthScene scene = generic_scene(30000 + k);
        const Pool pool = make_pool(scene.normalized_frames());
        const auto idx = draw_sample(pool, Config::C4, 9, k);
        DesSample s;
        s.config = Config::C4;
        for (const auto &[g, regions] : idx->groups) {
            std::vector<AffineFrame> frames;
            for (int r : regions) {
                frames.push_back(pool.frames[g][r]);
            }
            s.groups.push_back(frames);
        }
        const PolySystem sys = build_des(s, anchored);
        cfg.seed = 200 + k;
        const SolutionSet sol = solve(sys, cfg);
        for (const Root &r : sol.rejected) {
            spurious += residual(sys, r.value) >= cfg.residualTol;
        }
        for (const Root &r : sol.roots) {
            leaked += residual(sys, r.value) >= cfg.residualTol;
        }
        const Root *r = nearest_gt(sol, scene);
        gtFound += r && warp_error(r->model(), scene).rms < kNoiselessRmsPx;
    }
    return {spurious > 0 && leaked == 0 && gtFound == kSpuriousSamples,
            fmt("%d spurious real endpoints removed, %d leaked, ground truth kept in %d/%d", spurious, leaked,
                gtFound, kSpuriousSamples)};
}

Outcome degeneracy_handling() {
    int flagged = 0;
    int rejected = 0;
    int accurate = 0;
    int silentWrong = 0;
    for (const char *name : {"des222", "des32", "des4"}) {
        for (int kind = 0; kind < 2; ++kind) {
            for (int k = 0; k < kDegenerateScenes; ++k) {
                SceneSpec s;
                s.seed = 40000 + 100 * kind + k;
                s.groupSizes = {2, 2, 2, 3, 3, 4, 4};
                const GroundTruthScene scene =
                    kind == 0 ? gen_concentric_scene(s) : gen_vanishing_line_through_center_scene(s);
                RansacOptions o;
                o.variant = parse_variant(name);
                o.seed = 10 + k;
                try {
                    const EstimationResult est = ransac(make_pool(scene.normalized_frames()), o);
                    if (!est.flags.empty()) {
                        ++flagged;
                    } else if (warp_error(est.model, scene).rms < kGoodRmsPx) {
                        ++accurate;
                    } else {
                        ++silentWrong;
                    }
                } catch (const Error &e) {
                    if (e.kind() != ErrorKind::NoFeasibleModel) {
                        throw;
                    }
                    ++rejected;
                }
            }
        }
    }
    return {silentWrong == 0, fmt("%d NoFeasibleModel, %d flagged, %d accurate, %d silently wrong", rejected,
                                  flagged, accurate, silentWrong)};
}

Outcome oracle_equivalence() {
    std::mt19937_64 rng(10);
    std::uniform_real_distribution<double> coord(-0.25, 0.25);
    const SearchBox box{{-3.0, -3.0, -8.0}, {3.0, 3.0, 0.5}};
    int oracleRoots = 0;
    int matched = 0;
    int systems = 0;
    SolverConfig cfg;
    cfg.parallel = false;
    while (systems < kOracleSystems) {
        DesSample s;
        s.config = Config::C222;
        for (int g = 0; g < 3; ++g) {
            std::vector<AffineFrame> pair;
            for (int r = 0; r < 2; ++r) {
                AffineFrame f;
                for (int i = 0; i < 3; ++i) {
                    f[i] = ImagePoint(coord(rng), coord(rng));
                }
                pair.push_back(f);
            }
            s.groups.push_back(pair);
        }
        PolySystem sys;
        try {
            sys = build_des(s);
        } catch (const Error &) {
            continue;
        }
        ++systems;
        cfg.seed = 300 + systems;
        const SolutionSet ref = oracle_solve(sys, box, kOracleGrid, cfg);
        const SolutionSet sol = solve(sys, cfg);
        for (const Root &o : ref.roots) {
            ++oracleRoots;
            for (const Root &r : sol.roots) {
                if (((r.value - o.value).array().abs() <= kOracleMatchTol).all()) {
                    ++matched;
                    break;
                }
            }
        }
    }
    return {oracleRoots > 0 && matched == oracleRoots,
            fmt("%d/%d oracle roots matched over %d systems", matched, oracleRoots, systems)};
}

} // namespace

int main() {
    const std::vector<std::pair<const char *, std::function<Outcome()>>> criteria = {
        {"noiseless recovery", noiseless_recovery},
        {"solution counts", solution_counts},
        {"feasibility census", feasibility_census},
        {"proposal quality", proposal_quality},
        {"ransac sensitivity", ransac_sensitivity},
        {"distortion stability", distortion_stability},
        {"jacobian correctness", jacobian_correctness},
        {"spurious family", spurious_family},
        {"degeneracy handling", degeneracy_handling},
        {"oracle equivalence", oracle_equivalence},
    };
    int failures = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        const auto t0 = Clock::now();
        Outcome o;
        try {
            o = criteria[k].second();
        } catch (const std::exception &e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += !o.pass;
        std::printf("%s %2zu %-22s %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].first,
                    o.detail.c_str(), seconds_since(t0));
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
