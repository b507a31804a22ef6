#include "planerect/studies.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <map>
#include <ostream>
#include <tuple>

#include "planerect/error.hpp"

namespace planerect {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

using Clock = std::chrono::steady_clock;

double millis_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::uint64_t noise_seed(std::uint64_t seed, int trial, int level) {
    return seed * 0x2545f4914f6cdd1dULL + static_cast<std::uint64_t>(trial) * 1000003ULL +
           static_cast<std::uint64_t>(level) * 7919ULL + 17ULL;
}

ResultRow base_row(const StudyOptions &o, int trial, double sigma, double lambda) {
    ResultRow r;
    r.trial = trial;
    r.variant = to_string(o.variant);
    r.sigma = sigma;
    r.lambdaGT = lambda;
    r.lambdaEst = r.l1 = r.l2 = kNaN;
    r.rmsWarp = kInf;
    r.relLambdaErr = kNaN;
    r.residual = kNaN;
    return r;
}

void fill_model(ResultRow &r, const RectifyModel &m, const GroundTruthScene &scene) {
    r.lambdaEst = m.lambda;
    r.l1 = m.l.l1;
    r.l2 = m.l.l2;
    r.rmsWarp = warp_error(m, scene).rms;
    r.relLambdaErr = scene.lambdaGT != 0.0 ? rel_lambda_error(m, scene) : std::abs(m.lambda);
}

double distance_to_gt(const Root &r, const GroundTruthScene &scene) {
    const Eigen::Vector3d gt(scene.vlineGT.l1, scene.vlineGT.l2, scene.lambdaGT);
    Eigen::Vector3d d = r.value - gt;
    d[2] /= std::max(1.0, std::abs(gt[2]));
    return d.norm();
}

// Runs body(trial) for every trial, in parallel when requested.
template <typename F>
std::vector<ResultRow> for_trials(const StudyOptions &o, int count, F body) {
    std::vector<ResultRow> rows(count);
    std::vector<std::exception_ptr> errors(count);
    auto run = [&](int t) {
        try {
            rows[t] = body(t);
        } catch (...) {
            errors[t] = std::current_exception();
        }
    };
    if (o.parallel) {
#pragma omp parallel for schedule(dynamic, 1)
        for (int t = 0; t < count; ++t) {
            run(t);
        }
    } else {
        for (int t = 0; t < count; ++t) {
            run(t);
        }
    }
    for (const auto &e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
    return rows;
}

ResultRow ransac_trial(const StudyOptions &o, int trial, int sceneIndex, double sigma, double lambda, int level) {
    ResultRow row = base_row(o, trial, sigma, lambda);
    const GroundTruthScene scene = study_scene(o, sceneIndex, lambda);
    const Pool pool = study_pool(o, scene, sigma, noise_seed(o.seed, sceneIndex, level));
    RansacOptions ro;
    ro.variant = o.variant;
    ro.iterations = o.iterations;
    ro.scoring = o.scoring;
    ro.scene = &scene;
    ro.seed = o.seed + static_cast<std::uint64_t>(trial);
    ro.refine = o.refine;
    ro.parallel = false;
    ro.solver = o.solver;
    const auto t0 = Clock::now();
    try {
        const EstimationResult est = ransac(pool, ro);
        row.solveMillis = millis_since(t0);
        row.nReal = est.realRoots;
        row.nFeasible = est.feasibleModels;
        fill_model(row, est.model, scene);
    } catch (const Error &e) {
        if (e.kind() != ErrorKind::NoFeasibleModel) {
            throw;
        }
        row.solveMillis = millis_since(t0);
    }
    return row;
}

} // namespace

double median(std::vector<double> v) {
    if (v.empty()) {
        return kNaN;
    }
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    if (v.size() % 2 == 1) {
        return *mid;
    }
    const double hi = *mid;
    const double lo = *std::max_element(v.begin(), mid);
    return 0.5 * (lo + hi);
}

GroundTruthScene study_scene(const StudyOptions &o, int trial, double lambda) {
    SceneSpec spec = o.scene;
    spec.seed = o.seed * 1000003ULL + static_cast<std::uint64_t>(trial);
    spec.lambda = lambda;
    return gen_scene(spec);
}

Pool study_pool(const StudyOptions &o, const GroundTruthScene &scene, double sigma, std::uint64_t noiseSeed) {
    const FrameGroups noisy = normalize(add_noise(scene, {sigma}, noiseSeed), scene.normalizer);
    if (o.csScale == CsScale::Exact) {
        if (sigma != 0.0) {
            throw Error(ErrorKind::InvalidArgument, "exact change-of-scale observations need noiseless frames");
        }
        return make_pool(noisy, cs_observations_exact(scene));
    }
    return make_pool(noisy);
}

std::vector<ResultRow> stability_study(const StudyOptions &o) {
    return for_trials(o, o.scenes, [&](int t) {
        const double lambda = o.scene.lambda;
        ResultRow row = base_row(o, t, 0.0, lambda);
        const GroundTruthScene scene = study_scene(o, t, lambda);
        const Pool pool = study_pool(o, scene, 0.0, noise_seed(o.seed, t, 0));
        const auto idx = draw_sample(pool, o.variant.config, o.seed, static_cast<std::uint64_t>(t));
        if (!idx) {
            throw Error(ErrorKind::InvalidArgument, "scene groups cannot support the variant");
        }
        SolverConfig cfg = o.solver;
        cfg.seed = o.seed + static_cast<std::uint64_t>(t);
        cfg.parallel = false;
        const auto t0 = Clock::now();
        try {
            const SolutionSet sol = solve(build_system(pool, *idx, o.variant), cfg);
            row.solveMillis = millis_since(t0);
            row.nReal = static_cast<int>(sol.roots.size());
            row.nFeasible = sol.feasible_count();
            const Root *best = nullptr;
            for (const auto *set : {&sol.roots, &sol.rejected}) {
                for (const Root &r : *set) {
                    if (!best || distance_to_gt(r, scene) < distance_to_gt(*best, scene)) {
                        best = &r;
                    }
                }
            }
            if (best) {
                fill_model(row, best->model(), scene);
                row.residual = best->residual;
            }
        } catch (const Error &e) {
            if (e.kind() != ErrorKind::DegenerateSample && e.kind() != ErrorKind::TrackingFailure) {
                throw;
            }
            row.solveMillis = millis_since(t0);
        }
        return row;
    });
}

std::vector<ResultRow> noise_study(const StudyOptions &o, const std::vector<double> &sigmas) {
    const int n = o.scenes;
    return for_trials(o, n * static_cast<int>(sigmas.size()), [&](int t) {
        const int level = t / n;
        return ransac_trial(o, t, t % n, sigmas[level], o.scene.lambda, level);
    });
}

std::vector<ResultRow> distortion_study(const StudyOptions &o, const std::vector<double> &lambdas, double sigma) {
    const int n = o.scenes;
    return for_trials(o, n * static_cast<int>(lambdas.size()), [&](int t) {
        const int level = t / n;
        return ransac_trial(o, t, t % n, sigma, lambdas[level], level);
    });
}

std::vector<ResultRow> census_study(const StudyOptions &o, const std::vector<double> &sigmas) {
    const int n = o.scenes;
    return for_trials(o, n * static_cast<int>(sigmas.size()), [&](int t) {
        const int level = t / n;
        const int s = t % n;
        const double sigma = sigmas[level];
        ResultRow row = base_row(o, t, sigma, o.scene.lambda);
        const GroundTruthScene scene = study_scene(o, s, o.scene.lambda);
        const Pool pool = study_pool(o, scene, sigma, noise_seed(o.seed, s, level));
        const auto idx = draw_sample(pool, o.variant.config, o.seed, static_cast<std::uint64_t>(t));
        if (!idx) {
            throw Error(ErrorKind::InvalidArgument, "scene groups cannot support the variant");
        }
        SolverConfig cfg = o.solver;
        cfg.seed = o.seed + static_cast<std::uint64_t>(t);
        cfg.parallel = false;
        const auto t0 = Clock::now();
        try {
            const SolutionSet sol = solve(build_system(pool, *idx, o.variant), cfg);
            row.solveMillis = millis_since(t0);
            row.nReal = static_cast<int>(sol.roots.size());
            row.nFeasible = sol.feasible_count();
            const Root *best = nullptr;
            for (const Root &r : sol.roots) {
                if (r.feasible && (!best || distance_to_gt(r, scene) < distance_to_gt(*best, scene))) {
                    best = &r;
                }
            }
            if (best) {
                fill_model(row, best->model(), scene);
                row.residual = best->residual;
            }
        } catch (const Error &e) {
            if (e.kind() != ErrorKind::DegenerateSample && e.kind() != ErrorKind::TrackingFailure) {
                throw;
            }
            row.solveMillis = millis_since(t0);
        }
        return row;
    });
}

std::vector<ResultRow> proposal_study(const StudyOptions &o, double sigma, int samplesPerScene) {
    const int total = o.scenes * samplesPerScene;
    return for_trials(o, total, [&](int t) {
        const int s = t / samplesPerScene;
        ResultRow row = base_row(o, t, sigma, o.scene.lambda);
        const GroundTruthScene scene = study_scene(o, s, o.scene.lambda);
        const Pool pool = study_pool(o, scene, sigma, noise_seed(o.seed, s, 0));
        const auto idx = draw_sample(pool, o.variant.config, o.seed, static_cast<std::uint64_t>(t));
        if (!idx) {
            throw Error(ErrorKind::InvalidArgument, "scene groups cannot support the variant");
        }
        SolverConfig cfg = o.solver;
        cfg.seed = o.seed + static_cast<std::uint64_t>(t);
        cfg.parallel = false;
        const auto t0 = Clock::now();
        try {
            const auto roots = minimal_solutions(pool, *idx, o.variant, cfg);
            row.solveMillis = millis_since(t0);
            row.nFeasible = static_cast<int>(roots.size());
            double best = kInf;
            bool filled = false;
            for (const Root &r : roots) {
                const double w = warp_error(r.model(), scene).rms;
                if (!filled || w < best) {
                    best = w;
                    filled = true;
                    fill_model(row, r.model(), scene);
                    row.residual = r.residual;
                }
            }
        } catch (const Error &e) {
            if (e.kind() != ErrorKind::DegenerateSample && e.kind() != ErrorKind::TrackingFailure) {
                throw;
            }
            row.solveMillis = millis_since(t0);
        }
        return row;
    });
}

std::vector<SummaryRow> aggregate(const std::vector<ResultRow> &rows) {
    std::map<std::tuple<std::string, double, double>, std::vector<const ResultRow *>> groups;
    for (const auto &r : rows) {
        groups[{r.variant, r.sigma, r.lambdaGT}].push_back(&r);
    }
    std::vector<SummaryRow> out;
    for (const auto &[key, members] : groups) {
        SummaryRow s;
        std::tie(s.variant, s.sigma, s.lambdaGT) = key;
        s.trials = static_cast<int>(members.size());
        std::vector<double> rms, rel, res;
        int below = 0, one = 0;
        for (const ResultRow *r : members) {
            rms.push_back(r->rmsWarp);
            below += r->rmsWarp < 5.0;
            one += r->nFeasible == 1;
            rel.push_back(std::isnan(r->relLambdaErr) ? kInf : r->relLambdaErr);
            if (r->residual > 0.0) {
                res.push_back(std::log10(r->residual));
            } else if (r->residual == 0.0) {
                res.push_back(-300.0);
            }
        }
        s.medianRms = median(rms);
        s.fractionBelow5px = static_cast<double>(below) / s.trials;
        s.medianRelLambdaErr = median(rel);
        s.fractionOneFeasible = static_cast<double>(one) / s.trials;
        s.medianLog10Residual = median(res);
        out.push_back(s);
    }
    return out;
}

void write_summary(std::ostream &os, const std::vector<SummaryRow> &rows) {
    os << "variant,sigma,lambdaGT,trials,medianRmsWarp,fractionBelow5px,medianRelLambdaErr,fractionOneFeasible,"
          "medianLog10Residual\n";
    for (const auto &s : rows) {
        os << s.variant << ',' << format_double(s.sigma) << ',' << format_double(s.lambdaGT) << ',' << s.trials << ','
           << format_double(s.medianRms) << ',' << format_double(s.fractionBelow5px) << ','
           << format_double(s.medianRelLambdaErr) << ',' << format_double(s.fractionOneFeasible) << ','
           << format_double(s.medianLog10Residual) << '\n';
    }
}

} // namespace planerect
