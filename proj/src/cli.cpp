#include "planerect/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>
#include <omp.h>

#include "planerect/error.hpp"
#include "planerect/io.hpp"
#include "planerect/studies.hpp"

namespace planerect {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

std::vector<double> parse_list(const std::string &s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        out.push_back(parse_double(item));
    }
    if (out.empty()) {
        throw Error(ErrorKind::InvalidArgument, "empty list '" + s + "'");
    }
    return out;
}

std::vector<int> parse_int_list(const std::string &s) {
    std::vector<int> out;
    for (double v : parse_list(s)) {
        if (v != std::floor(v) || v < 1) {
            throw Error(ErrorKind::InvalidArgument, "group sizes must be positive integers");
        }
        out.push_back(static_cast<int>(v));
    }
    return out;
}

Scoring parse_scoring(const std::string &s) {
    if (s == "equal-scale") {
        return Scoring::EqualScale;
    }
    if (s == "warp-gt") {
        return Scoring::WarpGT;
    }
    throw Error(ErrorKind::InvalidArgument, "unknown scoring '" + s + "'");
}

CsScale parse_cs_scale(const std::string &s) {
    if (s == "frame") {
        return CsScale::Frame;
    }
    if (s == "exact") {
        return CsScale::Exact;
    }
    throw Error(ErrorKind::InvalidArgument, "unknown scale source '" + s + "'");
}

void write_text(const std::string &path, const std::string &text, std::ostream &out) {
    if (path.empty() || path == "-") {
        out << text;
        return;
    }
    std::ofstream os(path);
    if (!os || !(os << text)) {
        throw Error(ErrorKind::Io, "cannot write " + path);
    }
}

void apply_thread_env() {
    const char *env = std::getenv(kThreadsEnv);
    if (!env || !*env) {
        return;
    }
    char *end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (*end != '\0' || n < 1) {
        throw Error(ErrorKind::InvalidArgument, std::string(kThreadsEnv) + " must be a positive integer");
    }
    omp_set_num_threads(static_cast<int>(n));
}

struct SynthArgs {
    std::uint64_t seed = 1;
    int count = 1;
    std::string motion = "rigid";
    double lambda = -4.0;
    double sigma = 0.0;
    std::string groups = "2,2,2,3,3,4,4";
    std::string frameSize = "0.1,0.2";
    std::string kind = "generic";
    std::string out;
};

int cmd_synth(const SynthArgs &a, std::ostream &out) {
    SceneSpec spec;
    spec.motion = parse_motion(a.motion);
    spec.lambda = a.lambda;
    spec.groupSizes = parse_int_list(a.groups);
    const auto fs_range = parse_list(a.frameSize);
    if (fs_range.size() != 2 || !(fs_range[0] > 0.0) || fs_range[1] < fs_range[0]) {
        throw Error(ErrorKind::InvalidArgument, "--frame-size needs 'min,max' with 0 < min <= max");
    }
    spec.minFrameSide = fs_range[0];
    spec.maxFrameSide = fs_range[1];
    if (a.count < 1) {
        throw Error(ErrorKind::InvalidArgument, "--count must be at least 1");
    }
    std::error_code ec;
    fs::create_directories(a.out, ec);
    if (ec) {
        throw Error(ErrorKind::Io, "cannot create " + a.out + ": " + ec.message());
    }
    for (int k = 0; k < a.count; ++k) {
        spec.seed = a.seed + static_cast<std::uint64_t>(k);
        GroundTruthScene scene;
        if (a.kind == "generic") {
            scene = gen_scene(spec);
        } else if (a.kind == "concentric") {
            scene = gen_concentric_scene(spec);
        } else if (a.kind == "horizon") {
            scene = gen_vanishing_line_through_center_scene(spec);
        } else {
            throw Error(ErrorKind::InvalidArgument, "unknown scene kind '" + a.kind + "'");
        }
        scene.frames = add_noise(scene, {a.sigma}, spec.seed);
        scene.noiseSigmaPx = a.sigma;
        char name[32];
        std::snprintf(name, sizeof(name), "scene_%04d.json", k);
        const fs::path path = fs::path(a.out) / name;
        save_scene(scene, path);
        out << path.string() << '\n';
    }
    return 0;
}

struct SolveArgs {
    std::string scene;
    std::string variant = "des222";
    std::string scoring = "equal-scale";
    int iterations = 25;
    std::uint64_t seed = 1;
    double lambda = -4.0;
    std::string csScale = "frame";
    bool refine = false;
    double tau = 0.15;
    std::string out;
    int trial = 0;
};

int cmd_solve(const SolveArgs &a, std::ostream &out) {
    const GroundTruthScene scene = load_scene(a.scene);
    RansacOptions o;
    o.variant = parse_variant(a.variant, a.lambda);
    o.iterations = a.iterations;
    o.scoring = parse_scoring(a.scoring);
    o.scene = &scene;
    o.seed = a.seed;
    o.refine = a.refine;
    o.tau = a.tau;
    if (scene.noiseSigmaPx == 0.0) {
        o.solver.residualTol = SolverConfig{}.residualTol;
    }
    const FrameGroups frames = scene.normalized_frames();
    const Pool pool = parse_cs_scale(a.csScale) == CsScale::Exact
                          ? make_pool(frames, cs_observations_exact(scene))
                          : make_pool(frames);
    const auto t0 = std::chrono::steady_clock::now();
    const EstimationResult est = ransac(pool, o);
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    ResultRow row;
    row.trial = a.trial;
    row.variant = to_string(o.variant);
    row.sigma = scene.noiseSigmaPx;
    row.lambdaGT = scene.lambdaGT;
    row.lambdaEst = est.model.lambda;
    row.l1 = est.model.l.l1;
    row.l2 = est.model.l.l2;
    row.rmsWarp = warp_error(est.model, scene).rms;
    row.relLambdaErr = scene.lambdaGT != 0.0 ? rel_lambda_error(est.model, scene) : std::abs(est.model.lambda);
    row.nReal = est.realRoots;
    row.nFeasible = est.feasibleModels;
    row.solveMillis = ms;
    row.residual = est.bestScore;
    write_results(out, {row});
    if (!a.out.empty()) {
        write_text(a.out, model_to_json(est.model, &est) + "\n", out);
    }
    return 0;
}

struct BenchArgs {
    std::string kind;
    int scenes = 20;
    std::uint64_t seed = 1;
    std::string variant = "des222";
    int iterations = 25;
    std::string scoring = "warp-gt";
    std::string sigma;
    std::string lambda;
    std::string motion = "rigid";
    std::string groups = "2,2,2,3,3,4,4";
    std::string csScale = "frame";
    int samples = 10;
    std::string out;
    bool aggregate = false;
};

int cmd_bench(const BenchArgs &a, std::ostream &out) {
    StudyOptions o;
    o.scenes = a.scenes;
    o.seed = a.seed;
    o.iterations = a.iterations;
    o.scoring = parse_scoring(a.scoring);
    o.csScale = parse_cs_scale(a.csScale);
    o.scene.motion = parse_motion(a.motion);
    o.scene.groupSizes = parse_int_list(a.groups);
    if (a.scenes < 1) {
        throw Error(ErrorKind::InvalidArgument, "--scenes must be at least 1");
    }
    auto sigmas = [&](const std::vector<double> &dflt) { return a.sigma.empty() ? dflt : parse_list(a.sigma); };
    auto lambdas = [&](const std::vector<double> &dflt) { return a.lambda.empty() ? dflt : parse_list(a.lambda); };
    std::vector<ResultRow> rows;
    if (a.kind == "stability") {
        o.scene.lambda = lambdas({-4.0}).front();
        o.variant = parse_variant(a.variant, o.scene.lambda);
        o.solver = SolverConfig{};
        o.solver.parallel = false;
        rows = stability_study(o);
    } else if (a.kind == "noise") {
        o.scene.lambda = lambdas({-4.0}).front();
        o.variant = parse_variant(a.variant, o.scene.lambda);
        rows = noise_study(o, sigmas({0.1, 0.5, 1.0, 2.0, 5.0}));
    } else if (a.kind == "distortion") {
        o.variant = parse_variant(a.variant);
        if (o.variant.config == Config::C22Fixed) {
            throw Error(ErrorKind::InvalidArgument, "the distortion sweep needs a lambda-estimating variant");
        }
        rows = distortion_study(o, lambdas({-5.0, -4.0, -3.0, -2.0, -1.0, 0.0}), sigmas({1.0}).front());
    } else if (a.kind == "census") {
        o.scene.lambda = lambdas({-4.0}).front();
        o.variant = parse_variant(a.variant, o.scene.lambda);
        rows = census_study(o, sigmas({0.0, 0.5, 1.0}));
    } else if (a.kind == "proposal") {
        o.scene.lambda = lambdas({-4.0}).front();
        o.variant = parse_variant(a.variant, o.scene.lambda);
        rows = proposal_study(o, sigmas({1.0}).front(), a.samples);
    } else {
        throw Error(ErrorKind::InvalidArgument, "unknown bench kind '" + a.kind + "'");
    }
    std::ostringstream raw;
    write_results(raw, rows);
    write_text(a.out, raw.str(), out);
    if (a.aggregate) {
        if (a.out.empty() || a.out == "-") {
            out << '\n';
        }
        write_summary(out, aggregate(rows));
    }
    return 0;
}

struct ChosArgs {
    std::string scene;
    std::string model;
    double l3 = 1.0;
    int grid = 50;
    double threshold = 10.0;
    std::string ref;
    int width = 1000;
    int height = 1000;
    std::string out;
};

int cmd_chos_map(const ChosArgs &a, std::ostream &out) {
    RectifyModel m;
    Normalizer norm = Normalizer::for_image(a.width, a.height);
    int width = a.width, height = a.height;
    if (!a.scene.empty()) {
        const GroundTruthScene s = load_scene(a.scene);
        m = s.model();
        norm = s.normalizer;
        width = s.width;
        height = s.height;
    } else if (!a.model.empty()) {
        const auto v = parse_list(a.model);
        if (v.size() != 3) {
            throw Error(ErrorKind::InvalidArgument, "--model needs 'l1,l2,lambda'");
        }
        m = RectifyModel(VanishingLine{v[0], v[1], a.l3}, v[2]);
    } else {
        throw Error(ErrorKind::InvalidArgument, "chos-map needs --scene or --model");
    }
    if (a.grid < 2) {
        throw Error(ErrorKind::InvalidArgument, "--grid must be at least 2");
    }
    Eigen::Vector2d refPx = norm.center();
    if (!a.ref.empty()) {
        const auto v = parse_list(a.ref);
        if (v.size() != 2) {
            throw Error(ErrorKind::InvalidArgument, "--ref needs 'x,y' in pixels");
        }
        refPx = {v[0], v[1]};
    }
    std::vector<ImagePoint> grid;
    json points = json::array();
    for (int j = 0; j < a.grid; ++j) {
        for (int i = 0; i < a.grid; ++i) {
            const Eigen::Vector2d px(width * i / double(a.grid - 1), height * j / double(a.grid - 1));
            grid.push_back(norm.to_normalized(px));
            points.push_back({px.x(), px.y()});
        }
    }
    const ScaleField field = dense_change_of_scale_map(grid, m, norm.to_normalized(refPx));
    const auto mask = mask_by_scale(field, a.threshold);
    json j;
    j["model"] = {{"l", {m.l.l1, m.l.l2, m.l.l3}}, {"lambda", m.lambda}};
    j["gridN"] = a.grid;
    j["imageSize"] = {{"width", width}, {"height", height}};
    j["reference"] = {refPx.x(), refPx.y()};
    j["threshold"] = a.threshold;
    j["points"] = points;
    json values = json::array();
    for (std::size_t k = 0; k < field.values.size(); ++k) {
        values.push_back(field.valid[k] ? json(field.values[k]) : json(nullptr));
    }
    j["values"] = values;
    j["mask"] = mask;
    try {
        const VanishingLocus locus = distorted_vanishing_circle(m);
        if (locus.kind == VanishingLocus::Kind::Circle) {
            const Eigen::Vector2d c = norm.to_pixel(locus.center);
            j["locus"] = {{"kind", "circle"}, {"center", {c.x(), c.y()}}, {"radius", locus.radius / norm.scale()}};
        } else {
            j["locus"] = {{"kind", "line"}, {"normalized", {locus.line[0], locus.line[1], locus.line[2]}}};
        }
    } catch (const Error &e) {
        if (e.kind() != ErrorKind::NoRealLocus) {
            throw;
        }
        j["locus"] = {{"kind", "none"}};
    }
    write_text(a.out, j.dump(1) + "\n", out);
    return 0;
}

struct CheckArgs {
    std::string scene;
    double tol = 1e-9;
};

int cmd_check(const CheckArgs &a, std::ostream &out, std::ostream &err) {
    const GroundTruthScene scene = load_scene(a.scene);
    const RectifyModel gt = scene.model();
    double worst = 0.0;
    int regions = 0;
    const bool onPlane = scene.vlineGT.l3 == 0.0;
    const FrameGroups frames = onPlane ? plane_frames(scene) : scene.normalized_frames();
    for (const auto &group : frames) {
        std::vector<double> s;
        for (const auto &f : group) {
            s.push_back(onPlane ? std::abs(frame_determinant(f)) : rectified_scale(orient(f), gt).scale);
            ++regions;
        }
        for (std::size_t i = 0; i < s.size(); ++i) {
            for (std::size_t k = i + 1; k < s.size(); ++k) {
                worst = std::max(worst, std::abs(s[i] - s[k]) / std::max(std::abs(s[i]), std::abs(s[k])));
            }
        }
    }
    bool inside = true;
    for (const auto &group : scene.frames) {
        for (const auto &f : group) {
            for (int k = 0; k < 3; ++k) {
                inside = inside && f[k].x() >= 0 && f[k].y() >= 0 && f[k].x() <= scene.width &&
                         f[k].y() <= scene.height;
            }
        }
    }
    json j;
    j["groups"] = scene.frames.size();
    j["regions"] = regions;
    j["measure"] = onPlane ? "plane" : "rectified";
    j["maxRelativeScaleDifference"] = worst;
    j["framesInsideImage"] = inside;
    j["tolerance"] = a.tol;
    const bool ok = worst <= a.tol && inside;
    j["ok"] = ok;
    out << j.dump(1) << '\n';
    if (!ok) {
        err << "error: CheckFailed: scene frames do not satisfy equal scale at ground truth\n";
        return 1;
    }
    return 0;
}

} // namespace

int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
    CLI::App app{"Joint radial undistortion and affine rectification from coplanar repeats"};
    app.require_subcommand(1);

    SynthArgs sa;
    auto *synth = app.add_subcommand("synth", "Generate synthetic ground-truth scenes");
    synth->add_option("--seed", sa.seed, "Random seed of the first scene");
    synth->add_option("--count", sa.count, "Number of scenes");
    synth->add_option("--motion", sa.motion, "rigid or translation");
    synth->add_option("--lambda", sa.lambda, "Ground-truth division parameter (normalized)");
    synth->add_option("--sigma", sa.sigma, "Pixel noise added to the stored frames");
    synth->add_option("--groups", sa.groups, "Comma-separated group sizes");
    synth->add_option("--frame-size", sa.frameSize, "Frame side range as a fraction of the plane region");
    synth->add_option("--kind", sa.kind, "generic, concentric or horizon");
    synth->add_option("--out", sa.out, "Output directory")->required();

    SolveArgs so;
    auto *solveCmd = app.add_subcommand("solve", "Estimate the model of a scene file");
    solveCmd->add_option("--scene", so.scene, "Scene file")->required();
    solveCmd->add_option("--variant", so.variant, "des222, des32, des4, des22-fixed, cs222, cs32 or cs4");
    solveCmd->add_option("--scoring", so.scoring, "equal-scale or warp-gt");
    solveCmd->add_option("--iterations", so.iterations, "Minimal samples");
    solveCmd->add_option("--seed", so.seed, "Random seed");
    solveCmd->add_option("--lambda", so.lambda, "Division parameter of des22-fixed");
    solveCmd->add_option("--cs-scale", so.csScale, "frame or exact");
    solveCmd->add_flag("--refine", so.refine, "Refine on the equal-scale inliers");
    solveCmd->add_option("--tau", so.tau, "Equal-scale inlier threshold");
    solveCmd->add_option("--out", so.out, "Model document path");
    solveCmd->add_option("--trial", so.trial, "Trial id of the result row");

    BenchArgs ba;
    auto *bench = app.add_subcommand("bench", "Run a synthetic benchmark");
    bench->add_option("--kind", ba.kind, "stability, noise, distortion, census or proposal")->required();
    bench->add_option("--scenes", ba.scenes, "Scenes per level");
    bench->add_option("--seed", ba.seed, "Random seed");
    bench->add_option("--variant", ba.variant, "Solver variant");
    bench->add_option("--iterations", ba.iterations, "Minimal samples per estimate");
    bench->add_option("--scoring", ba.scoring, "equal-scale or warp-gt");
    bench->add_option("--sigma", ba.sigma, "Comma-separated noise levels in pixels");
    bench->add_option("--lambda", ba.lambda, "Comma-separated ground-truth division parameters");
    bench->add_option("--motion", ba.motion, "rigid or translation");
    bench->add_option("--groups", ba.groups, "Comma-separated group sizes");
    bench->add_option("--cs-scale", ba.csScale, "frame or exact");
    bench->add_option("--samples", ba.samples, "Minimal samples per scene (proposal)");
    bench->add_option("--out", ba.out, "Result table path");
    bench->add_flag("--aggregate", ba.aggregate, "Also print per-level summary statistics");

    ChosArgs ca;
    auto *chos = app.add_subcommand("chos-map", "Dense relative change of scale over the image");
    chos->add_option("--scene", ca.scene, "Scene file (uses the ground-truth model)");
    chos->add_option("--model", ca.model, "l1,l2,lambda");
    chos->add_option("--l3", ca.l3, "Third vanishing line coefficient of --model");
    chos->add_option("--grid", ca.grid, "Grid points per side");
    chos->add_option("--threshold", ca.threshold, "Bound on the rectified scale blow-up");
    chos->add_option("--ref", ca.ref, "Reference point x,y in pixels");
    chos->add_option("--width", ca.width, "Image width without --scene");
    chos->add_option("--height", ca.height, "Image height without --scene");
    chos->add_option("--out", ca.out, "Field document path");

    CheckArgs ka;
    auto *check = app.add_subcommand("check", "Validate a scene against its ground truth");
    check->add_option("--scene", ka.scene, "Scene file")->required();
    check->add_option("--tol", ka.tol, "Largest accepted relative scale difference");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        return app.exit(e, out, err);
    }
    try {
        apply_thread_env();
        if (synth->parsed()) {
            return cmd_synth(sa, out);
        }
        if (solveCmd->parsed()) {
            return cmd_solve(so, out);
        }
        if (bench->parsed()) {
            return cmd_bench(ba, out);
        }
        if (chos->parsed()) {
            return cmd_chos_map(ca, out);
        }
        if (check->parsed()) {
            return cmd_check(ka, out, err);
        }
    } catch (const Error &e) {
        err << "error: " << to_string(e.kind()) << ": " << e.what() << '\n';
        return exit_code(e.kind());
    } catch (const std::exception &e) {
        err << "error: Internal: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

} // namespace planerect
