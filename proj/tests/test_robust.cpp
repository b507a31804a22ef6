#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "planerect/error.hpp"
#include "planerect/robust.hpp"
#include "planerect/synth.hpp"

using namespace planerect;

namespace {

GroundTruthScene scene(std::uint64_t seed) {
    SceneSpec s;
    s.seed = seed;
    s.groupSizes = {2, 2, 2, 3, 3, 4, 4};
    return gen_scene(s);
}

Pool exact_pool(const GroundTruthScene &s) { return make_pool(s.normalized_frames(), cs_observations_exact(s)); }

RansacOptions options(const char *variant, int iterations, std::uint64_t seed) {
    RansacOptions o;
    o.variant = parse_variant(variant);
    o.iterations = iterations;
    o.seed = seed;
    o.parallel = false;
    return o;
}

RectifyModel offset(const RectifyModel &m, double d1, double d2, double dl) {
    return {m.l.l1 + d1, m.l.l2 + d2, m.lambda + dl};
}

} // namespace

TEST(WarpError, GroundTruthIsZero) {
    for (int k = 0; k < 10; ++k) {
        const GroundTruthScene s = scene(200 + k);
        const WarpErrorReport r = warp_error(s.model(), s);
        ASSERT_EQ(r.perPoint.size(), 100u);
        EXPECT_LT(r.rms, 1e-8);
    }
}

TEST(WarpError, RmsIsRootMeanSquareOfNonNegativeDistances) {
    const GroundTruthScene s = scene(210);
    const WarpErrorReport r = warp_error(offset(s.model(), 0.05, -0.03, 0.2), s);
    double sum = 0.0;
    for (double d : r.perPoint) {
        EXPECT_GE(d, 0.0);
        sum += d * d;
    }
    EXPECT_NEAR(r.rms, std::sqrt(sum / r.perPoint.size()), 1e-12 * (1.0 + r.rms));
}

TEST(WarpError, GrowsMonotonicallyWithLinePerturbation) {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> g;
    for (int k = 0; k < 10; ++k) {
        const GroundTruthScene s = scene(220 + k);
        const RectifyModel gt = s.model();
        const double n = std::hypot(gt.l.l1, gt.l.l2) + 1.0;
        Eigen::Vector2d dir(g(rng), g(rng));
        dir.normalize();
        double prev = 0.0;
        for (int step = 1; step <= 10; ++step) {
            const double t = 0.002 * step * n;
            const double rms = warp_error(offset(gt, t * dir.x(), t * dir.y(), 0.0), s).rms;
            EXPECT_GT(rms, prev) << "scene " << k << " step " << step;
            prev = rms;
        }
    }
}

TEST(WarpError, InvariantToAffineRecomposition) {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int k = 0; k < 10; ++k) {
        const GroundTruthScene s = scene(240 + k);
        const RectifyModel m = offset(s.model(), 0.02, 0.01, -0.3);
        std::vector<ImagePoint> rect;
        for (const ImagePoint &p : warp_grid_image(s)) {
            rect.push_back(rectify(p, m));
        }
        const double base = warp_error_rectified(rect, s).rms;
        Eigen::Matrix2d A;
        A << 1.0 + 0.5 * u(rng), 0.5 * u(rng), 0.5 * u(rng), 1.0 + 0.5 * u(rng);
        const Eigen::Vector2d t(u(rng), u(rng));
        std::vector<ImagePoint> moved;
        for (const ImagePoint &p : rect) {
            moved.push_back(A * p + t);
        }
        EXPECT_NEAR(warp_error_rectified(moved, s).rms, base, 1e-9 * (1.0 + base));
        EXPECT_NEAR(warp_error(m, s).rms, base, 1e-9 * (1.0 + base));
    }
}

TEST(RelLambdaError, Examples) {
    SceneSpec sp;
    sp.seed = 1;
    GroundTruthScene s = gen_scene(sp);
    EXPECT_EQ(rel_lambda_error(RectifyModel(0.0, 0.0, -4.0), s), 0.0);
    EXPECT_DOUBLE_EQ(rel_lambda_error(RectifyModel(0.0, 0.0, -2.0), s), 0.5);
}

TEST(RelLambdaError, GroundTruthZeroThrows) {
    SceneSpec sp;
    sp.seed = 2;
    sp.lambda = 0.0;
    const GroundTruthScene s = gen_scene(sp);
    try {
        rel_lambda_error(RectifyModel(0.0, 0.0, -1.0), s);
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.kind(), ErrorKind::GroundTruthZero);
    }
}

TEST(Ransac, BitReproducibleUnderSeed) {
    const GroundTruthScene s = scene(300);
    GroundTruthScene noisy = s;
    noisy.frames = add_noise(s, {1.0}, 5);
    const Pool pool = make_pool(noisy.normalized_frames());
    const RansacOptions o = options("des222", 10, 42);
    const EstimationResult a = ransac(pool, o), b = ransac(pool, o);
    EXPECT_EQ(a.model.l.vec(), b.model.l.vec());
    EXPECT_EQ(a.model.lambda, b.model.lambda);
    EXPECT_EQ(a.bestScore, b.bestScore);
    EXPECT_EQ(a.bestIteration, b.bestIteration);
}

TEST(Ransac, SerialAndParallelAgree) {
    const GroundTruthScene s = scene(301);
    GroundTruthScene noisy = s;
    noisy.frames = add_noise(s, {1.0}, 6);
    const Pool pool = make_pool(noisy.normalized_frames());
    RansacOptions o = options("des222", 10, 3);
    o.parallel = true;
    const EstimationResult a = ransac(pool, o), b = ransac_serial(pool, o);
    EXPECT_EQ(a.model.l.vec(), b.model.l.vec());
    EXPECT_EQ(a.model.lambda, b.model.lambda);
    EXPECT_EQ(a.bestScore, b.bestScore);
    EXPECT_EQ(a.samplesTried, b.samplesTried);
}

TEST(Ransac, DoublingIterationsNeverWorsensBestScore) {
    for (int k = 0; k < 5; ++k) {
        const GroundTruthScene s = scene(310 + k);
        GroundTruthScene noisy = s;
        noisy.frames = add_noise(s, {2.0}, 10 + k);
        const Pool pool = make_pool(noisy.normalized_frames());
        for (Scoring scoring : {Scoring::EqualScale, Scoring::WarpGT}) {
            RansacOptions o = options("des222", 5, 11 + k);
            o.scoring = scoring;
            o.scene = &s;
            double prev = std::numeric_limits<double>::infinity();
            for (int it : {5, 10, 20}) {
                o.iterations = it;
                try {
                    const double score = ransac(pool, o).bestScore;
                    EXPECT_LE(score, prev);
                    prev = score;
                } catch (const Error &e) {
                    EXPECT_EQ(e.kind(), ErrorKind::NoFeasibleModel);
                    EXPECT_TRUE(std::isinf(prev));
                }
            }
        }
    }
}

TEST(Ransac, NoiselessEndToEndRecoversGroundTruth) {
    for (const char *variant : {"des222", "cs222"}) {
        int ok = 0;
        for (int k = 0; k < 100; ++k) {
            const GroundTruthScene s = scene(1000 + k);
            const EstimationResult r = ransac(exact_pool(s), options(variant, 10, k));
            const double rms = warp_error(r.model, s).rms;
            const double rel = rel_lambda_error(r.model, s);
            ok += rms < 1e-6 && rel < 1e-6;
            EXPECT_LT(rms, 1e-6) << variant << " scene " << k;
            EXPECT_LT(rel, 1e-6) << variant << " scene " << k;
        }
        EXPECT_EQ(ok, 100) << variant;
    }
}

TEST(Ransac, GenericScenesAreNotFlaggedNearOrigin) {
    for (int k = 0; k < 30; ++k) {
        const GroundTruthScene s = scene(1200 + k);
        const EstimationResult r = ransac(exact_pool(s), options("des222", 5, k));
        EXPECT_FALSE(r.flags.count(EstimateFlag::VLNearOrigin)) << "scene " << k;
        EXPECT_FALSE(r.flags.count(EstimateFlag::VLThroughOrigin)) << "scene " << k;
    }
}

TEST(Ransac, ConcentricSceneIsRejectedOrFlagged) {
    for (int k = 0; k < 5; ++k) {
        SceneSpec sp;
        sp.seed = 400 + k;
        sp.groupSizes = {2, 2, 2, 3, 3, 4, 4};
        const GroundTruthScene s = gen_concentric_scene(sp);
        try {
            const EstimationResult r = ransac(make_pool(s.normalized_frames()), options("des222", 10, k));
            EXPECT_FALSE(r.flags.empty()) << "scene " << k;
        } catch (const Error &e) {
            EXPECT_EQ(e.kind(), ErrorKind::NoFeasibleModel);
        }
    }
}

TEST(Ransac, HorizonSceneIsRejectedOrFlagged) {
    for (int k = 0; k < 5; ++k) {
        SceneSpec sp;
        sp.seed = 450 + k;
        sp.groupSizes = {2, 2, 2, 3, 3, 4, 4};
        const GroundTruthScene s = gen_vanishing_line_through_center_scene(sp);
        try {
            const EstimationResult r = ransac(make_pool(s.normalized_frames()), options("des222", 10, k));
            EXPECT_FALSE(r.flags.empty()) << "scene " << k;
        } catch (const Error &e) {
            EXPECT_EQ(e.kind(), ErrorKind::NoFeasibleModel);
        }
    }
}

TEST(Refine, GroundTruthUnchanged) {
    for (int k = 0; k < 10; ++k) {
        const GroundTruthScene s = scene(500 + k);
        const RectifyModel gt = s.model();
        const RectifyModel r = refine(gt, exact_pool(s));
        EXPECT_NEAR(r.l.l1, gt.l.l1, 1e-10);
        EXPECT_NEAR(r.l.l2, gt.l.l2, 1e-10);
        EXPECT_NEAR(r.lambda, gt.lambda, 1e-10);
    }
}

TEST(Refine, ConvergesFromOnePercentOffsets) {
    std::mt19937_64 rng(13);
    std::uniform_int_distribution<int> sign(0, 1);
    for (int k = 0; k < 10; ++k) {
        const GroundTruthScene s = scene(520 + k);
        const RectifyModel gt = s.model();
        auto pm = [&] { return sign(rng) ? 0.01 : -0.01; };
        const RectifyModel start(gt.l.l1 * (1.0 + pm()), gt.l.l2 * (1.0 + pm()), gt.lambda * (1.0 + pm()));
        const RectifyModel r = refine(start, exact_pool(s));
        EXPECT_NEAR(r.l.l1, gt.l.l1, 1e-6) << "scene " << k;
        EXPECT_NEAR(r.l.l2, gt.l.l2, 1e-6) << "scene " << k;
        EXPECT_NEAR(r.lambda, gt.lambda, 1e-6) << "scene " << k;
    }
}

TEST(Refine, NeverIncreasesObjective) {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> g(0.0, 0.05);
    for (int k = 0; k < 20; ++k) {
        const GroundTruthScene s = scene(540 + k);
        GroundTruthScene noisy = s;
        noisy.frames = add_noise(s, {1.0}, 100 + k);
        const Pool pool = make_pool(noisy.normalized_frames());
        const RectifyModel start = offset(s.model(), g(rng), g(rng), 10.0 * g(rng));
        const auto pairs = inlier_pairs(start, pool, 0.15);
        if (pairs.size() < 3) {
            continue;
        }
        const RectifyModel r = refine(start, pool, 0.15);
        EXPECT_LE(equal_scale_objective(r, pool, pairs), equal_scale_objective(start, pool, pairs)) << "scene " << k;
    }
}

TEST(Census, RealCountsBoundedByPathCount) {
    std::vector<GroundTruthScene> scenes;
    for (int k = 0; k < 20; ++k) {
        scenes.push_back(scene(600 + k));
    }
    const Census c = solution_census(scenes, 0.0, parse_variant("des222"), 1);
    ASSERT_EQ(c.trials.size(), 20u);
    EXPECT_LE(c.max_real(), 64);
    for (const CensusTrial &t : c.trials) {
        EXPECT_LE(t.nFeasible, t.nReal);
        EXPECT_GE(t.nFeasible, 1);
    }
}

TEST(Variant, ParseAndPrint) {
    for (const char *name : {"des222", "des32", "des4", "des22-fixed", "cs222", "cs32", "cs4"}) {
        EXPECT_EQ(to_string(parse_variant(name)), name);
    }
    try {
        parse_variant("des5");
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.kind(), ErrorKind::InvalidArgument);
    }
}
