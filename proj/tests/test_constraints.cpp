#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "planerect/constraints.hpp"
#include "planerect/error.hpp"
#include "planerect/polysolve.hpp"
#include "planerect/synth.hpp"

using namespace planerect;

namespace {

GroundTruthScene scene(std::uint64_t seed) {
    SceneSpec s;
    s.seed = seed;
    s.groupSizes = {2, 2, 2, 3, 3, 4, 4};
    return gen_scene(s);
}

// Group indices of the scene above for each configuration.
std::vector<int> groups_for(Config c) {
    switch (c) {
    case Config::C222: return {0, 1, 2};
    case Config::C32: return {3, 0};
    case Config::C4: return {5};
    case Config::C22Fixed: return {0, 1};
    }
    return {};
}

DesSample des_sample(const GroundTruthScene &s, Config c) {
    const FrameGroups frames = s.normalized_frames();
    DesSample out;
    out.config = c;
    for (int g : groups_for(c)) {
        out.groups.push_back(frames[g]);
    }
    return out;
}

CsSample cs_sample(const GroundTruthScene &s, Config c) {
    const ScaleGroups scales = cs_observations_exact(s);
    CsSample out;
    out.config = c;
    for (int g : groups_for(c)) {
        out.groups.push_back(scales[g]);
    }
    return out;
}

AffineFrame random_frame(std::mt19937_64 &rng) {
    std::uniform_real_distribution<double> u(-0.25, 0.25);
    return {{u(rng), u(rng)}, {u(rng), u(rng)}, {u(rng), u(rng)}};
}

DesSample random_des(std::mt19937_64 &rng, Config c) {
    DesSample s;
    s.config = c;
    for (int n : group_sizes(c)) {
        std::vector<AffineFrame> g;
        for (int k = 0; k < n; ++k) {
            g.push_back(random_frame(rng));
        }
        s.groups.push_back(g);
    }
    return s;
}

int pair_count(const std::vector<int> &sizes) {
    int n = 0;
    for (int s : sizes) {
        n += s * (s - 1) / 2;
    }
    return n;
}

double rel_diff(double a, double b) { return std::abs(a - b) / std::max(std::abs(a), std::abs(b)); }

} // namespace

TEST(BuildDes, EquationCountsAndDegrees) {
    const GroundTruthScene s = scene(1);
    const std::vector<std::pair<Config, int>> expected = {{Config::C222, 3}, {Config::C32, 4}, {Config::C4, 6}};
    for (const auto &[c, n] : expected) {
        const PolySystem sys = build_des(des_sample(s, c));
        ASSERT_EQ(static_cast<int>(sys.polys.size()), n);
        EXPECT_EQ(sys.nvars, 3);
        EXPECT_EQ(sys.square.size(), 3u);
        for (const auto &p : sys.polys) {
            EXPECT_EQ(p.degree(), 4);
        }
    }
}

TEST(BuildDes, EquationCountIsPairCount) {
    std::mt19937_64 rng(2);
    for (Config c : {Config::C222, Config::C32, Config::C4}) {
        for (int k = 0; k < 20; ++k) {
            const DesSample s = random_des(rng, c);
            EXPECT_EQ(static_cast<int>(build_des(s).polys.size()), pair_count(group_sizes(c)));
        }
    }
}

TEST(BuildDes, GroundTruthIsRoot) {
    for (int k = 0; k < 30; ++k) {
        const GroundTruthScene s = scene(100 + k);
        const Eigen::Vector3d gt(s.vlineGT.l1, s.vlineGT.l2, s.lambdaGT);
        for (Config c : {Config::C222, Config::C32, Config::C4}) {
            EXPECT_LT(residual(build_des(des_sample(s, c)), gt), 1e-10);
        }
    }
}

TEST(BuildCs, GroundTruthIsRootWithExactScales) {
    for (int k = 0; k < 30; ++k) {
        const GroundTruthScene s = scene(200 + k);
        const Eigen::Vector3d gt(s.vlineGT.l1, s.vlineGT.l2, s.lambdaGT);
        for (Config c : {Config::C222, Config::C32, Config::C4}) {
            const PolySystem sys = build_cs(cs_sample(s, c));
            EXPECT_EQ(static_cast<int>(sys.polys.size()), pair_count(group_sizes(c)));
            for (const auto &p : sys.polys) {
                EXPECT_LE(p.degree(), 4);
            }
            EXPECT_LT(residual(sys, gt), 1e-10);
        }
    }
}

TEST(BuildCs, IdenticalObservationsAreDegenerate) {
    CsSample s;
    s.config = Config::C222;
    s.groups = {{{{0.1, 0.05}, 0.01}, {{0.1, 0.05}, 0.01}},
                {{{-0.1, 0.02}, 0.02}, {{0.05, 0.1}, 0.03}},
                {{{0.2, -0.1}, 0.01}, {{-0.15, -0.05}, 0.02}}};
    EXPECT_TRUE(degeneracy_flags(s).count(Degeneracy::ZeroEquation));
    try {
        build_cs(s);
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.kind(), ErrorKind::DegenerateSample);
    }
    BuildOptions lax;
    lax.checkDegeneracy = false;
    EXPECT_TRUE(build_cs(s, lax).polys[0].empty());
}

TEST(BuildDesFixed, GroundTruthIsRoot) {
    for (int k = 0; k < 30; ++k) {
        const GroundTruthScene s = scene(300 + k);
        const PolySystem sys = build_des_fixed_lambda(des_sample(s, Config::C22Fixed), s.lambdaGT);
        ASSERT_EQ(sys.polys.size(), 2u);
        EXPECT_EQ(sys.nvars, 2);
        for (const auto &p : sys.polys) {
            EXPECT_LE(p.degree(), 3);
        }
        const std::array<double, 2> gt = {s.vlineGT.l1, s.vlineGT.l2};
        EXPECT_LT(residual(sys, std::span<const double>(gt)), 1e-10);
    }
}

TEST(BuildDesFixed, FrontoParallelTranslatedCopiesHaveOriginRoot) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> t(-0.1, 0.1);
    for (int k = 0; k < 20; ++k) {
        DesSample s;
        s.config = Config::C22Fixed;
        for (int g = 0; g < 2; ++g) {
            AffineFrame f = random_frame(rng);
            AffineFrame h = f;
            const ImagePoint d(t(rng), t(rng));
            for (int i = 0; i < 3; ++i) {
                h[i] += d;
            }
            s.groups.push_back({f, h});
        }
        const std::array<double, 2> origin = {0.0, 0.0};
        EXPECT_LT(residual(build_des_fixed_lambda(s, 0.0), std::span<const double>(origin)), 1e-12);
    }
}

TEST(DegeneracyFlags, ConcentricPoints) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> ang(0.0, 2.0 * M_PI);
    std::uniform_real_distribution<double> jitter(-1e-7, 1e-7);
    DesSample s;
    s.config = Config::C222;
    for (int g = 0; g < 3; ++g) {
        std::vector<AffineFrame> group;
        for (int r = 0; r < 2; ++r) {
            AffineFrame f;
            for (int i = 0; i < 3; ++i) {
                const double a = ang(rng), rad = 0.4 + jitter(rng);
                f[i] = ImagePoint(rad * std::cos(a), rad * std::sin(a));
            }
            group.push_back(f);
        }
        s.groups.push_back(group);
    }
    EXPECT_TRUE(degeneracy_flags(s).count(Degeneracy::ConcentricPoints));
    try {
        build_des(s);
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.kind(), ErrorKind::DegenerateSample);
    }
}

TEST(DegeneracyFlags, GenericRandomSamplesRarelyFlagged) {
    std::mt19937_64 rng(6);
    int flagged = 0;
    const int n = 1000;
    for (int k = 0; k < n; ++k) {
        flagged += !degeneracy_flags(random_des(rng, Config::C222)).empty();
    }
    EXPECT_LT(flagged, n / 100);
}

TEST(DegeneracyFlags, CollinearFrame) {
    std::mt19937_64 rng(7);
    DesSample s = random_des(rng, Config::C222);
    s.groups[1][0] = {{0.0, 0.0}, {0.1, 0.1}, {0.2, 0.2}};
    EXPECT_TRUE(degeneracy_flags(s).count(Degeneracy::Collinear));
}

TEST(DegeneracyFlags, VanishingLineThroughOrigin) {
    std::mt19937_64 rng(8);
    const DesSample s = random_des(rng, Config::C222);
    EXPECT_TRUE(degeneracy_flags(s, RectifyModel(VanishingLine{1.0, 2.0, 1e-8}, -4.0)).count(Degeneracy::VLThroughOrigin));
    EXPECT_FALSE(degeneracy_flags(s, RectifyModel(0.5, 0.5, -4.0)).count(Degeneracy::VLThroughOrigin));
    EXPECT_FALSE(vanishing_line_through_origin(RectifyModel(0.0, 0.0, -4.0)));
}

TEST(VariableScaling, RoundTripAndDefinition) {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-0.3, 0.3);
    std::vector<ImagePoint> pts;
    double absSum = 0.0, r2 = 0.0;
    for (int k = 0; k < 18; ++k) {
        pts.emplace_back(u(rng), u(rng));
        absSum += std::abs(pts.back().x()) + std::abs(pts.back().y());
        r2 += pts.back().squaredNorm();
    }
    const VariableScaling s = compute_scaling(pts);
    EXPECT_NEAR(s.coordScale, 36.0 / absSum, 1e-12);
    EXPECT_NEAR(s.radiusScale, 18.0 / r2, 1e-12);
    for (int k = 0; k < 100; ++k) {
        const Eigen::Vector3d x(u(rng) * 10, u(rng) * 10, u(rng) * 30);
        EXPECT_LT((s.unscale(s.scale(x)) - x).norm(), 1e-12 * std::max(1.0, x.norm()));
    }
}

// Roots of the conditioned system, once unscaled, satisfy the equal-scale
// condition evaluated directly by the geometry module.
TEST(BuildDes, UnscaledRootsEqualizeRectifiedScales) {
    std::mt19937_64 rng(10);
    int checked = 0;
    for (int k = 0; k < 10; ++k) {
        const DesSample s = random_des(rng, Config::C222);
        SolverConfig cfg;
        cfg.parallel = false;
        const SolutionSet sol = solve(build_des(s), cfg);
        for (const Root &r : sol.roots) {
            const RectifyModel m = r.model();
            bool ok = true;
            for (const auto &g : s.groups) {
                for (const auto &f : g) {
                    for (int i = 0; i < 3; ++i) {
                        ok = ok && std::abs(vanishing_denominator(f[i], m)) > 1e-6;
                    }
                }
            }
            if (!ok) {
                continue;
            }
            for (const auto &g : s.groups) {
                EXPECT_LT(rel_diff(rectified_scale(orient(g[0]), m).scale, rectified_scale(orient(g[1]), m).scale),
                          1e-8);
            }
            ++checked;
        }
    }
    EXPECT_GT(checked, 0);
}

TEST(BuildCs, UnscaledRootsEqualizeChangeOfScale) {
    int checked = 0;
    for (int k = 0; k < 10; ++k) {
        const GroundTruthScene gs = scene(400 + k);
        const CsSample s = cs_sample(gs, Config::C222);
        SolverConfig cfg;
        cfg.parallel = false;
        const SolutionSet sol = solve(build_cs(s), cfg);
        for (const Root &r : sol.roots) {
            const RectifyModel m = r.model();
            bool ok = true;
            for (const auto &g : s.groups) {
                for (const auto &o : g) {
                    ok = ok && std::abs(vanishing_denominator(o.center, m)) > 1e-3;
                }
            }
            if (!ok) {
                continue;
            }
            for (const auto &g : s.groups) {
                EXPECT_LT(rel_diff(g[0].scale * change_of_scale(g[0].center, m),
                                   g[1].scale * change_of_scale(g[1].center, m)),
                          1e-7);
            }
            ++checked;
        }
    }
    EXPECT_GT(checked, 0);
}

TEST(BuildDes, AnchoredSubsystemAdmitsSpuriousRoots) {
    BuildOptions anchored;
    anchored.square = SquareSelection::Anchored;
    int spurious = 0;
    for (int k = 0; k < 50; ++k) {
        const GroundTruthScene s = scene(500 + k);
        const DesSample sample = des_sample(s, Config::C4);
        const PolySystem sys = build_des(sample, anchored);
        SolverConfig cfg;
        cfg.parallel = false;
        const SolutionSet sol = solve(sys, cfg);
        for (const Root &r : sol.rejected) {
            spurious += residual(sys, r.value) >= cfg.residualTol;
        }
        for (const Root &r : sol.roots) {
            EXPECT_LT(residual(sys, r.value), cfg.residualTol);
        }
        const Eigen::Vector3d gt(s.vlineGT.l1, s.vlineGT.l2, s.lambdaGT);
        bool found = false;
        for (const Root &r : sol.roots) {
            found = found || (r.value - gt).norm() < 1e-6;
        }
        EXPECT_TRUE(found);
    }
    EXPECT_GT(spurious, 0);
}

TEST(GroupPairs, Counts) {
    for (int n = 1; n <= 6; ++n) {
        EXPECT_EQ(static_cast<int>(group_pairs(n).size()), n * (n - 1) / 2);
    }
}
