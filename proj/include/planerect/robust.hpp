#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "planerect/constraints.hpp"
#include "planerect/polysolve.hpp"
#include "planerect/synth.hpp"

namespace planerect {

enum class Method { DES, CS };

struct Variant {
    Method method = Method::DES;
    Config config = Config::C222;
    // Only for Config::C22Fixed.
    double fixedLambda = -4.0;
};

// des222, des32, des4, des22-fixed, cs222, cs32, cs4. Throws InvalidArgument.
Variant parse_variant(std::string_view name, double fixedLambda = -4.0);
std::string to_string(const Variant &v);

// Correspondence groups in normalized coordinates. Frames are oriented on
// construction; scales are the change-of-scale observations of the same regions.
struct Pool {
    FrameGroups frames;
    ScaleGroups scales;

    int region_count() const;
};

// Orients frames and derives scale observations with cs_observations.
Pool make_pool(const FrameGroups &normalized);
Pool make_pool(const FrameGroups &normalized, const ScaleGroups &scales);

struct WarpErrorReport {
    double rms = 0.0; // pixels; infinite when the model cannot rectify the grid
    std::vector<double> perPoint;
    Eigen::Matrix<double, 2, 3> affineAmbiguity = Eigen::Matrix<double, 2, 3>::Zero();
};

inline constexpr int kWarpGridSide = 10;

// Plane points of the warp grid and their distorted normalized images.
std::vector<Eigen::Vector2d> warp_grid_plane(const GroundTruthScene &scene);
std::vector<ImagePoint> warp_grid_image(const GroundTruthScene &scene);

WarpErrorReport warp_error(const RectifyModel &model, const GroundTruthScene &scene);
// Same metric from already rectified grid points (one per warp_grid_image point).
WarpErrorReport warp_error_rectified(const std::vector<ImagePoint> &rectified, const GroundTruthScene &scene);

// Throws GroundTruthZero when the scene has lambda = 0.
double rel_lambda_error(const RectifyModel &model, const GroundTruthScene &scene);

enum class Scoring { EqualScale, WarpGT };

enum class EstimateFlag { LowConsensus, VLThroughOrigin, VLNearOrigin, ConcentricPoints, CollinearSamples };

// Distance (normalized units) of the estimated vanishing line from the image
// center below which the estimate is flagged VLNearOrigin.
inline constexpr double kNearOriginDistance = 0.05;

std::string_view to_string(EstimateFlag f);

struct RansacOptions {
    Variant variant;
    int iterations = 25;
    Scoring scoring = Scoring::EqualScale;
    // Required for WarpGT scoring.
    const GroundTruthScene *scene = nullptr;
    std::uint64_t seed = 1;
    // Relative scale difference below which a pair of regions agrees.
    double tau = 0.15;
    bool refine = false;
    bool parallel = true;
    SolverConfig solver = relaxed_solver();

    static SolverConfig relaxed_solver() {
        SolverConfig c;
        c.residualTol = 1e-3;
        c.parallel = false;
        return c;
    }
};

struct EstimationResult {
    RectifyModel model;
    int consensusSize = 0;
    int samplesTried = 0;
    double bestScore = std::numeric_limits<double>::infinity();
    bool refined = false;
    int bestIteration = -1;
    int degenerateSamples = 0;
    int failedSamples = 0;
    int feasibleModels = 0;
    int realRoots = 0;
    double inlierPairFraction = 0.0;
    std::set<EstimateFlag> flags;
};

// Indices (group, region) of one minimal sample.
struct SampleIndices {
    std::vector<std::pair<int, std::vector<int>>> groups;
};

// Group-size-proportional draw of distinct groups, uniform regions inside.
// Returns nullopt when the pool cannot support the configuration.
std::optional<SampleIndices> draw_sample(const Pool &pool, Config config, std::uint64_t seed, std::uint64_t iteration);

// Polynomial system of one minimal sample. Throws DegenerateSample.
PolySystem build_system(const Pool &pool, const SampleIndices &idx, const Variant &v);

// Builds and solves one minimal problem; returns the feasible models. Throws
// DegenerateSample and TrackingFailure.
std::vector<Root> minimal_solutions(const Pool &pool, const SampleIndices &idx, const Variant &v,
                                    const SolverConfig &cfg, int *realCount = nullptr);

struct ConsensusScore {
    double cost = 0.0; // truncated squared relative differences
    int inlierPairs = 0;
    int totalPairs = 0;
    int consensusSize = 0; // regions in at least one inlier pair
};

ConsensusScore equal_scale_score(const RectifyModel &m, const Pool &pool, double tau);

// Throws NoFeasibleModel.
EstimationResult ransac(const Pool &pool, const RansacOptions &opts);
EstimationResult ransac_serial(const Pool &pool, const RansacOptions &opts);

// Sum of squared log scale ratios over the inlier pairs of m.
double equal_scale_objective(const RectifyModel &m, const Pool &pool,
                             const std::vector<std::array<int, 3>> &pairs);
std::vector<std::array<int, 3>> inlier_pairs(const RectifyModel &m, const Pool &pool, double tau);

// Levenberg-Marquardt on the equal-scale objective over the inlier pairs of
// the input model. Never increases the objective; returns the input on failure.
RectifyModel refine(const RectifyModel &model, const Pool &pool, double tau = 0.15);

struct CensusTrial {
    int nReal = 0;
    int nFeasible = 0;
    int converged = 0;
};

struct Census {
    std::vector<CensusTrial> trials;
    std::map<int, int> realHistogram;
    std::map<int, int> feasibleHistogram;

    double fraction_exactly_one_feasible() const;
    int max_real() const;
};

// One minimal sample per scene at the given noise level; counts real and
// feasible roots.
Census solution_census(const std::vector<GroundTruthScene> &scenes, double sigma, const Variant &v,
                       std::uint64_t seed, const SolverConfig &cfg = {});

} // namespace planerect
