#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "planerect/geometry.hpp"
#include "planerect/polynomial.hpp"

namespace planerect {

// Step control of the predictor-corrector path tracker.
struct TrackerSettings {
    double initialStep = 0.05;
    double minStep = 1e-10;
    double maxStep = 0.2;
    // Paths that stall before this t count as tracking failures; later
    // stalls are endgame stalls (singular or infinite endpoints).
    double endZone = 0.95;
    double correctorTol = 1e-6;
    int maxCorrectorSteps = 3;
    int successesBeforeIncrease = 2;
    double stepIncrease = 2.0;
    double stepDecrease = 0.5;
    int maxSteps = 20000;
    // |x0| / |X| below this marks an endpoint at infinity.
    double infinityTol = 1e-8;
};

struct SolverConfig {
    double lambdaMin = -8.0;
    double lambdaMax = 0.5;
    // Max |p| over every equation of the system, normalized polynomials.
    double residualTol = 1e-6;
    double imagTol = 1e-8;
    int newtonIters = 6;
    std::uint64_t seed = 0x9e3779b97f4a7c15ULL;
    bool parallel = true;
    TrackerSettings tracker;
};

struct Root {
    // Unscaled (l1, l2, lambda); fixed-lambda systems report the fixed value.
    Eigen::Vector3d value = Eigen::Vector3d::Zero();
    double residual = 0.0;
    bool feasible = false;

    RectifyModel model() const { return RectifyModel(value[0], value[1], value[2]); }
};

struct PathStats {
    int tracked = 0;
    int converged = 0; // finite nonsingular endpoints (complex or real)
    int diverged = 0;  // endpoints at infinity
    int singular = 0;  // finite endpoints with a rank-deficient Jacobian
    int failed = 0;    // step control gave up before the end zone
};

struct SolutionSet {
    std::vector<Root> roots;
    // Real endpoints of the tracked subsystem that failed the full-system
    // residual filter.
    std::vector<Root> rejected;
    PathStats stats;

    int feasible_count() const;
};

// Max |p(root)| over every polynomial. root is unscaled, length nvars.
double residual(const PolySystem &system, std::span<const double> root);
double residual(const PolySystem &system, const Eigen::Vector3d &root);

// All isolated real solutions of the tracked subsystem by total-degree
// homotopy, filtered by the full-system residual. Throws EmptySystem and
// TrackingFailure.
SolutionSet solve(const PolySystem &system, const SolverConfig &cfg = {});

struct SearchBox {
    Eigen::Vector3d lo;
    Eigen::Vector3d hi;
};

// Brute-force reference: local minima of the summed squared residuals on a
// grid, polished by Levenberg-Marquardt. Used to certify solve().
SolutionSet oracle_solve(const PolySystem &system, const SearchBox &box, int gridN, const SolverConfig &cfg = {});

namespace homotopy {

enum class PathStatus { Converged, Diverged, Singular, Failed };

struct PathResult {
    PathStatus status = PathStatus::Failed;
    // Affine endpoint in the scaled variables (padded to 3).
    Eigen::Vector3cd x = Eigen::Vector3cd::Zero();
    int steps = 0;
};

// Tracks every start path of the square subsystem. The serial form is the
// reference for the OpenMP form; both return results in start-path order.
std::vector<PathResult> track_all_serial(const PolySystem &system, const SolverConfig &cfg);
std::vector<PathResult> track_all_parallel(const PolySystem &system, const SolverConfig &cfg);

int path_count(const PolySystem &system);

} // namespace homotopy

} // namespace planerect
