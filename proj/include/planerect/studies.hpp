#pragma once

#include <cstdint>
#include <vector>

#include "planerect/io.hpp"
#include "planerect/robust.hpp"
#include "planerect/synth.hpp"

namespace planerect {

// Scale observations used by the CS variants.
enum class CsScale {
    Frame, // centroid and determinant of the (noisy) frame
    Exact, // exact change-of-scale scales at ground truth; noiseless scenes only
};

struct StudyOptions {
    int scenes = 20;
    std::uint64_t seed = 1;
    SceneSpec scene; // seed and lambda are overridden per trial
    Variant variant;
    int iterations = 25;
    Scoring scoring = Scoring::WarpGT;
    CsScale csScale = CsScale::Frame;
    bool refine = false;
    SolverConfig solver = RansacOptions::relaxed_solver();
    // Parallelize across trials; each trial runs serially.
    bool parallel = true;

    StudyOptions() { scene.groupSizes = {2, 2, 2, 3, 3, 4, 4}; }
};

GroundTruthScene study_scene(const StudyOptions &o, int trial, double lambda);
Pool study_pool(const StudyOptions &o, const GroundTruthScene &scene, double sigma, std::uint64_t noiseSeed);

// Noiseless scenes, one minimal sample each: residual of the root nearest
// ground truth.
std::vector<ResultRow> stability_study(const StudyOptions &o);
// RANSAC per scene and noise level.
std::vector<ResultRow> noise_study(const StudyOptions &o, const std::vector<double> &sigmas);
// RANSAC per scene and ground-truth lambda at fixed noise.
std::vector<ResultRow> distortion_study(const StudyOptions &o, const std::vector<double> &lambdas, double sigma);
// One minimal sample per scene and noise level: real and feasible root counts.
std::vector<ResultRow> census_study(const StudyOptions &o, const std::vector<double> &sigmas);
// Single minimal-sample proposals; the row reports the best feasible root of
// each sample by warp error (infinite when none is feasible).
std::vector<ResultRow> proposal_study(const StudyOptions &o, double sigma, int samplesPerScene);

struct SummaryRow {
    std::string variant;
    double sigma = 0.0;
    double lambdaGT = 0.0;
    int trials = 0;
    double medianRms = 0.0;
    double fractionBelow5px = 0.0;
    double medianRelLambdaErr = 0.0;
    double fractionOneFeasible = 0.0;
    double medianLog10Residual = 0.0;
};

std::vector<SummaryRow> aggregate(const std::vector<ResultRow> &rows);
void write_summary(std::ostream &os, const std::vector<SummaryRow> &rows);

double median(std::vector<double> v);

} // namespace planerect
