#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "planerect/robust.hpp"
#include "planerect/synth.hpp"

namespace planerect {

// JSON scene document. Doubles are written in shortest round-trip form, so
// load(save(scene)) reproduces every value exactly.
std::string scene_to_json(const GroundTruthScene &scene);
// Throws Parse.
GroundTruthScene scene_from_json(const std::string &text);

// Throw Io / Parse.
void save_scene(const GroundTruthScene &scene, const std::filesystem::path &path);
GroundTruthScene load_scene(const std::filesystem::path &path);

std::string model_to_json(const RectifyModel &m, const EstimationResult *est = nullptr);

struct ResultRow {
    int trial = 0;
    std::string variant;
    double sigma = 0.0;
    double lambdaGT = 0.0;
    double lambdaEst = 0.0;
    double l1 = 0.0;
    double l2 = 0.0;
    double rmsWarp = 0.0;
    double relLambdaErr = 0.0;
    int nReal = 0;
    int nFeasible = 0;
    double solveMillis = 0.0;
    // Full-system residual of the reported root (stability study).
    double residual = 0.0;
};

// Comma-separated, header row first, '.' decimal point regardless of locale.
std::string result_header();
std::string format_row(const ResultRow &r);
void write_results(std::ostream &os, const std::vector<ResultRow> &rows);
// Throws Parse.
std::vector<ResultRow> read_results(std::istream &is);

// Locale-independent shortest round-trip decimal.
std::string format_double(double v);
// Throws Parse.
double parse_double(const std::string &s);

} // namespace planerect
