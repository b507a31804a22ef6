#pragma once

#include <optional>
#include <set>
#include <string_view>
#include <vector>

#include "planerect/geometry.hpp"
#include "planerect/polynomial.hpp"

namespace planerect {

// Minimal configurations: three pairs, a triple plus a pair, a quadruple, and
// two pairs with known lambda.
enum class Config { C222, C32, C4, C22Fixed };

std::string_view to_string(Config c);
// Required group sizes, e.g. {2, 2, 2} for C222.
std::vector<int> group_sizes(Config c);

template <typename Region>
struct MinimalSample {
    Config config = Config::C222;
    std::vector<std::vector<Region>> groups;
};

using DesSample = MinimalSample<AffineFrame>;
using CsSample = MinimalSample<ScaleObservation>;

// How the tracked 3x3 subsystem of a 32/4 sample is chosen. Chain pairs
// consecutive regions; Anchored pairs every region with the first one and
// admits a positive-dimensional spurious family.
enum class SquareSelection { Chain, Anchored };

struct BuildOptions {
    SquareSelection square = SquareSelection::Chain;
    // Disable to build from a sample the degeneracy checks would reject.
    bool checkDegeneracy = true;
};

// Constant coefficients of the equal-scale equations for one frame in the
// scaled coordinates: numerator(lambda) = det0 + lambda * detR and
// alpha_k = 1 + l1 * x_k + l2 * y_k + lambda * q_k.
struct FrameCoefficients {
    // (3,k)-minors with cofactor signs: minors[k] multiplies alpha_k.
    std::array<double, 3> minors{};
    std::array<double, 3> x{};
    std::array<double, 3> y{};
    std::array<double, 3> q{};
};

struct DesCoefficients {
    VariableScaling scaling;
    std::vector<std::vector<FrameCoefficients>> groups;
};

enum class Degeneracy { VLThroughOrigin, ConcentricPoints, Collinear, ZeroEquation };

std::string_view to_string(Degeneracy d);

inline constexpr double kVanishingLineEps = 1e-6;
inline constexpr double kCircleEps = 1e-6;

// Scaling from the average coordinate magnitude and average squared radius.
VariableScaling compute_scaling(std::span<const ImagePoint> points);

DesCoefficients des_coefficients(const DesSample &sample, const VariableScaling &scaling);

// Equal-scale equations on affine frames, l3 = 1. Frames are oriented
// right-handed first. Throws DegenerateSample.
PolySystem build_des(const DesSample &sample, const BuildOptions &opts = {});

// Change-of-scale equations on scale observations. Throws DegenerateSample.
PolySystem build_cs(const CsSample &sample, const BuildOptions &opts = {});

// Two pairs with lambda substituted: two cubics in (l1, l2). Throws
// DegenerateSample.
PolySystem build_des_fixed_lambda(const DesSample &sample, double lambda, const BuildOptions &opts = {});

std::set<Degeneracy> degeneracy_flags(const DesSample &sample, const std::optional<RectifyModel> &model = {});
std::set<Degeneracy> degeneracy_flags(const CsSample &sample, const std::optional<RectifyModel> &model = {});
// Only the model-dependent check.
bool vanishing_line_through_origin(const RectifyModel &m);

// Pairs (a, b) within a group emitted as equations, in emission order.
std::vector<std::pair<int, int>> group_pairs(int group_size);

} // namespace planerect
