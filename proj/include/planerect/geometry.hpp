#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace planerect {

// Distorted or pinhole image point in normalized, center-subtracted units.
using ImagePoint = Eigen::Vector2d;
using HomogeneousPoint = Eigen::Vector3d;

// Smallest admissible |l^T f(x, lambda)| before a point is treated as lying on
// the vanishing line.
inline constexpr double kDenomEps = 1e-9;
// Smallest admissible |det| of a point parameterization.
inline constexpr double kCollinearEps = 1e-12;

struct VanishingLine {
    double l1 = 0.0;
    double l2 = 0.0;
    double l3 = 1.0;

    Eigen::Vector3d vec() const { return {l1, l2, l3}; }
};

// Hypothesis of the joint undistortion and affine rectification. Solver
// outputs always use the l3 = 1 chart.
struct RectifyModel {
    VanishingLine l;
    double lambda = 0.0;

    RectifyModel() = default;
    RectifyModel(double l1, double l2, double lambda_) : l{l1, l2, 1.0}, lambda(lambda_) {}
    RectifyModel(const VanishingLine &line, double lambda_) : l(line), lambda(lambda_) {}

    static RectifyModel identity() { return {}; }
};

// Point parameterization (y, o, x) of an affine-covariant region.
struct AffineFrame {
    ImagePoint py = ImagePoint::Zero();
    ImagePoint po = ImagePoint::Zero();
    ImagePoint px = ImagePoint::Zero();

    const ImagePoint &operator[](int k) const { return k == 0 ? py : (k == 1 ? po : px); }
    ImagePoint &operator[](int k) { return k == 0 ? py : (k == 1 ? po : px); }
};

struct ScaleObservation {
    ImagePoint center = ImagePoint::Zero();
    double scale = 1.0;
};

struct RectifiedFrame {
    std::array<ImagePoint, 3> points;
    std::array<double, 3> alphas{};
};

struct RectifiedScale {
    double scale = 0.0;
    RectifiedFrame frame;
};

// Maps pixel coordinates to the normalized frame used by every geometric
// computation: subtract the image center, multiply by 1/(width+height).
class Normalizer {
  public:
    Normalizer() = default;
    Normalizer(Eigen::Vector2d center, double scale);

    static Normalizer for_image(int width, int height);

    ImagePoint to_normalized(const Eigen::Vector2d &pixel) const { return (pixel - center_) * scale_; }
    Eigen::Vector2d to_pixel(const ImagePoint &p) const { return p / scale_ + center_; }
    AffineFrame to_normalized(const AffineFrame &pixels) const;
    AffineFrame to_pixel(const AffineFrame &frame) const;

    const Eigen::Vector2d &center() const { return center_; }
    double scale() const { return scale_; }

  private:
    Eigen::Vector2d center_ = Eigen::Vector2d::Zero();
    double scale_ = 1.0;
};

// One-parameter division model: (x, y) -> (x, y, 1 + lambda r^2).
HomogeneousPoint undistort(const ImagePoint &p, double lambda);

// Inverse of the division model for a Euclidean pinhole point. Takes the root
// continuous with lambda -> 0. Throws NoRealRoot.
ImagePoint distort(const ImagePoint &p, double lambda);

// l^T f(p, lambda), the third coordinate of the undistorted-rectified point.
double vanishing_denominator(const ImagePoint &p, const RectifyModel &m);

// Euclidean affine-rectified point. Throws NearVanishingLine.
ImagePoint rectify(const ImagePoint &p, const RectifyModel &m);

// det [[x1 x2 x3] [y1 y2 y3] [1 1 1]] over the ordered columns (y, o, x).
double frame_determinant(const AffineFrame &f);

// Signed rectified scale via the three-term minor expansion. Throws
// NearVanishingLine when any alpha is too small.
RectifiedScale rectified_scale(const AffineFrame &f, const RectifyModel &m);

// Swap the first and third points of left-handed frames. Throws Collinear.
AffineFrame orient(const AffineFrame &f);

// Jacobian determinant of the undistort-and-rectify map at p. Throws
// NearVanishingLine.
double change_of_scale(const ImagePoint &p, const RectifyModel &m);

// Distorted image of the vanishing line: lambda r^2 + l1 x + l2 y + l3 = 0.
struct VanishingLocus {
    enum class Kind { Circle, Line };
    Kind kind = Kind::Line;
    ImagePoint center = ImagePoint::Zero(); // circle only
    double radius = 0.0;                    // circle only
    Eigen::Vector3d line = Eigen::Vector3d::Zero(); // line only, a x + b y + c = 0
};

// Throws NoRealLocus when the circle has negative squared radius.
VanishingLocus distorted_vanishing_circle(const RectifyModel &m);

struct ScaleField {
    std::vector<double> values;
    std::vector<std::uint8_t> valid;
};

// Relative change of scale change_of_scale(p) / change_of_scale(ref) over a
// point set. Points too close to the vanishing line are marked invalid.
// Throws NearVanishingLine when ref itself is not rectifiable.
ScaleField dense_change_of_scale_map(std::span<const ImagePoint> grid, const RectifyModel &m,
                                     const ImagePoint &ref);
ScaleField dense_change_of_scale_map_serial(std::span<const ImagePoint> grid, const RectifyModel &m,
                                            const ImagePoint &ref);

// True where the field is valid and the relative change of scale is at least
// 1/threshold, i.e. the rectified blow-up is bounded by threshold.
std::vector<std::uint8_t> mask_by_scale(const ScaleField &field, double threshold);

} // namespace planerect
