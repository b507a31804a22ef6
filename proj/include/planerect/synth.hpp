#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "planerect/geometry.hpp"

namespace planerect {

enum class Motion { Rigid, Translation };

std::string_view to_string(Motion m);
// Throws InvalidArgument.
Motion parse_motion(std::string_view s);

using FrameGroups = std::vector<std::vector<AffineFrame>>;
using ScaleGroups = std::vector<std::vector<ScaleObservation>>;

struct GroundTruthScene {
    // Scene plane (X, Y, 1) -> normalized pinhole image point.
    Eigen::Matrix3d planeToImage = Eigen::Matrix3d::Identity();
    double lambdaGT = -4.0;
    // l3 = 1 unless the vanishing line passes through the distortion center.
    VanishingLine vlineGT;
    // Distorted frames in pixels.
    FrameGroups frames;
    Motion motion = Motion::Rigid;
    int width = 1000;
    int height = 1000;
    Normalizer normalizer = Normalizer::for_image(1000, 1000);
    // Square region of the plane, centered at planeCenter, whose image is visible.
    Eigen::Vector2d planeCenter = Eigen::Vector2d::Zero();
    double planeHalfExtent = 1.0;
    std::uint64_t seed = 0;
    // Noise already applied to frames, in pixels.
    double noiseSigmaPx = 0.0;

    RectifyModel model() const { return RectifyModel(vlineGT, lambdaGT); }
    FrameGroups normalized_frames() const;
    // Plane point -> distorted normalized image point. Throws NoRealRoot.
    ImagePoint project(const Eigen::Vector2d &planePoint) const;
};

struct SceneSpec {
    std::uint64_t seed = 0;
    Motion motion = Motion::Rigid;
    double lambda = -4.0;
    std::vector<int> groupSizes = {2, 2, 2};
    int width = 1000;
    int height = 1000;
    double minFocal = 0.5; // times image width
    double maxFocal = 2.5;
    double maxTiltDeg = 70.0;
    double minFrameSide = 0.10; // fraction of the plane region side
    double maxFrameSide = 0.20;
};

struct NoiseSpec {
    double sigma = 0.0; // pixels
};

// Random camera over a planar region with the requested groups of repeated
// frames. Throws RetryExhausted.
GroundTruthScene gen_scene(const SceneSpec &spec);

// Fronto-parallel camera whose repeats are rotations of each other about the
// image center, so corresponding points share radii.
GroundTruthScene gen_concentric_scene(const SceneSpec &spec);

// Optical axis parallel to the plane: the vanishing line passes through the
// distortion center (l3 = 0).
GroundTruthScene gen_vanishing_line_through_center_scene(const SceneSpec &spec);

// I.i.d. Gaussian offsets in pixels on every frame point. Returns pixel frames.
FrameGroups add_noise(const GroundTruthScene &scene, const NoiseSpec &spec, std::uint64_t seed);

FrameGroups normalize(const FrameGroups &pixels, const Normalizer &n);

// Centroid and |point-parameterization determinant| per frame. Throws Collinear.
ScaleGroups cs_observations(const FrameGroups &normalized);

// Scales that satisfy the change-of-scale model exactly at ground truth:
// |rectified scale| divided by the change of scale at the frame centroid.
ScaleGroups cs_observations_exact(const GroundTruthScene &scene);

// Pinhole homography of a camera at unit distance from the plane origin.
Eigen::Matrix3d camera_homography(double focalNormalized, double tilt, double azimuth, double roll);

// Pre-images on the plane of the frames of a scene, in plane coordinates.
FrameGroups plane_frames(const GroundTruthScene &scene);

} // namespace planerect
