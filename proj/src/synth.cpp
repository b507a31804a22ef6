#include "planerect/synth.hpp"

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "planerect/error.hpp"

namespace planerect {

namespace {

constexpr int kMaxAttempts = 100;
constexpr int kBoundarySamples = 32;
constexpr double kExtentShrink = 0.95;

double deg2rad(double d) { return d * M_PI / 180.0; }

Eigen::Matrix3d look_at(const Eigen::Vector3d &center, const Eigen::Vector3d &target, double roll) {
    const Eigen::Vector3d z = (target - center).normalized();
    Eigen::Vector3d helper = std::abs(z.z()) < 0.9 ? Eigen::Vector3d::UnitZ() : Eigen::Vector3d::UnitX();
    Eigen::Vector3d x = helper.cross(z).normalized();
    Eigen::Vector3d y = z.cross(x);
    const double c = std::cos(roll), s = std::sin(roll);
    const Eigen::Vector3d xr = c * x + s * y;
    const Eigen::Vector3d yr = -s * x + c * y;
    Eigen::Matrix3d R;
    R.row(0) = xr;
    R.row(1) = yr;
    R.row(2) = z;
    return R;
}

Eigen::Matrix3d homography_from_pose(double f, const Eigen::Matrix3d &R, const Eigen::Vector3d &C) {
    const Eigen::Vector3d t = -R * C;
    Eigen::Matrix3d Rt;
    Rt.col(0) = R.col(0);
    Rt.col(1) = R.col(1);
    Rt.col(2) = t;
    return Eigen::DiagonalMatrix<double, 3>(f, f, 1.0) * Rt;
}

VanishingLine vanishing_line(const Eigen::Matrix3d &H) {
    Eigen::Vector3d l = H.inverse().transpose() * Eigen::Vector3d::UnitZ();
    if (std::abs(l[2]) > 1e-12 * l.norm()) {
        l /= l[2];
        return {l[0], l[1], 1.0};
    }
    l /= l.head<2>().norm();
    return {l[0], l[1], 0.0};
}

bool inside_image(const Eigen::Vector2d &px, int w, int h) {
    return px.x() >= 0.0 && px.y() >= 0.0 && px.x() <= w && px.y() <= h;
}

// True when the whole square of half-extent a around c is in front of the
// camera and its distorted image lies inside the image.
bool region_visible(const Eigen::Matrix3d &H, double lambda, const Normalizer &n, int w, int h,
                    const Eigen::Vector2d &c, double a) {
    for (int side = 0; side < 4; ++side) {
        for (int k = 0; k < kBoundarySamples; ++k) {
            const double u = -1.0 + 2.0 * k / kBoundarySamples;
            Eigen::Vector2d q;
            switch (side) {
            case 0: q = {u, -1.0}; break;
            case 1: q = {1.0, u}; break;
            case 2: q = {-u, 1.0}; break;
            default: q = {-1.0, -u}; break;
            }
            const Eigen::Vector3d x = H * (c + a * q).homogeneous();
            if (x[2] <= 1e-9) {
                return false;
            }
            try {
                const ImagePoint d = distort(x.hnormalized(), lambda);
                if (!inside_image(n.to_pixel(d), w, h)) {
                    return false;
                }
            } catch (const Error &) {
                return false;
            }
        }
    }
    return true;
}

// Largest visible half-extent, by bisection; 0 when even a tiny region fails.
double visible_extent(const Eigen::Matrix3d &H, double lambda, const Normalizer &n, int w, int h,
                      const Eigen::Vector2d &c) {
    double lo = 1e-4, hi = 20.0;
    if (!region_visible(H, lambda, n, w, h, c, lo)) {
        return 0.0;
    }
    if (region_visible(H, lambda, n, w, h, c, hi)) {
        return hi * kExtentShrink;
    }
    for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        (region_visible(H, lambda, n, w, h, c, mid) ? lo : hi) = mid;
    }
    return lo * kExtentShrink;
}

struct Template {
    Eigen::Vector2d y, x; // offsets of y and x from o
};

Template random_template(std::mt19937_64 &rng, double side) {
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    const double theta = 2.0 * M_PI * uni(rng);
    const double beta = deg2rad(45.0 + 90.0 * uni(rng));
    const double rho = 0.5 + 0.5 * uni(rng);
    Template t;
    t.x = side * Eigen::Vector2d(std::cos(theta), std::sin(theta));
    t.y = side * rho * Eigen::Vector2d(std::cos(theta + beta), std::sin(theta + beta));
    return t;
}

Eigen::Vector2d rotate(const Eigen::Vector2d &v, double a) {
    return Eigen::Rotation2Dd(a) * v;
}

struct Placed {
    Eigen::Vector2d y, o, x;
};

// Places a copy of t inside the square by rejection.
bool place(std::mt19937_64 &rng, const Template &t, Motion motion, const Eigen::Vector2d &c, double a, Placed &out) {
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (int k = 0; k < 1000; ++k) {
        const double ang = motion == Motion::Rigid ? M_PI * uni(rng) : 0.0;
        const Eigen::Vector2d o = c + a * Eigen::Vector2d(uni(rng), uni(rng));
        Placed p{o + rotate(t.y, ang), o, o + rotate(t.x, ang)};
        const auto in = [&](const Eigen::Vector2d &q) { return ((q - c).array().abs() <= a).all(); };
        if (in(p.y) && in(p.x)) {
            out = p;
            return true;
        }
    }
    return false;
}

AffineFrame image_frame(const GroundTruthScene &s, const Placed &p) {
    AffineFrame f;
    f.py = s.normalizer.to_pixel(s.project(p.y));
    f.po = s.normalizer.to_pixel(s.project(p.o));
    f.px = s.normalizer.to_pixel(s.project(p.x));
    return f;
}

GroundTruthScene base_scene(const SceneSpec &spec) {
    GroundTruthScene s;
    s.lambdaGT = spec.lambda;
    s.motion = spec.motion;
    s.width = spec.width;
    s.height = spec.height;
    s.normalizer = Normalizer::for_image(spec.width, spec.height);
    s.seed = spec.seed;
    return s;
}

// Fills frames for a scene whose homography and region are set. Returns false
// when a placement fails.
bool plant(GroundTruthScene &s, const SceneSpec &spec, std::mt19937_64 &rng, bool concentric) {
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    const double side = 2.0 * s.planeHalfExtent;
    s.frames.clear();
    for (int size : spec.groupSizes) {
        const double len = side * (spec.minFrameSide + (spec.maxFrameSide - spec.minFrameSide) * uni(rng));
        const Template t = random_template(rng, len);
        std::vector<AffineFrame> group;
        Placed first;
        if (!place(rng, t, Motion::Translation, s.planeCenter, s.planeHalfExtent, first)) {
            return false;
        }
        for (int k = 0; k < size; ++k) {
            Placed p;
            if (concentric) {
                if (k == 0) {
                    p = first;
                } else {
                    const double ang = 2.0 * M_PI * uni(rng);
                    const Eigen::Vector2d c = s.planeCenter;
                    p = {c + rotate(first.y - c, ang), c + rotate(first.o - c, ang), c + rotate(first.x - c, ang)};
                }
            } else if (!place(rng, t, spec.motion, s.planeCenter, s.planeHalfExtent, p)) {
                return false;
            }
            try {
                group.push_back(image_frame(s, p));
            } catch (const Error &) {
                return false;
            }
        }
        s.frames.push_back(std::move(group));
    }
    return true;
}

void check_spec(const SceneSpec &spec) {
    if (spec.groupSizes.empty()) {
        throw Error(ErrorKind::InvalidArgument, "scene needs at least one group");
    }
    for (int g : spec.groupSizes) {
        if (g < 1) {
            throw Error(ErrorKind::InvalidArgument, "group sizes must be positive");
        }
    }
    if (spec.width <= 0 || spec.height <= 0) {
        throw Error(ErrorKind::InvalidArgument, "image size must be positive");
    }
}

} // namespace

std::string_view to_string(Motion m) { return m == Motion::Rigid ? "rigid" : "translation"; }

Motion parse_motion(std::string_view s) {
    if (s == "rigid") {
        return Motion::Rigid;
    }
    if (s == "translation") {
        return Motion::Translation;
    }
    throw Error(ErrorKind::InvalidArgument, "unknown motion '" + std::string(s) + "'");
}

FrameGroups GroundTruthScene::normalized_frames() const { return normalize(frames, normalizer); }

ImagePoint GroundTruthScene::project(const Eigen::Vector2d &planePoint) const {
    const Eigen::Vector3d x = planeToImage * planePoint.homogeneous();
    return distort(x.hnormalized(), lambdaGT);
}

Eigen::Matrix3d camera_homography(double focalNormalized, double tilt, double azimuth, double roll) {
    const Eigen::Vector3d C(std::sin(tilt) * std::cos(azimuth), std::sin(tilt) * std::sin(azimuth), std::cos(tilt));
    return homography_from_pose(focalNormalized, look_at(C, Eigen::Vector3d::Zero(), roll), C);
}

GroundTruthScene gen_scene(const SceneSpec &spec) {
    check_spec(spec);
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    GroundTruthScene s = base_scene(spec);
    const double norm = s.normalizer.scale();
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        const double fpx = spec.width * (spec.minFocal + (spec.maxFocal - spec.minFocal) * uni(rng));
        const double tilt = deg2rad(spec.maxTiltDeg) * uni(rng);
        const double azimuth = 2.0 * M_PI * uni(rng);
        const double roll = 2.0 * M_PI * uni(rng);
        s.planeToImage = camera_homography(fpx * norm, tilt, azimuth, roll);
        s.planeCenter = Eigen::Vector2d::Zero();
        s.planeHalfExtent = visible_extent(s.planeToImage, s.lambdaGT, s.normalizer, s.width, s.height, s.planeCenter);
        if (s.planeHalfExtent <= 0.0) {
            continue;
        }
        s.vlineGT = vanishing_line(s.planeToImage);
        if (plant(s, spec, rng, false)) {
            return s;
        }
    }
    throw Error(ErrorKind::RetryExhausted, "could not generate a visible scene");
}

GroundTruthScene gen_concentric_scene(const SceneSpec &spec) {
    check_spec(spec);
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    GroundTruthScene s = base_scene(spec);
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        const double fpx = spec.width * (spec.minFocal + (spec.maxFocal - spec.minFocal) * uni(rng));
        s.planeToImage = camera_homography(fpx * s.normalizer.scale(), 0.0, 0.0, 2.0 * M_PI * uni(rng));
        s.planeCenter = Eigen::Vector2d::Zero();
        s.planeHalfExtent = visible_extent(s.planeToImage, s.lambdaGT, s.normalizer, s.width, s.height, s.planeCenter);
        if (s.planeHalfExtent <= 0.0) {
            continue;
        }
        // Rotations about the center must stay inside the inscribed disc.
        s.planeHalfExtent /= std::sqrt(2.0);
        s.vlineGT = vanishing_line(s.planeToImage);
        if (plant(s, spec, rng, true)) {
            return s;
        }
    }
    throw Error(ErrorKind::RetryExhausted, "could not generate a concentric scene");
}

GroundTruthScene gen_vanishing_line_through_center_scene(const SceneSpec &spec) {
    check_spec(spec);
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    GroundTruthScene s = base_scene(spec);
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        const double fpx = spec.width * (spec.minFocal + (spec.maxFocal - spec.minFocal) * uni(rng));
        const double heading = 2.0 * M_PI * uni(rng);
        const Eigen::Vector3d C(0.0, 0.0, 0.3 + 0.4 * uni(rng));
        const Eigen::Vector3d dir(std::cos(heading), std::sin(heading), 0.0);
        const Eigen::Matrix3d R = look_at(C, C + dir, 0.0);
        s.planeToImage = homography_from_pose(fpx * s.normalizer.scale(), R, C);
        // Region ahead of the camera, below the horizon.
        const double depth = 1.5 + uni(rng);
        s.planeCenter = (depth * dir).head<2>();
        s.planeHalfExtent = visible_extent(s.planeToImage, s.lambdaGT, s.normalizer, s.width, s.height, s.planeCenter);
        if (s.planeHalfExtent <= 0.0) {
            continue;
        }
        s.vlineGT = vanishing_line(s.planeToImage);
        if (plant(s, spec, rng, false)) {
            return s;
        }
    }
    throw Error(ErrorKind::RetryExhausted, "could not generate a horizon scene");
}

FrameGroups add_noise(const GroundTruthScene &scene, const NoiseSpec &spec, std::uint64_t seed) {
    if (!(spec.sigma >= 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "noise sigma must be non-negative");
    }
    FrameGroups out = scene.frames;
    if (spec.sigma == 0.0) {
        return out;
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, spec.sigma);
    for (auto &group : out) {
        for (auto &f : group) {
            for (int k = 0; k < 3; ++k) {
                f[k].x() += noise(rng);
                f[k].y() += noise(rng);
            }
        }
    }
    return out;
}

FrameGroups normalize(const FrameGroups &pixels, const Normalizer &n) {
    FrameGroups out;
    out.reserve(pixels.size());
    for (const auto &group : pixels) {
        std::vector<AffineFrame> g;
        g.reserve(group.size());
        for (const auto &f : group) {
            g.push_back(n.to_normalized(f));
        }
        out.push_back(std::move(g));
    }
    return out;
}

ScaleGroups cs_observations(const FrameGroups &normalized) {
    ScaleGroups out;
    for (const auto &group : normalized) {
        std::vector<ScaleObservation> g;
        for (const auto &f : group) {
            const double det = frame_determinant(f);
            if (std::abs(det) <= kCollinearEps) {
                throw Error(ErrorKind::Collinear, "frame points are collinear");
            }
            g.push_back({(f.py + f.po + f.px) / 3.0, std::abs(det)});
        }
        out.push_back(std::move(g));
    }
    return out;
}

ScaleGroups cs_observations_exact(const GroundTruthScene &scene) {
    const RectifyModel gt = scene.model();
    ScaleGroups out = cs_observations(scene.normalized_frames());
    const FrameGroups frames = scene.normalized_frames();
    for (std::size_t g = 0; g < out.size(); ++g) {
        for (std::size_t k = 0; k < out[g].size(); ++k) {
            const double rect = std::abs(rectified_scale(frames[g][k], gt).scale);
            out[g][k].scale = rect / std::abs(change_of_scale(out[g][k].center, gt));
        }
    }
    return out;
}

FrameGroups plane_frames(const GroundTruthScene &scene) {
    const Eigen::Matrix3d Hinv = scene.planeToImage.inverse();
    FrameGroups out = scene.normalized_frames();
    for (auto &group : out) {
        for (auto &f : group) {
            for (int k = 0; k < 3; ++k) {
                f[k] = (Hinv * undistort(f[k], scene.lambdaGT)).hnormalized();
            }
        }
    }
    return out;
}

} // namespace planerect
