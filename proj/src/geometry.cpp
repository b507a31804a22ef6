#include "planerect/geometry.hpp"

#include <cmath>
#include <sstream>

#include "planerect/error.hpp"

namespace planerect {

Normalizer::Normalizer(Eigen::Vector2d center, double scale) : center_(std::move(center)), scale_(scale) {
    if (!(scale > 0.0) || !std::isfinite(scale)) {
        throw Error(ErrorKind::InvalidArgument, "normalizer scale must be positive");
    }
}

Normalizer Normalizer::for_image(int width, int height) {
    if (width <= 0 || height <= 0) {
        throw Error(ErrorKind::InvalidArgument, "image size must be positive");
    }
    return Normalizer(Eigen::Vector2d(0.5 * width, 0.5 * height), 1.0 / (width + height));
}

AffineFrame Normalizer::to_normalized(const AffineFrame &pixels) const {
    return {to_normalized(pixels.py), to_normalized(pixels.po), to_normalized(pixels.px)};
}

AffineFrame Normalizer::to_pixel(const AffineFrame &frame) const {
    return {to_pixel(frame.py), to_pixel(frame.po), to_pixel(frame.px)};
}

HomogeneousPoint undistort(const ImagePoint &p, double lambda) {
    return {p.x(), p.y(), 1.0 + lambda * p.squaredNorm()};
}

ImagePoint distort(const ImagePoint &p, double lambda) {
    const double ru2 = p.squaredNorm();
    const double disc = 1.0 - 4.0 * lambda * ru2;
    if (disc < 0.0) {
        std::ostringstream msg;
        msg << "no distorted radius for undistorted radius " << std::sqrt(ru2) << " at lambda " << lambda;
        throw Error(ErrorKind::NoRealRoot, msg.str());
    }
    // Rationalized form of (1 - sqrt(disc)) / (2 lambda r^2), finite at lambda = 0.
    const double k = 2.0 / (1.0 + std::sqrt(disc));
    return k * p;
}

double vanishing_denominator(const ImagePoint &p, const RectifyModel &m) {
    return m.l.l1 * p.x() + m.l.l2 * p.y() + m.l.l3 * (1.0 + m.lambda * p.squaredNorm());
}

ImagePoint rectify(const ImagePoint &p, const RectifyModel &m) {
    const double d = vanishing_denominator(p, m);
    if (std::abs(d) <= kDenomEps) {
        throw Error(ErrorKind::NearVanishingLine, "point maps to the line at infinity");
    }
    return p / d;
}

double frame_determinant(const AffineFrame &f) {
    // Cofactor expansion along the row of ones.
    return (f.po.x() * f.px.y() - f.px.x() * f.po.y()) - (f.py.x() * f.px.y() - f.px.x() * f.py.y()) +
           (f.py.x() * f.po.y() - f.po.x() * f.py.y());
}

RectifiedScale rectified_scale(const AffineFrame &f, const RectifyModel &m) {
    RectifiedScale out;
    for (int k = 0; k < 3; ++k) {
        const double a = vanishing_denominator(f[k], m);
        if (std::abs(a) <= kDenomEps) {
            throw Error(ErrorKind::NearVanishingLine, "frame point maps to the line at infinity");
        }
        out.frame.alphas[k] = a;
        out.frame.points[k] = f[k] / a;
    }
    const auto &a = out.frame.alphas;
    // 2x2 minors of the distorted coordinates; l and lambda only enter through alpha.
    const double m23 = f.po.x() * f.px.y() - f.px.x() * f.po.y();
    const double m13 = f.py.x() * f.px.y() - f.px.x() * f.py.y();
    const double m12 = f.py.x() * f.po.y() - f.po.x() * f.py.y();
    out.scale = m23 / (a[1] * a[2]) - m13 / (a[0] * a[2]) + m12 / (a[0] * a[1]);
    return out;
}

AffineFrame orient(const AffineFrame &f) {
    const double det = frame_determinant(f);
    if (std::abs(det) <= kCollinearEps) {
        throw Error(ErrorKind::Collinear, "point parameterization is collinear");
    }
    if (det < 0.0) {
        return {f.px, f.po, f.py};
    }
    return f;
}

double change_of_scale(const ImagePoint &p, const RectifyModel &m) {
    const double d = vanishing_denominator(p, m);
    if (std::abs(d) <= kDenomEps) {
        throw Error(ErrorKind::NearVanishingLine, "change of scale is unbounded on the vanishing line");
    }
    return m.l.l3 * (1.0 - m.lambda * p.squaredNorm()) / (d * d * d);
}

VanishingLocus distorted_vanishing_circle(const RectifyModel &m) {
    VanishingLocus locus;
    const double lam = m.lambda * m.l.l3;
    if (lam == 0.0) {
        locus.kind = VanishingLocus::Kind::Line;
        locus.line = Eigen::Vector3d(m.l.l1, m.l.l2, m.l.l3);
        return locus;
    }
    // lam (x^2 + y^2) + l1 x + l2 y + l3 = 0
    const ImagePoint center(-m.l.l1 / (2.0 * lam), -m.l.l2 / (2.0 * lam));
    const double r2 = center.squaredNorm() - m.l.l3 / lam;
    if (r2 < 0.0) {
        throw Error(ErrorKind::NoRealLocus, "distorted vanishing line has no real points");
    }
    locus.kind = VanishingLocus::Kind::Circle;
    locus.center = center;
    locus.radius = std::sqrt(r2);
    return locus;
}

namespace {

double reference_scale(const RectifyModel &m, const ImagePoint &ref) {
    const double s = change_of_scale(ref, m);
    if (s == 0.0) {
        throw Error(ErrorKind::NearVanishingLine, "reference point has zero change of scale");
    }
    return s;
}

inline void fill_relative_scale(const ImagePoint &p, const RectifyModel &m, double ref, double &value,
                                std::uint8_t &valid) {
    const double d = vanishing_denominator(p, m);
    if (std::abs(d) <= kDenomEps) {
        value = 0.0;
        valid = 0;
        return;
    }
    value = m.l.l3 * (1.0 - m.lambda * p.squaredNorm()) / (d * d * d) / ref;
    valid = std::isfinite(value) ? 1 : 0;
}

} // namespace

ScaleField dense_change_of_scale_map_serial(std::span<const ImagePoint> grid, const RectifyModel &m,
                                            const ImagePoint &ref) {
    const double s_ref = reference_scale(m, ref);
    ScaleField field;
    field.values.resize(grid.size());
    field.valid.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        fill_relative_scale(grid[i], m, s_ref, field.values[i], field.valid[i]);
    }
    return field;
}

ScaleField dense_change_of_scale_map(std::span<const ImagePoint> grid, const RectifyModel &m,
                                     const ImagePoint &ref) {
    const double s_ref = reference_scale(m, ref);
    ScaleField field;
    field.values.resize(grid.size());
    field.valid.resize(grid.size());
    const auto n = static_cast<std::ptrdiff_t>(grid.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        fill_relative_scale(grid[i], m, s_ref, field.values[i], field.valid[i]);
    }
    return field;
}

std::vector<std::uint8_t> mask_by_scale(const ScaleField &field, double threshold) {
    if (!(threshold > 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "mask threshold must be positive");
    }
    const double floor = 1.0 / threshold;
    std::vector<std::uint8_t> mask(field.values.size());
    for (std::size_t i = 0; i < mask.size(); ++i) {
        mask[i] = (field.valid[i] && field.values[i] >= floor) ? 1 : 0;
    }
    return mask;
}

} // namespace planerect
