#include "planerect/constraints.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "planerect/error.hpp"

namespace planerect {

std::string_view to_string(Config c) {
    switch (c) {
    case Config::C222:
        return "222";
    case Config::C32:
        return "32";
    case Config::C4:
        return "4";
    case Config::C22Fixed:
        return "22-fixed";
    }
    return "?";
}

std::vector<int> group_sizes(Config c) {
    switch (c) {
    case Config::C222:
        return {2, 2, 2};
    case Config::C32:
        return {3, 2};
    case Config::C4:
        return {4};
    case Config::C22Fixed:
        return {2, 2};
    }
    return {};
}

std::string_view to_string(Degeneracy d) {
    switch (d) {
    case Degeneracy::VLThroughOrigin:
        return "VLThroughOrigin";
    case Degeneracy::ConcentricPoints:
        return "ConcentricPoints";
    case Degeneracy::Collinear:
        return "Collinear";
    case Degeneracy::ZeroEquation:
        return "ZeroEquation";
    }
    return "?";
}

std::vector<std::pair<int, int>> group_pairs(int group_size) {
    std::vector<std::pair<int, int>> pairs;
    for (int a = 0; a < group_size; ++a) {
        for (int b = a + 1; b < group_size; ++b) {
            pairs.emplace_back(a, b);
        }
    }
    return pairs;
}

VariableScaling compute_scaling(std::span<const ImagePoint> points) {
    VariableScaling s;
    if (points.empty()) {
        return s;
    }
    double abs_sum = 0.0;
    double r2_sum = 0.0;
    for (const auto &p : points) {
        abs_sum += std::abs(p.x()) + std::abs(p.y());
        r2_sum += p.squaredNorm();
    }
    const double mean_abs = abs_sum / (2.0 * points.size());
    const double mean_r2 = r2_sum / points.size();
    if (mean_abs > 0.0 && std::isfinite(mean_abs)) {
        s.coordScale = 1.0 / mean_abs;
    }
    if (mean_r2 > 0.0 && std::isfinite(mean_r2)) {
        s.radiusScale = 1.0 / mean_r2;
    }
    return s;
}

namespace {

template <typename Region>
void check_shape(const MinimalSample<Region> &sample) {
    const auto sizes = group_sizes(sample.config);
    bool ok = sample.groups.size() == sizes.size();
    for (std::size_t g = 0; ok && g < sizes.size(); ++g) {
        ok = static_cast<int>(sample.groups[g].size()) == sizes[g];
    }
    if (!ok) {
        std::ostringstream msg;
        msg << "sample does not match configuration " << to_string(sample.config);
        throw Error(ErrorKind::InvalidArgument, msg.str());
    }
}

std::vector<std::pair<int, int>> square_pairs(int group_size, SquareSelection sel) {
    std::vector<std::pair<int, int>> pairs;
    for (int k = 1; k < group_size; ++k) {
        pairs.emplace_back(sel == SquareSelection::Chain ? k - 1 : 0, k);
    }
    return pairs;
}

// Emits all pairwise equations of every group and records which of them form
// the tracked subsystem.
template <typename MakeEquation>
PolySystem assemble(const std::vector<int> &sizes, SquareSelection sel, int nvars, const VariableScaling &scaling,
                    MakeEquation &&make, bool check) {
    PolySystem sys;
    sys.nvars = nvars;
    sys.scaling = scaling;
    for (std::size_t g = 0; g < sizes.size(); ++g) {
        const auto pairs = group_pairs(sizes[g]);
        const auto tracked = square_pairs(sizes[g], sel);
        for (const auto &[a, b] : pairs) {
            auto [eq, magnitude] = make(static_cast<int>(g), a, b);
            const double c = eq.max_abs_coefficient();
            if (c <= 1e-12 * magnitude || magnitude == 0.0) {
                if (check) {
                    throw Error(ErrorKind::DegenerateSample, "equal-scale equation vanishes identically");
                }
            } else {
                eq *= 1.0 / c;
            }
            if (std::find(tracked.begin(), tracked.end(), std::make_pair(a, b)) != tracked.end()) {
                sys.square.push_back(static_cast<int>(sys.polys.size()));
            }
            sys.polys.push_back(std::move(eq));
        }
    }
    return sys;
}

void throw_if_degenerate(const std::set<Degeneracy> &flags) {
    if (flags.empty()) {
        return;
    }
    std::ostringstream msg;
    msg << "degenerate sample:";
    for (auto f : flags) {
        msg << ' ' << to_string(f);
    }
    throw Error(ErrorKind::DegenerateSample, msg.str());
}

// Sample points fall on one circle about the origin, or corresponding
// points of every group share a radius.
bool concentric(const std::vector<std::vector<std::vector<ImagePoint>>> &groups) {
    double rmin = std::numeric_limits<double>::infinity();
    double rmax = 0.0;
    bool matched = true;
    for (const auto &group : groups) {
        for (const auto &region : group) {
            for (std::size_t k = 0; k < region.size(); ++k) {
                const double r = region[k].norm();
                rmin = std::min(rmin, r);
                rmax = std::max(rmax, r);
                if (std::abs(r - group.front()[k].norm()) > kCircleEps) {
                    matched = false;
                }
            }
        }
    }
    if (rmin > rmax) {
        return false;
    }
    return 0.5 * (rmax - rmin) <= kCircleEps || matched;
}

std::vector<ImagePoint> sample_points(const DesSample &sample) {
    std::vector<ImagePoint> pts;
    for (const auto &g : sample.groups) {
        for (const auto &f : g) {
            pts.insert(pts.end(), {f.py, f.po, f.px});
        }
    }
    return pts;
}

} // namespace

bool vanishing_line_through_origin(const RectifyModel &m) {
    const double n = std::hypot(m.l.l1, m.l.l2);
    if (n == 0.0) {
        return false;
    }
    return std::abs(m.l.l3) / n < kVanishingLineEps;
}

std::set<Degeneracy> degeneracy_flags(const DesSample &sample, const std::optional<RectifyModel> &model) {
    std::set<Degeneracy> flags;
    std::vector<std::vector<std::vector<ImagePoint>>> pts;
    for (const auto &group : sample.groups) {
        auto &g = pts.emplace_back();
        for (std::size_t i = 0; i < group.size(); ++i) {
            AffineFrame f = group[i];
            const double det = frame_determinant(f);
            if (std::abs(det) <= kCollinearEps) {
                flags.insert(Degeneracy::Collinear);
            } else if (det < 0.0) {
                f = orient(f);
            }
            g.push_back({f.py, f.po, f.px});
            for (std::size_t j = 0; j < i; ++j) {
                const auto &o = group[j];
                if (o.py == group[i].py && o.po == group[i].po && o.px == group[i].px) {
                    flags.insert(Degeneracy::ZeroEquation);
                }
            }
        }
    }
    if (concentric(pts)) {
        flags.insert(Degeneracy::ConcentricPoints);
    }
    if (model && vanishing_line_through_origin(*model)) {
        flags.insert(Degeneracy::VLThroughOrigin);
    }
    return flags;
}

std::set<Degeneracy> degeneracy_flags(const CsSample &sample, const std::optional<RectifyModel> &model) {
    std::set<Degeneracy> flags;
    std::vector<std::vector<std::vector<ImagePoint>>> pts;
    for (const auto &group : sample.groups) {
        auto &g = pts.emplace_back();
        for (std::size_t i = 0; i < group.size(); ++i) {
            g.push_back({group[i].center});
            for (std::size_t j = 0; j < i; ++j) {
                if (group[j].center == group[i].center && group[j].scale == group[i].scale) {
                    flags.insert(Degeneracy::ZeroEquation);
                }
            }
        }
    }
    if (concentric(pts)) {
        flags.insert(Degeneracy::ConcentricPoints);
    }
    if (model && vanishing_line_through_origin(*model)) {
        flags.insert(Degeneracy::VLThroughOrigin);
    }
    return flags;
}

DesCoefficients des_coefficients(const DesSample &sample, const VariableScaling &scaling) {
    DesCoefficients out;
    out.scaling = scaling;
    for (const auto &group : sample.groups) {
        auto &g = out.groups.emplace_back();
        for (const auto &raw : group) {
            const AffineFrame f = orient(raw);
            FrameCoefficients c;
            for (int k = 0; k < 3; ++k) {
                c.x[k] = scaling.coordScale * f[k].x();
                c.y[k] = scaling.coordScale * f[k].y();
                c.q[k] = scaling.radiusScale * f[k].squaredNorm();
            }
            c.minors[0] = c.x[1] * c.y[2] - c.x[2] * c.y[1];
            c.minors[1] = -(c.x[0] * c.y[2] - c.x[2] * c.y[0]);
            c.minors[2] = c.x[0] * c.y[1] - c.x[1] * c.y[0];
            g.push_back(c);
        }
    }
    return out;
}

namespace {

struct FramePolys {
    Polynomial numerator;
    Polynomial product;
};

// Numerator and alpha product of the rectified scale. When fixed is set the
// lambda term is folded into the constants.
FramePolys frame_polys(const FrameCoefficients &c, std::optional<double> fixed_scaled_lambda) {
    FramePolys fp;
    const double det0 = c.minors[0] + c.minors[1] + c.minors[2];
    const double detr = c.minors[0] * c.q[0] + c.minors[1] * c.q[1] + c.minors[2] * c.q[2];
    fp.product = Polynomial(1.0);
    if (fixed_scaled_lambda) {
        const double lam = *fixed_scaled_lambda;
        fp.numerator = Polynomial(det0 + lam * detr);
        for (int k = 0; k < 3; ++k) {
            fp.product = fp.product * Polynomial::affine(1.0 + lam * c.q[k], {c.x[k], c.y[k], 0.0});
        }
    } else {
        fp.numerator = Polynomial::affine(det0, {0.0, 0.0, detr});
        for (int k = 0; k < 3; ++k) {
            fp.product = fp.product * Polynomial::affine(1.0, {c.x[k], c.y[k], c.q[k]});
        }
    }
    return fp;
}

PolySystem build_from_frames(const DesSample &sample, std::optional<double> lambda, const BuildOptions &opts) {
    check_shape(sample);
    if (opts.checkDegeneracy) {
        throw_if_degenerate(degeneracy_flags(sample));
    }
    const auto pts = sample_points(sample);
    const VariableScaling scaling = compute_scaling(pts);
    const DesCoefficients coeffs = des_coefficients(sample, scaling);

    std::optional<double> scaled_lambda;
    if (lambda) {
        scaled_lambda = *lambda / scaling.radiusScale;
    }
    std::vector<std::vector<FramePolys>> fp;
    for (const auto &g : coeffs.groups) {
        auto &out = fp.emplace_back();
        for (const auto &c : g) {
            out.push_back(frame_polys(c, scaled_lambda));
        }
    }
    auto make = [&](int g, int a, int b) {
        const auto &i = fp[g][a];
        const auto &j = fp[g][b];
        Polynomial lhs = i.numerator * j.product;
        Polynomial rhs = j.numerator * i.product;
        const double magnitude = std::max(lhs.max_abs_coefficient(), rhs.max_abs_coefficient());
        return std::make_pair(lhs - rhs, magnitude);
    };
    std::vector<int> sizes;
    for (const auto &g : sample.groups) {
        sizes.push_back(static_cast<int>(g.size()));
    }
    PolySystem sys = assemble(sizes, opts.square, lambda ? 2 : 3, scaling, make, opts.checkDegeneracy);
    if (lambda) {
        sys.fixedLambda = *lambda;
    }
    return sys;
}

} // namespace

PolySystem build_des(const DesSample &sample, const BuildOptions &opts) {
    if (sample.config == Config::C22Fixed) {
        throw Error(ErrorKind::InvalidArgument, "22-fixed samples need build_des_fixed_lambda");
    }
    return build_from_frames(sample, std::nullopt, opts);
}

PolySystem build_des_fixed_lambda(const DesSample &sample, double lambda, const BuildOptions &opts) {
    if (sample.config != Config::C22Fixed) {
        throw Error(ErrorKind::InvalidArgument, "fixed-lambda solver takes a 22-fixed sample");
    }
    return build_from_frames(sample, lambda, opts);
}

PolySystem build_cs(const CsSample &sample, const BuildOptions &opts) {
    if (sample.config == Config::C22Fixed) {
        throw Error(ErrorKind::InvalidArgument, "change-of-scale solvers take 222, 32 or 4 samples");
    }
    check_shape(sample);
    for (const auto &g : sample.groups) {
        for (const auto &o : g) {
            if (!(o.scale > 0.0)) {
                throw Error(ErrorKind::InvalidArgument, "scale observations must be positive");
            }
        }
    }
    if (opts.checkDegeneracy) {
        throw_if_degenerate(degeneracy_flags(sample));
    }
    std::vector<ImagePoint> centers;
    double scale_sum = 0.0;
    for (const auto &g : sample.groups) {
        for (const auto &o : g) {
            centers.push_back(o.center);
            scale_sum += o.scale;
        }
    }
    const VariableScaling scaling = compute_scaling(centers);
    const double mean_scale = scale_sum / centers.size();

    // s_i (1 - lambda r_i^2) D_j^3 = s_j (1 - lambda r_j^2) D_i^3
    struct ObsPolys {
        Polynomial weighted; // s (1 - lambda r^2)
        Polynomial cube;     // D^3
    };
    std::vector<std::vector<ObsPolys>> op;
    for (const auto &g : sample.groups) {
        auto &out = op.emplace_back();
        for (const auto &o : g) {
            const double x = scaling.coordScale * o.center.x();
            const double y = scaling.coordScale * o.center.y();
            const double q = scaling.radiusScale * o.center.squaredNorm();
            const double s = o.scale / mean_scale;
            const Polynomial d = Polynomial::affine(1.0, {x, y, q});
            out.push_back({Polynomial::affine(s, {0.0, 0.0, -s * q}), d * d * d});
        }
    }
    auto make = [&](int g, int a, int b) {
        const auto &i = op[g][a];
        const auto &j = op[g][b];
        Polynomial lhs = i.weighted * j.cube;
        Polynomial rhs = j.weighted * i.cube;
        const double magnitude = std::max(lhs.max_abs_coefficient(), rhs.max_abs_coefficient());
        return std::make_pair(lhs - rhs, magnitude);
    };
    std::vector<int> sizes;
    for (const auto &g : sample.groups) {
        sizes.push_back(static_cast<int>(g.size()));
    }
    return assemble(sizes, opts.square, 3, scaling, make, opts.checkDegeneracy);
}

} // namespace planerect
