#include "planerect/polysolve.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>

#include <Eigen/Dense>

#include "planerect/error.hpp"
#include "poly_eval.hpp"

namespace planerect {

namespace {

using cd = std::complex<double>;

template <typename T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;
template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

// Values and Jacobian of the equations listed in idx.
template <typename T>
void eval_rows(const PolySystem &sys, const std::vector<int> &idx, const Vec<T> &x, Vec<T> &f, Mat<T> &jac) {
    const int n = static_cast<int>(x.size());
    const int m = static_cast<int>(idx.size());
    f.resize(m);
    jac.resize(m, n);
    T grad[3];
    for (int i = 0; i < m; ++i) {
        f[i] = detail::eval_gradient<T>(sys.polys[idx[i]], x, grad);
        for (int v = 0; v < n; ++v) {
            jac(i, v) = grad[v];
        }
    }
}

std::vector<int> all_rows(const PolySystem &sys) {
    std::vector<int> idx(sys.polys.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        idx[i] = static_cast<int>(i);
    }
    return idx;
}

double scaled_residual(const PolySystem &sys, const Eigen::Vector3d &xs) {
    double r = 0.0;
    for (const auto &p : sys.polys) {
        r = std::max(r, std::abs(p(xs)));
    }
    return r;
}

// Newton on the square subsystem from a complex endpoint. Returns false when
// the Jacobian at the polished point is numerically singular.
bool polish_complex(const PolySystem &sys, Vec<cd> &x, int iters) {
    Vec<cd> f;
    Mat<cd> jac;
    for (int it = 0; it < iters; ++it) {
        eval_rows<cd>(sys, sys.square, x, f, jac);
        const Vec<cd> dx = jac.fullPivLu().solve(f);
        if (!dx.allFinite()) {
            return false;
        }
        x -= dx;
        if (dx.norm() <= 1e-15 * (1.0 + x.norm())) {
            break;
        }
    }
    eval_rows<cd>(sys, sys.square, x, f, jac);
    Eigen::JacobiSVD<Mat<cd>> svd(jac);
    const auto &sv = svd.singularValues();
    return sv(0) > 0.0 && sv(sv.size() - 1) > 1e-10 * sv(0);
}

// Damped Newton on the square subsystem in real arithmetic.
void polish_real(const PolySystem &sys, Vec<double> &x, int iters) {
    Vec<double> f;
    Mat<double> jac;
    eval_rows<double>(sys, sys.square, x, f, jac);
    double fn = f.norm();
    for (int it = 0; it < iters && fn > 0.0; ++it) {
        const Vec<double> dx = jac.fullPivLu().solve(f);
        if (!dx.allFinite()) {
            return;
        }
        double step = 1.0;
        bool improved = false;
        for (int h = 0; h < 12; ++h, step *= 0.5) {
            Vec<double> xn = x - step * dx;
            Vec<double> fn2;
            Mat<double> jn;
            eval_rows<double>(sys, sys.square, xn, fn2, jn);
            if (fn2.norm() < fn) {
                x = xn;
                f = fn2;
                jac = jn;
                fn = fn2.norm();
                improved = true;
                break;
            }
        }
        if (!improved) {
            return;
        }
    }
}

Eigen::Vector3d padded(const Vec<double> &x) {
    Eigen::Vector3d out = Eigen::Vector3d::Zero();
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        out[i] = x[i];
    }
    return out;
}

Root make_root(const PolySystem &sys, const Eigen::Vector3d &xs, const SolverConfig &cfg) {
    Root r;
    r.value = sys.scaling.unscale(xs);
    if (sys.nvars == 2) {
        r.value[2] = sys.fixedLambda;
    }
    r.residual = scaled_residual(sys, xs);
    r.feasible = r.residual < cfg.residualTol && r.value[2] >= cfg.lambdaMin && r.value[2] <= cfg.lambdaMax;
    return r;
}

bool same_point(const Eigen::Vector3d &a, const Eigen::Vector3d &b, double tol) {
    return ((a - b).array().abs() <= tol * (1.0 + a.array().abs().max(b.array().abs()))).all();
}

bool lex_less(const Root &a, const Root &b) {
    return std::lexicographical_compare(a.value.data(), a.value.data() + 3, b.value.data(), b.value.data() + 3);
}

void sort_unique(std::vector<Root> &roots) {
    std::sort(roots.begin(), roots.end(), lex_less);
    std::vector<Root> out;
    for (const Root &r : roots) {
        const bool dup = std::any_of(out.begin(), out.end(),
                                     [&](const Root &o) { return same_point(o.value, r.value, 1e-8); });
        if (!dup) {
            out.push_back(r);
        }
    }
    roots = std::move(out);
}

struct Endpoints {
    std::vector<Eigen::Vector3d> real;      // scaled, polished, nonsingular
    std::vector<Eigen::Vector3d> singular;  // scaled, real, rank-deficient
    std::vector<Vec<cd>> finite;            // every nonsingular complex endpoint
    PathStats stats;
};

Endpoints track(const PolySystem &sys, const SolverConfig &cfg) {
    const auto paths = cfg.parallel ? homotopy::track_all_parallel(sys, cfg) : homotopy::track_all_serial(sys, cfg);
    Endpoints ep;
    ep.stats.tracked = static_cast<int>(paths.size());
    const int n = sys.nvars;
    for (const auto &p : paths) {
        if (p.status == homotopy::PathStatus::Failed) {
            ++ep.stats.failed;
            continue;
        }
        if (p.status == homotopy::PathStatus::Diverged) {
            ++ep.stats.diverged;
            continue;
        }
        Vec<cd> x = p.x.head(n);
        const bool regular = polish_complex(sys, x, cfg.newtonIters);
        if (!x.allFinite()) {
            ++ep.stats.failed;
            continue;
        }
        const bool isReal = x.imag().cwiseAbs().maxCoeff() < cfg.imagTol;
        if (!regular) {
            ++ep.stats.singular;
            if (isReal) {
                ep.singular.push_back(padded(x.real()));
            }
            continue;
        }
        ++ep.stats.converged;
        ep.finite.push_back(x);
        if (isReal) {
            Vec<double> xr = x.real();
            polish_real(sys, xr, cfg.newtonIters);
            ep.real.push_back(padded(xr));
        }
    }
    return ep;
}

// Two paths landing on the same regular endpoint means one of them jumped.
bool has_coincident(const std::vector<Vec<cd>> &pts) {
    for (std::size_t i = 0; i < pts.size(); ++i) {
        for (std::size_t j = i + 1; j < pts.size(); ++j) {
            if ((pts[i] - pts[j]).norm() <= 1e-6 * (1.0 + pts[i].norm())) {
                return true;
            }
        }
    }
    return false;
}

constexpr int kJumpRetries = 2;

} // namespace

int SolutionSet::feasible_count() const {
    return static_cast<int>(std::count_if(roots.begin(), roots.end(), [](const Root &r) { return r.feasible; }));
}

double residual(const PolySystem &system, std::span<const double> root) {
    return scaled_residual(system, system.to_scaled(root));
}

double residual(const PolySystem &system, const Eigen::Vector3d &root) {
    return residual(system, std::span<const double>(root.data(), 3));
}

SolutionSet solve(const PolySystem &system, const SolverConfig &cfg) {
    const int total = homotopy::path_count(system);
    SolutionSet out;
    SolverConfig run = cfg;
    std::vector<Eigen::Vector3d> real;
    std::vector<Eigen::Vector3d> singular;
    for (int attempt = 0; attempt <= kJumpRetries; ++attempt) {
        run.seed = cfg.seed + static_cast<std::uint64_t>(attempt) * 0x632be59bd9b4e019ULL;
        Endpoints ep = track(system, run);
        if (attempt == 0) {
            out.stats = ep.stats;
        }
        real.insert(real.end(), ep.real.begin(), ep.real.end());
        singular.insert(singular.end(), ep.singular.begin(), ep.singular.end());
        if (ep.stats.failed * 2 > total) {
            if (attempt == 0) {
                throw Error(ErrorKind::TrackingFailure, "more than half of the homotopy paths failed");
            }
            break;
        }
        if (!has_coincident(ep.finite)) {
            break;
        }
    }
    for (const auto &xs : real) {
        Root r = make_root(system, xs, cfg);
        (r.residual < cfg.residualTol ? out.roots : out.rejected).push_back(r);
    }
    for (const auto &xs : singular) {
        out.rejected.push_back(make_root(system, xs, cfg));
    }
    sort_unique(out.roots);
    sort_unique(out.rejected);
    return out;
}

SolutionSet oracle_solve(const PolySystem &system, const SearchBox &box, int gridN, const SolverConfig &cfg) {
    SolutionSet out;
    const int n = system.nvars;
    if (gridN < 2 || system.polys.empty() || ((box.hi - box.lo).head(n).array() <= 0.0).any()) {
        return out;
    }
    const Eigen::Vector3d lo = system.scaling.scale(box.lo);
    const Eigen::Vector3d hi = system.scaling.scale(box.hi);
    const std::vector<int> rows = all_rows(system);
    auto cost = [&](const Eigen::Vector3d &x) {
        double c = 0.0;
        for (const auto &p : system.polys) {
            const double v = p(x);
            c += v * v;
        }
        return c;
    };
    const int nz = n == 3 ? gridN : 1;
    std::vector<double> grid(static_cast<std::size_t>(gridN) * gridN * nz);
    auto at = [&](int i, int j, int k) {
        Eigen::Vector3d x;
        x[0] = lo[0] + (hi[0] - lo[0]) * i / (gridN - 1);
        x[1] = lo[1] + (hi[1] - lo[1]) * j / (gridN - 1);
        x[2] = n == 3 ? lo[2] + (hi[2] - lo[2]) * k / (gridN - 1) : 0.0;
        return x;
    };
    auto index = [&](int i, int j, int k) { return (static_cast<std::size_t>(k) * gridN + j) * gridN + i; };
#pragma omp parallel for schedule(static)
    for (int k = 0; k < nz; ++k) {
        for (int j = 0; j < gridN; ++j) {
            for (int i = 0; i < gridN; ++i) {
                grid[index(i, j, k)] = cost(at(i, j, k));
            }
        }
    }
    std::vector<Eigen::Vector3d> seeds;
    for (int k = 0; k < nz; ++k) {
        for (int j = 0; j < gridN; ++j) {
            for (int i = 0; i < gridN; ++i) {
                const double c = grid[index(i, j, k)];
                bool isMin = true;
                for (int dk = (n == 3 ? -1 : 0); dk <= (n == 3 ? 1 : 0) && isMin; ++dk) {
                    for (int dj = -1; dj <= 1 && isMin; ++dj) {
                        for (int di = -1; di <= 1 && isMin; ++di) {
                            const int a = i + di, b = j + dj, e = k + dk;
                            if ((di || dj || dk) && a >= 0 && b >= 0 && e >= 0 && a < gridN && b < gridN && e < nz &&
                                grid[index(a, b, e)] < c) {
                                isMin = false;
                            }
                        }
                    }
                }
                if (isMin) {
                    seeds.push_back(at(i, j, k));
                }
            }
        }
    }
    for (const auto &s : seeds) {
        Vec<double> x = s.head(n);
        double mu = 1e-3;
        Vec<double> f;
        Mat<double> jac;
        eval_rows<double>(system, rows, x, f, jac);
        double c = f.squaredNorm();
        for (int it = 0; it < 200 && c > 1e-30; ++it) {
            const Mat<double> jtj = jac.transpose() * jac;
            const Vec<double> g = jac.transpose() * f;
            Mat<double> a = jtj;
            a.diagonal().array() += mu * (1.0 + jtj.diagonal().array());
            const Vec<double> dx = a.ldlt().solve(g);
            Vec<double> xn = x - dx;
            Vec<double> fn;
            Mat<double> jn;
            eval_rows<double>(system, rows, xn, fn, jn);
            if (fn.squaredNorm() < c) {
                x = xn;
                f = fn;
                jac = jn;
                c = fn.squaredNorm();
                mu = std::max(mu * 0.2, 1e-12);
                if (dx.norm() < 1e-15 * (1.0 + x.norm())) {
                    break;
                }
            } else {
                mu *= 10.0;
                if (mu > 1e12) {
                    break;
                }
            }
        }
        Root r = make_root(system, padded(x), cfg);
        const Eigen::Vector3d v = r.value;
        const bool inside = ((v.head(n) - box.lo.head(n)).array() >= -1e-9).all() &&
                            ((box.hi.head(n) - v.head(n)).array() >= -1e-9).all();
        if (inside && r.residual < cfg.residualTol) {
            out.roots.push_back(r);
        }
    }
    sort_unique(out.roots);
    return out;
}

} // namespace planerect
