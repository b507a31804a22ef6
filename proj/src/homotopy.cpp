// Total-degree homotopy continuation for the small square systems produced by
// the constraint builders. Paths are tracked in projective space on a random
// affine patch, so endpoints at infinity stay bounded.

#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <random>

#include <Eigen/Dense>

#include "planerect/error.hpp"
#include "planerect/polysolve.hpp"

namespace planerect::homotopy {

namespace {

using cd = std::complex<double>;
constexpr int kMaxDegree = 4;

template <int M>
using CVec = Eigen::Matrix<cd, M, 1>;

// Gaussian elimination with partial pivoting on |re| + |im|; returns false on
// an exactly singular pivot.
template <int M>
bool lin_solve(Eigen::Matrix<cd, M, M> a, CVec<M> b, CVec<M> &x) {
    for (int k = 0; k < M; ++k) {
        int piv = k;
        double best = std::abs(a(k, k).real()) + std::abs(a(k, k).imag());
        for (int r = k + 1; r < M; ++r) {
            const double v = std::abs(a(r, k).real()) + std::abs(a(r, k).imag());
            if (v > best) {
                best = v;
                piv = r;
            }
        }
        if (best == 0.0) {
            return false;
        }
        if (piv != k) {
            a.row(k).swap(a.row(piv));
            std::swap(b[k], b[piv]);
        }
        const cd inv = 1.0 / a(k, k);
        for (int r = k + 1; r < M; ++r) {
            const cd m = a(r, k) * inv;
            for (int c = k + 1; c < M; ++c) {
                a(r, c) -= m * a(k, c);
            }
            b[r] -= m * b[k];
        }
    }
    for (int k = M - 1; k >= 0; --k) {
        cd acc = b[k];
        for (int c = k + 1; c < M; ++c) {
            acc -= a(k, c) * x[c];
        }
        x[k] = acc / a(k, k);
    }
    return true;
}

// Homogenized equations evaluated through a shared table of monomials: every
// monomial of degree <= kMaxDegree in the N + 1 homogeneous variables is one
// product away from a lower-degree one.
template <int N>
struct Compiled {
    static constexpr int M = N + 1;
    using Exponents = std::array<std::uint8_t, M>;
    struct Mono {
        int parent;
        int var;
    };
    struct Partial {
        int mono;
        int var;
        double c;
    };
    struct Term {
        double c;
        int mono;
    };
    std::vector<Mono> monos; // monos[0] is the constant 1
    std::array<std::vector<Term>, N> eqs;
    std::array<std::vector<Partial>, N> partials;
    std::array<int, N> degree{};
};

template <int N>
Compiled<N> compile(const PolySystem &sys) {
    using C = Compiled<N>;
    constexpr int M = C::M;
    C out;
    std::map<typename C::Exponents, int> index;
    std::vector<typename C::Exponents> layer{typename C::Exponents{}};
    index[layer[0]] = 0;
    out.monos.push_back({-1, -1});
    for (int d = 1; d <= kMaxDegree; ++d) {
        std::vector<typename C::Exponents> next;
        for (const auto &e : layer) {
            const int parent = index.at(e);
            for (int v = 0; v < M; ++v) {
                auto f = e;
                ++f[v];
                if (index.emplace(f, static_cast<int>(out.monos.size())).second) {
                    out.monos.push_back({parent, v});
                    next.push_back(f);
                }
            }
        }
        layer = std::move(next);
    }
    for (int i = 0; i < N; ++i) {
        const Polynomial &p = sys.polys[sys.square[i]];
        const int d = p.degree();
        if (d < 1 || d > kMaxDegree) {
            throw Error(ErrorKind::EmptySystem, "tracked equation has unsupported degree");
        }
        out.degree[i] = d;
        for (const auto &[m, c] : p.terms()) {
            typename C::Exponents e{};
            e[0] = static_cast<std::uint8_t>(d - total_degree(m));
            for (int v = 0; v < N; ++v) {
                e[v + 1] = m[v];
            }
            out.eqs[i].push_back({c, index.at(e)});
            for (int v = 0; v < M; ++v) {
                if (e[v] == 0) {
                    continue;
                }
                auto f = e;
                --f[v];
                out.partials[i].push_back({index.at(f), v, c * e[v]});
            }
        }
    }
    return out;
}

template <int N>
struct Homotopy {
    static constexpr int M = N + 1;
    using Vec = Eigen::Matrix<cd, M, 1>;
    using Mat = Eigen::Matrix<cd, M, M>;

    const Compiled<N> &sys;
    cd gamma;
    Vec patch;

    // Target system value and Jacobian at homogeneous X.
    void target(const Vec &X, Eigen::Matrix<cd, N, 1> &f, Eigen::Matrix<cd, N, M> &jac) const {
        constexpr int kMaxMonos = 70;
        cd vals[kMaxMonos];
        const auto nm = sys.monos.size();
        vals[0] = 1.0;
        for (std::size_t k = 1; k < nm; ++k) {
            vals[k] = vals[sys.monos[k].parent] * X[sys.monos[k].var];
        }
        f.setZero();
        jac.setZero();
        for (int i = 0; i < N; ++i) {
            cd acc = 0.0;
            for (const auto &t : sys.eqs[i]) {
                acc += t.c * vals[t.mono];
            }
            f[i] = acc;
            for (const auto &pd : sys.partials[i]) {
                jac(i, pd.var) += pd.c * vals[pd.mono];
            }
        }
    }

    // H(X, t), dH/dX and dH/dt, with the patch as the last row.
    void eval(const Vec &X, double t, Vec *h, Mat *hx, Vec *ht) const {
        Eigen::Matrix<cd, N, 1> f;
        Eigen::Matrix<cd, N, M> jf;
        target(X, f, jf);
        const cd s = (1.0 - t) * gamma;
        for (int i = 0; i < N; ++i) {
            const int d = sys.degree[i];
            cd xd1 = 1.0;
            cd x0d1 = 1.0;
            for (int k = 1; k < d; ++k) {
                xd1 *= X[i + 1];
                x0d1 *= X[0];
            }
            const cd g = xd1 * X[i + 1] - x0d1 * X[0];
            if (h) {
                (*h)[i] = s * g + t * f[i];
            }
            if (ht) {
                (*ht)[i] = f[i] - gamma * g;
            }
            if (hx) {
                for (int v = 0; v < M; ++v) {
                    hx->operator()(i, v) = t * jf(i, v);
                }
                hx->operator()(i, i + 1) += s * static_cast<double>(d) * xd1;
                hx->operator()(i, 0) -= s * static_cast<double>(d) * x0d1;
            }
        }
        if (h) {
            (*h)[N] = (patch.transpose() * X)(0) - 1.0;
        }
        if (ht) {
            (*ht)[N] = 0.0;
        }
        if (hx) {
            hx->row(N) = patch.transpose();
        }
    }

    Vec velocity(const Vec &X, double t) const {
        Mat hx;
        Vec ht;
        eval(X, t, nullptr, &hx, &ht);
        Vec v;
        if (!lin_solve<M>(hx, -ht, v)) {
            v.setConstant(cd(std::numeric_limits<double>::quiet_NaN(), 0.0));
        }
        return v;
    }

    bool correct(Vec &X, double t, const TrackerSettings &s) const {
        for (int it = 0; it < s.maxCorrectorSteps; ++it) {
            Vec h;
            Mat hx;
            eval(X, t, &h, &hx, nullptr);
            Vec dx;
            if (!lin_solve<M>(hx, h, dx) || !dx.allFinite()) {
                return false;
            }
            X -= dx;
            if (dx.norm() <= s.correctorTol * X.norm()) {
                return true;
            }
        }
        return false;
    }
};

template <int N>
struct Setup {
    Compiled<N> sys;
    cd gamma;
    Eigen::Matrix<cd, N + 1, 1> patch;
    std::vector<Eigen::Matrix<cd, N + 1, 1>> starts;
};

template <int N>
Setup<N> make_setup(const PolySystem &system, const SolverConfig &cfg) {
    Setup<N> su{compile<N>(system), {}, {}, {}};
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI);
    std::normal_distribution<double> normal;
    su.gamma = std::polar(1.0, angle(rng));
    for (int v = 0; v <= N; ++v) {
        su.patch[v] = cd(normal(rng), normal(rng));
    }
    // Start solutions: X0 = 1, X_i a d_i-th root of unity, rescaled onto the patch.
    int total = 1;
    for (int i = 0; i < N; ++i) {
        total *= su.sys.degree[i];
    }
    for (int p = 0; p < total; ++p) {
        Eigen::Matrix<cd, N + 1, 1> X;
        X[0] = 1.0;
        int rest = p;
        for (int i = 0; i < N; ++i) {
            const int d = su.sys.degree[i];
            X[i + 1] = std::polar(1.0, 2.0 * M_PI * (rest % d) / d);
            rest /= d;
        }
        X /= (su.patch.transpose() * X)(0);
        su.starts.push_back(X);
    }
    return su;
}

template <int N>
PathResult track_one(const Setup<N> &su, int path, const TrackerSettings &s) {
    using H = Homotopy<N>;
    const H hom{su.sys, su.gamma, su.patch};
    typename H::Vec X = su.starts[path];
    double t = 0.0;
    double dt = s.initialStep;
    int successes = 0;
    PathResult res;
    bool stalled = false;
    while (t < 1.0) {
        if (++res.steps > s.maxSteps) {
            stalled = true;
            break;
        }
        const double step = std::min(dt, 1.0 - t);
        const typename H::Vec k1 = hom.velocity(X, t);
        const typename H::Vec k2 = hom.velocity(X + 0.5 * step * k1, t + 0.5 * step);
        const typename H::Vec k3 = hom.velocity(X + 0.5 * step * k2, t + 0.5 * step);
        const typename H::Vec k4 = hom.velocity(X + step * k3, t + step);
        typename H::Vec Xn = X + (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        const double tn = (step == 1.0 - t) ? 1.0 : t + step;
        if (Xn.allFinite() && hom.correct(Xn, tn, s)) {
            X = Xn;
            t = tn;
            if (++successes >= s.successesBeforeIncrease) {
                dt = std::min(dt * s.stepIncrease, s.maxStep);
                successes = 0;
            }
        } else {
            successes = 0;
            dt *= s.stepDecrease;
            if (dt < s.minStep) {
                stalled = true;
                break;
            }
        }
    }
    if (stalled && t < s.endZone) {
        res.status = PathStatus::Failed;
        return res;
    }
    const double ratio = std::abs(X[0]) / X.norm();
    if (!stalled && ratio < s.infinityTol) {
        res.status = PathStatus::Diverged;
        return res;
    }
    if (ratio == 0.0) {
        res.status = PathStatus::Diverged;
        return res;
    }
    for (int v = 0; v < N; ++v) {
        res.x[v] = X[v + 1] / X[0];
    }
    res.status = stalled ? PathStatus::Singular : PathStatus::Converged;
    if (stalled && ratio < 1e-3) {
        res.status = PathStatus::Diverged;
    }
    return res;
}

template <int N>
std::vector<PathResult> track_all(const PolySystem &system, const SolverConfig &cfg, bool parallel) {
    const Setup<N> su = make_setup<N>(system, cfg);
    const auto n = static_cast<int>(su.starts.size());
    std::vector<PathResult> out(n);
    if (parallel) {
#pragma omp parallel for schedule(dynamic, 1)
        for (int p = 0; p < n; ++p) {
            out[p] = track_one<N>(su, p, cfg.tracker);
        }
    } else {
        for (int p = 0; p < n; ++p) {
            out[p] = track_one<N>(su, p, cfg.tracker);
        }
    }
    return out;
}

void check_system(const PolySystem &system) {
    if (system.polys.empty() || static_cast<int>(system.square.size()) != system.nvars ||
        (system.nvars != 2 && system.nvars != 3)) {
        throw Error(ErrorKind::EmptySystem, "system has no square subsystem to track");
    }
}

} // namespace

int path_count(const PolySystem &system) {
    check_system(system);
    int total = 1;
    for (int idx : system.square) {
        total *= system.polys[idx].degree();
    }
    return total;
}

std::vector<PathResult> track_all_serial(const PolySystem &system, const SolverConfig &cfg) {
    check_system(system);
    return system.nvars == 3 ? track_all<3>(system, cfg, false) : track_all<2>(system, cfg, false);
}

std::vector<PathResult> track_all_parallel(const PolySystem &system, const SolverConfig &cfg) {
    check_system(system);
    return system.nvars == 3 ? track_all<3>(system, cfg, true) : track_all<2>(system, cfg, true);
}

} // namespace planerect::homotopy
