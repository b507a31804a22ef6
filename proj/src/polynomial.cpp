#include "planerect/polynomial.hpp"

#include <algorithm>
#include <cmath>

namespace planerect {

Polynomial::Polynomial(double constant) {
    if (constant != 0.0) {
        terms_[{0, 0, 0}] = constant;
    }
}

Polynomial Polynomial::variable(int index) {
    Polynomial p;
    Monomial m{0, 0, 0};
    m[index] = 1;
    p.terms_[m] = 1.0;
    return p;
}

Polynomial Polynomial::affine(double c0, const std::array<double, 3> &c) {
    Polynomial p(c0);
    for (int i = 0; i < 3; ++i) {
        Monomial m{0, 0, 0};
        m[i] = 1;
        p.add_term(m, c[i]);
    }
    return p;
}

void Polynomial::add_term(const Monomial &m, double c) {
    if (c == 0.0) {
        return;
    }
    auto [it, inserted] = terms_.try_emplace(m, c);
    if (!inserted) {
        it->second += c;
        if (it->second == 0.0) {
            terms_.erase(it);
        }
    }
}

int Polynomial::degree() const {
    int d = 0;
    for (const auto &[m, c] : terms_) {
        d = std::max(d, total_degree(m));
    }
    return d;
}

double Polynomial::max_abs_coefficient() const {
    double best = 0.0;
    for (const auto &[m, c] : terms_) {
        best = std::max(best, std::abs(c));
    }
    return best;
}

double Polynomial::operator()(std::span<const double> x) const {
    double v[3] = {0.0, 0.0, 0.0};
    std::copy(x.begin(), x.begin() + std::min<std::size_t>(3, x.size()), v);
    double pw[3][5];
    for (int i = 0; i < 3; ++i) {
        pw[i][0] = 1.0;
        for (int k = 1; k < 5; ++k) {
            pw[i][k] = pw[i][k - 1] * v[i];
        }
    }
    double sum = 0.0;
    for (const auto &[m, c] : terms_) {
        double t = c;
        for (int i = 0; i < 3; ++i) {
            t *= m[i] < 5 ? pw[i][m[i]] : std::pow(v[i], m[i]);
        }
        sum += t;
    }
    return sum;
}

Polynomial &Polynomial::operator+=(const Polynomial &rhs) {
    for (const auto &[m, c] : rhs.terms_) {
        add_term(m, c);
    }
    return *this;
}

Polynomial &Polynomial::operator-=(const Polynomial &rhs) {
    for (const auto &[m, c] : rhs.terms_) {
        add_term(m, -c);
    }
    return *this;
}

Polynomial &Polynomial::operator*=(double s) {
    if (s == 0.0) {
        terms_.clear();
        return *this;
    }
    for (auto &[m, c] : terms_) {
        c *= s;
    }
    return *this;
}

Polynomial operator*(const Polynomial &a, const Polynomial &b) {
    Polynomial out;
    for (const auto &[ma, ca] : a.terms_) {
        for (const auto &[mb, cb] : b.terms_) {
            Monomial m{static_cast<std::uint8_t>(ma[0] + mb[0]), static_cast<std::uint8_t>(ma[1] + mb[1]),
                       static_cast<std::uint8_t>(ma[2] + mb[2])};
            out.add_term(m, ca * cb);
        }
    }
    return out;
}

int PolySystem::max_degree() const {
    int d = 0;
    for (const auto &p : polys) {
        d = std::max(d, p.degree());
    }
    return d;
}

Eigen::Vector3d PolySystem::to_scaled(std::span<const double> root) const {
    Eigen::Vector3d x(root[0], root[1], nvars == 3 ? root[2] : 0.0);
    Eigen::Vector3d s = scaling.scale(x);
    if (nvars == 2) {
        s[2] = 0.0;
    }
    return s;
}

} // namespace planerect
