#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace planerect {

// Exponents on (l1, l2, lambda). Fixed-lambda systems leave the last one zero.
using Monomial = std::array<std::uint8_t, 3>;

inline int total_degree(const Monomial &m) { return m[0] + m[1] + m[2]; }

// Sparse real polynomial in up to three variables.
class Polynomial {
  public:
    Polynomial() = default;
    explicit Polynomial(double constant);

    static Polynomial variable(int index);
    // c0 + c[0] v0 + c[1] v1 + c[2] v2
    static Polynomial affine(double c0, const std::array<double, 3> &c);

    const std::map<Monomial, double> &terms() const { return terms_; }
    void add_term(const Monomial &m, double c);

    int degree() const;
    bool empty() const { return terms_.empty(); }
    double max_abs_coefficient() const;

    double operator()(std::span<const double> x) const;
    double operator()(const Eigen::Vector3d &x) const { return (*this)(std::span<const double>(x.data(), 3)); }

    Polynomial &operator+=(const Polynomial &rhs);
    Polynomial &operator-=(const Polynomial &rhs);
    Polynomial &operator*=(double s);

    friend Polynomial operator+(Polynomial a, const Polynomial &b) { return a += b; }
    friend Polynomial operator-(Polynomial a, const Polynomial &b) { return a -= b; }
    friend Polynomial operator*(Polynomial a, double s) { return a *= s; }
    friend Polynomial operator*(double s, Polynomial a) { return a *= s; }
    friend Polynomial operator*(const Polynomial &a, const Polynomial &b);

  private:
    std::map<Monomial, double> terms_;
};

// Multipliers applied to image coordinates and squared radii before the
// coefficients are formed. In the scaled system the unknowns are
// l1/coordScale, l2/coordScale and lambda/radiusScale.
struct VariableScaling {
    double coordScale = 1.0;
    double radiusScale = 1.0;

    // Unscaled (l1, l2, lambda) -> scaled.
    Eigen::Vector3d scale(const Eigen::Vector3d &x) const {
        return {x[0] / coordScale, x[1] / coordScale, x[2] / radiusScale};
    }
    Eigen::Vector3d unscale(const Eigen::Vector3d &x) const {
        return {x[0] * coordScale, x[1] * coordScale, x[2] * radiusScale};
    }
};

struct PolySystem {
    std::vector<Polynomial> polys;
    // 3 for (l1, l2, lambda); 2 for (l1, l2) with lambda fixed.
    int nvars = 3;
    VariableScaling scaling;
    // Indices of the equations tracked by the homotopy; the rest only filter.
    std::vector<int> square;
    // Value substituted for lambda in fixed-lambda systems (unscaled).
    double fixedLambda = 0.0;

    int max_degree() const;
    // Unscaled root of length nvars -> point in the scaled variables, padded to 3.
    Eigen::Vector3d to_scaled(std::span<const double> root) const;
};

} // namespace planerect
