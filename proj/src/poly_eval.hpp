#pragma once

#include <array>

#include <Eigen/Core>

#include "planerect/polynomial.hpp"

namespace planerect::detail {

// Value and gradient of p at x (first n variables used, rest zero).
template <typename T>
T eval_gradient(const Polynomial &p, const Eigen::Matrix<T, Eigen::Dynamic, 1> &x, T *grad) {
    const int n = static_cast<int>(x.size());
    T pw[3][6];
    for (int v = 0; v < 3; ++v) {
        pw[v][0] = T(1.0);
        const T xv = v < n ? x[v] : T(0.0);
        for (int k = 1; k < 6; ++k) {
            pw[v][k] = pw[v][k - 1] * xv;
        }
    }
    T val(0.0);
    for (int v = 0; v < n; ++v) {
        grad[v] = T(0.0);
    }
    for (const auto &[m, c] : p.terms()) {
        val += c * pw[0][m[0]] * pw[1][m[1]] * pw[2][m[2]];
        for (int v = 0; v < n; ++v) {
            if (m[v] == 0) {
                continue;
            }
            T d = c * static_cast<double>(m[v]);
            for (int w = 0; w < 3; ++w) {
                d *= (w == v) ? pw[w][m[w] - 1] : pw[w][m[w]];
            }
            grad[v] += d;
        }
    }
    return val;
}

} // namespace planerect::detail
