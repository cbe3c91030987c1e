#pragma once

#include <cmath>
#include <random>

#include "kslab/grid.hpp"

namespace kslab::test {

inline const Point kO{0.0, 0.0, 0.0};

inline double sq(const Point& x, int n) { return norm(x, n) * norm(x, n); }

inline ScalarField random_field(const Grid& g, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> U(lo, hi);
    std::vector<double> v(g.size());
    for (auto& x : v) x = U(rng);
    return ScalarField(g, std::move(v));
}

}  // namespace kslab::test

#include <array>
#include <utility>

#include "kslab/operators.hpp"

namespace kslab::test {

using Mat3 = std::array<std::array<double, 3>, 3>;

// Cyclic Jacobi with accumulated rotations: columns of V are eigenvectors of the n x n block of a.
inline std::pair<std::array<double, 3>, Mat3> eigen_decompose(Mat3 a, int n) {
    Mat3 V{};
    for (int i = 0; i < 3; ++i) V[i][i] = 1.0;
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
        if (off < 1e-30) break;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) {
                if (a[p][q] == 0.0) continue;
                const double th = 0.5 * std::atan2(2.0 * a[p][q], a[q][q] - a[p][p]);
                const double c = std::cos(th), s = std::sin(th);
                for (int k = 0; k < n; ++k) {
                    const double akp = a[k][p], akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = a[p][k], aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for (int k = 0; k < n; ++k) {
                    const double vkp = V[k][p], vkq = V[k][q];
                    V[k][p] = c * vkp - s * vkq;
                    V[k][q] = s * vkp + c * vkq;
                }
            }
    }
    return {{a[0][0], a[1][1], a[2][2]}, V};
}

inline Mat3 to_mat(const SymMatrix& m) {
    Mat3 a{};
    for (int i = 0; i < m.dim(); ++i)
        for (int j = 0; j < m.dim(); ++j) a[i][j] = m(i, j);
    return a;
}

// A = Q diag(d) Q^T contracted with M.
inline double contract_spectral(const Mat3& Q, const std::array<double, 3>& d, const SymMatrix& M) {
    const int n = M.dim();
    double s = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double aij = 0.0;
            for (int k = 0; k < n; ++k) aij += Q[i][k] * d[k] * Q[j][k];
            s += aij * M(i, j);
        }
    return s;
}

// Random orthogonal matrix from Gram-Schmidt on Gaussian columns.
inline Mat3 random_orthogonal(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> N(0.0, 1.0);
    Mat3 Q{};
    for (int c = 0; c < n; ++c) {
        for (int r = 0; r < n; ++r) Q[r][c] = N(rng);
        for (int k = 0; k < c; ++k) {
            double dot = 0.0;
            for (int r = 0; r < n; ++r) dot += Q[r][c] * Q[r][k];
            for (int r = 0; r < n; ++r) Q[r][c] -= dot * Q[r][k];
        }
        double nn = 0.0;
        for (int r = 0; r < n; ++r) nn += Q[r][c] * Q[r][c];
        for (int r = 0; r < n; ++r) Q[r][c] /= std::sqrt(nn);
    }
    return Q;
}

inline SymMatrix random_sym(int n, std::mt19937_64& rng, double scale = 1.0) {
    std::uniform_real_distribution<double> U(-scale, scale);
    SymMatrix m(n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) m.set(i, j, U(rng));
    return m;
}

}  // namespace kslab::test
