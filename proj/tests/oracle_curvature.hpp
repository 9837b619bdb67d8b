#pragma once

// Test-only independent curvature oracle: scalar curvature of the full
// 3-metric diag(phi(x)^2, psi(x)^2, psi(x)^2 sin^2 theta) in generic
// coordinates (x, theta, az), with all derivatives taken by central finite
// differences of the metric components. Independent of the warped-product
// formulas used by the library.

#include <array>
#include <cmath>
#include <functional>

namespace rflab_test {

using Metric3 = std::array<std::array<double, 3>, 3>;
using Coord = std::array<double, 3>;  // (x, theta, az)

struct MetricFns {
    std::function<double(double)> phi;
    std::function<double(double)> psi;

    Metric3 g(const Coord& y) const {
        Metric3 m{};
        const double p = phi(y[0]), q = psi(y[0]);
        m[0][0] = p * p;
        m[1][1] = q * q;
        m[2][2] = q * q * std::sin(y[1]) * std::sin(y[1]);
        return m;
    }
};

inline Metric3 inverse_diag(const Metric3& g) {
    Metric3 gi{};
    for (int i = 0; i < 3; ++i) gi[i][i] = 1.0 / g[i][i];
    return gi;
}

using Christoffel = std::array<std::array<std::array<double, 3>, 3>, 3>;

inline Christoffel christoffel(const MetricFns& M, const Coord& y, double h) {
    // dg[k][i][j] = d_k g_ij by central differences (az direction is flat)
    std::array<Metric3, 3> dg{};
    for (int k = 0; k < 2; ++k) {
        Coord yp = y, ym = y;
        yp[k] += h;
        ym[k] -= h;
        const Metric3 gp = M.g(yp), gm = M.g(ym);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) dg[k][i][j] = (gp[i][j] - gm[i][j]) / (2.0 * h);
    }
    const Metric3 gi = inverse_diag(M.g(y));
    Christoffel G{};
    for (int l = 0; l < 3; ++l)
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                double s = 0.0;
                for (int m = 0; m < 3; ++m)
                    s += gi[l][m] * (dg[i][m][j] + dg[j][m][i] - dg[m][i][j]);
                G[l][i][j] = 0.5 * s;
            }
    return G;
}

/// Scalar curvature R = g^{ij} R_ij with
/// R_ij = d_k G^k_ij - d_i G^k_kj + G^k_kl G^l_ij - G^k_il G^l_kj.
inline double scalar_curvature_oracle(const MetricFns& M, double x0, double theta0,
                                      double h = 1e-4) {
    const Coord y{x0, theta0, 0.0};
    auto Gat = [&](const Coord& yy) { return christoffel(M, yy, h); };
    const Christoffel G = Gat(y);
    // derivatives of Christoffels in x and theta
    std::array<Christoffel, 3> dG{};
    for (int k = 0; k < 2; ++k) {
        Coord yp = y, ym = y;
        yp[k] += h;
        ym[k] -= h;
        const Christoffel Gp = Gat(yp), Gm = Gat(ym);
        for (int l = 0; l < 3; ++l)
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j)
                    dG[k][l][i][j] = (Gp[l][i][j] - Gm[l][i][j]) / (2.0 * h);
    }
    Metric3 ric{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double r = 0.0;
            for (int k = 0; k < 3; ++k) r += dG[k][k][i][j];
            for (int k = 0; k < 3; ++k)
                if (i < 2) r -= dG[i][k][k][j];
            for (int k = 0; k < 3; ++k)
                for (int l = 0; l < 3; ++l)
                    r += G[k][k][l] * G[l][i][j] - G[k][i][l] * G[l][k][j];
            ric[i][j] = r;
        }
    const Metric3 gi = inverse_diag(M.g(y));
    double R = 0.0;
    for (int i = 0; i < 3; ++i) R += gi[i][i] * ric[i][i];
    return R;
}

}  // namespace rflab_test
