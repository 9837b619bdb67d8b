#pragma once

// Small numerical toolbox shared by the flow/geometry headers: finite
// differences on uniform and non-uniform grids, monotone cubic (PCHIP)
// interpolation, composite quadrature, and a few smooth shape functions.

#include <algorithm>
#include <array>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rflab {

inline constexpr double kPi = 3.14159265358979323846;

/// Error with a short machine-readable code ("invalid-parameters", ...)
/// plus a human explanation.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& what)
        : std::runtime_error(code + ": " + what), code_(std::move(code)) {}
    const std::string& code() const { return code_; }

private:
    std::string code_;
};

inline double sq(double v) { return v * v; }

/// C2 smootherstep: 6x^5-15x^4+10x^3, clamped outside [0,1].
/// First and second derivatives vanish at both ends.
inline double smootherstep(double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    return x * x * x * (x * (6.0 * x - 15.0) + 10.0);
}

inline std::vector<double> linspace(double a, double b, std::size_t n) {
    assert(n >= 2);
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i)
        v[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
    v.back() = b;
    return v;
}

// ---------------------------------------------------------------------------
// Finite differences
// ---------------------------------------------------------------------------

/// Three ghost samples on each side of a uniform-grid field.
struct GhostPad {
    std::array<double, 3> lo;  // lo[0] is nearest the boundary (index -1)
    std::array<double, 3> hi;  // hi[0] is nearest the boundary (index n)
};

namespace fd_detail {
template <class Pad>
inline double at(std::span<const double> y, const Pad& g, std::ptrdiff_t i) {
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(y.size());
    if (i < 0) return g.lo[static_cast<std::size_t>(-i - 1)];
    if (i >= n) return g.hi[static_cast<std::size_t>(i - n)];
    return y[static_cast<std::size_t>(i)];
}
}  // namespace fd_detail

/// 6th-order centered first derivative on a uniform grid.
inline void deriv1_uniform6(std::span<const double> y, double h, const GhostPad& g,
                            std::span<double> out) {
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(y.size());
    const double c = 1.0 / (60.0 * h);
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        auto a = [&](std::ptrdiff_t k) { return fd_detail::at(y, g, i + k); };
        out[static_cast<std::size_t>(i)] =
            c * (-a(-3) + 9.0 * a(-2) - 45.0 * a(-1) + 45.0 * a(1) - 9.0 * a(2) + a(3));
    }
}

/// 6th-order centered second derivative on a uniform grid.
inline void deriv2_uniform6(std::span<const double> y, double h, const GhostPad& g,
                            std::span<double> out) {
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(y.size());
    const double c = 1.0 / (180.0 * h * h);
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        auto a = [&](std::ptrdiff_t k) { return fd_detail::at(y, g, i + k); };
        out[static_cast<std::size_t>(i)] =
            c * (2.0 * a(-3) - 27.0 * a(-2) + 270.0 * a(-1) - 490.0 * a(0) +
                 270.0 * a(1) - 27.0 * a(2) + 2.0 * a(3));
    }
}

/// First derivative on a non-uniform grid, 3-point stencil (2nd order),
/// one-sided at the ends.
inline std::vector<double> deriv1_nonuniform(std::span<const double> x,
                                             std::span<const double> y) {
    const std::size_t n = x.size();
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (i == 0) {
            const double h = x[1] - x[0];
            const double h2 = x[2] - x[0];
            d[i] = (y[1] - y[0]) / h * (h2 / (h2 - h)) -
                   (y[2] - y[0]) / h2 * (h / (h2 - h));
        } else if (i == n - 1) {
            const double h = x[n - 1] - x[n - 2];
            const double h2 = x[n - 1] - x[n - 3];
            d[i] = (y[n - 1] - y[n - 2]) / h * (h2 / (h2 - h)) -
                   (y[n - 1] - y[n - 3]) / h2 * (h / (h2 - h));
        } else {
            const double hm = x[i] - x[i - 1];
            const double hp = x[i + 1] - x[i];
            d[i] = (hm / (hp * (hp + hm))) * y[i + 1] +
                   ((hp - hm) / (hp * hm)) * y[i] -
                   (hp / (hm * (hp + hm))) * y[i - 1];
        }
    }
    return d;
}

/// Second derivative on a non-uniform grid, 3-point stencil.
inline std::vector<double> deriv2_nonuniform(std::span<const double> x,
                                             std::span<const double> y) {
    const std::size_t n = x.size();
    std::vector<double> d(n);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double hm = x[i] - x[i - 1];
        const double hp = x[i + 1] - x[i];
        d[i] = 2.0 * (hm * y[i + 1] - (hp + hm) * y[i] + hp * y[i - 1]) /
               (hp * hm * (hp + hm));
    }
    if (n >= 3) {
        d[0] = d[1];
        d[n - 1] = d[n - 2];
    }
    return d;
}

// ---------------------------------------------------------------------------
// Quadrature
// ---------------------------------------------------------------------------

/// Composite trapezoid on a non-uniform grid.
inline double trapz(std::span<const double> x, std::span<const double> y) {
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < x.size(); ++i)
        s += 0.5 * (y[i] + y[i + 1]) * (x[i + 1] - x[i]);
    return s;
}

/// Composite Simpson for uniform spacing h over n samples.
/// Falls back to a trapezoid correction for the last interval when the
/// interval count is odd.
inline double simpson_uniform(std::span<const double> y, double h) {
    const std::size_t n = y.size();
    if (n < 2) return 0.0;
    if (n == 2) return 0.5 * h * (y[0] + y[1]);
    std::size_t m = n;
    double tail = 0.0;
    if ((n - 1) % 2 != 0) {
        // Simpson 3/8 on the last three intervals keeps 4th order.
        if (n >= 4) {
            tail = 3.0 * h / 8.0 * (y[n - 4] + 3.0 * y[n - 3] + 3.0 * y[n - 2] + y[n - 1]);
            m = n - 3;
        } else {
            tail = 0.5 * h * (y[n - 2] + y[n - 1]);
            m = n - 1;
        }
    }
    double s = y[0] + y[m - 1];
    for (std::size_t i = 1; i + 1 < m; ++i) s += (i % 2 == 1 ? 4.0 : 2.0) * y[i];
    return s * h / 3.0 + tail;
}

// ---------------------------------------------------------------------------
// Monotone cubic interpolation (Fritsch-Carlson PCHIP)
// ---------------------------------------------------------------------------

class Pchip {
public:
    Pchip(std::vector<double> x, std::vector<double> y)
        : x_(std::move(x)), y_(std::move(y)) {
        const std::size_t n = x_.size();
        if (n < 2 || y_.size() != n) throw Error("invalid-parameters", "pchip needs >= 2 nodes");
        d_.assign(n, 0.0);
        std::vector<double> del(n - 1);
        for (std::size_t i = 0; i + 1 < n; ++i) {
            const double h = x_[i + 1] - x_[i];
            if (!(h > 0.0)) throw Error("invalid-parameters", "pchip abscissae must increase");
            del[i] = (y_[i + 1] - y_[i]) / h;
        }
        if (n == 2) {
            d_[0] = d_[1] = del[0];
            return;
        }
        for (std::size_t i = 1; i + 1 < n; ++i) {
            if (del[i - 1] * del[i] <= 0.0) {
                d_[i] = 0.0;
            } else {
                const double h0 = x_[i] - x_[i - 1];
                const double h1 = x_[i + 1] - x_[i];
                const double w1 = 2.0 * h1 + h0;
                const double w2 = h1 + 2.0 * h0;
                d_[i] = (w1 + w2) / (w1 / del[i - 1] + w2 / del[i]);
            }
        }
        d_[0] = edge_slope(x_[1] - x_[0], x_[2] - x_[1], del[0], del[1]);
        d_[n - 1] = edge_slope(x_[n - 1] - x_[n - 2], x_[n - 2] - x_[n - 3],
                               del[n - 2], del[n - 3]);
    }

    double operator()(double xq) const {
        std::size_t i = locate(xq);
        const double h = x_[i + 1] - x_[i];
        const double t = (xq - x_[i]) / h;
        const double t2 = t * t, t3 = t2 * t;
        const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
        const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
        return h00 * y_[i] + h10 * h * d_[i] + h01 * y_[i + 1] + h11 * h * d_[i + 1];
    }

private:
    static double edge_slope(double h0, double h1, double del0, double del1) {
        double d = ((2.0 * h0 + h1) * del0 - h0 * del1) / (h0 + h1);
        if (d * del0 <= 0.0)
            d = 0.0;
        else if (del0 * del1 < 0.0 && std::abs(d) > 3.0 * std::abs(del0))
            d = 3.0 * del0;
        return d;
    }

    std::size_t locate(double xq) const {
        if (xq <= x_.front()) return 0;
        if (xq >= x_.back()) return x_.size() - 2;
        auto it = std::upper_bound(x_.begin(), x_.end(), xq);
        return static_cast<std::size_t>(it - x_.begin()) - 1;
    }

    std::vector<double> x_, y_, d_;
};

/// Sorted three-tuple helper for curvature eigenvalues.
inline std::array<double, 3> sorted3(double a, double b, double c) {
    std::array<double, 3> v{a, b, c};
    std::sort(v.begin(), v.end());
    return v;
}

}  // namespace rflab
