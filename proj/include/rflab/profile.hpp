#pragma once

// Rotationally symmetric metrics g = phi(x)^2 dx^2 + psi(x)^2 g_{S^2} on a
// radial grid, their curvature, volumes, normalization checks and
// arclength remeshing.

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <queue>
#include <vector>

#include "rflab/numerics.hpp"

namespace rflab {

enum class CapKind { SmoothPole, OpenEnd };

inline const char* cap_name(CapKind c) {
    return c == CapKind::SmoothPole ? "smooth-pole" : "open-end";
}

inline constexpr double kPoleTol = 1e-3;  // |psi_s -+ 1| at smooth poles

/// One component of a rotationally symmetric 3-manifold at a fixed time.
/// The grid x is held uniform in [0,1]; phi = ds/dx carries the spacing.
struct RadialProfile {
    std::vector<double> x;    // coordinates, x[0]=0 < ... < x[N]=1
    std::vector<double> phi;  // radial metric coefficient, > 0
    std::vector<double> psi;  // sphere radius, > 0 in the interior
    CapKind cap_lo = CapKind::SmoothPole;
    CapKind cap_hi = CapKind::SmoothPole;
    std::int64_t component_id = 0;

    std::size_t size() const { return x.size(); }
    bool uniform_x() const {
        const double h = x[1] - x[0];
        for (std::size_t i = 0; i + 1 < x.size(); ++i)
            if (std::abs(x[i + 1] - x[i] - h) > 1e-12) return false;
        return true;
    }
};

struct CurvatureField {
    std::vector<double> R;       // scalar curvature
    std::vector<double> K_rad;   // sectional curvature of radial planes
    std::vector<double> K_sph;   // sectional curvature of spherical planes
    std::vector<double> psi_s;   // arclength slope of psi (kept for reuse)
    std::vector<std::array<double, 3>> lambda;  // curvature operator eigenvalues, sorted

    double max_abs_lambda() const {
        double m = 0.0;
        for (const auto& l : lambda)
            m = std::max({m, std::abs(l[0]), std::abs(l[2])});
        return m;
    }
    double max_R() const {
        double m = -std::numeric_limits<double>::infinity();
        for (double r : R) m = std::max(m, r);
        return m;
    }
    double min_R() const {
        double m = std::numeric_limits<double>::infinity();
        for (double r : R) m = std::min(m, r);
        return m;
    }
};

namespace detail {

/// Ghost values for a field about the two ends. Smooth poles reflect psi
/// oddly and phi evenly; open ends reflect both evenly (zero slope).
inline GhostPad ghosts(const std::vector<double>& v, CapKind lo, CapKind hi, bool odd_at_pole) {
    const std::size_t n = v.size();
    GhostPad g{};
    const double slo = (lo == CapKind::SmoothPole && odd_at_pole) ? -1.0 : 1.0;
    const double shi = (hi == CapKind::SmoothPole && odd_at_pole) ? -1.0 : 1.0;
    for (std::size_t k = 0; k < 3; ++k) {
        g.lo[k] = slo * v[k + 1];
        g.hi[k] = shi * v[n - 2 - k];
    }
    return g;
}

}  // namespace detail

/// Arclength positions s_i = int_0^{x_i} phi dx. Trapezoid with the
/// Euler-Maclaurin h^2/12 endpoint-slope correction on uniform grids
/// (4th-order accurate), plain trapezoid otherwise.
inline std::vector<double> arclength(const RadialProfile& p) {
    const std::size_t n = p.size();
    std::vector<double> s(n, 0.0);
    if (p.uniform_x()) {
        const double h = p.x[1] - p.x[0];
        auto g = detail::ghosts(p.phi, p.cap_lo, p.cap_hi, false);
        std::vector<double> dphi(n);
        deriv1_uniform6(p.phi, h, g, dphi);
        for (std::size_t i = 0; i + 1 < n; ++i)
            s[i + 1] = s[i] + 0.5 * h * (p.phi[i] + p.phi[i + 1]) -
                       h * h / 12.0 * (dphi[i + 1] - dphi[i]);
    } else {
        for (std::size_t i = 0; i + 1 < n; ++i)
            s[i + 1] = s[i] + 0.5 * (p.phi[i] + p.phi[i + 1]) * (p.x[i + 1] - p.x[i]);
    }
    return s;
}

inline double total_arclength(const RadialProfile& p) { return arclength(p).back(); }

/// Arclength derivatives of psi (psi_s, psi_ss) and phi_s.
/// Uses 4th-order stencils when x is uniform, 3-point otherwise.
struct ProfileDerivs {
    std::vector<double> psi_s, psi_ss, phi_s;
};

inline ProfileDerivs profile_derivs(const RadialProfile& p) {
    const std::size_t n = p.size();
    ProfileDerivs d;
    d.psi_s.resize(n);
    d.psi_ss.resize(n);
    d.phi_s.resize(n);
    if (p.uniform_x()) {
        const double h = p.x[1] - p.x[0];
        auto gpsi = detail::ghosts(p.psi, p.cap_lo, p.cap_hi, true);
        auto gphi = detail::ghosts(p.phi, p.cap_lo, p.cap_hi, false);
        std::vector<double> psi_x(n), psi_xx(n), phi_x(n);
        deriv1_uniform6(p.psi, h, gpsi, psi_x);
        deriv2_uniform6(p.psi, h, gpsi, psi_xx);
        deriv1_uniform6(p.phi, h, gphi, phi_x);
        for (std::size_t i = 0; i < n; ++i) {
            const double f = p.phi[i];
            d.psi_s[i] = psi_x[i] / f;
            d.psi_ss[i] = (psi_xx[i] - psi_x[i] * phi_x[i] / f) / (f * f);
            d.phi_s[i] = phi_x[i] / f;
        }
    } else {
        auto s = arclength(p);
        d.psi_s = deriv1_nonuniform(s, p.psi);
        d.psi_ss = deriv2_nonuniform(s, p.psi);
        d.phi_s = deriv1_nonuniform(s, p.phi);
    }
    return d;
}

inline void check_profile_invariants(const RadialProfile& p) {
    const std::size_t n = p.size();
    if (n < 8) throw Error("invalid-parameters", "profile needs at least 8 nodes");
    for (std::size_t i = 0; i < n; ++i)
        if (!(p.phi[i] > 0.0)) throw Error("degenerate-profile", "phi must be positive");
    for (std::size_t i = 1; i + 1 < n; ++i)
        if (!(p.psi[i] > 0.0)) throw Error("degenerate-profile", "psi vanished at an interior node");
    if (p.cap_lo == CapKind::SmoothPole && p.psi.front() != 0.0)
        throw Error("degenerate-profile", "psi must vanish at a smooth pole");
    if (p.cap_hi == CapKind::SmoothPole && p.psi.back() != 0.0)
        throw Error("degenerate-profile", "psi must vanish at a smooth pole");
    auto d = profile_derivs(p);
    if (p.cap_lo == CapKind::SmoothPole && std::abs(d.psi_s.front() - 1.0) > kPoleTol)
        throw Error("degenerate-profile", "pole closure |psi_s - 1| violated at lower pole");
    if (p.cap_hi == CapKind::SmoothPole && std::abs(d.psi_s.back() + 1.0) > kPoleTol)
        throw Error("degenerate-profile", "pole closure |psi_s + 1| violated at upper pole");
}

// ---------------------------------------------------------------------------
// Curvature
// ---------------------------------------------------------------------------

/// Warped-product curvature: K_rad = -psi_ss/psi, K_sph = (1-psi_s^2)/psi^2,
/// R = 4 K_rad + 2 K_sph, lambda = sort(2K_rad, 2K_rad, 2K_sph).
/// Smooth-pole values via the symmetric limit K = -psi_sss/psi_s.
inline CurvatureField compute_curvature(const RadialProfile& p) {
    const std::size_t n = p.size();
    for (std::size_t i = 1; i + 1 < n; ++i)
        if (!(p.psi[i] > 0.0)) throw Error("degenerate-profile", "psi = 0 at interior node");
    auto d = profile_derivs(p);
    CurvatureField c;
    c.R.resize(n);
    c.K_rad.resize(n);
    c.K_sph.resize(n);
    c.psi_s = d.psi_s;
    c.lambda.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const bool pole_lo = (i == 0 && p.cap_lo == CapKind::SmoothPole);
        const bool pole_hi = (i == n - 1 && p.cap_hi == CapKind::SmoothPole);
        double kr, ks;
        if (pole_lo || pole_hi) {
            // K_rad = K_sph = -psi_sss/psi_s at a smooth pole; estimate from
            // the two interior neighbours, psi odd about the pole:
            //   psi_sss(0) ~= (psi_2 - 2 psi_1)/h^3 (locally uniform spacing)
            auto s = arclength(p);
            double h1, h2, h3, y1, y2, y3;
            if (pole_lo) {
                h1 = s[1] - s[0], h2 = s[2] - s[0], h3 = s[3] - s[0];
                y1 = p.psi[1], y2 = p.psi[2], y3 = p.psi[3];
            } else {
                h1 = s[n - 1] - s[n - 2], h2 = s[n - 1] - s[n - 3], h3 = s[n - 1] - s[n - 4];
                y1 = p.psi[n - 2], y2 = p.psi[n - 3], y3 = p.psi[n - 4];
            }
            // Fit the odd expansion psi = a s + b s^3 + c s^5 through three
            // neighbours; the pole curvature limit is K = -6b/a.
            auto solve3 = [](double m[3][4]) {
                for (int col = 0; col < 3; ++col) {
                    int piv = col;
                    for (int r = col + 1; r < 3; ++r)
                        if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
                    for (int cc = 0; cc < 4; ++cc) std::swap(m[piv][cc], m[col][cc]);
                    for (int r = 0; r < 3; ++r) {
                        if (r == col) continue;
                        const double f = m[r][col] / m[col][col];
                        for (int cc = col; cc < 4; ++cc) m[r][cc] -= f * m[col][cc];
                    }
                }
            };
            double m[3][4] = {{h1, h1 * h1 * h1, h1 * h1 * h1 * h1 * h1, y1},
                              {h2, h2 * h2 * h2, h2 * h2 * h2 * h2 * h2, y2},
                              {h3, h3 * h3 * h3, h3 * h3 * h3 * h3 * h3, y3}};
            solve3(m);
            const double a = m[0][3] / m[0][0];
            const double b = m[1][3] / m[1][1];
            kr = -6.0 * b / a;
            ks = kr;
        } else if (i == 0 || i == n - 1) {
            // open end: one-sided values from the stencil derivatives
            kr = -d.psi_ss[i] / p.psi[i];
            ks = (1.0 - sq(d.psi_s[i])) / sq(p.psi[i]);
        } else {
            kr = -d.psi_ss[i] / p.psi[i];
            ks = (1.0 - sq(d.psi_s[i])) / sq(p.psi[i]);
        }
        c.K_rad[i] = kr;
        c.K_sph[i] = ks;
        c.R[i] = 4.0 * kr + 2.0 * ks;
        c.lambda[i] = sorted3(2.0 * kr, 2.0 * kr, 2.0 * ks);
    }
    return c;
}

// ---------------------------------------------------------------------------
// Volumes
// ---------------------------------------------------------------------------

/// vol = 4 pi int psi^2 phi dx. Composite Simpson on uniform grids.
inline double slice_volume(const RadialProfile& p) {
    const std::size_t n = p.size();
    std::vector<double> f(n);
    for (std::size_t i = 0; i < n; ++i) f[i] = sq(p.psi[i]) * p.phi[i];
    double v;
    if (p.uniform_x())
        v = simpson_uniform(f, p.x[1] - p.x[0]);
    else
        v = trapz(p.x, f);
    return 4.0 * kPi * v;
}

/// Geodesic ball volume about the orbit of node `center`, by Dijkstra on the
/// totally geodesic surface of revolution ds^2 + psi^2 dtheta^2
/// (theta = polar fiber angle in [0, pi]), then integrating
/// dvol = 2 pi psi^2 sin(theta) dtheta ds over {dist < radius}.
inline double ball_volume(const RadialProfile& p, std::size_t center, double radius,
                          std::size_t n_theta = 48) {
    const std::size_t n = p.size();
    auto s = arclength(p);
    const double dtheta = kPi / static_cast<double>(n_theta - 1);
    auto id = [&](std::size_t i, std::size_t k) { return i * n_theta + k; };
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> dist(n * n_theta, inf);
    using QE = std::pair<double, std::size_t>;
    std::priority_queue<QE, std::vector<QE>, std::greater<>> q;
    dist[id(center, 0)] = 0.0;
    q.push({0.0, id(center, 0)});
    auto psi_mid = [&](std::size_t i, std::size_t j) {
        return 0.5 * (p.psi[i] + p.psi[j]);
    };
    while (!q.empty()) {
        auto [dv, v] = q.top();
        q.pop();
        if (dv > dist[v] || dv > radius) continue;
        const std::size_t i = v / n_theta, k = v % n_theta;
        auto relax = [&](std::size_t i2, std::size_t k2) {
            const double ds = std::abs(s[i2] - s[i]);
            const double darc = psi_mid(i, i2) * dtheta * (k2 == k ? 0.0 : 1.0);
            const double w = std::sqrt(sq(ds) + sq(darc));
            const std::size_t u = id(i2, k2);
            if (dv + w < dist[u]) {
                dist[u] = dv + w;
                q.push({dist[u], u});
            }
        };
        if (i > 0) relax(i - 1, k);
        if (i + 1 < n) relax(i + 1, k);
        if (k > 0) relax(i, k - 1);
        if (k + 1 < n_theta) relax(i, k + 1);
        if (i > 0 && k > 0) relax(i - 1, k - 1);
        if (i > 0 && k + 1 < n_theta) relax(i - 1, k + 1);
        if (i + 1 < n && k > 0) relax(i + 1, k - 1);
        if (i + 1 < n && k + 1 < n_theta) relax(i + 1, k + 1);
    }
    // integrate over the sublevel set
    double vol = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double ws = (i == 0   ? 0.5 * (s[1] - s[0])
                           : i == n - 1 ? 0.5 * (s[n - 1] - s[n - 2])
                                        : 0.5 * (s[i + 1] - s[i - 1]));
        for (std::size_t k = 0; k < n_theta; ++k) {
            if (dist[id(i, k)] >= radius) continue;
            const double wt = (k == 0 || k == n_theta - 1) ? 0.5 * dtheta : dtheta;
            vol += 2.0 * kPi * sq(p.psi[i]) * std::sin(k * dtheta) * wt * ws;
        }
    }
    return vol;
}

struct NormalizationReport {
    bool is_normalized = false;
    double worst_eigenvalue = 0.0;  // max |lambda_i| over all nodes
    double worst_ball_ratio = 0.0;  // min vol(B(m,1)) / ((1/2) vol B_eucl)
};

/// Normalized initial condition check: |lambda| <= 1 and unit balls at least
/// half the Euclidean unit-ball volume.
inline NormalizationReport check_normalized(const RadialProfile& p, double tol = 1e-6,
                                            std::size_t n_centers = 17) {
    NormalizationReport rep;
    auto c = compute_curvature(p);
    rep.worst_eigenvalue = c.max_abs_lambda();
    const double half_ball = 0.5 * (4.0 / 3.0) * kPi;
    rep.worst_ball_ratio = std::numeric_limits<double>::infinity();
    const std::size_t n = p.size();
    for (std::size_t j = 0; j < n_centers; ++j) {
        const std::size_t i = (n - 1) * j / (n_centers - 1);
        const double v = ball_volume(p, i, 1.0);
        rep.worst_ball_ratio = std::min(rep.worst_ball_ratio, v / half_ball);
    }
    rep.is_normalized = rep.worst_eigenvalue <= 1.0 + tol && rep.worst_ball_ratio >= 1.0 - tol;
    return rep;
}

/// Worst margin of the scalar lower bound R >= -3/(1+2t) over the nodes.
inline double scalar_lower_bound_margin(const CurvatureField& c, double t) {
    double m = std::numeric_limits<double>::infinity();
    for (double r : c.R) m = std::min(m, r + 3.0 / (1.0 + 2.0 * t));
    return m;
}

/// Worst Hamilton-Ivey margin R + lambda1 (log(-lambda1) + log(1+t) - 3)
/// over the nodes where the pinching condition is active
/// (lambda1 <= -1/(1+t)); +inf when vacuous. Also counts active nodes.
inline std::pair<double, std::size_t> hamilton_ivey_margin(const CurvatureField& c, double t) {
    double m = std::numeric_limits<double>::infinity();
    std::size_t active = 0;
    for (std::size_t i = 0; i < c.R.size(); ++i) {
        const double l1 = c.lambda[i][0];
        if (l1 > -1.0 / (1.0 + t)) continue;
        ++active;
        const double bound = -l1 * (std::log(-l1) + std::log1p(t) - 3.0);
        m = std::min(m, c.R[i] - bound);
    }
    return {m, active};
}

/// g -> c g: lengths scale by sqrt(c), curvature by 1/c.
inline RadialProfile rescale_metric(const RadialProfile& p, double c) {
    RadialProfile q = p;
    const double f = std::sqrt(c);
    for (auto& v : q.phi) v *= f;
    for (auto& v : q.psi) v *= f;
    return q;
}

// ---------------------------------------------------------------------------
// Initial data factory
// ---------------------------------------------------------------------------

struct DumbbellParams {
    double bump_radius;
    double neck_radius;
    double neck_width;
};

/// C2 quintic Hermite on [0,1] hitting (f0,d0,dd0) at 0 and (f1,d1,dd1) at 1.
inline double quintic_hermite(double t, double f0, double d0, double dd0,
                              double f1, double d1, double dd1) {
    const double t2 = t * t, t3 = t2 * t, t4 = t3 * t, t5 = t4 * t;
    const double h0 = 1.0 - 10 * t3 + 15 * t4 - 6 * t5;
    const double h1 = t - 6 * t3 + 8 * t4 - 3 * t5;
    const double h2 = 0.5 * t2 - 1.5 * t3 + 1.5 * t4 - 0.5 * t5;
    const double h3 = 10 * t3 - 15 * t4 + 6 * t5;
    const double h4 = -4 * t3 + 7 * t4 - 3 * t5;
    const double h5 = 0.5 * t3 - t4 + 0.5 * t5;
    return f0 * h0 + d0 * h1 + dd0 * h2 + f1 * h3 + d1 * h4 + dd1 * h5;
}

/// Documented dumbbell profile, piecewise in arclength u with B = bump_radius,
/// rn = neck_radius, w = neck_width, theta* = 2 pi / 3:
///   bump:        psi = B sin(u/B)                     for u in [0, B theta*]
///   transition:  C2 quintic Hermite from
///                (B sin theta*, cos theta*, -sin(theta*)/B) down to (rn, 0, 0)
///                over length Lt = 2.6 (B sin theta* - rn)
///   waist:       psi = rn (exact cylinder) over length w
/// mirrored about the waist center. The waist shrinks like a round cylinder
/// from t = 0, so thin necks pinch instead of relaxing.
inline RadialProfile build_dumbbell(const DumbbellParams& d, std::size_t n_nodes) {
    const double B = d.bump_radius;
    const double rn = d.neck_radius;
    const double w = d.neck_width;
    const double theta = 2.0 * kPi / 3.0;
    const double uB = B * theta;
    const double psi0 = B * std::sin(theta);
    const double m0 = std::cos(theta);
    const double c0 = -std::sin(theta) / B;
    const double Lt = 2.6 * (psi0 - rn);
    const double L = 2.0 * uB + 2.0 * Lt + w;
    auto shape = [&](double u) -> double {
        if (u > 0.5 * L) u = L - u;  // symmetric about the waist center
        if (u <= uB) return B * std::sin(u / B);
        if (u <= uB + Lt) {
            const double t = (u - uB) / Lt;
            return quintic_hermite(t, psi0, m0 * Lt, c0 * Lt * Lt, rn, 0.0, 0.0);
        }
        return rn;
    };
    RadialProfile p;
    p.x = linspace(0.0, 1.0, n_nodes);
    p.phi.assign(n_nodes, L);
    p.psi.resize(n_nodes);
    for (std::size_t i = 0; i < n_nodes; ++i) p.psi[i] = shape(L * p.x[i]);
    p.psi.front() = 0.0;
    p.psi.back() = 0.0;
    p.cap_lo = p.cap_hi = CapKind::SmoothPole;
    return p;
}

/// Test/harness helper: three bumps joined by two cylindrical waists of
/// slightly different radii, built from the same pieces as build_dumbbell.
inline RadialProfile build_double_dumbbell(double B, double rn1, double rn2, double w,
                                           std::size_t n_nodes) {
    const double theta = 2.0 * kPi / 3.0;
    const double uB = B * theta;
    const double psi0 = B * std::sin(theta);
    const double m0 = std::cos(theta);
    const double c0 = -std::sin(theta) / B;
    auto lt = [&](double rn) { return 2.6 * (psi0 - rn); };
    // segment list: lengths and evaluators in local coordinates
    struct Seg {
        double len;
        std::function<double(double)> f;
    };
    std::vector<Seg> segs;
    auto add_bump_up = [&]() {
        segs.push_back({uB, [&, B](double u) { return B * std::sin(u / B); }});
    };
    auto add_trans_down = [&](double rn) {
        const double Lt = lt(rn);
        segs.push_back({Lt, [=](double u) {
                            return quintic_hermite(u / Lt, psi0, m0 * Lt, c0 * Lt * Lt, rn, 0, 0);
                        }});
    };
    auto add_waist = [&](double rn) {
        segs.push_back({w, [=](double) { return rn; }});
    };
    auto add_trans_up = [&](double rn) {
        const double Lt = lt(rn);
        segs.push_back({Lt, [=](double u) {
                            return quintic_hermite(1.0 - u / Lt, psi0, m0 * Lt, c0 * Lt * Lt, rn, 0, 0);
                        }});
    };
    auto add_middle_bump = [&]() {
        // arc of the sphere between theta* and pi - theta*, passing the equator
        const double len = B * (kPi - 2.0 * (kPi - theta));
        segs.push_back({len, [=](double u) { return B * std::sin(kPi - theta + u / B); }});
    };
    add_bump_up();
    add_trans_down(rn1);
    add_waist(rn1);
    add_trans_up(rn1);
    add_middle_bump();
    add_trans_down(rn2);
    add_waist(rn2);
    add_trans_up(rn2);
    segs.push_back({uB, [&, B](double u) { return B * std::sin(theta - u / B); }});
    double L = 0.0;
    for (auto& s : segs) L += s.len;
    RadialProfile p;
    p.x = linspace(0.0, 1.0, n_nodes);
    p.phi.assign(n_nodes, L);
    p.psi.resize(n_nodes);
    for (std::size_t i = 0; i < n_nodes; ++i) {
        double u = L * p.x[i];
        double v = 0.0;
        for (auto& s : segs) {
            if (u <= s.len || &s == &segs.back()) {
                v = s.f(std::min(u, s.len));
                break;
            }
            u -= s.len;
        }
        p.psi[i] = v;
    }
    p.psi.front() = 0.0;
    p.psi.back() = 0.0;
    p.cap_lo = p.cap_hi = CapKind::SmoothPole;
    return p;
}

inline RadialProfile build_round_sphere(double r0, std::size_t n_nodes) {
    RadialProfile p;
    p.x = linspace(0.0, 1.0, n_nodes);
    const double S = kPi * r0;
    p.phi.assign(n_nodes, S);
    p.psi.resize(n_nodes);
    for (std::size_t i = 0; i < n_nodes; ++i) p.psi[i] = r0 * std::sin(kPi * p.x[i]);
    p.psi.front() = 0.0;
    p.psi.back() = 0.0;
    p.cap_lo = p.cap_hi = CapKind::SmoothPole;
    return p;
}

inline RadialProfile build_cylinder_segment(double radius, double length, std::size_t n_nodes) {
    RadialProfile p;
    p.x = linspace(0.0, 1.0, n_nodes);
    p.phi.assign(n_nodes, length);
    p.psi.assign(n_nodes, radius);
    p.cap_lo = p.cap_hi = CapKind::OpenEnd;
    return p;
}

struct BuildKind {
    enum Tag { RoundSphere, Dumbbell, CylinderSegment } tag;
    double r0 = 0.0;             // round sphere
    DumbbellParams dumbbell{};   // dumbbell
    double radius = 0.0, length = 0.0;  // cylinder
};

inline RadialProfile build_profile(const BuildKind& kind, std::size_t n_nodes) {
    if (n_nodes < 64) throw Error("invalid-parameters", "grid too coarse (need >= 64 nodes)");
    RadialProfile p;
    switch (kind.tag) {
        case BuildKind::RoundSphere:
            if (!(kind.r0 > 0.0)) throw Error("invalid-parameters", "radius must be positive");
            p = build_round_sphere(kind.r0, n_nodes);
            break;
        case BuildKind::Dumbbell: {
            const auto& d = kind.dumbbell;
            if (!(d.bump_radius > 0.0) || !(d.neck_radius > 0.0) || !(d.neck_width > 0.0))
                throw Error("invalid-parameters", "dumbbell radii/width must be positive");
            if (!(d.neck_radius < d.bump_radius))
                throw Error("invalid-parameters", "neck_radius must be below bump_radius");
            p = build_dumbbell(d, n_nodes);
            break;
        }
        case BuildKind::CylinderSegment:
            if (!(kind.radius > 0.0) || !(kind.length > 0.0))
                throw Error("invalid-parameters", "cylinder radius/length must be positive");
            p = build_cylinder_segment(kind.radius, kind.length, n_nodes);
            break;
    }
    check_profile_invariants(p);
    return p;
}

// ---------------------------------------------------------------------------
// Remeshing
// ---------------------------------------------------------------------------

namespace detail {

/// Interpolant used by remeshing: 6-point Lagrange on data extended past the
/// ends by reflection (psi odd about smooth poles, even at open ends), which
/// keeps full accuracy right up to the poles. Where the high-order value
/// overshoots the local data range (steep necks) it falls back to the
/// monotone cubic, so resampled profiles never invent new extrema.
class ResampleInterp {
public:
    ResampleInterp(const std::vector<double>& s, const std::vector<double>& y,
                   CapKind lo, CapKind hi)
        : pchip_(s, y) {
        const std::size_t n = s.size();
        const int g = 3;
        se_.reserve(n + 2 * g);
        ye_.reserve(n + 2 * g);
        for (int k = g; k >= 1; --k) {
            se_.push_back(2.0 * s.front() - s[static_cast<std::size_t>(k)]);
            const double v = y[static_cast<std::size_t>(k)];
            ye_.push_back(lo == CapKind::SmoothPole ? 2.0 * y.front() - v : v);
        }
        se_.insert(se_.end(), s.begin(), s.end());
        ye_.insert(ye_.end(), y.begin(), y.end());
        for (int k = 1; k <= g; ++k) {
            se_.push_back(2.0 * s.back() - s[n - 1 - static_cast<std::size_t>(k)]);
            const double v = y[n - 1 - static_cast<std::size_t>(k)];
            ye_.push_back(hi == CapKind::SmoothPole ? 2.0 * y.back() - v : v);
        }
        offset_ = g;
        n_ = n;
    }

    double operator()(double sq) const {
        // locate in the original (unextended) range
        auto it = std::upper_bound(se_.begin() + offset_, se_.begin() + offset_ + n_, sq);
        std::size_t i = static_cast<std::size_t>(it - se_.begin());
        i = std::min(std::max<std::size_t>(i, 1), se_.size() - 1);
        // 6-point stencil centred on the bracketing interval
        std::size_t lo = (i >= 3) ? i - 3 : 0;
        lo = std::min(lo, se_.size() - 6);
        double v = 0.0;
        for (std::size_t a = lo; a < lo + 6; ++a) {
            double w = 1.0;
            for (std::size_t b = lo; b < lo + 6; ++b)
                if (b != a) w *= (sq - se_[b]) / (se_[a] - se_[b]);
            v += w * ye_[a];
        }
        // overshoot guard against the bracketing original values
        const std::size_t j0 = i - 1, j1 = i;
        const double ylo = std::min(ye_[j0], ye_[j1]);
        const double yhi = std::max(ye_[j0], ye_[j1]);
        const double pad = 0.05 * (yhi - ylo) + 1e-14 * (std::abs(ylo) + std::abs(yhi));
        if (v < ylo - pad || v > yhi + pad) return pchip_(sq);
        return v;
    }

private:
    std::vector<double> se_, ye_;
    std::size_t offset_ = 0, n_ = 0;
    Pchip pchip_;
};

/// Resample the profile so node arclengths land (approximately) on s_new.
/// phi is rebuilt from local differences of the target map and rescaled to
/// preserve the total arclength exactly; psi is then sampled at the node
/// arclengths the stored convention actually reports, so the discrete
/// geometry (s_i, psi_i) lies exactly on the interpolated curve.
inline RadialProfile resample_to(const RadialProfile& p, const std::vector<double>& s_new) {
    const std::size_t m = s_new.size();
    auto s = arclength(p);
    ResampleInterp interp(s, p.psi, p.cap_lo, p.cap_hi);
    RadialProfile q;
    q.x = linspace(0.0, 1.0, m);
    q.cap_lo = p.cap_lo;
    q.cap_hi = p.cap_hi;
    q.component_id = p.component_id;
    const double h = 1.0 / static_cast<double>(m - 1);
    q.phi.resize(m);
    bool uniform_target = true;
    const double d0 = s_new[1] - s_new[0];
    for (std::size_t j = 0; j + 1 < m; ++j)
        if (std::abs(s_new[j + 1] - s_new[j] - d0) > 1e-12 * s.back()) {
            uniform_target = false;
            break;
        }
    if (uniform_target) {
        q.phi.assign(m, s.back());
    } else {
        // the monitor-inverted map is piecewise linear; smooth its kinks so
        // phi (and hence the stored arclength spacing) varies gently
        std::vector<double> sm = s_new;
        for (int pass = 0; pass < 4; ++pass) {
            std::vector<double> t2 = sm;
            for (std::size_t j = 1; j + 1 < m; ++j)
                sm[j] = 0.25 * (t2[j - 1] + 2.0 * t2[j] + t2[j + 1]);
        }
        for (std::size_t j = 0; j < m; ++j) {
            if (j == 0)
                q.phi[j] = (sm[1] - sm[0]) / h;
            else if (j == m - 1)
                q.phi[j] = (sm[m - 1] - sm[m - 2]) / h;
            else
                q.phi[j] = (sm[j + 1] - sm[j - 1]) / (2.0 * h);
        }
    }
    // exact total-arclength preservation under the stored convention
    q.psi.assign(m, 0.0);
    const double ratio = s.back() / total_arclength(q);
    for (auto& v : q.phi) v *= ratio;
    // sample psi at the stored node arclengths
    auto sa = arclength(q);
    for (std::size_t j = 0; j < m; ++j)
        q.psi[j] = interp(std::min(std::max(sa[j], 0.0), s.back()));
    if (p.cap_lo == CapKind::SmoothPole) q.psi.front() = 0.0;
    if (p.cap_hi == CapKind::SmoothPole) q.psi.back() = 0.0;
    return q;
}

}  // namespace detail

/// Resample to (approximately) uniform arclength spacing. Keeps the node
/// count implied by target_spacing, preserves total arclength to 1e-8 rel.
inline RadialProfile remesh_arclength(const RadialProfile& p, double target_spacing) {
    if (!(target_spacing > 0.0)) throw Error("invalid-parameters", "target_spacing must be positive");
    const double S = total_arclength(p);
    std::size_t m = static_cast<std::size_t>(std::llround(S / target_spacing)) + 1;
    m = std::max<std::size_t>(m, 8);
    auto s = arclength(p);
    auto s_new = linspace(0.0, S, m);
    // idempotence: already uniform at this spacing
    if (m == p.size()) {
        double worst = 0.0;
        for (std::size_t i = 0; i < m; ++i) worst = std::max(worst, std::abs(s_new[i] - s[i]));
        if (worst < 1e-12 * S) return p;
    }
    return detail::resample_to(p, s_new);
}

/// Curvature-graded remesh: equidistributes a monitor with local target
/// spacing clamp(scale/resolve_factor, ., spacing_max), where scale is the
/// curvature length (max|lambda|)^{-1/2}. Node count is preserved unless
/// n_out is given; when the node budget is tight all spacings stretch
/// proportionally.
inline RadialProfile remesh_monitor(const RadialProfile& p, const CurvatureField& c,
                                    double resolve_factor = 4.0, double grading = 0.25,
                                    std::size_t n_out = 0) {
    const std::size_t n = p.size();
    const std::size_t m_out = n_out == 0 ? n : n_out;
    auto s = arclength(p);
    const double S = s.back();
    std::vector<double> ell(n);
    const double ell_max = S / 64.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double lam = std::max(std::abs(c.lambda[i][0]), std::abs(c.lambda[i][2]));
        const double scale = 1.0 / std::sqrt(std::max(lam, 1e-12));
        ell[i] = std::min(scale / resolve_factor, ell_max);
    }
    // limit grading so log(ell) varies slowly along the grid
    for (std::size_t i = 1; i < n; ++i)
        ell[i] = std::min(ell[i], ell[i - 1] * (1.0 + grading));
    for (std::size_t i = n - 1; i-- > 0;)
        ell[i] = std::min(ell[i], ell[i + 1] * (1.0 + grading));
    // cumulative monitor integral
    std::vector<double> m(n, 0.0);
    for (std::size_t i = 0; i + 1 < n; ++i)
        m[i + 1] = m[i] + (s[i + 1] - s[i]) * 0.5 * (1.0 / ell[i] + 1.0 / ell[i + 1]);
    // invert: s_new at uniform monitor increments
    std::vector<double> s_new(m_out);
    const double step = m.back() / static_cast<double>(m_out - 1);
    std::size_t k = 0;
    s_new[0] = 0.0;
    for (std::size_t j = 1; j + 1 < m_out; ++j) {
        const double target = step * static_cast<double>(j);
        while (k + 2 < n && m[k + 1] < target) ++k;
        const double f = (target - m[k]) / std::max(m[k + 1] - m[k], 1e-300);
        s_new[j] = s[k] + f * (s[k + 1] - s[k]);
    }
    s_new[m_out - 1] = S;
    // locally uniform boundary layer at smooth poles: strong grading next to
    // a pole degrades the high-order stencils and the closure filter there.
    // The layer spacing uses the unsqueezed monitor target, so pole regions
    // stay resolved even when the global node budget is tight.
    const std::size_t K = std::min<std::size_t>(10, m_out / 4);
    if (p.cap_hi == CapKind::SmoothPole) {
        const double d_tip = std::min(s_new[m_out - 1] - s_new[m_out - 2], ell[n - 1]);
        for (std::size_t kk = 1; kk <= K; ++kk)
            s_new[m_out - 1 - kk] =
                std::max(s_new[m_out - 1 - kk], S - static_cast<double>(kk) * d_tip);
    }
    if (p.cap_lo == CapKind::SmoothPole) {
        const double d_tip = std::min(s_new[1] - s_new[0], ell[0]);
        for (std::size_t kk = 1; kk <= K; ++kk)
            s_new[kk] = std::min(s_new[kk], static_cast<double>(kk) * d_tip);
    }
    return detail::resample_to(p, s_new);
}

/// True when the current grid violates the monitor's target spacing by more
/// than `ratio` anywhere.
inline bool needs_remesh(const RadialProfile& p, const CurvatureField& c,
                         double resolve_factor = 4.0, double ratio = 1.4) {
    auto s = arclength(p);
    const double S = s.back();
    const double ell_max = S / 64.0;
    for (std::size_t i = 0; i + 1 < p.size(); ++i) {
        const double lam = std::max({std::abs(c.lambda[i][0]), std::abs(c.lambda[i][2]),
                                     std::abs(c.lambda[i + 1][0]), std::abs(c.lambda[i + 1][2])});
        const double scale = 1.0 / std::sqrt(std::max(lam, 1e-12));
        const double ell = std::min(scale / resolve_factor, ell_max);
        if (s[i + 1] - s[i] > ratio * ell) return true;
    }
    return false;
}

}  // namespace rflab
