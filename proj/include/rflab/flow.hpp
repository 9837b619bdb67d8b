#pragma once

// Ricci flow d/dt g = -2 Ric(g) for radial profiles. Explicit RK2 (Heun)
// with a curvature-based CFL, a diffusion stability limit, and
// curvature-graded remeshing on demand.

#include <functional>

#include "rflab/profile.hpp"
#include "rflab/schedule.hpp"

namespace rflab {

struct StepControl {
    double cfl = 0.1;             // dt <= cfl / max|lambda|
    double diff_safety = 0.2;     // dt <= diff_safety * min(ds)^2 (RK2 limit ~0.33)
    double min_dt = 1e-25;        // below this a step is a hard failure
    double remesh_ratio = 1.4;    // remesh when spacing exceeds target by this
    double extinction_tol = 1e-4; // max psi below this means the component is gone
    double lte_tol = 0.05;        // local truncation estimate gate
    double resolve_factor = 4.0;  // cells per curvature length
    double surgery_overshoot = 16.0;  // trigger at max R >= overshoot * h^-2
};

struct FlowState {
    RadialProfile profile;
    double t = 0.0;
    long step_count = 0;
};

struct StopReason {
    enum Kind { SurgeryDue, DiscardDue, Extinct, HorizonReached } kind;
    double trigger_value = 0.0;  // curvature (or max psi for Extinct)
};

inline const char* stop_name(StopReason::Kind k) {
    switch (k) {
        case StopReason::SurgeryDue: return "surgery-due";
        case StopReason::DiscardDue: return "discard-due";
        case StopReason::Extinct: return "extinct";
        case StopReason::HorizonReached: return "horizon-reached";
    }
    return "?";
}

struct RicciRhs {
    std::vector<double> dphi, dpsi;
};

/// In the arclength gauge the flow reduces to
///   d psi/dt = psi_ss - (1 - psi_s^2)/psi = -(K_rad + K_sph) psi
///   d phi/dt = 2 phi psi_ss / psi        = -2 K_rad phi
/// The phi equation transports pure gauge, and integrating raw K_rad there
/// amplifies near-pole grid noise (K_rad divides by small psi) into a
/// checkerboard. We instead move the mesh with a smoothed K~ and give psi
/// the exact compensating advection w psi_s, w = 2 int (K_rad - K~) ds.
/// This is exact for any K~ (the geometry psi(s) is unchanged) and stable.
inline RicciRhs ricci_rhs(const RadialProfile& p, const CurvatureField& c) {
    const std::size_t n = p.size();
    // smoothed gauge curvature: [1,2,1]/4 kernel, three passes, even ends
    std::vector<double> ks = c.K_rad, tmp(n);
    for (int pass = 0; pass < 3; ++pass) {
        for (std::size_t i = 0; i < n; ++i) {
            const double lo = ks[i > 0 ? i - 1 : 1];
            const double hi = ks[i + 1 < n ? i + 1 : n - 2];
            tmp[i] = 0.25 * (lo + 2.0 * ks[i] + hi);
        }
        ks.swap(tmp);
    }
    auto s = arclength(p);
    std::vector<double> w(n, 0.0);
    for (std::size_t i = 0; i + 1 < n; ++i)
        w[i + 1] = w[i] + (s[i + 1] - s[i]) *
                              ((c.K_rad[i] - ks[i]) + (c.K_rad[i + 1] - ks[i + 1]));
    RicciRhs r;
    r.dphi.resize(n);
    r.dpsi.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        r.dpsi[i] = -(c.K_rad[i] + c.K_sph[i]) * p.psi[i] + w[i] * c.psi_s[i];
        r.dphi[i] = -2.0 * ks[i] * p.phi[i];
    }
    if (p.cap_lo == CapKind::SmoothPole) r.dpsi.front() = 0.0;
    if (p.cap_hi == CapKind::SmoothPole) r.dpsi.back() = 0.0;
    return r;
}

inline RicciRhs ricci_rhs(const RadialProfile& p) { return ricci_rhs(p, compute_curvature(p)); }

namespace detail {

/// Projection of the near-pole boundary layer onto the odd expansion
///   psi = s + b s^3 + c s^5
/// that smooth closure forces (the linear coefficient is pinned to 1: a
/// cone defect psi_s(0) = 1 + eps feeds the reaction term -(1-psi_s^2)/psi
/// back at rate 2/s^2 and is an unconditional boundary instability).
/// Replaces psi at the 3 nodes nearest each smooth pole from a constrained
/// least-squares fit through the 6 nearest interior nodes (a window narrow
/// enough for the odd expansion to represent strongly curved tips).
inline void pole_filter(RadialProfile& p) {
    const std::size_t n = p.size();
    if (n < 12) return;
    auto s = arclength(p);
    auto fit_and_replace = [&](bool lo) {
        const std::size_t m = 6, keep = 3;
        double A00 = 0, A01 = 0, A11 = 0, b0 = 0, b1 = 0;
        const double scale = lo ? (s[m] - s[0]) : (s[n - 1] - s[n - 1 - m]);
        for (std::size_t k = 1; k <= m; ++k) {
            const double si = lo ? (s[k] - s[0]) / scale : (s[n - 1] - s[n - 1 - k]) / scale;
            const double yi = (lo ? p.psi[k] : p.psi[n - 1 - k]) / scale - si;
            const double s3 = si * si * si, s5 = s3 * si * si;
            A00 += s3 * s3;
            A01 += s3 * s5;
            A11 += s5 * s5;
            b0 += s3 * yi;
            b1 += s5 * yi;
        }
        const double det = A00 * A11 - A01 * A01;
        const double cb = (b0 * A11 - b1 * A01) / det;
        const double cc = (A00 * b1 - A01 * b0) / det;
        for (std::size_t k = 1; k <= keep; ++k) {
            const double si = lo ? (s[k] - s[0]) / scale : (s[n - 1] - s[n - 1 - k]) / scale;
            const double v = scale * (si + cb * si * si * si + cc * si * si * si * si * si);
            if (lo)
                p.psi[k] = v;
            else
                p.psi[n - 1 - k] = v;
        }
    };
    if (p.cap_lo == CapKind::SmoothPole) fit_and_replace(true);
    if (p.cap_hi == CapKind::SmoothPole) fit_and_replace(false);
}

inline double min_spacing(const RadialProfile& p) {
    auto s = arclength(p);
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < s.size(); ++i) m = std::min(m, s[i + 1] - s[i]);
    return m;
}

inline RadialProfile apply_rhs(const RadialProfile& p, const RicciRhs& r, double dt) {
    RadialProfile q = p;
    for (std::size_t i = 0; i < p.size(); ++i) {
        q.phi[i] = p.phi[i] + dt * r.dphi[i];
        q.psi[i] = p.psi[i] + dt * r.dpsi[i];
    }
    if (q.cap_lo == CapKind::SmoothPole) q.psi.front() = 0.0;
    if (q.cap_hi == CapKind::SmoothPole) q.psi.back() = 0.0;
    return q;
}

inline RadialProfile heun_combine(const RadialProfile& p, const RicciRhs& r0,
                                  const RicciRhs& r1, double dt) {
    RadialProfile q = p;
    for (std::size_t i = 0; i < p.size(); ++i) {
        q.phi[i] = p.phi[i] + 0.5 * dt * (r0.dphi[i] + r1.dphi[i]);
        q.psi[i] = p.psi[i] + 0.5 * dt * (r0.dpsi[i] + r1.dpsi[i]);
    }
    if (q.cap_lo == CapKind::SmoothPole) q.psi.front() = 0.0;
    if (q.cap_hi == CapKind::SmoothPole) q.psi.back() = 0.0;
    return q;
}

}  // namespace detail

/// Stable step size for the current profile.
inline double stable_dt(const RadialProfile& p, const CurvatureField& c,
                        const StepControl& ctl) {
    const double lam = std::max(c.max_abs_lambda(), 1e-300);
    const double ds = detail::min_spacing(p);
    return std::min(ctl.cfl / lam, ctl.diff_safety * ds * ds);
}

/// One accepted RK2 step. Halves dt until the embedded Euler/Heun error
/// estimate passes the gate. Throws step-failure when dt underflows.
inline FlowState step(const FlowState& state, const StepControl& ctl,
                      double dt_cap = std::numeric_limits<double>::infinity()) {
    const RadialProfile& p = state.profile;
    auto c = compute_curvature(p);
    auto r0 = ricci_rhs(p, c);
    double dt = std::min(stable_dt(p, c, ctl), dt_cap);
    const double psi_scale = *std::max_element(p.psi.begin(), p.psi.end());
    for (int attempt = 0; attempt < 12; ++attempt) {
        if (dt < ctl.min_dt || state.t + dt == state.t)
            throw Error("step-failure", "time step underflow at t=" + std::to_string(state.t));
        RadialProfile euler = detail::apply_rhs(p, r0, dt);
        detail::pole_filter(euler);
        bool ok = true;
        for (std::size_t i = 1; i + 1 < p.size(); ++i)
            if (!(euler.psi[i] > 0.0)) { ok = false; break; }
        if (ok) {
            auto r1 = ricci_rhs(euler);
            RadialProfile next = detail::heun_combine(p, r0, r1, dt);
            detail::pole_filter(next);
            for (std::size_t i = 1; i + 1 < p.size(); ++i)
                if (!(next.psi[i] > 0.0)) { ok = false; break; }
            if (ok) {
                double lte = 0.0;
                for (std::size_t i = 0; i < p.size(); ++i)
                    lte = std::max(lte, std::abs(next.psi[i] - euler.psi[i]));
                if (lte / psi_scale <= ctl.lte_tol) {
                    FlowState out;
                    out.profile = std::move(next);
                    out.t = state.t + dt;
                    out.step_count = state.step_count + 1;
                    return out;
                }
            }
        }
        dt *= 0.5;
    }
    throw Error("step-failure", "step rejected repeatedly at t=" + std::to_string(state.t));
}

using StepRecorder = std::function<void(const FlowState&, const CurvatureField&)>;

/// Advance one component until a stop condition fires or the horizon is
/// reached. The recorder sees every accepted step (plus the initial state).
inline std::pair<FlowState, StopReason> evolve(FlowState state, const SurgerySchedule& sched,
                                               double horizon, const StepRecorder& recorder,
                                               const StepControl& ctl = {}) {
    sched.validate();
    bool first = true;
    while (true) {
        auto c = compute_curvature(state.profile);
        if (first && recorder) recorder(state, c);
        first = false;
        const double maxpsi = *std::max_element(state.profile.psi.begin(), state.profile.psi.end());
        if (maxpsi < ctl.extinction_tol)
            return {state, {StopReason::Extinct, maxpsi}};
        const double rmin = c.min_R(), rmax = c.max_R();
        const double t = state.t;
        if (rmax >= ctl.surgery_overshoot / sq(sched.h(t)))
            return {state, {StopReason::SurgeryDue, rmax}};
        if (rmin >= 1.0 / sq(sched.rho(t)))
            return {state, {StopReason::DiscardDue, rmin}};
        if (t >= horizon)
            return {state, {StopReason::HorizonReached, rmax}};
        if (needs_remesh(state.profile, c, ctl.resolve_factor, ctl.remesh_ratio)) {
            state.profile = remesh_monitor(state.profile, c, ctl.resolve_factor);
            c = compute_curvature(state.profile);
        }
        state = step(state, ctl, horizon - t);
        if (recorder) {
            auto c2 = compute_curvature(state.profile);
            recorder(state, c2);
        }
    }
}

}  // namespace rflab
