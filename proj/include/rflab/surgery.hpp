#pragma once

// delta-neck detection, horn cut-point selection at the surgery scale h(t),
// cap construction, and the cut-and-cap operation itself.

#include "rflab/flow.hpp"
#include "rflab/spacetime.hpp"

namespace rflab {

struct NeckCertificate {
    std::size_t center = 0;
    double scale = 0.0;    // R(center)^{-1/2}
    double quality = std::numeric_limits<double>::infinity();  // delta*, smaller is better
    double extent = 0.0;   // arclength window the quality was measured over
};

/// Measured neck quality delta* at a node: the max over a window of
/// arclength radius min(available, R^{-1/2}/delta_target) of
///   |psi sqrt(R_c/2) - 1|, |psi_s|, |K_rad|/K_sph,
/// plus the strong-neck time check |dR/dt / R^2 - 1| at the center, formed
/// against a fraction-matched earlier sample (R_prev at t - dt_prev).
/// Components shorter than one curvature scale report +inf (not an error).
inline NeckCertificate neck_quality(const RadialProfile& p, const CurvatureField& c,
                                    std::size_t node, double delta_target,
                                    double R_prev = 0.0, double dt_prev = 0.0) {
    NeckCertificate cert;
    cert.center = node;
    const double Q = c.R[node];
    if (!(Q > 0.0)) throw Error("invalid-parameters", "neck_quality requires R(node) > 0");
    cert.scale = 1.0 / std::sqrt(Q);
    auto s = arclength(p);
    const double avail = std::min(s[node] - s.front(), s.back() - s[node]);
    if (avail < cert.scale) return cert;  // window-unavailable: quality stays +inf
    const double radius = std::min(avail, cert.scale / delta_target);
    double q = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (std::abs(s[i] - s[node]) > radius) continue;
        q = std::max(q, std::abs(p.psi[i] * std::sqrt(Q / 2.0) - 1.0));
        q = std::max(q, std::abs(c.psi_s[i]));
        if (c.K_sph[i] > 0.0)
            q = std::max(q, std::abs(c.K_rad[i]) / c.K_sph[i]);
        else
            q = std::max(q, 1.0);
    }
    if (dt_prev > 0.0 && R_prev > 0.0) {
        const double dRdt = (Q - R_prev) / dt_prev;
        q = std::max(q, std::abs(dRdt / (Q * R_prev) - 1.0));
    }
    cert.quality = q;
    cert.extent = 2.0 * radius;
    return cert;
}

struct CutPlan {
    std::vector<std::pair<std::size_t, std::size_t>> cuts;       // (component index, node)
    std::vector<std::pair<std::size_t, std::string>> discards;   // (component index, reason)
    std::vector<NeckCertificate> certificates;                   // one per cut
};

/// Select surgery cut points: for each maximal interval with R > r(t)^-2
/// that reaches the blow-up region, the outermost node on each side with
/// R in [h^-2, 4 h^-2] and certified neck quality. Components entirely above
/// rho(t)^-2 are discarded instead. Deterministic: components and blow-up
/// regions are scanned left to right, outermost candidates tried first.
inline CutPlan find_horn_cut_points(const std::vector<SliceComponent>& comps,
                                    const std::vector<const SliceComponent*>& prev,
                                    double dt_prev, const SurgerySchedule& sched, double t,
                                    double surgery_overshoot = 16.0,
                                    double neck_cert_floor = 0.3) {
    CutPlan plan;
    const double h2inv = 1.0 / sq(sched.h(t));
    const double r2inv = 1.0 / sq(sched.r(t));
    const double rho2inv = 1.0 / sq(sched.rho(t));
    const double trigger = surgery_overshoot * h2inv;
    const double cert_tol = std::max(sched.delta(t), neck_cert_floor);
    for (std::size_t ci = 0; ci < comps.size(); ++ci) {
        const auto& comp = comps[ci];
        const std::size_t n = comp.R.size();
        double rmin = comp.R[0], rmax = comp.R[0];
        for (double r : comp.R) {
            rmin = std::min(rmin, r);
            rmax = std::max(rmax, r);
        }
        if (rmin >= rho2inv) {
            plan.discards.push_back({ci, "discard-due"});
            continue;
        }
        if (rmax < trigger) continue;  // no blow-up region in this component
        auto curv = compute_curvature(comp.profile);
        auto sarc = arclength(comp.profile);
        std::size_t i = 0;
        while (i < n) {
            if (comp.R[i] <= r2inv) {
                ++i;
                continue;
            }
            std::size_t j = i;
            while (j + 1 < n && comp.R[j + 1] > r2inv) ++j;
            std::size_t peak = i;
            bool blows = false;
            for (std::size_t k = i; k <= j; ++k) {
                if (comp.R[k] > comp.R[peak]) peak = k;
                if (comp.R[k] >= trigger) blows = true;
            }
            if (!blows) {
                i = j + 1;
                continue;
            }
            double best_q = std::numeric_limits<double>::infinity();
            std::size_t band_n = 0;
            auto try_side = [&](bool left) {
                std::vector<std::size_t> order;  // outermost candidate first
                if (left) {
                    for (std::size_t k = (i == 0 ? 1 : i); k < peak; ++k)
                        if (comp.R[k] >= h2inv && comp.R[k] <= 4.0 * h2inv) order.push_back(k);
                    // ascending k = outermost (farthest from peak) first
                } else {
                    for (std::size_t k = j >= n - 1 ? n - 2 : j; k > peak; --k)
                        if (comp.R[k] >= h2inv && comp.R[k] <= 4.0 * h2inv) order.push_back(k);
                    // descending k = outermost first
                }
                band_n += order.size();
                for (std::size_t k : order) {
                    double R_prev = 0.0;
                    if (prev[ci]) {
                        const double f = sarc[k] / sarc.back();
                        R_prev = detail::interp_at_fraction(*prev[ci], prev[ci]->R, f);
                    }
                    auto cert = neck_quality(comp.profile, curv, k, cert_tol, R_prev, dt_prev);
                    best_q = std::min(best_q, cert.quality);
                    if (cert.quality <= cert_tol) {
                        plan.cuts.push_back({ci, k});
                        plan.certificates.push_back(cert);
                        return true;
                    }
                }
                return false;
            };
            const bool pole_left = (i == 0);
            const bool pole_right = (j == n - 1);
            const bool ok_l = pole_left ? true : try_side(true);
            const bool ok_r = pole_right ? true : try_side(false);
            if (!ok_l || !ok_r)
                throw Error("no-valid-neck",
                            "blow-up region admits no certified neck (under-resolved?) at t=" +
                                std::to_string(t) + " band_nodes=" + std::to_string(band_n) +
                                " best_quality=" + std::to_string(best_q) +
                                " tol=" + std::to_string(cert_tol));
            i = j + 1;
        }
    }
    return plan;
}

// ---------------------------------------------------------------------------
// Cap construction
// ---------------------------------------------------------------------------

struct CapSegment {
    std::vector<double> u;  // arclength from the tip
    std::vector<double> psi;
    double length = 0.0;
    double volume = 0.0;
    double C_cap = 0.0;  // max|lambda| * h_scale^2, recorded
};

/// Rounded-cone surgery cap: the slope starts at 1 (exact pole closure),
/// eases down to m_c over [0, 0.6 h] and on to m_end = 0.3 at the outer
/// edge, all C2 via smootherstep; monotone and concave (so the curvature
/// operator stays nonnegative), reaching psi = sqrt(2) h at arclength
/// A_cap h. Scaling covariant by construction.
inline CapSegment cap_profile(double h_scale, const SurgerySchedule& /*sched*/,
                              double A_cap = 4.0, std::size_t n_samples = 129) {
    if (!(h_scale > 0.0)) throw Error("invalid-parameters", "cap scale must be positive");
    const double L = A_cap * h_scale;
    const double a = 0.6 * h_scale;
    const double m_end = 0.3;
    // solve int_0^L m du = sqrt(2) h for the mid slope m_c:
    //   a (1+m_c)/2 + (L-a)(m_c+m_end)/2 = sqrt(2) h
    const double target = std::sqrt(2.0) * h_scale;
    const double m_c = (target - 0.5 * a - 0.5 * (L - a) * m_end) / (0.5 * a + 0.5 * (L - a));
    auto s5i = [](double x) {  // integral of smootherstep from 0 to x
        x = std::min(std::max(x, 0.0), 1.0);
        return x * x * x * x * (x * (x - 3.0) + 2.5);
    };
    auto psi_of = [&](double u) {
        if (u <= a) {
            // m = 1 - (1-m_c) s5(u/a)
            return u - (1.0 - m_c) * a * s5i(u / a);
        }
        const double head = a - (1.0 - m_c) * a * s5i(1.0);
        const double v = (u - a) / (L - a);
        // m = m_c + (m_end - m_c) s5(v)
        return head + m_c * (u - a) + (m_end - m_c) * (L - a) * s5i(v);
    };
    CapSegment cap;
    cap.length = L;
    cap.u = linspace(0.0, L, n_samples);
    cap.psi.resize(n_samples);
    for (std::size_t i = 0; i < n_samples; ++i) cap.psi[i] = psi_of(cap.u[i]);
    cap.psi[0] = 0.0;
    RadialProfile view;
    view.x = linspace(0.0, 1.0, n_samples);
    view.phi.assign(n_samples, L);
    view.psi = cap.psi;
    view.cap_lo = CapKind::SmoothPole;
    view.cap_hi = CapKind::OpenEnd;
    cap.volume = slice_volume(view);
    auto c = compute_curvature(view);
    cap.C_cap = c.max_abs_lambda() * sq(h_scale);
    return cap;
}

// ---------------------------------------------------------------------------
// Cut and cap
// ---------------------------------------------------------------------------

struct SurgeryResult {
    std::vector<SliceComponent> components;
    SurgeryEvent event;
};

namespace detail {

/// A child under assembly: raw (s, psi) samples plus bookkeeping.
struct RawChild {
    std::vector<double> s, psi;
    std::vector<std::size_t> joints;  // sample indices of glue joints
    CapKind lo = CapKind::SmoothPole, hi = CapKind::SmoothPole;
};

/// Kink smoothing around a glue joint: least-squares quadratic in arclength
/// over a window of +- radius about the joint, blended into the original
/// samples with a smootherstep hat so the window edges stay untouched.
/// Spacing-aware (raw samples are much finer on the cap side).
inline void smooth_joint(RawChild& rc, std::size_t center, double radius) {
    const std::size_t n = rc.psi.size();
    const double s0 = rc.s[center];
    double A[3][3] = {};
    double b[3] = {};
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = rc.s[i] - s0;
        if (std::abs(d) > radius) continue;
        const double base[3] = {1.0, d, d * d};
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 3; ++c) A[r][c] += base[r] * base[c];
            b[r] += base[r] * rc.psi[i];
        }
        ++count;
    }
    if (count < 6) return;
    double M[3][4] = {{A[0][0], A[0][1], A[0][2], b[0]},
                      {A[1][0], A[1][1], A[1][2], b[1]},
                      {A[2][0], A[2][1], A[2][2], b[2]}};
    for (int col = 0; col < 3; ++col) {
        int piv = col;
        for (int r = col + 1; r < 3; ++r)
            if (std::abs(M[r][col]) > std::abs(M[piv][col])) piv = r;
        for (int c = 0; c < 4; ++c) std::swap(M[piv][c], M[col][c]);
        for (int r = 0; r < 3; ++r) {
            if (r == col) continue;
            const double f = M[r][col] / M[col][col];
            for (int c = col; c < 4; ++c) M[r][c] -= f * M[col][c];
        }
    }
    const double c0 = M[0][3] / M[0][0], c1 = M[1][3] / M[1][1], c2 = M[2][3] / M[2][2];
    for (std::size_t i = 0; i < n; ++i) {
        const double d = rc.s[i] - s0;
        if (std::abs(d) > radius) continue;
        const double w = 1.0 - smootherstep(std::abs(d) / radius);
        rc.psi[i] = w * (c0 + c1 * d + c2 * d * d) + (1.0 - w) * rc.psi[i];
    }
}

/// Turn raw samples into a monitor-graded profile with n_nodes nodes.
inline RadialProfile finalize_child(RawChild rc, std::int64_t id, std::size_t n_nodes,
                                    double resolve_factor) {
    RadialProfile raw;
    const double S = rc.s.back();
    raw.x.resize(rc.s.size());
    for (std::size_t i = 0; i < rc.s.size(); ++i) raw.x[i] = rc.s[i] / S;
    for (std::size_t i = 1; i < raw.x.size(); ++i)
        if (raw.x[i] <= raw.x[i - 1]) raw.x[i] = raw.x[i - 1] + 1e-13;
    raw.phi.assign(rc.s.size(), S);
    raw.psi = std::move(rc.psi);
    raw.cap_lo = rc.lo;
    raw.cap_hi = rc.hi;
    raw.component_id = id;
    // grade by the raw curvature monitor at the target node count
    auto c = compute_curvature(raw);
    auto child = remesh_monitor(raw, c, resolve_factor, 0.25, n_nodes);
    child.component_id = id;
    for (int pass = 0; pass < 2; ++pass) {
        auto c2 = compute_curvature(child);
        if (!needs_remesh(child, c2, resolve_factor)) break;
        child = remesh_monitor(child, c2, resolve_factor);
        child.component_id = id;
    }
    pole_filter(child);  // restore exact smooth closure at newborn tips
    return child;
}

}  // namespace detail

/// Perform all cuts and discards on a component set. Each cut removes the
/// horn side beyond the cut node and glues a cap_profile with C1 matching
/// (checked) and local smoothing over ~10 samples. Children satisfy the
/// profile invariants; volumes, genealogy and cap lineages are accounted.
inline SurgeryResult perform_surgery(const std::vector<SliceComponent>& comps,
                                     const CutPlan& plan, const SurgerySchedule& sched,
                                     double t, std::int64_t& id_counter,
                                     std::int64_t& lineage_counter, std::size_t n_nodes,
                                     double resolve_factor = 4.0, double glue_slope_tol = 0.8) {
    SurgeryResult out;
    out.event.t = t;
    out.event.ratio_bound = 2.0 / std::sqrt(1.0 + std::log(1.0 / sched.delta(t)));

    std::vector<bool> discarded(comps.size(), false);
    for (const auto& [ci, reason] : plan.discards) {
        discarded[ci] = true;
        out.event.discarded.push_back({comps[ci].id(), reason, comps[ci].volume});
    }

    std::vector<std::vector<std::size_t>> cuts_by_comp(comps.size());
    for (std::size_t k = 0; k < plan.cuts.size(); ++k)
        cuts_by_comp[plan.cuts[k].first].push_back(k);

    for (std::size_t ci = 0; ci < comps.size(); ++ci) {
        if (discarded[ci]) continue;
        const auto& comp = comps[ci];
        if (cuts_by_comp[ci].empty()) {
            out.components.push_back(comp);
            continue;
        }
        const std::size_t n = comp.R.size();
        auto s = arclength(comp.profile);
        auto curv = compute_curvature(comp.profile);
        std::vector<std::size_t> cut_nodes;
        for (std::size_t k : cuts_by_comp[ci]) cut_nodes.push_back(plan.cuts[k].second);
        std::sort(cut_nodes.begin(), cut_nodes.end());

        // alternate kept/removed ranges; the range before the first cut is
        // removed only when the blow-up region touches the lower end
        bool keeping;
        {
            double best = comp.R[0];
            for (std::size_t k = 0; k <= cut_nodes.front(); ++k) best = std::max(best, comp.R[k]);
            keeping = best < 4.0 / sq(sched.h(t));
        }
        std::vector<std::pair<std::size_t, std::size_t>> kept;
        std::size_t pos = 0;
        for (std::size_t seg = 0; seg <= cut_nodes.size(); ++seg) {
            const std::size_t lo = pos;
            const std::size_t hi = (seg < cut_nodes.size()) ? cut_nodes[seg] : n - 1;
            if (keeping)
                kept.push_back({lo, hi});
            else {
                std::vector<double> xs, fs;
                for (std::size_t i = lo; i <= hi; ++i) {
                    xs.push_back(s[i]);
                    fs.push_back(sq(comp.profile.psi[i]));
                }
                if (xs.size() >= 2) out.event.removed_volume += 4.0 * kPi * trapz(xs, fs);
            }
            pos = hi;
            keeping = !keeping;
        }
        if (kept.empty()) {
            out.event.discarded.push_back({comp.id(), "discard-due", comp.volume});
            continue;
        }

        for (auto [lo, hi] : kept) {
            const bool cut_at_lo = lo != 0;
            const bool cut_at_hi = hi != n - 1;
            const std::int64_t child_id = ++id_counter;
            detail::RawChild rc;
            rc.lo = cut_at_lo ? CapKind::SmoothPole : comp.profile.cap_lo;
            rc.hi = cut_at_hi ? CapKind::SmoothPole : comp.profile.cap_hi;
            double kept_offset = 0.0;
            std::vector<LineageTag> tags;

            auto record_cut = [&](std::size_t node, double h_scale, double cap_len,
                                  std::int64_t lineage) {
                CutRecord cr;
                cr.parent_id = comp.id();
                cr.node = node;
                cr.s_cut = s[node];
                cr.h_scale = h_scale;
                cr.cap_lineage = lineage;
                for (std::size_t k = 0; k < plan.cuts.size(); ++k)
                    if (plan.cuts[k].first == ci && plan.cuts[k].second == node)
                        cr.neck_quality = plan.certificates[k].quality;
                out.event.cuts.push_back(cr);
                (void)cap_len;
            };

            if (cut_at_lo) {
                const double psi_cut = comp.profile.psi[lo];
                const double h_scale = psi_cut / std::sqrt(2.0);
                if (std::abs(curv.psi_s[lo]) > glue_slope_tol)
                    throw Error("glue-failure", "C1 matching tolerance unmet at lower cut");
                auto cap = cap_profile(h_scale, sched);
                for (std::size_t i = 0; i + 1 < cap.u.size(); ++i) {
                    rc.s.push_back(cap.u[i]);
                    rc.psi.push_back(cap.psi[i]);
                }
                kept_offset = cap.length;
                out.event.cap_volume += cap.volume;
                const std::int64_t lin = ++lineage_counter;
                record_cut(lo, h_scale, cap.length, lin);
                tags.push_back({lin, 0.0, cap.length});  // s-interval; fractions fixed below
            }
            const std::size_t joint_lo = rc.s.size();
            for (std::size_t i = lo; i <= hi; ++i) {
                rc.s.push_back(kept_offset + (s[i] - s[lo]));
                rc.psi.push_back(comp.profile.psi[i]);
            }
            if (cut_at_lo) rc.joints.push_back(joint_lo);
            if (cut_at_hi) {
                const double psi_cut = comp.profile.psi[hi];
                const double h_scale = psi_cut / std::sqrt(2.0);
                if (std::abs(curv.psi_s[hi]) > glue_slope_tol)
                    throw Error("glue-failure", "C1 matching tolerance unmet at upper cut");
                auto cap = cap_profile(h_scale, sched);
                rc.joints.push_back(rc.s.size() - 1);
                const double base = rc.s.back();
                for (std::size_t i = cap.u.size() - 1; i-- > 0;) {
                    rc.s.push_back(base + (cap.length - cap.u[i]));
                    rc.psi.push_back(cap.psi[i]);
                }
                out.event.cap_volume += cap.volume;
                const std::int64_t lin = ++lineage_counter;
                record_cut(hi, h_scale, cap.length, lin);
                tags.push_back({lin, base, base + cap.length});
            }
            // smoothing radius: a couple of curvature scales at the cut
            for (std::size_t j : rc.joints) {
                const double psi_j = rc.psi[std::min(j, rc.psi.size() - 1)];
                detail::smooth_joint(rc, j, 1.5 * psi_j);
            }

            auto child = detail::finalize_child(std::move(rc), child_id, n_nodes, resolve_factor);
            try {
                check_profile_invariants(child);
            } catch (const Error& e) {
                auto d = profile_derivs(child);
                auto sa = arclength(child);
                std::string msg = std::string(e.what()) + " [child slopes lo=" +
                                  std::to_string(d.psi_s.front()) + " hi=" +
                                  std::to_string(d.psi_s.back()) + "\n tip data:";
                for (std::size_t q = child.size() - 12; q < child.size(); ++q)
                    msg += "\n  i=" + std::to_string(q) + " ds=" +
                           std::to_string(sa[q] - sa[q - 1]) + " psi=" + std::to_string(child.psi[q]) +
                           " phi=" + std::to_string(child.phi[q]) +
                           " psi/dist=" + std::to_string(child.psi[q] / std::max(sa.back() - sa[q], 1e-300));
                throw Error("glue-failure", msg);
            }
            auto cc = compute_curvature(child);
            SliceComponent sc = make_slice_component(std::move(child), cc);

            // genealogy record (kept interval and its image in the child)
            ChildRecord chr;
            chr.child_id = child_id;
            chr.parent_id = comp.id();
            chr.parent_s_lo = s[lo];
            chr.parent_s_hi = s[hi];
            chr.child_s_lo = kept_offset;
            chr.child_s_hi = kept_offset + (s[hi] - s[lo]);
            out.event.children.push_back(chr);

            // lineage tags: new caps plus inherited intervals from the parent
            for (auto& tg : tags)
                sc.cap_tags.push_back({tg.lineage_id, tg.f_lo / sc.total_s, tg.f_hi / sc.total_s});
            for (const auto& tg : comp.cap_tags) {
                const double a = tg.f_lo * comp.total_s, b = tg.f_hi * comp.total_s;
                const double ja = std::max(a, s[lo]), jb = std::min(b, s[hi]);
                if (jb > ja) {
                    const double ca = kept_offset + (ja - s[lo]);
                    const double cb = kept_offset + (jb - s[lo]);
                    sc.cap_tags.push_back({tg.lineage_id, ca / sc.total_s, cb / sc.total_s});
                }
            }
            out.components.push_back(std::move(sc));
        }
    }
    return out;
}

}  // namespace rflab
