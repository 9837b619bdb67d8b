#pragma once

// Run orchestration: multi-component Ricci flow with surgery recording into
// a spacetime store, delta -> 0 sweeps, and the convergence / bad-worldline /
// neck-stability / asymptotic-soliton reports.

#include <atomic>
#include <thread>

#include "rflab/flow.hpp"
#include "rflab/spacetime.hpp"
#include "rflab/surgery.hpp"

namespace rflab {

struct RunConfig {
    SurgerySchedule schedule;
    StepControl control;
    double horizon = 0.1;
    std::size_t n_nodes = 512;
    double neck_cert_floor = 0.3;   // certification threshold floor for cuts
    double record_dlogR = 0.02;     // record when log max R advances this much
    std::size_t target_slices = 1500;  // aim for ~this many time records
    std::size_t max_slices = 5000;
    bool auto_normalize = true;
};

namespace detail {

inline Slice snapshot(double t, long step_count, const std::vector<SliceComponent>& comps) {
    Slice sl;
    sl.t = t;
    sl.step_count = step_count;
    sl.components = comps;
    return sl;
}

/// Refresh the cached curvature/volume data of a live component.
inline void refresh(SliceComponent& sc, const CurvatureField& c) {
    sc.R = c.R;
    sc.total_s = total_arclength(sc.profile);
    sc.volume = slice_volume(sc.profile);
}

}  // namespace detail

/// Flow a component set to the horizon, performing surgeries and discards,
/// recording slices into a sealed SpacetimeStore.
inline SpacetimeStore run_flow_with_surgery(std::vector<RadialProfile> initial,
                                            const RunConfig& cfg) {
    cfg.schedule.validate();
    SpacetimeStore store;
    std::int64_t id_counter = 0, lineage_counter = 0;

    std::vector<SliceComponent> live;
    for (auto& p : initial) {
        p.component_id = ++id_counter;
        if (cfg.auto_normalize) {
            auto rep = check_normalized(p);
            if (!rep.is_normalized && rep.worst_eigenvalue > 1.0)
                p = rescale_metric(p, rep.worst_eigenvalue);
        }
        check_profile_invariants(p);
        auto c = compute_curvature(p);
        live.push_back(make_slice_component(std::move(p), c));
    }

    double t = 0.0;
    long steps = 0;
    double last_rec_t = -1.0, last_rec_logR = -1e300;
    const double dt_rec = cfg.horizon / static_cast<double>(cfg.target_slices);

    auto max_R_all = [&]() {
        double m = -std::numeric_limits<double>::infinity();
        for (const auto& sc : live)
            for (double r : sc.R) m = std::max(m, r);
        return m;
    };
    auto record_now = [&](bool pre, bool post) {
        Slice sl = detail::snapshot(t, steps, live);
        sl.pre_surgery = pre;
        sl.post_surgery = post;
        store.record(std::move(sl));
        last_rec_t = t;
        const double m = max_R_all();
        last_rec_logR = m > 0 ? std::log(m) : -1e300;
    };

    record_now(false, false);

    while (true) {
        // stop conditions per component
        bool surgery_needed = false;
        std::vector<std::pair<std::size_t, std::string>> forced_discards;
        for (std::size_t ci = 0; ci < live.size(); ++ci) {
            const auto& sc = live[ci];
            const double maxpsi = *std::max_element(sc.profile.psi.begin(), sc.profile.psi.end());
            if (maxpsi < cfg.control.extinction_tol) {
                forced_discards.push_back({ci, "extinct"});
                continue;
            }
            double rmin = sc.R[0], rmax = sc.R[0];
            for (double r : sc.R) {
                rmin = std::min(rmin, r);
                rmax = std::max(rmax, r);
            }
            if (rmax >= cfg.control.surgery_overshoot / sq(cfg.schedule.h(t))) surgery_needed = true;
            if (rmin >= 1.0 / sq(cfg.schedule.rho(t))) surgery_needed = true;  // discard path
        }
        if (surgery_needed || !forced_discards.empty()) {
            if (store.slices.size() + 2 > cfg.max_slices)
                throw Error("record-overflow", "slice budget exhausted before an event");
            record_now(true, false);
            const std::size_t pre_idx = store.slices.size() - 1;
            // previous recorded smooth slice for the strong-neck time check
            const Slice* prev_slice = nullptr;
            for (std::size_t k = pre_idx; k-- > 0;)
                if (!store.slices[k].pre_surgery && !store.slices[k].post_surgery) {
                    prev_slice = &store.slices[k];
                    break;
                }
            std::vector<const SliceComponent*> prev(live.size(), nullptr);
            double dt_prev = 0.0;
            if (prev_slice) {
                dt_prev = t - prev_slice->t;
                for (std::size_t ci = 0; ci < live.size(); ++ci)
                    prev[ci] = prev_slice->find(live[ci].id());
            }
            CutPlan plan;
            if (surgery_needed)
                plan = find_horn_cut_points(live, prev, dt_prev, cfg.schedule, t,
                                            cfg.control.surgery_overshoot, cfg.neck_cert_floor);
            for (auto& fd : forced_discards) {
                bool already = false;
                for (auto& d : plan.discards) already |= d.first == fd.first;
                if (!already) plan.discards.push_back(fd);
            }
            auto result = perform_surgery(live, plan, cfg.schedule, t, id_counter,
                                          lineage_counter, cfg.n_nodes,
                                          cfg.control.resolve_factor);
            // post-surgery invariant gate: scalar bound and Hamilton-Ivey
            for (const auto& sc : result.components) {
                auto c = compute_curvature(sc.profile);
                if (scalar_lower_bound_margin(c, t) < -1e-6)
                    throw Error("glue-failure", "post-surgery scalar lower bound violated");
                if (hamilton_ivey_margin(c, t).first < -1e-6)
                    throw Error("glue-failure", "post-surgery Hamilton-Ivey violated");
            }
            live = std::move(result.components);
            record_now(false, true);
            result.event.pre_slice = pre_idx;
            result.event.post_slice = pre_idx + 1;
            store.record_event(std::move(result.event));
            if (live.empty()) break;
            continue;
        }
        if (t >= cfg.horizon) break;

        // remesh on demand, then advance all components by a common step
        double dt = cfg.horizon - t;
        std::vector<CurvatureField> curvs(live.size());
        for (std::size_t ci = 0; ci < live.size(); ++ci) {
            auto c = compute_curvature(live[ci].profile);
            if (needs_remesh(live[ci].profile, c, cfg.control.resolve_factor,
                             cfg.control.remesh_ratio)) {
                live[ci].profile =
                    remesh_monitor(live[ci].profile, c, cfg.control.resolve_factor);
                c = compute_curvature(live[ci].profile);
            }
            curvs[ci] = std::move(c);
            dt = std::min(dt, stable_dt(live[ci].profile, curvs[ci], cfg.control));
        }
        if (dt < cfg.control.min_dt || t + dt == t)
            throw Error("step-failure", "time step underflow at t=" + std::to_string(t));
        for (std::size_t ci = 0; ci < live.size(); ++ci) {
            auto r0 = ricci_rhs(live[ci].profile, curvs[ci]);
            RadialProfile euler = detail::apply_rhs(live[ci].profile, r0, dt);
            detail::pole_filter(euler);
            auto r1 = ricci_rhs(euler);
            RadialProfile next = detail::heun_combine(live[ci].profile, r0, r1, dt);
            detail::pole_filter(next);
            for (std::size_t i = 1; i + 1 < next.psi.size(); ++i)
                if (!(next.psi[i] > 0.0))
                    throw Error("step-failure", "psi crossed zero before a surgery trigger");
            live[ci].profile = std::move(next);
            auto c2 = compute_curvature(live[ci].profile);
            detail::refresh(live[ci], c2);
        }
        t += dt;
        ++steps;
        const double m = max_R_all();
        const double logR = m > 0 ? std::log(m) : -1e300;
        if ((t - last_rec_t >= dt_rec || std::abs(logR - last_rec_logR) >= cfg.record_dlogR) &&
            store.slices.size() < cfg.max_slices)
            record_now(false, false);
    }
    if (last_rec_t < t && !live.empty()) record_now(false, false);
    store.seal();
    return store;
}

}  // namespace rflab
