#pragma once

// The discrete Ricci flow spacetime: time slices, surgery events and
// component genealogy, worldline tracing, spacetime/quasiparabolic lengths,
// volume functions and slab integrals, and the connectivity machinery
// (r_crit, controlled paths back to the initial slice).

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "rflab/profile.hpp"
#include "rflab/schedule.hpp"

namespace rflab {

/// Arclength-fraction interval owned by one surgery-cap lineage.
struct LineageTag {
    std::int64_t lineage_id;
    double f_lo, f_hi;
};

struct SliceComponent {
    RadialProfile profile;
    std::vector<double> R;  // scalar curvature per node
    double total_s = 0.0;
    double volume = 0.0;
    std::vector<LineageTag> cap_tags;

    std::int64_t id() const { return profile.component_id; }
};

inline SliceComponent make_slice_component(RadialProfile p, const CurvatureField& c) {
    SliceComponent sc;
    sc.R = c.R;
    sc.total_s = total_arclength(p);
    sc.volume = slice_volume(p);
    sc.profile = std::move(p);
    return sc;
}

struct Slice {
    double t = 0.0;
    long step_count = 0;
    bool pre_surgery = false;   // the M_t^- slice of a surgery time
    bool post_surgery = false;  // the M_t^+ slice
    std::vector<SliceComponent> components;

    const SliceComponent* find(std::int64_t id) const {
        for (const auto& c : components)
            if (c.id() == id) return &c;
        return nullptr;
    }
    double total_volume() const {
        double v = 0.0;
        for (const auto& c : components) v += c.volume;
        return v;
    }
};

struct CutRecord {
    std::int64_t parent_id = 0;
    std::size_t node = 0;       // cut node in the pre-surgery parent grid
    double s_cut = 0.0;         // arclength of the cut in the parent
    double h_scale = 0.0;       // cap scale (cut radius / sqrt(2))
    double neck_quality = 0.0;  // certified delta* at the cut
    std::int64_t cap_lineage = 0;
};

struct ChildRecord {
    std::int64_t child_id = 0;
    std::int64_t parent_id = 0;
    double parent_s_lo = 0.0, parent_s_hi = 0.0;  // kept interval in the parent
    double child_s_lo = 0.0, child_s_hi = 0.0;    // its image in the child
};

struct DiscardRecord {
    std::int64_t component_id = 0;
    std::string reason;  // "discard-due" | "extinct"
    double volume = 0.0;
};

struct SurgeryEvent {
    double t = 0.0;
    std::vector<CutRecord> cuts;
    std::vector<ChildRecord> children;
    std::vector<DiscardRecord> discarded;
    double removed_volume = 0.0;  // horn segments removed by cutting
    double cap_volume = 0.0;      // glued caps
    double ratio_bound = 0.0;     // recorded bound on cap/removed for this delta(t)
    std::size_t pre_slice = 0;    // indices into the store
    std::size_t post_slice = 0;
};

class SpacetimeStore {
public:
    std::vector<Slice> slices;
    std::vector<SurgeryEvent> events;
    std::map<std::int64_t, std::vector<std::int64_t>> parents;  // genealogy

    bool sealed() const { return sealed_; }
    void seal() { sealed_ = true; }

    void record(Slice slice) {
        if (sealed_) throw Error("sealed-store", "record on a sealed store");
        if (!slices.empty() && slice.t < slices.back().t)
            throw Error("out-of-order-time", "slice time decreased");
        slices.push_back(std::move(slice));
    }

    void record_event(SurgeryEvent ev) {
        if (sealed_) throw Error("sealed-store", "record on a sealed store");
        for (const auto& ch : ev.children) parents[ch.child_id].push_back(ch.parent_id);
        events.push_back(std::move(ev));
    }

    /// Index of the last slice with time <= t (clamped to the ends).
    std::size_t slice_at(double t) const {
        require_nonempty();
        std::size_t lo = 0;
        for (std::size_t i = 0; i < slices.size(); ++i)
            if (slices[i].t <= t) lo = i;
        return lo;
    }

    /// The event (if any) separating slice k and slice k+1.
    const SurgeryEvent* event_between(std::size_t k) const {
        for (const auto& ev : events)
            if (ev.pre_slice == k && ev.post_slice == k + 1) return &ev;
        return nullptr;
    }

    void require_sealed() const {
        if (!sealed_) throw Error("unsealed-store", "operation requires a sealed store");
    }
    void require_nonempty() const {
        if (slices.empty()) throw Error("empty-store", "no slices recorded");
    }

private:
    bool sealed_ = false;
};

// ---------------------------------------------------------------------------
// Worldlines
// ---------------------------------------------------------------------------

struct WorldlineSample {
    double t;
    std::int64_t component_id;
    double s;  // radial position (arclength within the component)
    double f;  // arclength fraction
    double R;
};

struct Worldline {
    enum Termination { ReachedTimeZero, SurgeryRemoved, CapBorn, ExtinctEnd, AliveAtHorizon };
    std::vector<WorldlineSample> samples;  // time-ordered
    Termination backward_end = ReachedTimeZero;
    Termination forward_end = AliveAtHorizon;
    bool bad() const { return backward_end == CapBorn; }
    double t_a() const { return samples.front().t; }
    double t_b() const { return samples.back().t; }
};

inline const char* termination_name(Worldline::Termination t) {
    switch (t) {
        case Worldline::ReachedTimeZero: return "reached-time-zero";
        case Worldline::SurgeryRemoved: return "surgery-removed";
        case Worldline::CapBorn: return "cap-born";
        case Worldline::ExtinctEnd: return "extinct";
        case Worldline::AliveAtHorizon: return "alive-at-horizon";
    }
    return "?";
}

namespace detail {

inline double interp_at_fraction(const SliceComponent& c, const std::vector<double>& field,
                                 double f) {
    auto s = arclength(c.profile);
    const double target = f * s.back();
    std::size_t i = 0;
    while (i + 2 < s.size() && s[i + 1] < target) ++i;
    const double w = (target - s[i]) / std::max(s[i + 1] - s[i], 1e-300);
    return field[i] * (1.0 - w) + field[i + 1] * std::min(std::max(w, 0.0), 1.0);
}

/// Map a (component, fraction) across a surgery boundary, forward in time.
/// Returns the child position, or the termination if the point was removed.
struct SurgeryMap {
    bool survives = false;
    std::int64_t id = 0;
    double f = 0.0;
    Worldline::Termination end = Worldline::SurgeryRemoved;
};

inline SurgeryMap map_forward(const SurgeryEvent& ev, std::int64_t id, double f,
                              const Slice& pre) {
    const SliceComponent* parent = pre.find(id);
    SurgeryMap out;
    if (!parent) return out;
    const double s = f * parent->total_s;
    for (const auto& ch : ev.children) {
        if (ch.parent_id != id) continue;
        if (s >= ch.parent_s_lo - 1e-12 && s <= ch.parent_s_hi + 1e-12) {
            out.survives = true;
            out.id = ch.child_id;
            const double s_child = ch.child_s_lo + (s - ch.parent_s_lo);
            out.f = s_child / std::max(ch.child_s_hi, 1e-300);
            return out;
        }
    }
    for (const auto& d : ev.discarded)
        if (d.component_id == id) {
            out.end = d.reason == "extinct" ? Worldline::ExtinctEnd : Worldline::SurgeryRemoved;
            return out;
        }
    out.end = Worldline::SurgeryRemoved;
    return out;
}

/// Map a (component, fraction) across a surgery boundary, backward in time.
struct BackMap {
    bool survives = false;
    std::int64_t id = 0;
    double f = 0.0;
    Worldline::Termination end = Worldline::CapBorn;
    const CutRecord* birth_cut = nullptr;
};

inline BackMap map_backward(const SurgeryEvent& ev, std::int64_t id, double f,
                            const Slice& post, const Slice& pre) {
    BackMap out;
    const SliceComponent* child = post.find(id);
    bool is_child = false;
    for (const auto& ch : ev.children) {
        if (ch.child_id != id) continue;
        is_child = true;
        if (!child) break;
        const double s = f * child->total_s;
        if (s >= ch.child_s_lo - 1e-12 && s <= ch.child_s_hi + 1e-12) {
            const SliceComponent* parent = pre.find(ch.parent_id);
            out.survives = true;
            out.id = ch.parent_id;
            const double s_parent = ch.parent_s_lo + (s - ch.child_s_lo);
            out.f = parent ? s_parent / std::max(parent->total_s, 1e-300) : 0.0;
            return out;
        }
        // inside a glued cap: born at this surgery; remember the cut
        for (const auto& cut : ev.cuts)
            if (cut.cap_lineage != 0) {
                // nearest cut belonging to this child's parent
                if (cut.parent_id == ch.parent_id) out.birth_cut = &cut;
            }
        out.end = Worldline::CapBorn;
        return out;
    }
    if (!is_child) {
        // component passed through the event untouched
        if (pre.find(id)) {
            out.survives = true;
            out.id = id;
            out.f = f;
        }
    }
    return out;
}

}  // namespace detail

/// Trace the worldline through recorded slices by arclength-fraction
/// matching within a component (the documented discrete surrogate of the
/// flow of the time vector field).
inline Worldline worldline_trace(const SpacetimeStore& store, std::size_t slice_idx,
                                 std::int64_t component_id, double fraction) {
    store.require_nonempty();
    Worldline w;
    auto sample = [&](std::size_t k, std::int64_t id, double f) {
        const Slice& sl = store.slices[k];
        const SliceComponent* c = sl.find(id);
        WorldlineSample ws;
        ws.t = sl.t;
        ws.component_id = id;
        ws.f = f;
        ws.s = c ? f * c->total_s : 0.0;
        ws.R = c ? detail::interp_at_fraction(*c, c->R, f) : 0.0;
        return ws;
    };

    // backward pass
    std::vector<WorldlineSample> back;
    {
        std::int64_t id = component_id;
        double f = fraction;
        std::size_t k = slice_idx;
        back.push_back(sample(k, id, f));
        while (k > 0) {
            const SurgeryEvent* ev = store.event_between(k - 1);
            if (ev) {
                auto m = detail::map_backward(*ev, id, f, store.slices[k], store.slices[k - 1]);
                if (!m.survives) {
                    w.backward_end = m.end;
                    break;
                }
                id = m.id;
                f = m.f;
            } else if (!store.slices[k - 1].find(id)) {
                w.backward_end = Worldline::CapBorn;  // no pre-image recorded
                break;
            }
            --k;
            back.push_back(sample(k, id, f));
        }
        if (k == 0) w.backward_end = Worldline::ReachedTimeZero;
    }
    // forward pass
    std::vector<WorldlineSample> fwd;
    {
        std::int64_t id = component_id;
        double f = fraction;
        std::size_t k = slice_idx;
        while (k + 1 < store.slices.size()) {
            const SurgeryEvent* ev = store.event_between(k);
            if (ev) {
                auto m = detail::map_forward(*ev, id, f, store.slices[k]);
                if (!m.survives) {
                    w.forward_end = m.end;
                    break;
                }
                id = m.id;
                f = m.f;
            } else if (!store.slices[k + 1].find(id)) {
                // component disappeared without an event record: extinct
                w.forward_end = Worldline::ExtinctEnd;
                break;
            }
            ++k;
            fwd.push_back(sample(k, id, f));
        }
        if (k + 1 == store.slices.size()) w.forward_end = Worldline::AliveAtHorizon;
    }
    w.samples.assign(back.rbegin(), back.rend());
    w.samples.insert(w.samples.end(), fwd.begin(), fwd.end());
    return w;
}

/// Count distinct surgery-cap lineages alive at time t. The discrete
/// surrogate of the finite bad set: one lineage per glued cap.
struct BadWorldlineCensus {
    std::size_t count = 0;
    std::vector<std::pair<std::int64_t, std::int64_t>> representatives;  // (component, lineage)
};

inline BadWorldlineCensus bad_worldline_census(const SpacetimeStore& store, double t) {
    store.require_sealed();
    const Slice& sl = store.slices[store.slice_at(t)];
    BadWorldlineCensus census;
    std::vector<std::int64_t> seen;
    for (const auto& c : sl.components)
        for (const auto& tag : c.cap_tags)
            if (std::find(seen.begin(), seen.end(), tag.lineage_id) == seen.end()) {
                seen.push_back(tag.lineage_id);
                census.representatives.push_back({c.id(), tag.lineage_id});
            }
    census.count = seen.size();
    return census;
}

// ---------------------------------------------------------------------------
// Volume ledger
// ---------------------------------------------------------------------------

struct VolumeLedger {
    std::vector<double> t;
    std::vector<double> V;
    std::vector<double> intR;  // per-slice integral of R dvol
    std::vector<double> minR, maxR;
    std::vector<std::size_t> n_components;
    std::vector<int> flags;  // 1 = pre-surgery, 2 = post-surgery
};

inline double slice_R_integral(const SliceComponent& c) {
    const auto& p = c.profile;
    std::vector<double> f(p.size());
    for (std::size_t i = 0; i < p.size(); ++i)
        f[i] = c.R[i] * sq(p.psi[i]) * p.phi[i];
    const double v = p.uniform_x() ? simpson_uniform(f, p.x[1] - p.x[0]) : trapz(p.x, f);
    return 4.0 * kPi * v;
}

inline VolumeLedger volume_function(const SpacetimeStore& store) {
    store.require_sealed();
    VolumeLedger led;
    for (const auto& sl : store.slices) {
        led.t.push_back(sl.t);
        led.V.push_back(sl.total_volume());
        double ir = 0.0, mn = std::numeric_limits<double>::infinity(), mx = -mn;
        for (const auto& c : sl.components) {
            ir += slice_R_integral(c);
            for (double r : c.R) {
                mn = std::min(mn, r);
                mx = std::max(mx, r);
            }
        }
        if (sl.components.empty()) mn = mx = 0.0;
        led.intR.push_back(ir);
        led.minR.push_back(mn);
        led.maxR.push_back(mx);
        led.n_components.push_back(sl.components.size());
        led.flags.push_back(sl.pre_surgery ? 1 : (sl.post_surgery ? 2 : 0));
    }
    return led;
}

/// V(t1) - V(t0) + int_{t0}^{t1} int_{M_t} R dvol dt on a smooth interval.
inline double volume_identity_residual(const SpacetimeStore& store, double t0, double t1) {
    store.require_sealed();
    if (t1 < t0) std::swap(t0, t1);
    for (const auto& ev : store.events)
        if (ev.t > t0 && ev.t < t1)
            throw Error("interval-contains-surgery", "smooth interval required");
    if (t0 == t1) return 0.0;
    const std::size_t k0 = store.slice_at(t0), k1 = store.slice_at(t1);
    // trapezoid in time over recorded slices between k0 and k1
    double slab = 0.0;
    double v0 = 0.0, v1 = 0.0;
    std::vector<double> ts, vs, irs;
    for (std::size_t k = k0; k <= k1; ++k) {
        const Slice& sl = store.slices[k];
        double ir = 0.0;
        for (const auto& c : sl.components) ir += slice_R_integral(c);
        ts.push_back(sl.t);
        vs.push_back(sl.total_volume());
        irs.push_back(ir);
    }
    for (std::size_t i = 0; i + 1 < ts.size(); ++i)
        slab += 0.5 * (irs[i] + irs[i + 1]) * (ts[i + 1] - ts[i]);
    v0 = vs.front();
    v1 = vs.back();
    return v1 - v0 + slab;
}

// ---------------------------------------------------------------------------
// Spacetime lengths
// ---------------------------------------------------------------------------

struct PathPoint {
    std::size_t slice;
    std::int64_t component_id;
    double f;  // arclength fraction in the component
};

struct PathLengths {
    double qp = 0.0;   // quasiparabolic length
    double g_M = 0.0;  // spacetime-metric length
};

/// Discrete length of a time-preserving node path under the spacetime
/// metric g_M = g + dt^2 and the quasiparabolic metric
/// g_qp = (1+R^2)^(1/2) g + (1+R^2) dt^2.
inline PathLengths path_lengths(const SpacetimeStore& store, const std::vector<PathPoint>& path) {
    PathLengths out;
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        const Slice& a = store.slices[path[i].slice];
        const Slice& b = store.slices[path[i + 1].slice];
        const SliceComponent* ca = a.find(path[i].component_id);
        const SliceComponent* cb = b.find(path[i + 1].component_id);
        if (!ca || !cb) throw Error("invalid-parameters", "path point outside recorded slices");
        const double dt = b.t - a.t;
        // spatial displacement measured in the later slice's metric
        const double ds = std::abs(path[i + 1].f - path[i].f) *
                          0.5 * (ca->total_s + cb->total_s);
        const double Ra = detail::interp_at_fraction(*ca, ca->R, path[i].f);
        const double Rb = detail::interp_at_fraction(*cb, cb->R, path[i + 1].f);
        const double R2 = sq(0.5 * (Ra + Rb));
        out.g_M += std::sqrt(sq(ds) + sq(dt));
        out.qp += std::sqrt(std::sqrt(1.0 + R2) * sq(ds) + (1.0 + R2) * sq(dt));
    }
    return out;
}

/// min over radial paths from m1 to m2 of max R along the path. In one
/// radial dimension the only monotone path is the segment between them.
inline double r_crit(const SpacetimeStore& store, double t, std::int64_t component_id,
                     double f1, double f2) {
    const Slice& sl = store.slices[store.slice_at(t)];
    const SliceComponent* c = sl.find(component_id);
    if (!c) throw Error("different-components", "component not present at t");
    if (f1 > f2) std::swap(f1, f2);
    auto s = arclength(c->profile);
    const double s1 = f1 * s.back(), s2 = f2 * s.back();
    double m = -std::numeric_limits<double>::infinity();
    bool touched = false;
    for (std::size_t i = 0; i < s.size(); ++i)
        if (s[i] >= s1 && s[i] <= s2) {
            m = std::max(m, c->R[i]);
            touched = true;
        }
    const double Ra = detail::interp_at_fraction(*c, c->R, f1);
    const double Rb = detail::interp_at_fraction(*c, c->R, f2);
    m = std::max({touched ? m : -std::numeric_limits<double>::infinity(), Ra, Rb});
    return m;
}

// ---------------------------------------------------------------------------
// Controlled path to the initial slice
// ---------------------------------------------------------------------------

struct ControlledPath {
    std::vector<PathPoint> path;  // time-ordered, ends at the start point
    double max_R = 0.0;
    double g_M_length = 0.0;
    /// Monotone bound functions the realized values are checked against.
    static double R1_bound(double R0, double t, const SurgerySchedule& s) {
        return 8.0 * std::max(R0, 1.0 / sq(s.r(t)));
    }
    static double L_bound(double R0, double t, const SurgerySchedule& s) {
        const double n_halvings = std::max(1.0, std::log2(std::max(R0 * sq(s.r0), 2.0)));
        return t + 20.0 * (1.0 + n_halvings) * s.r0;
    }
};

/// The two-substep iteration: follow the worldline backward while
/// R < r(t)^-2 (Substep B); when the threshold is hit, move within the
/// backward region to a point with R reduced by a factor >= 2 (Substep A).
inline ControlledPath controlled_path_to_zero(const SpacetimeStore& store,
                                              std::size_t slice_idx, std::int64_t component_id,
                                              double fraction, const SurgerySchedule& sched) {
    store.require_sealed();
    ControlledPath out;
    std::size_t k = slice_idx;
    std::int64_t id = component_id;
    double f = fraction;

    auto R_at = [&](std::size_t kk, std::int64_t cid, double ff) {
        const SliceComponent* c = store.slices[kk].find(cid);
        return c ? detail::interp_at_fraction(*c, c->R, ff) : 0.0;
    };

    out.path.push_back({k, id, f});
    out.max_R = R_at(k, id, f);
    int guard = 0;
    while (k > 0 && guard++ < 1 << 20) {
        const double t = store.slices[k].t;
        const double Rh = R_at(k, id, f);
        out.max_R = std::max(out.max_R, Rh);
        if (Rh >= 1.0 / sq(sched.r(t))) {
            // Substep A: search the backward parabolic region for a point
            // with R <= R/2; move there along recorded slices.
            const double A = 2.0;
            const double radius = A / std::sqrt(Rh);
            const double t_back = t - sq(radius);
            bool found = false;
            std::size_t kk = k;
            while (kk > 0 && store.slices[kk - 1].t >= t_back) --kk;
            for (std::size_t k2 = k; k2-- > kk && !found;) {
                const SliceComponent* c2 = store.slices[k2].find(id);
                if (!c2) break;
                auto s2 = arclength(c2->profile);
                const double s_here = f * c2->total_s;
                for (std::size_t i = 0; i < s2.size(); ++i) {
                    if (std::abs(s2[i] - s_here) > radius) continue;
                    if (c2->R[i] <= 0.5 * Rh) {
                        // walk the intermediate slices, interpolating fractions
                        const double f_target = s2[i] / std::max(c2->total_s, 1e-300);
                        const std::size_t steps = k - k2;
                        for (std::size_t j = 1; j <= steps; ++j) {
                            const double fr = f + (f_target - f) * double(j) / double(steps);
                            out.path.push_back({k - j, id, fr});
                            out.max_R = std::max(out.max_R, R_at(k - j, id, fr));
                        }
                        k = k2;
                        f = f_target;
                        found = true;
                        break;
                    }
                }
            }
            if (!found)
                throw Error("no-path", "Substep A found no curvature halving in the backward region");
        } else {
            // Substep B: one slice back along the worldline
            const SurgeryEvent* ev = store.event_between(k - 1);
            if (ev) {
                auto m = detail::map_backward(*ev, id, f, store.slices[k], store.slices[k - 1]);
                if (!m.survives) {
                    // cap-born: continue from the cut node on the parent
                    const CutRecord* cut = m.birth_cut;
                    if (!cut) throw Error("no-path", "cap-born with no pre-surgery connection");
                    const SliceComponent* parent = store.slices[k - 1].find(cut->parent_id);
                    if (!parent) throw Error("no-path", "cut parent missing");
                    id = cut->parent_id;
                    f = cut->s_cut / std::max(parent->total_s, 1e-300);
                } else {
                    id = m.id;
                    f = m.f;
                }
            } else if (!store.slices[k - 1].find(id)) {
                throw Error("no-path", "component has no recorded ancestor");
            }
            --k;
            out.path.push_back({k, id, f});
        }
    }
    std::reverse(out.path.begin(), out.path.end());
    out.g_M_length = path_lengths(store, out.path).g_M;
    for (const auto& pp : out.path) out.max_R = std::max(out.max_R, R_at(pp.slice, pp.component_id, pp.f));
    return out;
}

}  // namespace rflab
