#include <catch2/catch_amalgamated.hpp>

#include "rflab/flow.hpp"

using namespace rflab;

namespace {

// Closed-form round-sphere flow: r(t)^2 = r0^2 - 4t, psi = r sin(s/r).
RadialProfile exact_sphere_at(double r0, double t, std::size_t n) {
    return build_round_sphere(std::sqrt(r0 * r0 - 4.0 * t), n);
}

double max_R_rel_err(const RadialProfile& p, double exact) {
    auto c = compute_curvature(p);
    double worst = 0.0;
    for (double r : c.R) worst = std::max(worst, std::abs(r - exact) / exact);
    return worst;
}

}  // namespace

TEST_CASE("ricci_rhs: round sphere shrinks at rate -2/r0 at the equator") {
    const double r0 = std::sqrt(2.0);
    auto p = build_round_sphere(r0, 257);
    auto rhs = ricci_rhs(p);
    const std::size_t eq = p.size() / 2;
    CHECK(rhs.dpsi[eq] == Catch::Approx(-2.0 / r0).epsilon(1e-6));
}

TEST_CASE("ricci_rhs: cylinder shrinks at rate -1/r uniformly") {
    const double r = std::sqrt(2.0);
    auto p = build_cylinder_segment(r, 10.0, 256);
    auto rhs = ricci_rhs(p);
    for (std::size_t i = 0; i < p.size(); ++i) {
        CHECK(rhs.dpsi[i] == Catch::Approx(-1.0 / r).epsilon(1e-12));
        CHECK(rhs.dphi[i] == Catch::Approx(0.0).margin(1e-12));
    }
}

TEST_CASE("ricci_rhs: matches central time-difference of the exact sphere flow") {
    const double r0 = std::sqrt(2.0), t0 = 0.1, dt = 1e-6;
    const std::size_t n = 257;
    auto p = exact_sphere_at(r0, t0, n);
    auto pm = exact_sphere_at(r0, t0 - dt, n);
    auto pp = exact_sphere_at(r0, t0 + dt, n);
    auto rhs = ricci_rhs(p);
    // the exact flow keeps x fixed, so node-wise quotients approximate d/dt
    for (std::size_t i = 8; i < n - 8; i += 16) {
        const double fd_psi = (pp.psi[i] - pm.psi[i]) / (2.0 * dt);
        const double fd_phi = (pp.phi[i] - pm.phi[i]) / (2.0 * dt);
        CHECK(rhs.dpsi[i] == Catch::Approx(fd_psi).margin(1e-6));
        CHECK(rhs.dphi[i] == Catch::Approx(fd_phi).margin(1e-6));
    }
}

TEST_CASE("step: zero steps leave the state identical") {
    FlowState s;
    s.profile = build_round_sphere(1.0, 128);
    FlowState copy = s;
    CHECK(copy.t == s.t);
    CHECK(copy.step_count == s.step_count);
    CHECK(copy.profile.psi == s.profile.psi);
}

TEST_CASE("step then evolve: round sphere reaches R = 6 at t = 0.25 within 1e-3") {
    FlowState s;
    s.profile = build_round_sphere(std::sqrt(2.0), 512);
    StepControl ctl;
    auto [out, reason] = evolve(s, SurgerySchedule{}, 0.25, nullptr, ctl);
    REQUIRE(reason.kind == StopReason::HorizonReached);
    CHECK(out.t == Catch::Approx(0.25).margin(1e-12));
    CHECK(max_R_rel_err(out.profile, 6.0) < 1e-3);
}

TEST_CASE("evolve: cylinder follows R(t) = R0/(1 - R0 t) within 1e-3 until R = 100") {
    // R0 = 1 for radius sqrt(2); R = 100 at t = 0.99
    FlowState s;
    s.profile = build_cylinder_segment(std::sqrt(2.0), 10.0, 256);
    StepControl ctl;
    ctl.cfl = 0.01;  // temporal accuracy for the stiff tail of this closed form
    auto [out, reason] = evolve(s, SurgerySchedule{}, 0.99, nullptr, ctl);
    REQUIRE(reason.kind == StopReason::HorizonReached);
    CHECK(max_R_rel_err(out.profile, 1.0 / (1.0 - 0.99)) < 1e-3);
}

TEST_CASE("evolve: round sphere stops discard-due or extinct before t = 0.5") {
    FlowState s;
    s.profile = build_round_sphere(std::sqrt(2.0), 256);
    auto [out, reason] = evolve(s, SurgerySchedule{}, 10.0, nullptr, StepControl{});
    CHECK(out.t < 0.5);
    CHECK((reason.kind == StopReason::DiscardDue || reason.kind == StopReason::Extinct));
}

TEST_CASE("evolve: thin-neck dumbbell stops surgery-due with the trigger at the waist") {
    FlowState s;
    s.profile = build_dumbbell({1.0, 0.1, 1.0}, 512);
    auto rep = check_normalized(s.profile);
    s.profile = rescale_metric(s.profile, rep.worst_eigenvalue);
    auto [out, reason] = evolve(s, SurgerySchedule{}, 10.0, nullptr, StepControl{});
    REQUIRE(reason.kind == StopReason::SurgeryDue);
    auto c = compute_curvature(out.profile);
    std::size_t amax = 0;
    for (std::size_t i = 0; i < c.R.size(); ++i)
        if (c.R[i] > c.R[amax]) amax = i;
    // trigger node sits in the (rescaled) waist band, away from the bumps
    auto sarc = arclength(out.profile);
    const double frac = sarc[amax] / sarc.back();
    CHECK(frac > 0.3);
    CHECK(frac < 0.7);
    CHECK(reason.trigger_value >= 1.0 / sq(SurgerySchedule{}.h(out.t)));
}

TEST_CASE("evolve: horizon 0 returns immediately") {
    FlowState s;
    s.profile = build_round_sphere(1.0, 128);
    auto [out, reason] = evolve(s, SurgerySchedule{}, 0.0, nullptr, StepControl{});
    CHECK(reason.kind == StopReason::HorizonReached);
    CHECK(out.step_count == 0);
}

TEST_CASE("evolve: refinement improves R(t_probe) by a factor >= 3 on the round sphere") {
    auto run = [&](std::size_t n, double cfl) {
        FlowState s;
        s.profile = build_round_sphere(std::sqrt(2.0), n);
        StepControl ctl;
        ctl.cfl = cfl;
        auto [out, reason] = evolve(s, SurgerySchedule{}, 0.3, nullptr, ctl);
        return max_R_rel_err(out.profile, 6.0 / (2.0 - 4.0 * 0.3));
    };
    const double coarse = run(128, 0.2);
    const double fine = run(256, 0.1);
    CHECK(coarse / fine >= 3.0);
}

TEST_CASE("evolve: recorded min R is nondecreasing for the round sphere") {
    FlowState s;
    s.profile = build_round_sphere(std::sqrt(2.0), 256);
    std::vector<double> minR;
    auto rec = [&](const FlowState&, const CurvatureField& c) { minR.push_back(c.min_R()); };
    evolve(s, SurgerySchedule{}, 0.4, rec, StepControl{});
    for (std::size_t i = 1; i < minR.size(); ++i) CHECK(minR[i] >= minR[i - 1] - 1e-9);
}

TEST_CASE("step: volume strictly decreases when R > 0 everywhere") {
    FlowState s;
    s.profile = build_round_sphere(1.3, 256);
    StepControl ctl;
    double v_prev = slice_volume(s.profile);
    for (int k = 0; k < 50; ++k) {
        s = step(s, ctl);
        const double v = slice_volume(s.profile);
        CHECK(v < v_prev);
        v_prev = v;
    }
}
