#include <catch2/catch_amalgamated.hpp>

#include "rflab/profile.hpp"
#include "oracle_curvature.hpp"

using namespace rflab;

namespace {

RadialProfile sphere(double r0, std::size_t n = 256) { return build_round_sphere(r0, n); }

BuildKind dumbbell_kind(double b, double nr, double nw) {
    BuildKind k;
    k.tag = BuildKind::Dumbbell;
    k.dumbbell = {b, nr, nw};
    return k;
}

}  // namespace

TEST_CASE("build_profile: round sphere matches closed form") {
    auto p = sphere(std::sqrt(2.0), 256);
    auto s = arclength(p);
    double worst = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double exact = std::sqrt(2.0) * std::sin(s[i] / std::sqrt(2.0));
        worst = std::max(worst, std::abs(p.psi[i] - exact));
    }
    CHECK(worst < 1e-10);
}

TEST_CASE("build_profile: cylinder segment is constant") {
    auto p = build_cylinder_segment(std::sqrt(2.0), 10.0, 256);
    for (double v : p.psi) CHECK(v == std::sqrt(2.0));
    CHECK(total_arclength(p) == Catch::Approx(10.0));
}

namespace {

// The documented dumbbell construction, evaluated directly (test oracle).
double dumbbell_shape(double u, double B, double rn, double w, double* L_out = nullptr) {
    const double theta = 2.0 * rflab::kPi / 3.0;
    const double uB = B * theta;
    const double psi0 = B * std::sin(theta);
    const double m0 = std::cos(theta);
    const double c0 = -std::sin(theta) / B;
    const double Lt = 2.6 * (psi0 - rn);
    const double L = 2.0 * uB + 2.0 * Lt + w;
    if (L_out) *L_out = L;
    if (u > 0.5 * L) u = L - u;
    if (u <= uB) return B * std::sin(u / B);
    if (u <= uB + Lt) {
        const double t = (u - uB) / Lt;
        return quintic_hermite(t, psi0, m0 * Lt, c0 * Lt * Lt, rn, 0.0, 0.0);
    }
    return rn;
}

}  // namespace

TEST_CASE("build_profile: dumbbell has interior min exactly neck_radius at center") {
    auto p = build_profile(dumbbell_kind(1.0, 0.25, 1.0), 513);
    // odd node count puts a node exactly at x = 1/2 (the waist center)
    std::size_t mid = p.size() / 2;
    CHECK(p.psi[mid] == Catch::Approx(0.25).margin(1e-12));
    // min over the central half (the neck region) is exactly the waist radius
    double neck_min = 1e300;
    for (std::size_t i = p.size() / 4; i <= 3 * p.size() / 4; ++i)
        neck_min = std::min(neck_min, p.psi[i]);
    CHECK(neck_min == Catch::Approx(0.25).margin(1e-12));
    // strictly above the waist level outside the neck region
    CHECK(p.psi[p.size() / 4] > 0.3);
    // oracle: evaluate the documented piecewise formula directly
    double L = 0.0;
    dumbbell_shape(0.0, 1.0, 0.25, 1.0, &L);
    for (std::size_t i = 1; i + 1 < p.size(); i += 37) {
        const double expect = dumbbell_shape(L * p.x[i], 1.0, 0.25, 1.0);
        CHECK(p.psi[i] == Catch::Approx(expect).margin(1e-12));
    }
}

TEST_CASE("build_profile: parameter validation") {
    BuildKind k;
    k.tag = BuildKind::RoundSphere;
    k.r0 = -1.0;
    CHECK_THROWS_AS(build_profile(k, 256), Error);
    k.r0 = 1.0;
    CHECK_THROWS_AS(build_profile(k, 32), Error);
    CHECK_THROWS_AS(build_profile(dumbbell_kind(0.5, 0.6, 1.0), 256), Error);
}

TEST_CASE("compute_curvature: round sphere r0=sqrt(2) has R=3, lambda=(1,1,1)") {
    auto p = sphere(std::sqrt(2.0), 512);
    auto c = compute_curvature(p);
    for (std::size_t i = 0; i < p.size(); ++i) {
        CHECK(c.R[i] == Catch::Approx(3.0).margin(1e-7));
        for (int j = 0; j < 3; ++j)
            CHECK(c.lambda[i][j] == Catch::Approx(1.0).margin(1e-7));
    }
}

TEST_CASE("compute_curvature: cylinder r=sqrt(2) has R=1, K_rad=0, K_sph=1/2") {
    auto p = build_cylinder_segment(std::sqrt(2.0), 10.0, 256);
    auto c = compute_curvature(p);
    for (std::size_t i = 0; i < p.size(); ++i) {
        CHECK(c.R[i] == Catch::Approx(1.0).margin(1e-12));
        CHECK(c.K_rad[i] == Catch::Approx(0.0).margin(1e-12));
        CHECK(c.K_sph[i] == Catch::Approx(0.5).margin(1e-12));
    }
}

TEST_CASE("compute_curvature: agrees with generic-coordinates finite-difference oracle") {
    // smooth aperiodic profile on an open segment (poles avoided)
    auto phi_fn = [](double x) { return 1.1 + 0.3 * std::sin(2.0 * x + 0.7); };
    auto psi_fn = [](double x) { return 0.8 + 0.25 * std::cos(3.0 * x); };
    const std::size_t n = 2049;
    RadialProfile p;
    p.x = linspace(0.0, 1.0, n);
    p.phi.resize(n);
    p.psi.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        p.phi[i] = phi_fn(p.x[i]);
        p.psi[i] = psi_fn(p.x[i]);
    }
    p.cap_lo = p.cap_hi = CapKind::OpenEnd;
    auto c = compute_curvature(p);

    rflab_test::MetricFns M{phi_fn, psi_fn};
    for (double xq : {0.2, 0.45, 0.7}) {
        const std::size_t i = static_cast<std::size_t>(std::llround(xq * (n - 1)));
        const double oracle = rflab_test::scalar_curvature_oracle(M, p.x[i], 0.9);
        CHECK(std::abs(c.R[i] - oracle) / std::abs(oracle) < 1e-6);
    }
}

TEST_CASE("compute_curvature: degenerate interior psi is rejected") {
    auto p = sphere(1.0, 128);
    p.psi[64] = 0.0;
    CHECK_THROWS_AS(compute_curvature(p), Error);
}

TEST_CASE("slice_volume: closed forms") {
    auto p = sphere(std::sqrt(2.0), 256);
    const double exact = 2.0 * kPi * kPi * std::pow(2.0, 1.5);
    CHECK(std::abs(slice_volume(p) - exact) / exact < 1e-4);

    auto cyl = build_cylinder_segment(std::sqrt(2.0), 10.0, 256);
    CHECK(slice_volume(cyl) == Catch::Approx(80.0 * kPi).epsilon(1e-10));
}

TEST_CASE("slice_volume: dumbbell matches 10x-refined midpoint Riemann sum") {
    auto p = build_profile(dumbbell_kind(1.0, 0.25, 1.0), 512);
    const double v = slice_volume(p);
    // oracle: midpoint Riemann sum of the documented formula on a 10x grid
    double L = 0.0;
    dumbbell_shape(0.0, 1.0, 0.25, 1.0, &L);
    const std::size_t m = 5120;
    double acc = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double u = L * (i + 0.5) / m;
        const double psi = dumbbell_shape(u, 1.0, 0.25, 1.0);
        acc += psi * psi * L / m;
    }
    const double oracle = 4.0 * kPi * acc;
    CHECK(std::abs(v - oracle) / oracle < 1e-5);
}

TEST_CASE("check_normalized: spheres") {
    auto rep = check_normalized(sphere(std::sqrt(2.0), 256));
    CHECK(rep.is_normalized);
    CHECK(rep.worst_eigenvalue == Catch::Approx(1.0).margin(1e-7));

    auto rep1 = check_normalized(sphere(1.0, 256));
    CHECK_FALSE(rep1.is_normalized);
    CHECK(rep1.worst_eigenvalue == Catch::Approx(2.0).margin(1e-6));
}

TEST_CASE("check_normalized: dumbbell fails, passes after rescaling by worst eigenvalue") {
    auto p = build_profile(dumbbell_kind(1.0, 0.25, 1.0), 512);
    auto rep = check_normalized(p);
    CHECK_FALSE(rep.is_normalized);
    CHECK(rep.worst_eigenvalue > 1.0);
    // g -> c g scales lambda by 1/c
    auto q = rescale_metric(p, rep.worst_eigenvalue);
    auto rep2 = check_normalized(q);
    CHECK(rep2.worst_eigenvalue == Catch::Approx(1.0).margin(1e-6));
    CHECK(rep2.is_normalized);
}

TEST_CASE("remesh_arclength: idempotent on uniform profiles") {
    auto p = sphere(1.0, 256);
    const double spacing = total_arclength(p) / 255.0;
    auto q = remesh_arclength(p, spacing);
    REQUIRE(q.size() == p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        CHECK(q.psi[i] == p.psi[i]);
        CHECK(q.phi[i] == p.phi[i]);
    }
}

TEST_CASE("remesh_arclength: skewed round sphere still has R = 3 after remesh") {
    // exactly round geometry, skewed parametrization
    const double r0 = std::sqrt(2.0);
    const double S = kPi * r0;
    const std::size_t n = 512;
    RadialProfile p;
    p.x = linspace(0.0, 1.0, n);
    p.phi.resize(n);
    p.psi.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = p.x[i];
        const double sx = S * (x + 0.08 * std::sin(2.0 * kPi * x));  // strictly increasing
        const double dsdx = S * (1.0 + 0.08 * 2.0 * kPi * std::cos(2.0 * kPi * x));
        p.psi[i] = r0 * std::sin(sx / r0);
        p.phi[i] = dsdx;
    }
    p.psi.front() = p.psi.back() = 0.0;
    p.cap_lo = p.cap_hi = CapKind::SmoothPole;

    auto q = remesh_arclength(p, total_arclength(p) / (n - 1));
    auto c = compute_curvature(q);
    for (std::size_t i = 0; i < q.size(); ++i)
        CHECK(c.R[i] == Catch::Approx(3.0).margin(1e-6));
    // total arclength preserved
    CHECK(std::abs(total_arclength(q) - total_arclength(p)) / total_arclength(p) < 1e-8);
}

TEST_CASE("remesh_arclength: 4x refinement changes dumbbell volume by < 1e-6 relative") {
    auto p = build_profile(dumbbell_kind(1.0, 0.25, 1.0), 512);
    const double v0 = slice_volume(p);
    auto q = remesh_arclength(p, total_arclength(p) / (4 * 511));
    const double v1 = slice_volume(q);
    CHECK(std::abs(v1 - v0) / v0 < 1e-6);
}

TEST_CASE("invariants: trace identity lambda1+lambda2+lambda3 = R") {
    auto p = build_profile(dumbbell_kind(1.0, 0.3, 0.8), 512);
    auto c = compute_curvature(p);
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double tr = c.lambda[i][0] + c.lambda[i][1] + c.lambda[i][2];
        CHECK(std::abs(tr - c.R[i]) <= 1e-12 * std::max(1.0, std::abs(c.R[i])));
    }
}

TEST_CASE("invariants: scaling covariance of curvature and volume") {
    auto p = build_profile(dumbbell_kind(1.0, 0.3, 0.8), 512);
    auto c0 = compute_curvature(p);
    const double v0 = slice_volume(p);
    for (double c : {0.5, 2.0, 10.0}) {
        auto q = rescale_metric(p, c);
        auto c1 = compute_curvature(q);
        for (std::size_t i = 0; i < p.size(); i += 17) {
            CHECK(c1.R[i] == Catch::Approx(c0.R[i] / c).margin(1e-9 * std::abs(c0.R[i]) + 1e-12));
            CHECK(c1.lambda[i][0] == Catch::Approx(c0.lambda[i][0] / c).margin(1e-9));
        }
        CHECK(slice_volume(q) == Catch::Approx(v0 * std::pow(c, 1.5)).epsilon(1e-12));
    }
}

TEST_CASE("invariants: pole regularity K_rad = K_sph at smooth poles") {
    auto p = build_profile(dumbbell_kind(1.0, 0.3, 0.8), 512);
    auto c = compute_curvature(p);
    CHECK(c.K_rad.front() == Catch::Approx(c.K_sph.front()).epsilon(1e-9));
    CHECK(c.K_rad.back() == Catch::Approx(c.K_sph.back()).epsilon(1e-9));
    // and just inside the pole the two limits agree to grid tolerance
    CHECK(c.K_rad[1] == Catch::Approx(c.K_sph[1]).epsilon(2e-2));
}
