#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "occuflux/quadrature.hpp"
#include "occuflux/simulator.hpp"
#include "occuflux/veqn.hpp"

using namespace occuflux;

namespace {

SystemParams reference(double T) {
    SystemParams p;
    p.V = 1.0;
    p.q = 0.25;
    p.H = 0.5;
    p.L = 1.0;
    p.T = T;
    return validate_params(p);
}

ScaledSpaceTimeTest weight(double time_scale, double amp) {
    ScaledSpaceTimeTest psi;
    psi.time_scale = time_scale;
    psi.amp = amp;
    return psi;
}

}  // namespace

TEST_SUITE("veqn") {

TEST_CASE("solver invariants on a small problem") {
    const SystemParams p = reference(4.0);
    const ScaledSpaceTimeTest psi = weight(4.0, 0.3);
    VGrid g = solve_v(p, psi, 0.0, 4.0);

    CHECK(g.iterations >= 2);
    CHECK(g.residual <= 1e-10);
    CHECK(g.refine_delta <= 1e-4);
    REQUIRE(g.v.size() == g.tau.size() * g.x.size());

    const std::size_t m = g.tau.size() - 1;
    for (std::size_t i = 0; i < g.x.size(); ++i) CHECK(g.v[g.idx(0, i)] == 0.0);
    double vmin = 1e300, vmax = -1e300;
    for (double v : g.v) {
        vmin = std::min(vmin, v);
        vmax = std::max(vmax, v);
    }
    CHECK(vmin >= -1e-10);
    CHECK(vmax < 1.0);
    CHECK(vmax > 0.0);

    // centered weight: v inherits the spatial symmetry
    CHECK(g.v_at(1.3, m) == doctest::Approx(g.v_at(-1.3, m)).epsilon(1e-10));

    // v never exceeds its linearization
    for (std::size_t k = 0; k <= m; ++k)
        for (std::size_t i = 0; i < g.x.size(); ++i)
            CHECK(g.v_tilde[g.idx(k, i)] - g.v[g.idx(k, i)] >= -1e-10);
}

TEST_CASE("grid linearization matches the adaptive-quadrature point operator") {
    const SystemParams p = reference(4.0);
    const ScaledSpaceTimeTest psi = weight(4.0, 0.3);
    VGrid g = solve_v(p, psi, 0.0, 4.0);
    const std::size_t m = g.tau.size() - 1;
    for (double x : {0.0, 0.7, -2.1}) {
        const double direct = v_tilde(p, psi, x, 0.0, 4.0);
        CHECK(g.v_tilde_at(x, m) == doctest::Approx(direct).epsilon(1e-3));
    }
}

TEST_CASE("defect is second order in the weight") {
    const SystemParams p = reference(4.0);

    ScaledSpaceTimeTest psi1 = weight(4.0, 1e-3);
    VGrid g1 = solve_v(p, psi1, 0.0, 4.0);
    const DefectReport r1 = defect_u(p, psi1, g1);

    ScaledSpaceTimeTest psi2 = weight(4.0, 2e-3);
    VGrid g2 = solve_v(p, psi2, 0.0, 4.0);
    const DefectReport r2 = defect_u(p, psi2, g2);

    CHECK(r1.sup_diff <= 1e-6);
    CHECK(r2.sup_diff <= 1e-6);
    CHECK(r1.sup_u <= 1e-5);
    CHECK(r2.sup_u / r1.sup_u == doctest::Approx(4.0).epsilon(0.15));
}

TEST_CASE("v is monotone in the weight amplitude") {
    const SystemParams p = reference(4.0);
    VGrid lo = solve_v(p, weight(4.0, 0.3), 0.0, 4.0);
    VGrid hi = solve_v(p, weight(4.0, 0.6), 0.0, 4.0);
    REQUIRE(lo.v.size() == hi.v.size());
    const std::size_t m = lo.tau.size() - 1;
    for (std::size_t i = 0; i < lo.x.size(); ++i)
        CHECK(hi.v[hi.idx(m, i)] >= lo.v[lo.idx(m, i)] - 1e-12);
}

TEST_CASE("defect constant stays bounded as the horizon grows") {
    std::vector<double> constants;
    for (double T : {16.0, 36.0, 64.0}) {
        const SystemParams p = reference(T);
        ScaledSpaceTimeTest psi = weight(T, 1.0 / std::sqrt(T));
        VGrid g = solve_v(p, psi, 0.0, T);
        const DefectReport r = defect_u(p, psi, g);
        CHECK(r.sup_diff <= 1e-6);
        constants.push_back(r.bound_constant);
    }
    const double lo = *std::min_element(constants.begin(), constants.end());
    const double hi = *std::max_element(constants.begin(), constants.end());
    CHECK(lo > 0.0);
    CHECK(hi / lo <= 2.0);
}

TEST_CASE("ou motion goes through the same machinery") {
    SystemParams p = reference(2.0);
    p.motion.kind = MotionKind::OrnsteinUhlenbeck;
    p.motion.theta = 0.3;
    p.Q = -1.0;
    p.F_T = -1.0;
    p = validate_params(p);

    const ScaledSpaceTimeTest psi = weight(2.0, 0.4);
    VGrid g = solve_v(p, psi, 0.0, 2.0);
    const std::size_t m = g.tau.size() - 1;
    for (double x : {0.0, 1.1}) {
        const double direct = v_tilde(p, psi, x, 0.0, 2.0);
        CHECK(g.v_tilde_at(x, m) == doctest::Approx(direct).epsilon(2e-3));
    }
}

TEST_CASE("input validation") {
    const SystemParams p = reference(2.0);
    SUBCASE("only d = 1") {
        SystemParams p2;
        p2.d = 2;
        p2.T = 2.0;
        p2 = validate_params(p2);
        CHECK_THROWS_AS(solve_v(p2, weight(2.0, 0.3), 0.0, 2.0), std::invalid_argument);
    }
    SUBCASE("stable motion is not supported by the grid solver") {
        SystemParams ps = reference(2.0);
        ps.motion.kind = MotionKind::AlphaStable;
        ps.motion.alpha = 1.5;
        CHECK_THROWS_AS(solve_v(ps, weight(2.0, 0.3), 0.0, 2.0), std::invalid_argument);
    }
    SUBCASE("degenerate extents") {
        CHECK_THROWS_AS(solve_v(p, weight(2.0, 0.3), -1.0, 2.0), std::invalid_argument);
        CHECK_THROWS_AS(solve_v(p, weight(2.0, 0.3), 0.0, 0.0), std::invalid_argument);
        CHECK_THROWS_AS(solve_v(p, weight(0.0, 0.3), 0.0, 2.0), std::invalid_argument);
    }
}

TEST_CASE("laplace functional of the immigration system") {
    const SystemParams p = reference(9.0);
    SpaceTimeTest Phi;

    const LaplaceResult lr = laplace_K(p, Phi, 9.0);
    CHECK(lr.K > 0.0);
    CHECK(lr.K < 1.0);
    CHECK(lr.mean_term > 0.0);
    CHECK(lr.L_centered == doctest::Approx(lr.K * std::exp(lr.mean_term)).epsilon(1e-12));

    // The linear part of the exponent is the expected occupation integral,
    // which also comes out of the closed-form mean occupancy by Fubini.
    const double expected_mean =
        integrate(
            [&](double s) {
                return (Phi.chi(s / 9.0) / p.F_T) * mean_occupancy(p, s, Phi.phi);
            },
            0.0, 9.0)
            .value;
    CHECK(lr.mean_term == doctest::Approx(expected_mean).epsilon(2e-3));
}

TEST_CASE("laplace functional is nearly linear for a tiny weight") {
    const SystemParams p = reference(4.0);
    SpaceTimeTest Phi;
    Phi.phi.a = 1e-6;
    const LaplaceResult lr = laplace_K(p, Phi, 4.0);
    CHECK(std::abs(lr.K - (1.0 - lr.mean_term)) <= 4.0 * lr.mean_term * lr.mean_term);
    CHECK(std::abs(std::log(lr.L_centered)) <= 4.0 * lr.mean_term * lr.mean_term);
}

}  // TEST_SUITE
