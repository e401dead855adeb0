#include "ocbf/cbf.hpp"

#include "doctest.h"
#include "lie_check.hpp"

#include <random>

using namespace ocbf;

TEST_SUITE("cbf") {

TEST_CASE("rear-end examples") {
    CbfConfig cfg;
    cfg.p = 1;
    const Plant di;
    // z = delta, equal speeds: the row reads -u >= 0.
    const ConstraintRow a = rear_end_row({0, 10}, {cfg.delta, 10}, cfg, di);
    CHECK(a.coef_u == -1.0);
    CHECK(a.margin(0) == doctest::Approx(0).scale(1));
    CHECK(a.margin(0.1) < 0);

    CbfConfig phi = cfg;
    phi.phi_rear = 1.8;
    phi.gamma_k = 1;
    const ConstraintRow b = rear_end_row({0, 5}, {20, 5}, phi, di);
    CHECK(b.coef_u == doctest::Approx(-1.8));
    CHECK(b.margin(5.0 / 9.0) == doctest::Approx(0).scale(1));

    Plant nl;
    nl.kind = DynamicsKind::Nonlinear;
    const ConstraintRow c = rear_end_row({0, 5}, {20, 5}, phi, nl);
    CHECK(c.coef_u == doctest::Approx(-1.8 / nl.params.m));
    CHECK(c.lie_f == doctest::Approx(1.8 * resistance_force(5, nl.params) / nl.params.m));
}

TEST_CASE("lateral examples") {
    CbfConfig cfg;
    cfg.gamma_k = 1;
    const Plant di;
    const ConstraintRow r = lateral_row({162.5, 10}, {187.5, 10}, 325, cfg, di);
    CHECK(r.lie_f == doctest::Approx(-(1.8 / 325) * 100));
    CHECK(r.lie_g == doctest::Approx(-0.9));
    CHECK(r.barrier == doctest::Approx(6));
    const double u_cap = (r.lie_f + 6) / 0.9;
    CHECK(u_cap == doctest::Approx(6.051).epsilon(1e-3));
    CHECK(r.margin(u_cap) == doctest::Approx(0).scale(1));

    // At entry there is no control authority; the drift keeps the d(x v)/dt = v^2 term.
    const ConstraintRow e = lateral_row({0, 10}, {30, 12}, 325, cfg, di);
    CHECK(e.coef_u == 0.0);
    CHECK(e.margin(0) == doctest::Approx(2 - 1.8 / 325 * 100 + (30 - 10)));
    // At the MP the barrier is the crossing headway condition.
    const ConstraintRow m = lateral_row({325, 10}, {360, 12}, 325, cfg, di);
    CHECK(m.barrier == doctest::Approx(35 - 1.8 * 10 - 10));
}

TEST_CASE("braking examples") {
    CbfConfig cfg;
    const Plant di;
    CHECK_FALSE(braking_row({100, 8}, {140, 8.001}, 325, cfg, di, -3).has_value());
    const auto same = braking_row({100, 8}, {140, 8}, 325, cfg, di, -3);
    REQUIRE(same.has_value());
    CHECK(same->barrier == doctest::Approx(lateral_barrier({100, 8}, {140, 8}, 325, cfg)));
    const auto r = braking_row({100, 12}, {140, 8}, 325, cfg, di, -3);
    REQUIRE(r.has_value());
    const double expect = 40 - 1.8 * (100 + 0.5 * (144 - 64) / 3) * 8 / 325 - 0.5 * 16 / 3 - 10;
    CHECK(r->barrier == doctest::Approx(expect));
}

TEST_CASE("speed limits") {
    CbfConfig cfg;
    cfg.gamma_k = 1;
    VehicleLimits lim;
    const Plant di;
    auto at_max = limit_rows({0, lim.v_max}, lim, cfg, di);
    CHECK(at_max[0].margin(0) == doctest::Approx(0).scale(1));
    CHECK(at_max[0].margin(0.01) < 0);
    auto at_min = limit_rows({0, lim.v_min}, lim, cfg, di);
    CHECK(at_min[1].margin(0) == doctest::Approx(0).scale(1));
    CHECK(at_min[1].margin(-0.01) < 0);
    auto mid = limit_rows({0, 10}, lim, cfg, di);
    CHECK(mid[0].margin(5) == doctest::Approx(0).scale(1));
}

TEST_CASE("CLF row") {
    const Plant di;
    const ConstraintRow on = clf_row({0, 10}, 10, 10, di);
    CHECK(on.coef_u == 0.0);
    CHECK(on.coef_e == -1.0);
    CHECK(on.margin(3, 0) == doctest::Approx(0).scale(1));
    const ConstraintRow off = clf_row({0, 11}, 10, 10, di);
    // 2u + 10 <= e
    CHECK(off.margin(1, 12) == doctest::Approx(0).scale(1));
    CHECK(off.margin(1, 11.9) < 0);
    const ConstraintRow neg = clf_row({0, 9}, 10, 10, di);
    CHECK(neg.coef_u == -off.coef_u);
    CHECK(neg.rhs == off.rhs);
}

TEST_CASE("relaxation") {
    CbfConfig cfg;
    const Plant di;
    const ConstraintRow r = rear_end_row({0, 10}, {5, 10}, cfg, di);
    REQUIRE(r.barrier < 0);
    const ConstraintRow same = relax_row(r, 1.0);
    CHECK(same.coef_c == 0.0);
    CHECK(same.rhs == r.rhs);
    const ConstraintRow x = relax_row(r, r.barrier);
    CHECK(x.coef_c == -1.0);
    CHECK(x.coef_e == 0.0);
    // L_f b + L_g b u >= c
    CHECK(x.margin(-1, 0, 0.5) == doctest::Approx(r.lie_f + r.lie_g * -1 - 0.5));
}

TEST_CASE("Lie derivatives match finite differences") {
    std::mt19937_64 rng(21);
    for (bool nonlinear : {false, true}) {
        Plant plant;
        if (nonlinear) plant.kind = DynamicsKind::Nonlinear;
        for (auto kind : lie::all_kinds()) {
            const auto stats = lie::check_kind(kind, plant, rng, 200);
            CAPTURE(lie::name(kind));
            CAPTURE(nonlinear);
            CHECK(stats.worst <= stats.tolerance);
        }
    }
}

}
