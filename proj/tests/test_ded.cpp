#include <catch_amalgamated.hpp>

#include <cmath>

#include "stoch_euler/ded.hpp"

using namespace stoch_euler;
using Catch::Approx;

TEST_CASE("closed form agrees with the matrix exponential", "[ded]") {
    for (double a : {0.5, 1.0, 3.0}) {
        for (double h : {1e-3, 0.1, 0.2499, 0.25, 0.26, 0.9, 4.0}) {
            for (double t : {0.0, 0.01, 0.7, 5.0}) {
                const Ded1d c = ded_analytic_1d(a, 1.3, h, t);
                const DedState m = ded_linear(linear1d(a, 1.3), h, t);
                CHECK(c.w == Approx(m.w[0]).margin(1e-12));
                CHECK(c.wbar == Approx(m.wbar[0]).margin(1e-12));
            }
        }
    }
}

TEST_CASE("closed form is continuous across the double root", "[ded]") {
    const double a = 1.0, t = 2.0;
    const double h0 = 0.25;
    const Ded1d at = ded_analytic_1d(a, 1.0, h0, t);
    for (double dh : {1e-12, 1e-10, 1e-9, 1e-8}) {
        for (double sign : {-1.0, 1.0}) {
            const Ded1d near = ded_analytic_1d(a, 1.0, h0 + sign * dh, t);
            CHECK(near.w == Approx(at.w).margin(1e-6));
            CHECK(near.wbar == Approx(at.wbar).margin(1e-6));
        }
    }
}

TEST_CASE("closed form solves the deterministic Euler system", "[ded]") {
    const double a = 2.0, h = 0.3, u0 = 1.0, dt = 1e-5;
    for (double t : {0.1, 1.0, 3.0}) {
        const Ded1d m = ded_analytic_1d(a, u0, h, t - dt);
        const Ded1d c = ded_analytic_1d(a, u0, h, t);
        const Ded1d p = ded_analytic_1d(a, u0, h, t + dt);
        CHECK((p.w - m.w) / (2.0 * dt) == Approx(-a * c.wbar).margin(1e-8));
        CHECK((p.wbar - m.wbar) / (2.0 * dt) == Approx((c.w - c.wbar) / h).margin(1e-8));
    }
    const Ded1d z = ded_analytic_1d(a, 0.7, h, 0.0);
    CHECK(z.w == Approx(0.7));
    CHECK(z.wbar == Approx(0.7));
}

TEST_CASE("closed form parameter checks", "[ded]") {
    CHECK_THROWS_AS(ded_analytic_1d(0.0, 1.0, 0.1, 1.0), ParameterError);
    CHECK_THROWS_AS(ded_analytic_1d(1.0, 1.0, -0.1, 1.0), ParameterError);
    CHECK_THROWS_AS(ded_analytic_1d(1.0, 1.0, 0.1, -1.0), ParameterError);
}

TEST_CASE("RK4 integration of the augmented system matches the linear flow", "[ded]") {
    const LinearOde osc = oscillator();
    const DedPath path = ded_nonlinear(as_problem(osc), osc.u0, 0.4, 5.0, 1e-3);
    for (double t : {0.5, 2.0, 5.0}) {
        const DedState a = path(t);
        const DedState b = ded_linear(osc, 0.4, t);
        for (std::size_t j = 0; j < 2; ++j) {
            CHECK(a.w[j] == Approx(b.w[j]).margin(1e-9));
            CHECK(a.wbar[j] == Approx(b.wbar[j]).margin(1e-9));
        }
    }
}

TEST_CASE("gap and residual bounds hold on a grid", "[ded]") {
    for (const LinearOde& p : {linear1d(1.0), oscillator()}) {
        for (double h : {1e-3, 0.05, 0.5, 1.0}) {
            for (double t : {0.0, 0.1, 1.0, 10.0}) {
                const DedBoundReport r = ded_bound_check(p, h, t);
                CHECK(r.gap_holds);
                CHECK(r.residual_holds);
            }
        }
    }
}

TEST_CASE("generator of the deterministic Euler dynamics", "[ded]") {
    const OdeProblem p = as_problem(linear1d(2.0));
    DedTestFunction phi{[](const State& w, const State& wb) { return w[0] * wb[0]; },
                        [](const State&, const State& wb) { return State{wb[0]}; },
                        [](const State& w, const State&) { return State{w[0]}; }};
    // wbar * (-2 wbar) + w (w - wbar) / h at w = 1, wbar = 0.5, h = 0.25
    CHECK(apply_generator_ded(p, 0.25, phi, {1.0}, {0.5}) == Approx(-0.5 + 2.0));
}
