#include <catch_amalgamated.hpp>

#include <cmath>

#include "stoch_euler/ode.hpp"

using namespace stoch_euler;
using Catch::Approx;

TEST_CASE("RK4 reference solver converges at fourth order", "[ode]") {
    const OdeProblem p = logistic();
    const State u0{0.1};
    const double t_end = 5.0;
    const double exact = p.exact(u0, t_end)[0];
    std::vector<double> err;
    for (double step : {0.2, 0.1, 0.05}) err.push_back(std::abs(reference_solve(p, u0, t_end, step).values().back()[0] - exact));
    CHECK(std::log2(err[0] / err[1]) == Approx(4.0).margin(0.25));
    CHECK(std::log2(err[1] / err[2]) == Approx(4.0).margin(0.25));
}

TEST_CASE("dense output interpolates to the solver's accuracy", "[ode]") {
    const OdeProblem p = as_problem(oscillator());
    const DensePath path = reference_solve(p, {1.0, 0.0}, 10.0, 1e-2);
    for (double t : {0.0, 0.123, 3.3333, 7.77, 10.0}) {
        const State ex = p.exact({1.0, 0.0}, t);
        const State got = path(t);
        CHECK(got[0] == Approx(ex[0]).margin(1e-8));
        CHECK(got[1] == Approx(ex[1]).margin(1e-8));
    }
    CHECK_THROWS_AS(path(10.5), RangeError);
}

TEST_CASE("reference solver lands exactly on t_end", "[ode]") {
    const DensePath path = reference_solve(logistic(), {0.5}, 1.05, 0.1);
    CHECK(path.t_end() == 1.05);
    CHECK(path.times().size() == 12);
}

TEST_CASE("linear problems carry f, Jf f and the exact flow", "[ode]") {
    const LinearOde lin = oscillator();
    const OdeProblem p = as_problem(lin);
    const State u{0.3, -0.8};
    const State f = eval_field(p.f, u);
    const State acc = eval_field(p.jf_f, u);
    CHECK(f[0] == Approx(-0.8));
    CHECK(f[1] == Approx(-0.3 + 0.8));
    // A^2 = [[-1, -1], [1, 0]]
    CHECK(acc[0] == Approx(-0.3 + 0.8));
    CHECK(acc[1] == Approx(0.3));
    const State ex = exact_linear_solution(lin, 2.0);
    const State viaflow = p.exact(lin.u0, 2.0);
    CHECK(ex[0] == Approx(viaflow[0]));
    CHECK(ex[1] == Approx(viaflow[1]));
}

TEST_CASE("one-dimensional model solution", "[ode]") {
    const LinearOde lin = linear1d(2.0, 3.0);
    CHECK(exact_linear_solution(lin, 0.5)[0] == Approx(3.0 * std::exp(-1.0)).epsilon(1e-14));
}

TEST_CASE("logistic field and its second derivative", "[ode]") {
    const OdeProblem p = logistic();
    const double u = 0.3, h = 1e-6;
    const double f = eval_field(p.f, {u})[0];
    // d/dt f(u(t)) = f'(u) f(u), checked by a central difference of f along f.
    const double fd = (eval_field(p.f, {u + h * f})[0] - eval_field(p.f, {u - h * f})[0]) / (2.0 * h);
    CHECK(eval_field(p.jf_f, {u})[0] == Approx(fd).epsilon(1e-8));
}

TEST_CASE("vector helpers", "[ode]") {
    const State x{3.0, -4.0}, y{0.0, 0.0};
    CHECK(norm2(x) == 5.0);
    CHECK(norm_inf(x) == 4.0);
    CHECK(distance2(x, y) == 5.0);
    CHECK(all_finite(x));
    CHECK_FALSE(all_finite(State{1.0, std::nan("")}));
    CHECK_THROWS_AS(exact_linear_solution(linear1d(1.0), -1.0), ParameterError);
    CHECK_THROWS_AS(validate_linear(LinearOde{Matrix(2, 2), State{1.0}}), DimensionError);
}
