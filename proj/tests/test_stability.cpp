#include <catch_amalgamated.hpp>

#include <cmath>
#include <functional>

#include "stoch_euler/montecarlo.hpp"
#include "stoch_euler/stability.hpp"

using namespace stoch_euler;
using Catch::Approx;

namespace {

/// E[g(H)] for H ~ Exp(mean h), composite Simpson on [0, 80h].
double exp_expectation(const std::function<double(double)>& g, double h) {
    const int n = 40000;
    const double top = 80.0 * h, dx = top / n;
    double s = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double x = i * dx;
        const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        s += w * g(x) * std::exp(-x / h) / h;
    }
    return s * dx / 3.0;
}

}  // namespace

TEST_CASE("deterministic Euler stability threshold", "[stability]") {
    const auto eigs = eigenvalues(oscillator().a);
    CHECK(ded_stability_threshold(eigs) == Approx(2.0 / 3.0).epsilon(1e-14));
    const Complex real_only[] = {{-1.0, 0.0}, {-3.0, 0.0}};
    CHECK(std::isinf(ded_stability_threshold(real_only)));
    const Complex bad[] = {{0.0, 1.0}};
    CHECK_THROWS_AS(ded_stability_threshold(bad), HypothesisError);
}

TEST_CASE("eigenvalues of B change sign at the threshold", "[stability]") {
    const Matrix a = oscillator().a;
    CHECK(stability_report(a, 0.2).max_re_b < -1e-6);
    CHECK(stability_report(a, 0.6).max_re_b < -1e-6);
    CHECK(std::abs(stability_report(a, 2.0 / 3.0).max_re_b) <= 1e-10);
    CHECK(stability_report(a, 0.7).max_re_b > 1e-6);
    CHECK(stability_report(a, 0.6).stable);
    CHECK_FALSE(stability_report(a, 0.7).stable);
}

TEST_CASE("jump-chain moment factors match quadrature", "[stability]") {
    for (double a : {0.5, 1.0, 2.0}) {
        for (double h : {0.1, 0.45, 0.9}) {
            const MomentFactors f = jump_chain_moment_factors(a, h);
            CHECK(f.mean == Approx(exp_expectation([a](double x) { return 1.0 - a * x; }, h)).epsilon(1e-9));
            CHECK(f.m2 == Approx(exp_expectation([a](double x) { return (1.0 - a * x) * (1.0 - a * x); }, h))
                              .epsilon(1e-9));
            auto g = [a](double x) { return 1.0 - a * x + 0.5 * a * a * x * x; };
            const MomentFactors f2 = sed2_moment_factors(a, h);
            CHECK(f2.mean == Approx(exp_expectation(g, h)).epsilon(1e-9));
            CHECK(f2.m2 == Approx(exp_expectation([&](double x) { return g(x) * g(x); }, h)).epsilon(1e-9));
        }
    }
    CHECK_THROWS_AS(jump_chain_moment_factors(-1.0, 0.5), ParameterError);
}

TEST_CASE("second-moment threshold of the Taylor chain is the root of alpha = 1", "[stability]") {
    // alpha(x) - 1 = x (6x^3 - 6x^2 + 4x - 2); Newton on the cubic.
    double x = 0.7;
    for (int i = 0; i < 50; ++i) x -= (6 * x * x * x - 6 * x * x + 4 * x - 2) / (18 * x * x - 12 * x + 4);
    CHECK(sed2_m2_threshold() == Approx(x).epsilon(1e-14));
    CHECK(sed2_alpha(sed2_m2_threshold()) == Approx(1.0).margin(1e-12));
    CHECK(sed2_alpha(0.65) < 1.0);
    CHECK(sed2_alpha(0.78) > 1.0);
}

TEST_CASE("Foster-Lyapunov constants", "[stability]") {
    CHECK(default_kappa(1.0, 0.125) == Approx(1.98));
    const LyapunovSpec s = lyapunov_constants(1.0, 0.125, 1.98);
    CHECK(s.c3 == Approx(0.328904).margin(1e-6));
    CHECK(s.c1 == 1.0);
    CHECK(s.c2 == 0.0);
}

TEST_CASE("Foster-Lyapunov hypotheses are gated with readable messages", "[stability]") {
    CHECK_THROWS_WITH(lyapunov_constants(1.0, 1.5, 0.3), Catch::Matchers::StartsWith("ah < 1 violated"));
    CHECK_THROWS_WITH(lyapunov_constants(-1.0, 0.1, 0.3), "a > 0 violated");
    CHECK_THROWS_WITH(lyapunov_constants(1.0, 0.25, 2.5), Catch::Matchers::StartsWith("kappa < min(2a, 1/(2h)) violated"));
    const std::vector<double> eigs{1.0, 5.0};
    CHECK_THROWS_WITH(lyapunov_constants_multidim(eigs, 0.25, 1.0),
                      Catch::Matchers::StartsWith("lambda_max h < 1 violated"));
}

TEST_CASE("multidimensional c3' is the smallest one-dimensional c3", "[stability]") {
    const std::vector<double> eigs{1.0, 2.0};
    const double c3 = lyapunov_constants_multidim(eigs, 0.25, 1.98);
    CHECK(c3 == Approx(std::min(lyapunov_c3(1.0, 0.25, 1.98), lyapunov_c3(2.0, 0.25, 1.98))));
}

TEST_CASE("the recovered quadratic form reproduces -kappa L - A_h L", "[stability]") {
    const LyapunovSpec s = lyapunov_constants(1.0, 0.125, 1.98);
    const Matrix q = lyapunov_form(1.0, s);
    const OdeProblem p = as_problem(linear1d(1.0));
    const TestFunction phi = lyapunov_function(s);
    for (auto [v, vb] : {std::pair{0.3, -1.2}, std::pair{2.0, 0.7}, std::pair{-0.4, -0.4}}) {
        const double direct = -s.kappa * phi.value({v}, {vb}) - apply_generator_sed(p, s.h, phi, {v}, {vb});
        const double form = q(0, 0) * v * v + 2.0 * q(0, 1) * v * vb + q(1, 1) * vb * vb;
        CHECK(form == Approx(direct).epsilon(1e-12));
    }
}

TEST_CASE("Lyapunov function and gradient agree with finite differences", "[stability]") {
    const LyapunovSpec s{1.0, 0.125, 1.0, 1.0, 0.5, 0.3};
    const TestFunction phi = lyapunov_function(s);
    const double v = 0.8, vb = -0.2, e = 1e-6;
    const double fd = (phi.value({v + e}, {vb}) - phi.value({v - e}, {vb})) / (2 * e);
    CHECK(phi.grad_v({v}, {vb})[0] == Approx(fd).epsilon(1e-8));
    CHECK(phi.value({v}, {vb}) == Approx(v * v + 0.5 * vb * vb + 0.3 * (v - vb) * (v - vb)));
}

TEST_CASE("square lattice covers the box", "[stability]") {
    const auto g = square_lattice(3, -1.0, 1.0);
    REQUIRE(g.size() == 9);
    CHECK(g.front().v == -1.0);
    CHECK(g.back().vbar == 1.0);
    CHECK_THROWS_AS(square_lattice(1, 0.0, 1.0), ParameterError);
}

TEST_CASE("exact second moments agree with Monte Carlo", "[stability]") {
    const double a = 1.0, h = 0.25, t = 2.0;
    const auto m = exact_second_moments_1d(a, h, 1.0, t);
    const auto at0 = exact_second_moments_1d(a, h, 1.0, 0.0);
    CHECK(at0[0] == 1.0);
    CHECK(at0[2] == 1.0);
    SecondMomentOptions opt;
    opt.include_companion = true;
    const std::vector<double> ts{t};
    const auto cells = estimate_second_moment(linear1d(a), h, ts, 200000, {31, "moment-oracle", 1}, opt);
    REQUIRE(cells.size() == 1);
    const MomentCell& c = cells[0];
    CHECK(std::abs(c.v_sq.mean - m[0]) < 4.0 * c.v_sq.std_error);
    REQUIRE(c.gap_sq);
    CHECK(std::abs(c.gap_sq->mean - (m[0] - 2.0 * m[1] + m[2])) < 4.0 * c.gap_sq->std_error);
}
