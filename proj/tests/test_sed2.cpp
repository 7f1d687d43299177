#include <catch_amalgamated.hpp>

#include <cmath>

#include "stoch_euler/linalg.hpp"
#include "stoch_euler/sed2.hpp"

using namespace stoch_euler;
using Catch::Approx;

TEST_CASE("SED2 keeps Y2 continuous and resets the companion to Y1", "[sed2]") {
    const OdeProblem p = logistic();
    RandomStream s = derive_stream({21, "sed2-path", 0});
    const Sed2Path path = simulate_sed2(p, {0.25}, 0.3, 8.0, s);
    REQUIRE(path.jump_times.size() > 5);
    CHECK(path.node_y2[0][0] == Approx(eval_field(p.f, {0.25})[0]));
    for (std::size_t k = 0; k + 1 < path.jump_times.size(); ++k) {
        const double sk = path.jump_times[k + 1] - path.jump_times[k];
        const double acc = path.accel[k][0];
        CHECK(acc == Approx(eval_field(p.jf_f, path.companion(k))[0]).epsilon(1e-15));
        CHECK(path.node_y2[k + 1][0] == Approx(path.node_y2[k][0] + sk * acc).epsilon(1e-13));
        CHECK(path.node_y1[k + 1][0] ==
              Approx(path.node_y1[k][0] + sk * path.node_y2[k][0] + 0.5 * sk * sk * acc).epsilon(1e-13));
        CHECK(path.companion(k + 1) == path.node_y1[k + 1]);
    }
    const Sed2Value end = eval_sed2(path, 8.0);
    CHECK(std::isfinite(end.y1[0]));
}

TEST_CASE("SED2 needs the second-derivative field", "[sed2]") {
    OdeProblem p = logistic();
    p.jf_f = nullptr;
    CHECK_THROWS_AS(Sed2Sampler(p, 0.5), CapabilityError);
    RandomStream s = derive_stream({22, "cap", 0});
    CHECK_THROWS_AS(simulate_sed2(p, {0.2}, 0.5, 1.0, s), CapabilityError);
    CHECK_THROWS_AS(taylor2_jump_chain(p, {0.2}, 0.5, 3, s), CapabilityError);
}

TEST_CASE("second-order Taylor chain multiplies by 1 - aH + a^2 H^2 / 2", "[sed2]") {
    const double a = 1.2, h = 0.5;
    RandomStream s = derive_stream({23, "taylor", 0});
    RandomStream replay = derive_stream({23, "taylor", 0});
    const auto chain = taylor2_jump_chain(as_problem(linear1d(a)), {1.0}, h, 15, s);
    REQUIRE(chain.size() == 16);
    double y = 1.0;
    for (std::size_t k = 1; k < chain.size(); ++k) {
        const double x = a * sample_exponential(replay, h);
        y *= 1.0 - x + 0.5 * x * x;
        CHECK(chain[k][0] == Approx(y).epsilon(1e-12));
    }
}

TEST_CASE("SED2 node map for u' = -a u has an expanding direction for every jump length", "[sed2]") {
    // From a node with Ybar = Y1: (Y1, Y2) -> [[1 + a^2 s^2 / 2, s], [a^2 s, 1]] (Y1, Y2).
    const double a = 1.0;
    for (double s = 0.01; s < 5.0; s *= 1.3) {
        const Matrix m = Matrix::from_rows({{1.0 + 0.5 * a * a * s * s, s}, {a * a * s, 1.0}});
        const auto eigs = eigenvalues(m);
        double rho = 0.0;
        for (const auto& l : eigs) rho = std::max(rho, std::abs(l));
        CHECK(rho > 1.0);
    }
}

TEST_CASE("generator of SED2 on closed-form test functions", "[sed2]") {
    const OdeProblem p = logistic();
    const State y1{0.6}, y2{0.2}, yb{0.4};
    const double h = 0.5;
    const double acc = eval_field(p.jf_f, yb)[0];  // (1 - 0.8) * 0.6 * 0.4 = 0.048
    CHECK(acc == Approx(0.048));
    // phi = y1 y2 + ybar^2: y2 * y2 + y1 * acc + (y1^2 - ybar^2) / h
    TestFunction3 phi{[](const State& a, const State& b, const State& c) { return a[0] * b[0] + c[0] * c[0]; },
                      [](const State&, const State& b, const State&) { return State{b[0]}; },
                      [](const State& a, const State&, const State&) { return State{a[0]}; }};
    CHECK(apply_generator_sed2(p, h, phi, y1, y2, yb) == Approx(0.04 + 0.6 * 0.048 + (0.36 - 0.16) / 0.5));
}
