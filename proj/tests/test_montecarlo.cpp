#include <catch_amalgamated.hpp>

#include <cmath>

#include "stoch_euler/montecarlo.hpp"

using namespace stoch_euler;
using Catch::Approx;

TEST_CASE("pairwise summation", "[montecarlo]") {
    std::vector<double> ones(1000, 1.0);
    CHECK(pairwise_sum(ones) == 1000.0);
    std::vector<double> tiny(1 << 20, 1e-16);
    tiny.insert(tiny.begin(), 1.0);
    CHECK(pairwise_sum(tiny) == Approx(1.0 + (1 << 20) * 1e-16).epsilon(1e-15));
    CHECK(pairwise_sum(std::vector<double>{}) == 0.0);
}

TEST_CASE("summary statistics", "[montecarlo]") {
    const std::vector<double> x{1.0, 2.0, 3.0, 4.0};
    const McEstimate m = summarize(x);
    CHECK(m.mean == 2.5);
    CHECK(m.sample_sd == Approx(std::sqrt(5.0 / 3.0)));
    CHECK(m.std_error == Approx(std::sqrt(5.0 / 3.0) / 2.0));
    CHECK(m.n == 4);
    CHECK_THROWS_AS(summarize(std::vector<double>{1.0}), ParameterError);
    const RootEstimate r = root_of(m);
    CHECK(r.value == Approx(std::sqrt(2.5)));
    CHECK(r.std_error == Approx(m.std_error / (2.0 * std::sqrt(2.5))));
    CHECK(root_of(summarize(std::vector<double>{0.0, 0.0})).std_error == 0.0);
}

TEST_CASE("least squares and log-log slopes", "[montecarlo]") {
    const std::vector<double> x{1, 2, 3, 4}, y{3, 5, 7, 9};
    const LinearFit f = ols_fit(x, y);
    CHECK(f.slope == Approx(2.0));
    CHECK(f.intercept == Approx(1.0));
    CHECK(f.slope_stderr == Approx(0.0).margin(1e-12));

    std::vector<double> eps, err;
    for (int k = -8; k <= 0; ++k) {
        eps.push_back(std::ldexp(1.0, k));
        err.push_back(3.0 * std::pow(eps.back(), 2.0) * (k == 0 ? 10.0 : 1.0));
    }
    CHECK(fit_loglog_slope(eps, err, true).slope == Approx(2.0).epsilon(1e-12));
    CHECK(fit_loglog_slope(eps, err, true).used == 8);
    CHECK(fit_loglog_slope(eps, err, false).slope > 2.05);
    CHECK_THROWS_AS(fit_loglog_slope(std::vector<double>{1, 2}, std::vector<double>{1, 2}), FitError);
}

TEST_CASE("estimators are identical for every worker count", "[montecarlo]") {
    const std::vector<double> eps{0.0625, 0.125, 0.25};
    const auto one = estimate_rmste(linear1d(1.0), eps, HPolicy::eps(), 3000, {9, "det", 1});
    const auto four = estimate_rmste(linear1d(1.0), eps, HPolicy::eps(), 3000, {9, "det", 4});
    for (std::size_t i = 0; i < eps.size(); ++i) {
        CHECK(one.rows[i].mean_sq.mean == four.rows[i].mean_sq.mean);
        CHECK(one.rows[i].mean_sq.std_error == four.rows[i].mean_sq.std_error);
    }
    const std::vector<double> ts{1.0, 3.0};
    const auto m1 = estimate_second_moment(oscillator(), 0.5, ts, 3000, {9, "det2", 1});
    const auto m3 = estimate_second_moment(oscillator(), 0.5, ts, 3000, {9, "det2", 3});
    for (std::size_t i = 0; i < ts.size(); ++i) CHECK(m1[i].v_sq.mean == m3[i].v_sq.mean);
}

TEST_CASE("worker exceptions propagate", "[montecarlo]") {
    CHECK_THROWS_AS(parallel_for_index(1000, 4,
                                       [](std::size_t i) {
                                           if (i == 777) throw RangeError("boom");
                                       }),
                    RangeError);
}

TEST_CASE("Euler product for given waiting times", "[montecarlo]") {
    const LinearOde p = linear1d(2.0);
    const std::vector<double> waits{0.1, 0.2};
    // (1 - 2 * 0.2) (1 - 2 * 0.2) (1 - 2 * 0.1) with the last factor for eps - sum = 0.2
    CHECK(euler_product(p, waits, 0.5)[0] == Approx(0.8 * 0.6 * 0.6));
    CHECK(euler_product(p, {}, 0.5)[0] == Approx(0.0));
}

TEST_CASE("conditional errors mixed by Poisson weights give the unconditional error", "[montecarlo]") {
    const LinearOde p = linear1d(1.0);
    const double eps = 0.25, h = 0.25;
    const std::size_t n = 40000;
    double mixed = 0.0, var = 0.0;
    double weight = std::exp(-eps / h);
    for (std::size_t k = 0; k <= 12; ++k) {
        const McEstimate c = estimate_rmste_conditional(p, eps, k, n, {5, "tower", 1});
        mixed += weight * c.mean;
        var += weight * weight * c.std_error * c.std_error;
        weight *= (eps / h) / static_cast<double>(k + 1);
    }
    const std::vector<double> grid{eps};
    const auto table = estimate_rmste(p, grid, HPolicy::fixed(h), 400000, {5, "tower", 1});
    const McEstimate& u = table.rows[0].mean_sq;
    CHECK(std::abs(mixed - u.mean) < 4.0 * std::sqrt(var + u.std_error * u.std_error));
}

TEST_CASE("conditional error without jumps is the explicit Euler defect", "[montecarlo]") {
    const McEstimate c = estimate_rmste_conditional(linear1d(1.0), 0.1, 0, 10, {5, "k0", 1});
    const double d = 0.9 - std::exp(-0.1);
    CHECK(c.mean == Approx(d * d).epsilon(1e-12));
    CHECK(c.sample_sd == 0.0);
}

TEST_CASE("mean-square truncation bound", "[montecarlo]") {
    CHECK(rmste_theoretical_bound(1.0, 0.5, 0.5) == Approx(std::pow(0.5, 4) * 4.0 * std::exp(3.0)));
}

TEST_CASE("Kolmogorov distribution tail", "[montecarlo]") {
    CHECK(kolmogorov_q(0.0) == 1.0);
    CHECK(kolmogorov_q(1.3581) == Approx(0.05).margin(2e-4));
    CHECK(kolmogorov_q(1.6276) == Approx(0.01).margin(1e-4));
    CHECK(kolmogorov_q(1.9495) == Approx(0.001).margin(1e-5));
}

TEST_CASE("two-sample KS statistic", "[montecarlo]") {
    const KsResult same = ks_two_sample({1, 2, 3, 4}, {1, 2, 3, 4});
    CHECK(same.statistic == 0.0);
    CHECK(same.p_value == 1.0);
    const KsResult apart = ks_two_sample({1, 2, 3}, {10, 11, 12, 13});
    CHECK(apart.statistic == 1.0);
    const KsResult half = ks_two_sample({1, 2, 3, 4}, {3, 4, 5, 6});
    CHECK(half.statistic == Approx(0.5));
}

TEST_CASE("conditioned waiting times lie in the simplex", "[montecarlo]") {
    RandomStream s = derive_stream({6, "cond", 0});
    for (std::size_t k : {1u, 2u, 3u}) {
        for (int i = 0; i < 200; ++i) {
            const auto w = sample_conditioned_waits(s, 0.5, k, 1.0);
            REQUIRE(w.size() == k);
            double sum = 0.0;
            for (double x : w) sum += x;
            REQUIRE(sum <= 1.0);
        }
    }
    const auto full = sample_full_simplex(s, 3, 2.0);
    CHECK(full[0] + full[1] + full[2] == Approx(2.0));
}

TEST_CASE("jump-chain moments start at one and track the factors", "[montecarlo]") {
    const auto rows = estimate_jump_chain_moments(1.0, 0.3, 5, 50000, {7, "jc", 1});
    REQUIRE(rows.size() == 6);
    CHECK(rows[0].emp_mean == 1.0);
    CHECK(rows[0].pred_m2 == 1.0);
    for (const auto& r : rows) {
        if (r.k == 0) continue;
        CHECK(std::abs(r.emp_mean - r.pred_mean) < 4.0 * r.se_mean);
        CHECK(std::abs(r.emp_m2 - r.pred_m2) < 4.0 * r.se_m2);
    }
}
