#include <catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "stoch_euler/random.hpp"

using namespace stoch_euler;
using Catch::Approx;

TEST_CASE("philox4x64-10 known-answer vectors", "[random]") {
    using A4 = std::array<std::uint64_t, 4>;
    CHECK(philox4x64({0, 0, 0, 0}, {0, 0}) ==
          A4{0x16554d9eca36314cULL, 0xdb20fe9d672d0fdcULL, 0xd7e772cee186176bULL, 0x7e68b68aec7ba23bULL});
    const std::uint64_t m = ~0ULL;
    CHECK(philox4x64({m, m, m, m}, {m, m}) ==
          A4{0x87b092c3013fe90bULL, 0x438c3c67be8d0224ULL, 0x9cc7d7c69cd777b6ULL, 0xa09caebf594f0ba0ULL});
    CHECK(philox4x64({0x243f6a8885a308d3ULL, 0x13198a2e03707344ULL, 0xa4093822299f31d0ULL, 0x082efa98ec4e6c89ULL},
                     {0x452821e638d01377ULL, 0xbe5466cf34e90c6cULL}) ==
          A4{0xa528f45403e61d95ULL, 0x38c72dbd566e9788ULL, 0xa5a1610e72fd18b5ULL, 0x57bd43b5e52b7fe6ULL});
}

TEST_CASE("derived streams are pure functions of (seed, label, index)", "[random]") {
    RandomStream a = derive_stream({7, "cell", 3});
    RandomStream b = derive_stream({7, "cell", 3});
    for (int i = 0; i < 10; ++i) CHECK(a() == b());

    std::set<std::uint64_t> firsts;
    firsts.insert(derive_stream({7, "cell", 3})());
    firsts.insert(derive_stream({8, "cell", 3})());
    firsts.insert(derive_stream({7, "cel1", 3})());
    firsts.insert(derive_stream({7, "cell", 4})());
    CHECK(firsts.size() == 4);
}

TEST_CASE("default master seed", "[random]") {
    CHECK(kDefaultMasterSeed == 0x5EED0001ULL);
    CHECK(SeedSpec{}.master_seed == kDefaultMasterSeed);
}

TEST_CASE("uniform_open0 stays in (0, 1]", "[random]") {
    RandomStream s = derive_stream({1, "u", 0});
    double lo = 1.0, sum = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const double u = s.uniform_open0();
        REQUIRE(u > 0.0);
        REQUIRE(u <= 1.0);
        lo = std::min(lo, u);
        sum += u;
    }
    CHECK(sum / n == Approx(0.5).margin(5.0 * std::sqrt(1.0 / 12.0 / n)));
}

TEST_CASE("exponential waiting times have mean h and variance h^2", "[random]") {
    RandomStream s = derive_stream({2, "exp", 0});
    const double h = 0.37;
    const int n = 200000;
    double m1 = 0.0, m2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = sample_exponential(s, h);
        REQUIRE(x >= 0.0);
        m1 += x;
        m2 += x * x;
    }
    m1 /= n;
    m2 /= n;
    // Var(X) = h^2, Var(X^2) = 20 h^4
    CHECK(std::abs(m1 - h) < 5.0 * h / std::sqrt(n));
    CHECK(std::abs(m2 - 2.0 * h * h) < 5.0 * std::sqrt(20.0) * h * h / std::sqrt(n));
    CHECK_THROWS_AS(sample_exponential(s, 0.0), ParameterError);
}

TEST_CASE("jump times form a Poisson process of rate 1/h", "[random]") {
    const double h = 0.25, horizon = 3.0;
    const int n = 20000;
    double count = 0.0;
    for (int i = 0; i < n; ++i) {
        RandomStream s = derive_stream({3, "jumps", static_cast<std::uint64_t>(i)});
        const auto times = sample_jump_times(s, h, horizon);
        REQUIRE(!times.empty());
        REQUIRE(times.back() > horizon);
        for (std::size_t k = 1; k < times.size(); ++k) REQUIRE(times[k] > times[k - 1]);
        count += static_cast<double>(times.size() - 1);
    }
    const double lambda = horizon / h;
    CHECK(std::abs(count / n - lambda) < 5.0 * std::sqrt(lambda / n));
}

TEST_CASE("uniform simplex samples lie in the simplex with the right marginal mean", "[random]") {
    const double t = 2.0;
    for (std::size_t k : {1u, 2u, 3u}) {
        RandomStream s = derive_stream({4, "simplex", k});
        const int n = 50000;
        double m = 0.0;
        for (int i = 0; i < n; ++i) {
            const auto x = sample_uniform_simplex(s, k, t);
            REQUIRE(x.size() == k);
            double sum = 0.0;
            for (double e : x) {
                REQUIRE(e >= 0.0);
                sum += e;
            }
            REQUIRE(sum <= t);
            m += x[0];
        }
        // Marginal density k (t - x)^(k-1) / t^k has mean t / (k + 1) and variance k t^2 / ((k+1)^2 (k+2)).
        const double kk = static_cast<double>(k);
        const double sd = t * std::sqrt(kk / ((kk + 1) * (kk + 1) * (kk + 2)));
        CHECK(std::abs(m / n - t / (kk + 1)) < 5.0 * sd / std::sqrt(n));
    }
}
