#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "stoch_euler/linalg.hpp"

using namespace stoch_euler;
using Catch::Approx;

namespace {

Matrix companion_of(std::vector<double> monic_low_to_high) {
    const std::size_t n = monic_low_to_high.size();
    Matrix c(n, n);
    for (std::size_t i = 1; i < n; ++i) c(i, i - 1) = 1.0;
    for (std::size_t i = 0; i < n; ++i) c(i, n - 1) = -monic_low_to_high[i];
    return c;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) m = std::max(m, std::abs(a(i, j) - b(i, j)));
    return m;
}

}  // namespace

TEST_CASE("mat_exp of a rotation generator is a rotation", "[linalg]") {
    const Matrix j = Matrix::from_rows({{0.0, 1.0}, {-1.0, 0.0}});
    for (double t : {0.0, 0.3, 1.0, std::numbers::pi, 12.5}) {
        const Matrix e = mat_exp(j, t);
        CHECK(e(0, 0) == Approx(std::cos(t)).margin(1e-13));
        CHECK(e(0, 1) == Approx(std::sin(t)).margin(1e-13));
        CHECK(e(1, 0) == Approx(-std::sin(t)).margin(1e-13));
        CHECK(e(1, 1) == Approx(std::cos(t)).margin(1e-13));
    }
}

TEST_CASE("mat_exp of a diagonal matrix exponentiates entries", "[linalg]") {
    const std::vector<double> d{-3.0, 0.5, 2.0};
    const Matrix e = mat_exp(Matrix::diagonal(d), 1.7);
    for (std::size_t i = 0; i < 3; ++i) CHECK(e(i, i) == Approx(std::exp(1.7 * d[i])).epsilon(1e-13));
    CHECK(e(0, 1) == 0.0);
}

TEST_CASE("mat_exp(A, t) mat_exp(A, -t) is the identity", "[linalg]") {
    const Matrix a = Matrix::from_rows({{0.3, -1.2, 0.5, 0.0},
                                        {2.0, -0.7, 0.1, 0.4},
                                        {-0.6, 0.9, -1.1, 0.2},
                                        {0.05, 0.3, -0.4, 0.8}});
    const Matrix prod = mat_exp(a, 2.5) * mat_exp(a, -2.5);
    CHECK(max_abs_diff(prod, Matrix::identity(4)) < 1e-11);
}

TEST_CASE("mat_exp rejects non-square input", "[linalg]") {
    CHECK_THROWS_AS(mat_exp(Matrix(2, 3), 1.0), DimensionError);
}

TEST_CASE("eigenvalues recover polynomial roots from a companion matrix", "[linalg]") {
    // (x - 1)(x - 2)(x - 3)(x^2 + 1) = x^5 - 6x^4 + 12x^3 - 12x^2 + 11x - 6
    const auto eigs = eigenvalues(companion_of({-6.0, 11.0, -12.0, 12.0, -6.0}));
    REQUIRE(eigs.size() == 5);
    CHECK(eigs[0].real() == Approx(0.0).margin(1e-10));
    CHECK(eigs[0].imag() == Approx(-1.0).margin(1e-10));
    CHECK(eigs[1].real() == Approx(0.0).margin(1e-10));
    CHECK(eigs[1].imag() == Approx(1.0).margin(1e-10));
    CHECK(eigs[2].real() == Approx(1.0).margin(1e-10));
    CHECK(eigs[3].real() == Approx(2.0).margin(1e-10));
    CHECK(eigs[4].real() == Approx(3.0).margin(1e-10));
}

TEST_CASE("eigenvalues of the damped oscillator matrix", "[linalg]") {
    const auto eigs = eigenvalues(Matrix::from_rows({{0.0, 1.0}, {-1.0, -1.0}}));
    REQUIRE(eigs.size() == 2);
    for (const auto& l : eigs) {
        CHECK(l.real() == Approx(-0.5).margin(1e-14));
        CHECK(std::abs(l.imag()) == Approx(std::sqrt(3.0) / 2.0).margin(1e-14));
    }
}

TEST_CASE("eigenvalue sum and product match trace and determinant", "[linalg]") {
    const Matrix a = Matrix::from_rows({{4.0, -2.0, 1.0}, {3.0, 6.0, -4.0}, {2.0, 1.0, 8.0}});
    const auto eigs = eigenvalues(a);
    Complex sum{0.0, 0.0}, prod{1.0, 0.0};
    for (const auto& l : eigs) {
        sum += l;
        prod *= l;
    }
    const double det = 4.0 * (48.0 + 4.0) + 2.0 * (24.0 + 8.0) + 1.0 * (3.0 - 12.0);
    CHECK(sum.real() == Approx(trace(a)).epsilon(1e-12));
    CHECK(prod.real() == Approx(det).epsilon(1e-12));
    CHECK(std::abs(prod.imag()) < 1e-9);
}

TEST_CASE("spectral norm of a 2x2 matrix", "[linalg]") {
    // A^T A = [[10, 14], [14, 20]], largest eigenvalue (30 + sqrt 884) / 2
    const Matrix a = Matrix::from_rows({{1.0, 2.0}, {3.0, 4.0}});
    CHECK(spectral_norm(a) == Approx(std::sqrt((30.0 + std::sqrt(884.0)) / 2.0)).epsilon(1e-12));
    CHECK(spectral_norm(Matrix::diagonal(std::vector<double>{-5.0, 2.0})) == Approx(5.0).epsilon(1e-13));
}

TEST_CASE("build_B has the block structure [[0, A], [I/h, -I/h]]", "[linalg]") {
    const Matrix a = Matrix::from_rows({{0.0, 1.0}, {-1.0, -1.0}});
    const Matrix b = build_B(a, 0.5);
    REQUIRE(b.rows() == 4);
    for (std::size_t i = 0; i < 2; ++i) {
        for (std::size_t j = 0; j < 2; ++j) {
            CHECK(b(i, j) == 0.0);
            CHECK(b(i, j + 2) == a(i, j));
            CHECK(b(i + 2, j) == (i == j ? 2.0 : 0.0));
            CHECK(b(i + 2, j + 2) == (i == j ? -2.0 : 0.0));
        }
    }
    CHECK_THROWS_AS(build_B(a, 0.0), ParameterError);
}

TEST_CASE("matrix shape errors", "[linalg]") {
    CHECK_THROWS_AS(Matrix::from_rows({{1.0, 2.0}, {3.0}}), DimensionError);
    CHECK_THROWS_AS(Matrix(2, 2) * Matrix(3, 3), DimensionError);
}
