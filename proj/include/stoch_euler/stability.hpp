#pragma once

// Closed-form stability results: the deterministic Euler threshold, jump-chain
// moment factors, and Foster-Lyapunov constants for u' = -a u.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "stoch_euler/errors.hpp"
#include "stoch_euler/linalg.hpp"
#include "stoch_euler/ode.hpp"
#include "stoch_euler/sed.hpp"

namespace stoch_euler {

/// min_i -Re(l_i) / Im(l_i)^2, with -Re/0 = infinity.
inline double ded_stability_threshold(std::span<const Complex> eigs) {
    double best = std::numeric_limits<double>::infinity();
    for (const Complex& l : eigs) {
        if (!(l.real() < 0.0)) {
            throw HypothesisError("ded_stability_threshold: eigenvalue " + std::to_string(l.real()) + " + " +
                                  std::to_string(l.imag()) + "i has nonnegative real part");
        }
        if (l.imag() != 0.0) best = std::min(best, -l.real() / (l.imag() * l.imag()));
    }
    return best;
}

struct StabilityReport {
    std::vector<Complex> eigenvalues;
    std::vector<double> thresholds;
    double h_max = 0.0;
    double h = 0.0;
    double max_re_b = 0.0;  ///< largest real part among eigenvalues of B(h)
    bool stable = false;    ///< h < h_max
};

inline StabilityReport stability_report(const Matrix& a, double h) {
    StabilityReport r;
    r.eigenvalues = eigenvalues(a);
    for (const Complex& l : r.eigenvalues) {
        const Complex one[1] = {l};
        r.thresholds.push_back(ded_stability_threshold(one));
    }
    r.h_max = ded_stability_threshold(r.eigenvalues);
    r.h = h;
    const auto mu = eigenvalues(build_B(a, h));
    r.max_re_b = -std::numeric_limits<double>::infinity();
    for (const Complex& m : mu) r.max_re_b = std::max(r.max_re_b, m.real());
    r.stable = h < r.h_max;
    return r;
}

struct MomentFactors {
    double mean;
    double m2;
};

inline void require_rate_and_step(double a, double h, const char* who) {
    if (!(a > 0.0)) throw ParameterError(std::string(who) + ": a must be positive");
    if (!(h > 0.0)) throw ParameterError(std::string(who) + ": h must be positive");
}

/// Per-step factors of E[V_k] and E[V_k^2] for the random-timestep Euler chain: (1 - ah, 1 - 2ah + 2a^2h^2).
inline MomentFactors jump_chain_moment_factors(double a, double h) {
    require_rate_and_step(a, h, "jump_chain_moment_factors");
    const double x = a * h;
    return {1.0 - x, 1.0 - 2.0 * x + 2.0 * x * x};
}

/// alpha(x) = 1 - 2x + 4x^2 - 6x^3 + 6x^4.
inline double sed2_alpha(double x) noexcept { return 1.0 + x * (-2.0 + x * (4.0 + x * (-6.0 + 6.0 * x))); }

/// Per-step factors of the second-order Taylor chain: (1 - ah + a^2h^2, alpha(ah)).
inline MomentFactors sed2_moment_factors(double a, double h) {
    require_rate_and_step(a, h, "sed2_moment_factors");
    const double x = a * h;
    return {1.0 - x + x * x, sed2_alpha(x)};
}

/// Positive root of alpha(x) = 1: (1 - cbrt(2/(5 + sqrt 29)) + cbrt((5 + sqrt 29)/2)) / 3.
inline double sed2_m2_threshold() noexcept {
    const double r = 5.0 + std::sqrt(29.0);
    return (1.0 - std::cbrt(2.0 / r) + std::cbrt(r / 2.0)) / 3.0;
}

/// L(v, vbar) = c1 v^2 + c2 vbar^2 + c3 (v - vbar)^2.
struct LyapunovSpec {
    double a = 0.0;
    double h = 0.0;
    double kappa = 0.0;
    double c1 = 1.0;
    double c2 = 0.0;
    double c3 = 0.0;
};

/// 0.99 min(2a, 1/(2h)).
inline double default_kappa(double a, double h) { return 0.99 * std::min(2.0 * a, 1.0 / (2.0 * h)); }

/// 1 / max{(1/h - kappa)/kappa, (kappa - 1/h + l)/l}.
inline double lyapunov_c3(double l, double h, double kappa) noexcept {
    return 1.0 / std::max((1.0 / h - kappa) / kappa, (kappa - 1.0 / h + l) / l);
}

inline LyapunovSpec lyapunov_constants(double a, double h, double kappa) {
    if (!(a > 0.0)) throw ParameterError("a > 0 violated");
    if (!(h > 0.0)) throw ParameterError("h > 0 violated");
    if (!(a * h < 1.0)) throw ParameterError("ah < 1 violated (ah = " + std::to_string(a * h) + ")");
    if (!(kappa > 0.0)) throw ParameterError("kappa > 0 violated");
    if (!(kappa < std::min(2.0 * a, 1.0 / (2.0 * h)))) {
        throw ParameterError("kappa < min(2a, 1/(2h)) violated (kappa = " + std::to_string(kappa) + ")");
    }
    return {a, h, kappa, 1.0, 0.0, lyapunov_c3(a, h, kappa)};
}

/// c3' = min over the eigenvalues of the SPD matrix of the one-dimensional c3.
inline double lyapunov_constants_multidim(std::span<const double> eigs, double h, double kappa) {
    if (eigs.empty()) throw ParameterError("lyapunov_constants_multidim: no eigenvalues");
    const auto [lo, hi] = std::minmax_element(eigs.begin(), eigs.end());
    if (!(*lo > 0.0)) throw ParameterError("all eigenvalues > 0 violated");
    if (!(h > 0.0)) throw ParameterError("h > 0 violated");
    if (!(*hi * h < 1.0)) throw ParameterError("lambda_max h < 1 violated (lambda_max h = " + std::to_string(*hi * h) + ")");
    if (!(kappa > 0.0)) throw ParameterError("kappa > 0 violated");
    if (!(kappa < std::min(2.0 * *lo, 1.0 / (2.0 * h)))) {
        throw ParameterError("kappa < min(2 lambda_min, 1/(2h)) violated (kappa = " + std::to_string(kappa) + ")");
    }
    double c3 = std::numeric_limits<double>::infinity();
    for (double l : eigs) c3 = std::min(c3, lyapunov_c3(l, h, kappa));
    return c3;
}

inline TestFunction lyapunov_function(const LyapunovSpec& s) {
    TestFunction phi;
    phi.value = [s](const State& v, const State& vb) {
        double out = 0.0;
        for (std::size_t j = 0; j < v.size(); ++j) {
            const double d = v[j] - vb[j];
            out += s.c1 * v[j] * v[j] + s.c2 * vb[j] * vb[j] + s.c3 * d * d;
        }
        return out;
    };
    phi.grad_v = [s](const State& v, const State& vb) {
        State g(v.size());
        for (std::size_t j = 0; j < v.size(); ++j) g[j] = 2.0 * s.c1 * v[j] + 2.0 * s.c3 * (v[j] - vb[j]);
        return g;
    };
    return phi;
}

struct GridPoint {
    double v;
    double vbar;
};

/// n x n lattice on [lo, hi]^2.
inline std::vector<GridPoint> square_lattice(std::size_t n, double lo, double hi) {
    if (n < 2) throw ParameterError("square_lattice: n must be >= 2");
    std::vector<GridPoint> out;
    out.reserve(n * n);
    const double step = (hi - lo) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            out.push_back({lo + static_cast<double>(i) * step, lo + static_cast<double>(j) * step});
        }
    }
    return out;
}

struct LyapunovCheckReport {
    std::size_t points = 0;
    std::size_t violations = 0;
    double max_excess = -std::numeric_limits<double>::infinity();  ///< max of A_h L + kappa L
    GridPoint worst{0.0, 0.0};
    [[nodiscard]] bool passed() const noexcept { return violations == 0; }
};

/// Evaluates A_h L + kappa L on `grid`; a point violates when the excess is above 1e-12 (1 + |L|).
inline LyapunovCheckReport lyapunov_generator_inequality_check(double a, const LyapunovSpec& spec,
                                                               std::span<const GridPoint> grid) {
    const OdeProblem p = as_problem(linear1d(a));
    const TestFunction phi = lyapunov_function(spec);
    LyapunovCheckReport r;
    for (const GridPoint& g : grid) {
        const State v{g.v}, vb{g.vbar};
        const double l = phi.value(v, vb);
        const double excess = apply_generator_sed(p, spec.h, phi, v, vb) + spec.kappa * l;
        ++r.points;
        if (excess > 1e-12 * (1.0 + std::abs(l))) ++r.violations;
        if (excess > r.max_excess) {
            r.max_excess = excess;
            r.worst = g;
        }
    }
    return r;
}

/// Symmetric 2x2 matrix Q with (v, vbar) Q (v, vbar)^T = -kappa L - A_h L, recovered by polarization.
inline Matrix lyapunov_form(double a, const LyapunovSpec& spec) {
    const OdeProblem p = as_problem(linear1d(a));
    const TestFunction phi = lyapunov_function(spec);
    auto q = [&](double v, double vb) {
        const State x{v}, xb{vb};
        return -spec.kappa * phi.value(x, xb) - apply_generator_sed(p, spec.h, phi, x, xb);
    };
    const double q11 = q(1.0, 0.0);
    const double q22 = q(0.0, 1.0);
    const double q12 = 0.5 * (q(1.0, 1.0) - q11 - q22);
    return Matrix::from_rows({{q11, q12}, {q12, q22}});
}

struct FormCheck {
    Matrix form;
    double min_eigenvalue;
    bool psd;  ///< min eigenvalue >= -1e-12
};

inline FormCheck lyapunov_form_check(double a, const LyapunovSpec& spec) {
    Matrix q = lyapunov_form(a, spec);
    const auto eigs = eigenvalues(q);
    const double lo = std::min(eigs[0].real(), eigs[1].real());
    return {std::move(q), lo, lo >= -1e-12};
}

/// (E V^2, E V Vbar, E Vbar^2) at time t for u' = -a u started at V = Vbar = u0,
/// from the closed linear ODE these moments satisfy.
inline std::array<double, 3> exact_second_moments_1d(double a, double h, double u0, double t) {
    require_rate_and_step(a, h, "exact_second_moments_1d");
    const Matrix m = Matrix::from_rows({{0.0, -2.0 * a, 0.0}, {1.0 / h, -1.0 / h, -a}, {1.0 / h, 0.0, -1.0 / h}});
    const Vector x = mat_exp(m, t) * Vector{u0 * u0, u0 * u0, u0 * u0};
    return {x[0], x[1], x[2]};
}

}  // namespace stoch_euler
