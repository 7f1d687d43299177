#pragma once

// Deterministic Euler dynamics: w' = f(w-bar), w-bar' = (w - w-bar) / h with
// w(0) = w-bar(0) = u0. For f(u) = Au the pair evolves by exp(tB).

#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "stoch_euler/errors.hpp"
#include "stoch_euler/linalg.hpp"
#include "stoch_euler/ode.hpp"

namespace stoch_euler {

struct DedState {
    State w;
    State wbar;
    double t = 0.0;
};

/// (w(t), w-bar(t)) = exp(tB) (u0, u0).
inline DedState ded_linear(const LinearOde& p, double h, double t) {
    validate_linear(p);
    if (!(t >= 0.0)) throw ParameterError("ded_linear: t must be >= 0");
    const Matrix b = build_B(p.a, h);
    const std::size_t d = p.u0.size();
    Vector x(2 * d);
    std::copy(p.u0.begin(), p.u0.end(), x.begin());
    std::copy(p.u0.begin(), p.u0.end(), x.begin() + static_cast<std::ptrdiff_t>(d));
    const Vector y = mat_exp(b, t) * x;
    return {State(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(d)),
            State(y.begin() + static_cast<std::ptrdiff_t>(d), y.end()), t};
}

struct Ded1d {
    double w;
    double wbar;
};

/// Closed form for u' = -a u. Evaluated with s = sqrt(1 - 4ah) in complex
/// arithmetic and the small differences 1 - s, 1 - s - 2ah rewritten without
/// cancellation. At the double root |1 - 4ah| <= 1e-10 the confluent limit
///   w = u0 e^{-t/(2h)} (1 + t/(2h) - a t),  w-bar = u0 e^{-t/(2h)} (1 + t/(2h))
/// is used instead.
inline Ded1d ded_analytic_1d(double a, double u0, double h, double t) {
    if (!(a > 0.0)) throw ParameterError("ded_analytic_1d: a must be positive");
    if (!(h > 0.0)) throw ParameterError("ded_analytic_1d: h must be positive");
    if (!(t >= 0.0)) throw ParameterError("ded_analytic_1d: t must be >= 0");
    const double disc = 1.0 - 4.0 * a * h;
    if (std::abs(disc) <= 1e-10) {
        const double e = u0 * std::exp(-t / (2.0 * h));
        return {e * (1.0 + t / (2.0 * h) - a * t), e * (1.0 + t / (2.0 * h))};
    }
    using C = std::complex<double>;
    const C s = std::sqrt(C(disc, 0.0));
    const C one_minus_s = 4.0 * a * h / (1.0 + s);
    const C gap = 2.0 * a * h * one_minus_s / (1.0 + s);  // 1 - s - 2ah
    const C slow = std::exp(-t * one_minus_s / (2.0 * h));
    const C fast = std::exp(-t * (1.0 + s) / (2.0 * h));
    const C w = u0 * ((1.0 + s - 2.0 * a * h) * slow - gap * fast) / (2.0 * s);
    const C wbar = u0 * ((1.0 + s) * slow - one_minus_s * fast) / (2.0 * s);
    if (std::abs(w.imag()) > 1e-9 * (1.0 + std::abs(w.real())) ||
        std::abs(wbar.imag()) > 1e-9 * (1.0 + std::abs(wbar.real()))) {
        throw NumericConsistencyError("ded_analytic_1d: imaginary residue " + std::to_string(std::abs(w.imag())) +
                                      " at a = " + std::to_string(a) + ", h = " + std::to_string(h) +
                                      ", t = " + std::to_string(t));
    }
    return {w.real(), wbar.real()};
}

/// Dense solution of the augmented system, stacked as (w, w-bar).
class DedPath {
public:
    DedPath(DensePath path, std::size_t dim) : path_(std::move(path)), dim_(dim) {}

    [[nodiscard]] DedState operator()(double t) const {
        const State x = path_(t);
        return {State(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(dim_)),
                State(x.begin() + static_cast<std::ptrdiff_t>(dim_), x.end()), t};
    }

    [[nodiscard]] const DensePath& dense() const noexcept { return path_; }
    [[nodiscard]] std::size_t dim() const noexcept { return dim_; }

private:
    DensePath path_;
    std::size_t dim_;
};

/// Integrates the 2d-dimensional system with the reference RK4 engine.
inline DedPath ded_nonlinear(const OdeProblem& p, const State& u0, double h, double t_end, double step) {
    if (!(h > 0.0)) throw ParameterError("ded_nonlinear: h must be positive");
    if (u0.size() != p.dim) throw DimensionError("ded_nonlinear: u0 dimension mismatch");
    const std::size_t d = p.dim;
    OdeProblem aug;
    aug.dim = 2 * d;
    aug.name = p.name + "-ded";
    const VectorField f = p.f;
    aug.f = [f, d, h](std::span<const double> x, std::span<double> out) {
        f(x.subspan(d, d), out.subspan(0, d));
        for (std::size_t j = 0; j < d; ++j) out[d + j] = (x[j] - x[d + j]) / h;
    };
    State x0(2 * d);
    std::copy(u0.begin(), u0.end(), x0.begin());
    std::copy(u0.begin(), u0.end(), x0.begin() + static_cast<std::ptrdiff_t>(d));
    return DedPath(reference_solve(aug, x0, t_end, step), d);
}

struct DedTestFunction {
    std::function<double(const State&, const State&)> value;
    std::function<State(const State&, const State&)> grad_w;
    std::function<State(const State&, const State&)> grad_wbar;
};

/// <grad_w phi, f(wbar)> + <grad_wbar phi, w - wbar> / h.
inline double apply_generator_ded(const OdeProblem& p, double h, const DedTestFunction& phi, const State& w,
                                  const State& wbar) {
    if (!(h > 0.0)) throw ParameterError("apply_generator_ded: h must be positive");
    const State drift = eval_field(p.f, wbar);
    State diff(w.size());
    for (std::size_t j = 0; j < w.size(); ++j) diff[j] = (w[j] - wbar[j]) / h;
    return dot(phi.grad_w(w, wbar), drift) + dot(phi.grad_wbar(w, wbar), diff);
}

struct DedBoundReport {
    double t = 0.0;
    double h = 0.0;
    double gap;            ///< |w - w-bar|
    double gap_bound;      ///< sqrt(2) h |exp(tB)| |u0|
    double residual;       ///< |w' - A w|
    double residual_bound; ///< sqrt(2) h |exp(tB)| |A| |u0|
    bool gap_holds;
    bool residual_holds;
};

/// Evaluates both sides of |w - w-bar| <= sqrt(2) h |exp(tB)| |u0| and
/// |w' - Aw| <= sqrt(2) h |exp(tB)| |A| |u0| with spectral norms.
/// Comparisons allow a relative rounding slack of 1e-12.
inline DedBoundReport ded_bound_check(const LinearOde& p, double h, double t) {
    validate_linear(p);
    if (!(h > 0.0)) throw ParameterError("ded_bound_check: h must be positive");
    if (!(t >= 0.0)) throw ParameterError("ded_bound_check: t must be >= 0");
    const DedState s = ded_linear(p, h, t);
    State diff(s.w.size());
    for (std::size_t j = 0; j < diff.size(); ++j) diff[j] = s.wbar[j] - s.w[j];
    const Vector a_diff = p.a * diff;

    const double exp_norm = spectral_norm(mat_exp(build_B(p.a, h), t));
    const double u0_norm = norm2(p.u0);
    DedBoundReport r;
    r.t = t;
    r.h = h;
    r.gap = norm2(diff);
    r.gap_bound = std::sqrt(2.0) * h * exp_norm * u0_norm;
    r.residual = norm2(a_diff);
    r.residual_bound = r.gap_bound * spectral_norm(p.a);
    r.gap_holds = r.gap <= r.gap_bound * (1.0 + 1e-12);
    r.residual_holds = r.residual <= r.residual_bound * (1.0 + 1e-12);
    return r;
}

}  // namespace stoch_euler
