#pragma once

// Autonomous ODE problems u' = f(u) and reference solutions.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "stoch_euler/errors.hpp"
#include "stoch_euler/linalg.hpp"

namespace stoch_euler {

using State = std::vector<double>;

/// Writes a vector field evaluated at `u` into `out` (|out| == |u|).
using VectorField = std::function<void(std::span<const double> u, std::span<double> out)>;

struct OdeProblem {
    std::size_t dim = 0;
    VectorField f;
    /// u'' = Jf(u) f(u); empty when unavailable.
    VectorField jf_f;
    /// Exact flow (u0, t) -> u(t); empty when unknown.
    std::function<State(const State&, double)> exact;
    std::optional<double> lipschitz_hint;
    std::string name;
};

struct LinearOde {
    Matrix a;
    State u0;
};

// Small vector helpers shared by the dynamics modules.

inline double dot(std::span<const double> x, std::span<const double> y) noexcept {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
}

inline double norm2(std::span<const double> x) noexcept { return std::sqrt(dot(x, x)); }

inline double norm_inf(std::span<const double> x) noexcept {
    double m = 0.0;
    for (double e : x) m = std::max(m, std::abs(e));
    return m;
}

inline double distance2(std::span<const double> x, std::span<const double> y) noexcept {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - y[i]) * (x[i] - y[i]);
    return std::sqrt(s);
}

inline bool all_finite(std::span<const double> x) noexcept {
    return std::all_of(x.begin(), x.end(), [](double e) { return std::isfinite(e); });
}

inline State eval_field(const VectorField& field, const State& u) {
    State out(u.size());
    field(u, out);
    return out;
}

inline void validate_linear(const LinearOde& p) {
    if (!p.a.square()) throw DimensionError("LinearOde: A must be square");
    if (p.a.rows() != p.u0.size()) throw DimensionError("LinearOde: u0 dimension does not match A");
}

/// u(t) = exp(tA) u0.
inline State exact_linear_solution(const LinearOde& p, double t) {
    validate_linear(p);
    if (!(t >= 0.0)) throw ParameterError("exact_linear_solution: t must be >= 0");
    return mat_exp(p.a, t) * p.u0;
}

/// f(u) = Au with Jf f = A^2 u and the matrix-exponential flow.
inline OdeProblem as_problem(const LinearOde& p, std::string name = "linear") {
    validate_linear(p);
    OdeProblem prob;
    prob.dim = p.a.rows();
    prob.name = std::move(name);
    const Matrix a = p.a;
    const Matrix a2 = p.a * p.a;
    prob.f = [a](std::span<const double> u, std::span<double> out) { multiply_into(a, u, out); };
    prob.jf_f = [a2](std::span<const double> u, std::span<double> out) { multiply_into(a2, u, out); };
    prob.exact = [a](const State& u0, double t) { return mat_exp(a, t) * u0; };
    prob.lipschitz_hint = spectral_norm(a);
    return prob;
}

// Built-in problems.

/// u' = -a u.
inline LinearOde linear1d(double a, double u0 = 1.0) { return {Matrix::from_rows({{-a}}), {u0}}; }

/// u1' = u2, u2' = -u1 - u2; u(0) = (1, 0).
inline LinearOde oscillator() { return {Matrix::from_rows({{0.0, 1.0}, {-1.0, -1.0}}), {1.0, 0.0}}; }

/// u' = (1 - u) u.
inline OdeProblem logistic() {
    OdeProblem p;
    p.dim = 1;
    p.name = "logistic";
    p.f = [](std::span<const double> u, std::span<double> out) { out[0] = (1.0 - u[0]) * u[0]; };
    p.jf_f = [](std::span<const double> u, std::span<double> out) {
        out[0] = (1.0 - 2.0 * u[0]) * (1.0 - u[0]) * u[0];
    };
    p.exact = [](const State& u0, double t) {
        const double e = std::exp(t);
        return State{u0[0] * e / (1.0 - u0[0] + u0[0] * e)};
    };
    return p;
}

/// Fixed-step RK4 solution with cubic Hermite dense output.
class DensePath {
public:
    DensePath() = default;
    DensePath(std::vector<double> times, std::vector<State> values, std::vector<State> slopes)
        : times_(std::move(times)), values_(std::move(values)), slopes_(std::move(slopes)) {}

    [[nodiscard]] const std::vector<double>& times() const noexcept { return times_; }
    [[nodiscard]] const std::vector<State>& values() const noexcept { return values_; }
    [[nodiscard]] double t_end() const noexcept { return times_.empty() ? 0.0 : times_.back(); }

    [[nodiscard]] State operator()(double t) const {
        if (times_.empty() || t < 0.0 || t > times_.back()) {
            throw RangeError("DensePath: t = " + std::to_string(t) + " outside [0, " + std::to_string(t_end()) + "]");
        }
        auto it = std::upper_bound(times_.begin(), times_.end(), t);
        std::size_t k = static_cast<std::size_t>(it - times_.begin());
        if (k == 0) k = 1;
        if (k >= times_.size()) return values_.back();
        const std::size_t i = k - 1;
        const double t0 = times_[i];
        const double dt = times_[k] - t0;
        const double s = (t - t0) / dt;
        if (s == 0.0) return values_[i];
        const double h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        const double h10 = s * (1.0 - s) * (1.0 - s);
        const double h01 = s * s * (3.0 - 2.0 * s);
        const double h11 = s * s * (s - 1.0);
        State out(values_[i].size());
        for (std::size_t j = 0; j < out.size(); ++j) {
            out[j] = h00 * values_[i][j] + h10 * dt * slopes_[i][j] + h01 * values_[k][j] + h11 * dt * slopes_[k][j];
        }
        return out;
    }

private:
    std::vector<double> times_;
    std::vector<State> values_;
    std::vector<State> slopes_;
};

/// Classical RK4 at fixed `step` (last step shortened to land on t_end).
inline DensePath reference_solve(const OdeProblem& p, const State& u0, double t_end, double step) {
    if (!(step > 0.0)) throw ParameterError("reference_solve: step must be positive");
    if (!(t_end >= 0.0)) throw ParameterError("reference_solve: t_end must be >= 0");
    if (u0.size() != p.dim) throw DimensionError("reference_solve: u0 dimension mismatch");
    const std::size_t d = p.dim;
    const auto n_steps = static_cast<std::size_t>(std::ceil(t_end / step - 1e-9));

    std::vector<double> times{0.0};
    std::vector<State> values{u0};
    std::vector<State> slopes{eval_field(p.f, u0)};
    times.reserve(n_steps + 1);
    values.reserve(n_steps + 1);
    slopes.reserve(n_steps + 1);

    State k1(d), k2(d), k3(d), k4(d), tmp(d);
    State u = u0;
    for (std::size_t n = 1; n <= n_steps; ++n) {
        const double t0 = times.back();
        const double t1 = (n == n_steps) ? t_end : static_cast<double>(n) * step;
        const double dt = t1 - t0;
        p.f(u, k1);
        for (std::size_t j = 0; j < d; ++j) tmp[j] = u[j] + 0.5 * dt * k1[j];
        p.f(tmp, k2);
        for (std::size_t j = 0; j < d; ++j) tmp[j] = u[j] + 0.5 * dt * k2[j];
        p.f(tmp, k3);
        for (std::size_t j = 0; j < d; ++j) tmp[j] = u[j] + dt * k3[j];
        p.f(tmp, k4);
        for (std::size_t j = 0; j < d; ++j) u[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        if (!all_finite(u)) {
            throw DivergenceError("reference_solve: non-finite state at t = " + std::to_string(t1), n, t1);
        }
        times.push_back(t1);
        values.push_back(u);
        slopes.push_back(eval_field(p.f, u));
    }
    return DensePath(std::move(times), std::move(values), std::move(slopes));
}

}  // namespace stoch_euler
