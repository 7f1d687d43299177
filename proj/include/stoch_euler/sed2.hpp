#pragma once

// Second-order stochastic Euler dynamics (Y1, Y2, Y-bar). On each segment
// the second derivative of Y1 is frozen at Jf(Y-bar) f(Y-bar), so Y1 is a
// chain of quadratics. Y1 and Y2 are continuous across jumps; only the
// companion Y-bar is reset to Y1.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "stoch_euler/errors.hpp"
#include "stoch_euler/ode.hpp"
#include "stoch_euler/random.hpp"
#include "stoch_euler/sed.hpp"

namespace stoch_euler {

struct Sed2Path {
    std::vector<double> jump_times;  ///< T_0 = 0 < T_1 < ... <= horizon
    std::vector<State> node_y1;      ///< Y1(T_k)
    std::vector<State> node_y2;      ///< Y2(T_k)
    std::vector<State> accel;        ///< Jf f(Y-bar) on [T_k, T_{k+1})
    State initial_companion;
    double h = 0.0;
    double horizon = 0.0;

    [[nodiscard]] std::size_t dim() const noexcept { return initial_companion.size(); }

    [[nodiscard]] const State& companion(std::size_t k) const noexcept {
        return k == 0 ? initial_companion : node_y1[k];
    }

    [[nodiscard]] std::size_t segment_of(double t) const {
        if (!(t >= 0.0) || t > horizon) {
            throw RangeError("Sed2Path: t = " + std::to_string(t) + " outside [0, " + std::to_string(horizon) + "]");
        }
        auto it = std::upper_bound(jump_times.begin(), jump_times.end(), t);
        return static_cast<std::size_t>(it - jump_times.begin()) - 1;
    }
};

class Sed2Sampler {
public:
    Sed2Sampler(const OdeProblem& p, double h)
        : p_(&p), h_(h), y1_(p.dim), y2_(p.dim), ybar_(p.dim), acc_(p.dim) {
        if (!(h > 0.0) || !std::isfinite(h)) throw ParameterError("SED2: h must be positive");
        if (!p.jf_f) throw CapabilityError("SED2: problem '" + p.name + "' has no jf_f field");
    }

    /// `on_node(k, T_k, Y1, Y2, accel_k)` fires at time 0 and after every jump.
    template <class OnNode>
    RunResult run(std::span<const double> y1, std::span<const double> y2, std::span<const double> ybar, double t_end,
                  RandomStream& stream, OnNode&& on_node) {
        std::copy(y1.begin(), y1.end(), y1_.begin());
        std::copy(y2.begin(), y2.end(), y2_.begin());
        std::copy(ybar.begin(), ybar.end(), ybar_.begin());
        p_->jf_f(ybar_, acc_);
        double t = 0.0;
        RunResult res;
        on_node(std::size_t{0}, t, std::as_const(y1_), std::as_const(y2_), std::as_const(acc_));
        for (;;) {
            const double next = t + sample_exponential(stream, h_);
            const bool last = next > t_end;
            const double s = last ? t_end - t : next - t;
            for (std::size_t j = 0; j < y1_.size(); ++j) {
                y1_[j] += s * y2_[j] + 0.5 * s * s * acc_[j];
                y2_[j] += s * acc_[j];
            }
            if (!last) {
                t = next;
                ++res.jumps;
            }
            if (is_diverged(y1_) || is_diverged(y2_)) {
                res.status = RunStatus::diverged;
                res.diverged_at = last ? t_end : t;
                return res;
            }
            if (last) return res;
            ybar_ = y1_;
            p_->jf_f(ybar_, acc_);
            on_node(res.jumps, t, std::as_const(y1_), std::as_const(y2_), std::as_const(acc_));
        }
    }

    RunResult run(std::span<const double> y1, std::span<const double> y2, std::span<const double> ybar, double t_end,
                  RandomStream& stream) {
        return run(y1, y2, ybar, t_end, stream,
                   [](std::size_t, double, const State&, const State&, const State&) {});
    }

    [[nodiscard]] const State& y1() const noexcept { return y1_; }
    [[nodiscard]] const State& y2() const noexcept { return y2_; }
    [[nodiscard]] const State& companion() const noexcept { return ybar_; }

private:
    const OdeProblem* p_;
    double h_;
    State y1_, y2_, ybar_, acc_;
};

/// Simulates from a general state (Y1, Y2, Y-bar) at time 0.
inline Sed2Path simulate_sed2_from(const OdeProblem& p, const State& y1, const State& y2, const State& ybar, double h,
                                   double t_end, RandomStream& stream) {
    if (y1.size() != p.dim || y2.size() != p.dim || ybar.size() != p.dim) {
        throw DimensionError("simulate_sed2: state dimension mismatch");
    }
    if (!(t_end > 0.0) || !std::isfinite(t_end)) throw ParameterError("simulate_sed2: t_end must be positive");
    Sed2Sampler sampler(p, h);
    Sed2Path path;
    path.h = h;
    path.horizon = t_end;
    path.initial_companion = ybar;
    const RunResult res =
        sampler.run(y1, y2, ybar, t_end, stream,
                    [&](std::size_t, double t, const State& a, const State& b, const State& acc) {
                        path.jump_times.push_back(t);
                        path.node_y1.push_back(a);
                        path.node_y2.push_back(b);
                        path.accel.push_back(acc);
                    });
    if (res.status == RunStatus::diverged) {
        throw DivergenceError("simulate_sed2: path diverged at jump " + std::to_string(res.jumps) + ", t = " +
                                  std::to_string(res.diverged_at),
                              res.jumps, res.diverged_at);
    }
    return path;
}

/// Y1(0) = Y-bar(0) = u0, Y2(0) = f(u0).
inline Sed2Path simulate_sed2(const OdeProblem& p, const State& u0, double h, double t_end, RandomStream& stream) {
    if (!p.jf_f) throw CapabilityError("simulate_sed2: problem '" + p.name + "' has no jf_f field");
    if (u0.size() != p.dim) throw DimensionError("simulate_sed2: u0 dimension mismatch");
    return simulate_sed2_from(p, u0, eval_field(p.f, u0), u0, h, t_end, stream);
}

struct Sed2Value {
    State y1;
    State y2;
    State ybar;
};

inline Sed2Value eval_sed2(const Sed2Path& path, double t) {
    const std::size_t k = path.segment_of(t);
    const double s = t - path.jump_times[k];
    Sed2Value out{path.node_y1[k], path.node_y2[k], path.companion(k)};
    const State& acc = path.accel[k];
    for (std::size_t j = 0; j < out.y1.size(); ++j) {
        out.y1[j] += s * path.node_y2[k][j] + 0.5 * s * s * acc[j];
        out.y2[j] += s * acc[j];
    }
    return out;
}

/// phi(y1, y2, y-bar) with gradients in y1 and y2.
struct TestFunction3 {
    std::function<double(const State&, const State&, const State&)> value;
    std::function<State(const State&, const State&, const State&)> grad_y1;
    std::function<State(const State&, const State&, const State&)> grad_y2;
};

/// <grad_y1 phi, y2> + <grad_y2 phi, Jf f(ybar)> + (phi(y1, y2, y1) - phi(y1, y2, ybar)) / h.
inline double apply_generator_sed2(const OdeProblem& p, double h, const TestFunction3& phi, const State& y1,
                                   const State& y2, const State& ybar) {
    if (!(h > 0.0)) throw ParameterError("apply_generator_sed2: h must be positive");
    if (!p.jf_f) throw CapabilityError("apply_generator_sed2: problem '" + p.name + "' has no jf_f field");
    const State acc = eval_field(p.jf_f, ybar);
    return dot(phi.grad_y1(y1, y2, ybar), y2) + dot(phi.grad_y2(y1, y2, ybar), acc) +
           (phi.value(y1, y2, y1) - phi.value(y1, y2, ybar)) / h;
}

/// Random-step second-order Taylor chain
/// Y_k = Y_{k-1} + H_k f(Y_{k-1}) + H_k^2/2 Jf f(Y_{k-1}), returning Y_0..Y_{k_max}.
/// Each step restarts from the exact derivatives at the node, so for
/// u' = -a u the factor per step is 1 - a H + a^2 H^2 / 2.
inline std::vector<State> taylor2_jump_chain(const OdeProblem& p, const State& u0, double h, std::size_t k_max,
                                             RandomStream& stream) {
    if (!p.jf_f) throw CapabilityError("taylor2_jump_chain: problem '" + p.name + "' has no jf_f field");
    if (u0.size() != p.dim) throw DimensionError("taylor2_jump_chain: u0 dimension mismatch");
    std::vector<State> chain{u0};
    chain.reserve(k_max + 1);
    State y = u0, vel(p.dim), acc(p.dim);
    for (std::size_t k = 1; k <= k_max; ++k) {
        const double s = sample_exponential(stream, h);
        p.f(y, vel);
        p.jf_f(y, acc);
        for (std::size_t j = 0; j < y.size(); ++j) y[j] += s * vel[j] + 0.5 * s * s * acc[j];
        chain.push_back(y);
    }
    return chain;
}

}  // namespace stoch_euler
