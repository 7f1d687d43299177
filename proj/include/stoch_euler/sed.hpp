#pragma once

// Stochastic Euler dynamics: the piecewise-linear path V and its
// piecewise-constant companion V-bar, jumping after Exp(mean h) waiting times.
// Between jumps V moves with the constant velocity f(V-bar); at a jump the
// companion is reset to the current value of V. The values at the jump
// times form the random-timestep forward Euler chain.

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
#include "stoch_euler/ode.hpp"
#include "stoch_euler/random.hpp"

namespace stoch_euler {

/// Nodes whose max-abs entry exceeds this are treated as blown up.
inline constexpr double kDivergenceThreshold = 1e150;

inline bool is_diverged(std::span<const double> x) noexcept {
    for (double e : x) {
        if (!(std::abs(e) <= kDivergenceThreshold)) return true;
    }
    return false;
}

/// Jump nodes of one realisation. Values between nodes are reconstructed on demand.
struct SedPath {
    std::vector<double> jump_times;  ///< T_0 = 0 < T_1 < ... <= horizon
    std::vector<State> node_values;  ///< V(T_k)
    std::vector<State> slopes;       ///< f(V-bar) on [T_k, T_{k+1})
    State initial_companion;         ///< V-bar on [0, T_1); equals node_values[0] for a standard start
    double h = 0.0;
    double horizon = 0.0;

    [[nodiscard]] std::size_t dim() const noexcept { return initial_companion.size(); }
    [[nodiscard]] std::size_t segments() const noexcept { return jump_times.size(); }

    [[nodiscard]] const State& companion(std::size_t k) const noexcept {
        return k == 0 ? initial_companion : node_values[k];
    }

    /// Index k of the segment [T_k, T_{k+1}) containing t.
    [[nodiscard]] std::size_t segment_of(double t) const {
        if (!(t >= 0.0) || t > horizon) {
            throw RangeError("SedPath: t = " + std::to_string(t) + " outside [0, " + std::to_string(horizon) + "]");
        }
        auto it = std::upper_bound(jump_times.begin(), jump_times.end(), t);
        return static_cast<std::size_t>(it - jump_times.begin()) - 1;
    }
};

enum class RunStatus { ok, diverged };

struct RunResult {
    RunStatus status = RunStatus::ok;
    std::size_t jumps = 0;       ///< jumps in (0, t_end]
    double diverged_at = 0.0;    ///< time of the offending node when diverged
};

/// Allocation-free event loop shared by path recording and Monte Carlo estimators.
class SedSampler {
public:
    SedSampler(const OdeProblem& p, double h) : p_(&p), h_(h), v_(p.dim), vbar_(p.dim), slope_(p.dim) {
        if (!(h > 0.0) || !std::isfinite(h)) throw ParameterError("SED: h must be positive");
        if (!p.f) throw CapabilityError("SED: problem has no right-hand side");
    }

    /// Runs from (v0, vbar0) at time 0 to t_end. `on_node(k, T_k, V(T_k), slope_k)` is
    /// called for k = 0 and every jump; afterwards value()/companion() hold V(t_end), V-bar(t_end).
    template <class OnNode>
    RunResult run(std::span<const double> v0, std::span<const double> vbar0, double t_end, RandomStream& stream,
                  OnNode&& on_node) {
        std::copy(v0.begin(), v0.end(), v_.begin());
        std::copy(vbar0.begin(), vbar0.end(), vbar_.begin());
        p_->f(vbar_, slope_);
        double t = 0.0;
        RunResult res;
        on_node(std::size_t{0}, t, std::as_const(v_), std::as_const(slope_));
        for (;;) {
            const double next = t + sample_exponential(stream, h_);
            if (next > t_end) {
                const double s = t_end - t;
                for (std::size_t j = 0; j < v_.size(); ++j) v_[j] += s * slope_[j];
                if (is_diverged(v_)) {
                    res.status = RunStatus::diverged;
                    res.diverged_at = t_end;
                }
                return res;
            }
            const double dt = next - t;
            for (std::size_t j = 0; j < v_.size(); ++j) v_[j] += dt * slope_[j];
            t = next;
            ++res.jumps;
            if (is_diverged(v_)) {
                res.status = RunStatus::diverged;
                res.diverged_at = t;
                return res;
            }
            vbar_ = v_;
            p_->f(vbar_, slope_);
            on_node(res.jumps, t, std::as_const(v_), std::as_const(slope_));
        }
    }

    RunResult run(std::span<const double> v0, std::span<const double> vbar0, double t_end, RandomStream& stream) {
        return run(v0, vbar0, t_end, stream, [](std::size_t, double, const State&, const State&) {});
    }

    [[nodiscard]] const State& value() const noexcept { return v_; }
    [[nodiscard]] const State& companion() const noexcept { return vbar_; }

private:
    const OdeProblem* p_;
    double h_;
    State v_;
    State vbar_;
    State slope_;
};

/// Simulates (V, V-bar) on [0, t_end] from V(0) = v0, V-bar(0) = vbar0.
inline SedPath simulate_sed_from(const OdeProblem& p, const State& v0, const State& vbar0, double h, double t_end,
                                 RandomStream& stream) {
    if (v0.size() != p.dim || vbar0.size() != p.dim) throw DimensionError("simulate_sed: state dimension mismatch");
    if (!(t_end > 0.0) || !std::isfinite(t_end)) throw ParameterError("simulate_sed: t_end must be positive");
    SedSampler sampler(p, h);
    SedPath path;
    path.h = h;
    path.horizon = t_end;
    path.initial_companion = vbar0;
    const RunResult res = sampler.run(v0, vbar0, t_end, stream,
                                      [&](std::size_t, double t, const State& node, const State& slope) {
                                          path.jump_times.push_back(t);
                                          path.node_values.push_back(node);
                                          path.slopes.push_back(slope);
                                      });
    if (res.status == RunStatus::diverged) {
        throw DivergenceError("simulate_sed: path diverged at jump " + std::to_string(res.jumps) + ", t = " +
                                  std::to_string(res.diverged_at),
                              res.jumps, res.diverged_at);
    }
    return path;
}

/// Simulates the stochastic Euler dynamics started at V(0) = V-bar(0) = u0.
inline SedPath simulate_sed(const OdeProblem& p, const State& u0, double h, double t_end, RandomStream& stream) {
    return simulate_sed_from(p, u0, u0, h, t_end, stream);
}

struct SedValue {
    State v;
    State vbar;
};

/// (V(t), V-bar(t)); right-continuous at jump times, where both equal the node value.
inline SedValue eval_sed(const SedPath& path, double t) {
    const std::size_t k = path.segment_of(t);
    const double s = t - path.jump_times[k];
    SedValue out{path.node_values[k], path.companion(k)};
    for (std::size_t j = 0; j < out.v.size(); ++j) out.v[j] += s * path.slopes[k][j];
    return out;
}

/// The random-timestep Euler iterates V(T_0), V(T_1), ...
inline const std::vector<State>& jump_chain(const SedPath& path) noexcept { return path.node_values; }

/// Test function phi(v, v-bar) with its gradient in the first argument.
struct TestFunction {
    std::function<double(const State&, const State&)> value;
    std::function<State(const State&, const State&)> grad_v;
};

/// Generator of the stochastic Euler dynamics:
/// <grad_v phi(v, vbar), f(vbar)> + (phi(v, v) - phi(v, vbar)) / h.
inline double apply_generator_sed(const OdeProblem& p, double h, const TestFunction& phi, const State& v,
                                  const State& vbar) {
    if (!(h > 0.0)) throw ParameterError("apply_generator_sed: h must be positive");
    const State drift = eval_field(p.f, vbar);
    const State grad = phi.grad_v(v, vbar);
    return dot(grad, drift) + (phi.value(v, v) - phi.value(v, vbar)) / h;
}

/// Exponentially weighted path distance truncated at t_max:
/// int_0^t_max e^-t min(1, sup_{s<=t} |x(s) - y(s)|) dt, composite trapezoid on `panels` panels.
/// The running supremum is sampled at the quadrature nodes, every jump time of the
/// SED path and every entry of `reference_breaks`.
inline double truncated_path_distance(const SedPath& path, const std::function<State(double)>& reference,
                                      std::span<const double> reference_breaks = {}, double t_max = 10.0,
                                      std::size_t panels = 1000) {
    if (path.horizon < t_max) throw RangeError("truncated_path_distance: path does not cover [0, t_max]");
    if (panels == 0) throw ParameterError("truncated_path_distance: panels must be positive");
    const double dt = t_max / static_cast<double>(panels);

    std::vector<double> events;
    events.reserve(panels + 1 + path.jump_times.size() + reference_breaks.size());
    for (std::size_t i = 0; i <= panels; ++i) events.push_back(static_cast<double>(i) * dt);
    for (double t : path.jump_times)
        if (t <= t_max) events.push_back(t);
    for (double t : reference_breaks)
        if (t >= 0.0 && t <= t_max) events.push_back(t);
    std::sort(events.begin(), events.end());

    std::vector<double> g(panels + 1, 0.0);
    double sup = 0.0;
    std::size_t node = 0;
    for (double t : events) {
        const SedValue sv = eval_sed(path, t);
        sup = std::max(sup, distance2(sv.v, reference(t)));
        while (node <= panels && static_cast<double>(node) * dt <= t) {
            if (static_cast<double>(node) * dt == t) g[node] = std::min(1.0, sup);
            ++node;
        }
    }
    double integral = 0.0;
    for (std::size_t i = 0; i < panels; ++i) {
        const double t0 = static_cast<double>(i) * dt;
        integral += 0.5 * dt * (std::exp(-t0) * g[i] + std::exp(-(t0 + dt)) * g[i + 1]);
    }
    return integral;
}

}  // namespace stoch_euler
