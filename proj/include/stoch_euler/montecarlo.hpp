#pragma once

// Monte Carlo estimators. Every sample i of a cell draws from its own stream
// derived from (master seed, cell label, i), results are stored by index and
// reduced by pairwise summation, so estimates do not depend on worker count.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <functional>
#include <mutex>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "stoch_euler/errors.hpp"
#include "stoch_euler/linalg.hpp"
#include "stoch_euler/ode.hpp"
#include "stoch_euler/random.hpp"
#include "stoch_euler/sed.hpp"
#include "stoch_euler/sed2.hpp"
#include "stoch_euler/stability.hpp"

namespace stoch_euler {

struct McConfig {
    std::uint64_t master_seed = kDefaultMasterSeed;
    std::string label = "default";
    std::size_t workers = 1;  ///< 0 selects the hardware concurrency
};

inline std::string format_g17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline McConfig subcell(const McConfig& cfg, const std::string& tag) {
    McConfig out = cfg;
    out.label = cfg.label + "/" + tag;
    return out;
}

inline std::size_t resolve_workers(std::size_t workers) {
    if (workers != 0) return workers;
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : hc;
}

/// Calls fn(i) for i in [0, n) on `workers` threads. fn must only write slot i of its outputs.
template <class Fn>
void parallel_for_index(std::size_t n, std::size_t workers, Fn&& fn) {
    workers = std::min(resolve_workers(workers), std::max<std::size_t>(n, 1));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    constexpr std::size_t kChunk = 256;
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto body = [&] {
        for (;;) {
            const std::size_t begin = next.fetch_add(kChunk);
            if (begin >= n) return;
            const std::size_t end = std::min(n, begin + kChunk);
            try {
                for (std::size_t i = begin; i < end; ++i) fn(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(n);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(body);
    body();
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

inline double pairwise_sum(std::span<const double> x) noexcept {
    if (x.size() <= 8) {
        double s = 0.0;
        for (double e : x) s += e;
        return s;
    }
    const std::size_t half = x.size() / 2;
    return pairwise_sum(x.first(half)) + pairwise_sum(x.subspan(half));
}

struct SeedSummary {
    std::uint64_t master_seed = kDefaultMasterSeed;
    std::string label;
};

struct McEstimate {
    double mean = 0.0;
    double sample_sd = 0.0;
    double std_error = 0.0;
    std::size_t n = 0;
    SeedSummary seed;
};

/// Mean, unbiased SD and SE = SD / sqrt(n) of `x`; needs at least two samples.
inline McEstimate summarize(std::span<const double> x, SeedSummary seed = {}) {
    if (x.size() < 2) throw ParameterError("summarize: need at least 2 samples");
    const double n = static_cast<double>(x.size());
    const double mean = pairwise_sum(x) / n;
    std::vector<double> dev(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) dev[i] = (x[i] - mean) * (x[i] - mean);
    const double sd = std::sqrt(pairwise_sum(dev) / (n - 1.0));
    return {mean, sd, sd / std::sqrt(n), x.size(), std::move(seed)};
}

/// sqrt(m) with the delta-method error SE(m) / (2 sqrt(m)); 0 when m is 0.
struct RootEstimate {
    double value = 0.0;
    double std_error = 0.0;
};

inline RootEstimate root_of(const McEstimate& m) {
    const double r = std::sqrt(std::max(m.mean, 0.0));
    return {r, r > 0.0 ? m.std_error / (2.0 * r) : 0.0};
}

// Regression.

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;
    std::size_t used = 0;
};

/// Ordinary least squares y = intercept + slope x; slope SE from the residual variance.
inline LinearFit ols_fit(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw DimensionError("ols_fit: size mismatch");
    if (x.size() < 2) throw FitError("ols_fit: need at least 2 points");
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (!(sxx > 0.0)) throw FitError("ols_fit: abscissae are all equal");
    LinearFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.used = x.size();
    if (x.size() > 2) {
        double rss = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double r = y[i] - f.intercept - f.slope * x[i];
            rss += r * r;
        }
        f.slope_stderr = std::sqrt(rss / (n - 2.0) / sxx);
    }
    return f;
}

struct SlopeFit {
    double slope = 0.0;
    double slope_stderr = 0.0;
    std::size_t used = 0;
    std::vector<std::string> warnings;
};

/// Least-squares slope of log2 y against log2 x. Rows with y <= 0 are
/// skipped with a warning; `drop_coarsest` also skips the largest x.
inline SlopeFit fit_loglog_slope(std::span<const double> x, std::span<const double> y, bool drop_coarsest = false) {
    if (x.size() != y.size()) throw DimensionError("fit_loglog_slope: size mismatch");
    std::size_t coarsest = x.size();
    if (drop_coarsest && !x.empty()) {
        coarsest = static_cast<std::size_t>(std::max_element(x.begin(), x.end()) - x.begin());
    }
    SlopeFit out;
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (i == coarsest) continue;
        if (!(y[i] > 0.0) || !std::isfinite(y[i]) || !(x[i] > 0.0)) {
            out.warnings.push_back("row x = " + format_g17(x[i]) + " excluded: nonpositive or non-finite value");
            continue;
        }
        lx.push_back(std::log2(x[i]));
        ly.push_back(std::log2(y[i]));
    }
    if (lx.size() < 3) throw FitError("fit_loglog_slope: fewer than 3 usable rows");
    const LinearFit f = ols_fit(lx, ly);
    out.slope = f.slope;
    out.slope_stderr = f.slope_stderr;
    out.used = f.used;
    return out;
}

// Local truncation error.

enum class Dynamics { first_order, second_order };

/// Either a fixed stepsize parameter h or h = epsilon.
struct HPolicy {
    bool equal_to_eps = true;
    double h = 0.0;

    static HPolicy fixed(double h) { return {false, h}; }
    static HPolicy eps() { return {true, 0.0}; }
    [[nodiscard]] double at(double eps) const noexcept { return equal_to_eps ? eps : h; }
    [[nodiscard]] std::string describe() const { return equal_to_eps ? "eps" : format_g17(h); }
};

struct ConvergenceRow {
    double x = 0.0;       ///< epsilon
    double h = 0.0;
    McEstimate mean_sq;   ///< squared error over non-diverged samples
    RootEstimate rms;
    std::size_t diverged = 0;
};

struct ConvergenceTable {
    std::vector<ConvergenceRow> rows;
    std::optional<SlopeFit> fit;

    [[nodiscard]] std::vector<double> xs() const {
        std::vector<double> v;
        for (const auto& r : rows) v.push_back(r.x);
        return v;
    }
    [[nodiscard]] std::vector<double> values() const {
        std::vector<double> v;
        for (const auto& r : rows) v.push_back(r.rms.value);
        return v;
    }
};

inline SlopeFit fit_loglog_slope(const ConvergenceTable& t, bool drop_coarsest = false) {
    const auto x = t.xs();
    const auto y = t.values();
    return fit_loglog_slope(x, y, drop_coarsest);
}

namespace detail {

inline ConvergenceRow finish_row(double eps, double h, std::span<const double> sq, std::span<const char> bad,
                                 const McConfig& cfg) {
    std::vector<double> kept;
    kept.reserve(sq.size());
    std::size_t diverged = 0;
    for (std::size_t i = 0; i < sq.size(); ++i) {
        if (bad[i]) ++diverged;
        else kept.push_back(sq[i]);
    }
    ConvergenceRow row;
    row.x = eps;
    row.h = h;
    row.diverged = diverged;
    if (kept.size() >= 2) {
        row.mean_sq = summarize(kept, {cfg.master_seed, cfg.label});
        row.rms = root_of(row.mean_sq);
    } else {
        row.mean_sq.n = kept.size();
        row.mean_sq.mean = std::numeric_limits<double>::quiet_NaN();
        row.rms.value = std::numeric_limits<double>::quiet_NaN();
    }
    return row;
}

}  // namespace detail

/// Per epsilon: n paths on [0, epsilon] started at u0, squared error against exp(epsilon A) u0.
/// Diverged samples are excluded and counted.
inline ConvergenceTable estimate_rmste(const LinearOde& p, std::span<const double> eps_grid, HPolicy policy,
                                       std::size_t n, const McConfig& cfg, Dynamics order = Dynamics::first_order) {
    validate_linear(p);
    if (n < 2) throw ParameterError("estimate_rmste: n must be >= 2");
    const OdeProblem prob = as_problem(p);
    ConvergenceTable table;
    for (double eps : eps_grid) {
        if (!(eps > 0.0)) throw ParameterError("estimate_rmste: epsilon must be positive");
        const double h = policy.at(eps);
        const State exact = exact_linear_solution(p, eps);
        const McConfig cell = subcell(cfg, std::string(order == Dynamics::first_order ? "sed" : "sed2") +
                                               "/eps=" + format_g17(eps) + "/h=" + policy.describe());
        std::vector<double> sq(n);
        std::vector<char> bad(n, 0);
        const State y2 = eval_field(prob.f, p.u0);
        parallel_for_index(n, cfg.workers, [&](std::size_t i) {
            RandomStream s = derive_stream({cell.master_seed, cell.label, i});
            if (order == Dynamics::first_order) {
                SedSampler sampler(prob, h);
                bad[i] = sampler.run(p.u0, p.u0, eps, s).status == RunStatus::diverged;
                const double d = distance2(sampler.value(), exact);
                sq[i] = d * d;
            } else {
                Sed2Sampler sampler(prob, h);
                bad[i] = sampler.run(p.u0, y2, p.u0, eps, s).status == RunStatus::diverged;
                const double d = distance2(sampler.y1(), exact);
                sq[i] = d * d;
            }
        });
        table.rows.push_back(detail::finish_row(eps, h, sq, bad, cell));
    }
    return table;
}

/// The value (I + (eps - sum H) A)(I + H_k A)...(I + H_1 A) u0 for given waiting times.
inline State euler_product(const LinearOde& p, std::span<const double> waits, double eps) {
    State v = p.u0;
    State tmp(v.size());
    double used = 0.0;
    auto step = [&](double s) {
        multiply_into(p.a, v, tmp);
        for (std::size_t j = 0; j < v.size(); ++j) v[j] += s * tmp[j];
    };
    for (double s : waits) {
        step(s);
        used += s;
    }
    step(eps - used);
    return v;
}

/// Squared error E[|V(eps) - u(eps)|^2 | K(eps) = k], waiting times drawn uniformly on the simplex.
inline McEstimate estimate_rmste_conditional(const LinearOde& p, double eps, std::size_t k, std::size_t n,
                                             const McConfig& cfg) {
    validate_linear(p);
    if (!(eps > 0.0)) throw ParameterError("estimate_rmste_conditional: epsilon must be positive");
    if (n < 2) throw ParameterError("estimate_rmste_conditional: n must be >= 2");
    const State exact = exact_linear_solution(p, eps);
    const McConfig cell = subcell(cfg, "cond/eps=" + format_g17(eps) + "/k=" + std::to_string(k));
    std::vector<double> sq(n);
    parallel_for_index(n, cfg.workers, [&](std::size_t i) {
        std::vector<double> waits;
        if (k > 0) {
            RandomStream s = derive_stream({cell.master_seed, cell.label, i});
            waits = sample_uniform_simplex(s, k, eps);
        }
        const double d = distance2(euler_product(p, waits, eps), exact);
        sq[i] = d * d;
    });
    return summarize(sq, {cell.master_seed, cell.label});
}

/// eps^4 (1 + |A|)^2 exp((2 eps |A| + eps |A|^2) / h): grows without bound as h -> 0 at fixed eps.
inline double rmste_theoretical_bound(double a_norm, double eps, double h) {
    return std::pow(eps, 4) * (1.0 + a_norm) * (1.0 + a_norm) * std::exp((2.0 * eps * a_norm + eps * a_norm * a_norm) / h);
}

// Long-time second moments.

struct MomentCell {
    double t = 0.0;
    double h = 0.0;
    McEstimate v_sq;                   ///< |V(t)|^2
    std::optional<McEstimate> gap_sq;  ///< |V(t) - Vbar(t)|^2
    std::optional<McEstimate> lyap;    ///< |V|^2 + c3 |V - Vbar|^2
    std::size_t diverged_samples = 0;
    bool diverged = false;
};

struct SecondMomentOptions {
    bool include_companion = false;
    std::optional<double> c3;  ///< also estimate the Lyapunov combination with this weight
};

/// Independent paths per (t, h) cell. A cell is flagged diverged when any path
/// blows up, or when the estimate exceeds |u0|^2 by more than 3 standard errors.
inline std::vector<MomentCell> estimate_second_moment(const LinearOde& p, double h, std::span<const double> t_grid,
                                                      std::size_t n, const McConfig& cfg,
                                                      const SecondMomentOptions& opt = {}) {
    validate_linear(p);
    if (n < 2) throw ParameterError("estimate_second_moment: n must be >= 2");
    const OdeProblem prob = as_problem(p);
    const double u0_sq = dot(p.u0, p.u0);
    std::vector<MomentCell> out;
    for (double t : t_grid) {
        if (!(t >= 0.0)) throw ParameterError("estimate_second_moment: t must be >= 0");
        const McConfig cell = subcell(cfg, "moment/h=" + format_g17(h) + "/t=" + format_g17(t));
        std::vector<double> vsq(n), gsq(n);
        std::vector<char> bad(n, 0);
        parallel_for_index(n, cfg.workers, [&](std::size_t i) {
            RandomStream s = derive_stream({cell.master_seed, cell.label, i});
            SedSampler sampler(prob, h);
            bad[i] = sampler.run(p.u0, p.u0, t, s).status == RunStatus::diverged;
            vsq[i] = dot(sampler.value(), sampler.value());
            const double g = distance2(sampler.value(), sampler.companion());
            gsq[i] = g * g;
        });
        MomentCell c;
        c.t = t;
        c.h = h;
        std::vector<double> kv, kg, kl;
        for (std::size_t i = 0; i < n; ++i) {
            if (bad[i]) {
                ++c.diverged_samples;
                continue;
            }
            kv.push_back(vsq[i]);
            kg.push_back(gsq[i]);
            if (opt.c3) kl.push_back(vsq[i] + *opt.c3 * gsq[i]);
        }
        const SeedSummary seed{cell.master_seed, cell.label};
        if (kv.size() >= 2) {
            c.v_sq = summarize(kv, seed);
            if (opt.include_companion) c.gap_sq = summarize(kg, seed);
            if (opt.c3) c.lyap = summarize(kl, seed);
        } else {
            c.v_sq.n = kv.size();
            c.v_sq.mean = std::numeric_limits<double>::quiet_NaN();
        }
        c.diverged = c.diverged_samples > 0 || kv.size() < 2 || c.v_sq.mean - 3.0 * c.v_sq.std_error > u0_sq;
        out.push_back(std::move(c));
    }
    return out;
}

// Jump chains.

struct JumpChainRow {
    std::size_t k = 0;
    std::size_t n = 0;
    double emp_mean = 0.0;
    double emp_m2 = 0.0;
    double pred_mean = 0.0;
    double pred_m2 = 0.0;
    double se_mean = 0.0;
    double se_m2 = 0.0;
};

/// Empirical mean and second moment of the chain for u' = -a u, u0 = 1, at k = 0..k_max.
/// `second_order` runs the second-order Taylor chain and predicts with its factors.
inline std::vector<JumpChainRow> estimate_jump_chain_moments(double a, double h, std::size_t k_max, std::size_t n,
                                                            const McConfig& cfg,
                                                            Dynamics order = Dynamics::first_order) {
    const MomentFactors fac = order == Dynamics::first_order ? jump_chain_moment_factors(a, h) : sed2_moment_factors(a, h);
    if (n < 2) throw ParameterError("estimate_jump_chain_moments: n must be >= 2");
    const OdeProblem prob = as_problem(linear1d(a));
    const McConfig cell = subcell(cfg, std::string(order == Dynamics::first_order ? "chain1" : "chain2") +
                                           "/a=" + format_g17(a) + "/h=" + format_g17(h));
    const std::size_t width = k_max + 1;
    std::vector<double> values(n * width);
    parallel_for_index(n, cfg.workers, [&](std::size_t i) {
        RandomStream s = derive_stream({cell.master_seed, cell.label, i});
        double* row = values.data() + i * width;
        if (order == Dynamics::first_order) {
            double v = 1.0;
            row[0] = v;
            for (std::size_t k = 1; k <= k_max; ++k) {
                v += sample_exponential(s, h) * (-a * v);
                row[k] = v;
            }
        } else {
            const auto chain = taylor2_jump_chain(prob, State{1.0}, h, k_max, s);
            for (std::size_t k = 0; k <= k_max; ++k) row[k] = chain[k][0];
        }
    });
    std::vector<JumpChainRow> out;
    std::vector<double> col(n), col2(n);
    for (std::size_t k = 0; k <= k_max; ++k) {
        for (std::size_t i = 0; i < n; ++i) {
            col[i] = values[i * width + k];
            col2[i] = col[i] * col[i];
        }
        const McEstimate m1 = summarize(col);
        const McEstimate m2 = summarize(col2);
        const double kk = static_cast<double>(k);
        out.push_back({k, n, m1.mean, m2.mean, std::pow(fac.mean, kk), std::pow(fac.m2, kk), m1.std_error,
                       m2.std_error});
    }
    return out;
}

// Generator consistency.

/// Samples of (phi(V(tau), Vbar(tau)) - phi(v, vbar)) / tau started from (v, vbar).
inline McEstimate estimate_generator_quotient_sed(const OdeProblem& p, double h, const TestFunction& phi,
                                                  const State& v, const State& vbar, double tau, std::size_t n,
                                                  const McConfig& cfg) {
    if (!(tau > 0.0)) throw ParameterError("estimate_generator_quotient_sed: tau must be positive");
    const double base = phi.value(v, vbar);
    const McConfig cell = subcell(cfg, "gen1/tau=" + format_g17(tau));
    std::vector<double> q(n);
    parallel_for_index(n, cfg.workers, [&](std::size_t i) {
        RandomStream s = derive_stream({cell.master_seed, cell.label, i});
        SedSampler sampler(p, h);
        sampler.run(v, vbar, tau, s);
        q[i] = (phi.value(sampler.value(), sampler.companion()) - base) / tau;
    });
    return summarize(q, {cell.master_seed, cell.label});
}

inline McEstimate estimate_generator_quotient_sed2(const OdeProblem& p, double h, const TestFunction3& phi,
                                                   const State& y1, const State& y2, const State& ybar, double tau,
                                                   std::size_t n, const McConfig& cfg) {
    if (!(tau > 0.0)) throw ParameterError("estimate_generator_quotient_sed2: tau must be positive");
    const double base = phi.value(y1, y2, ybar);
    const McConfig cell = subcell(cfg, "gen2/tau=" + format_g17(tau));
    std::vector<double> q(n);
    parallel_for_index(n, cfg.workers, [&](std::size_t i) {
        RandomStream s = derive_stream({cell.master_seed, cell.label, i});
        Sed2Sampler sampler(p, h);
        sampler.run(y1, y2, ybar, tau, s);
        q[i] = (phi.value(sampler.y1(), sampler.y2(), sampler.companion()) - base) / tau;
    });
    return summarize(q, {cell.master_seed, cell.label});
}

// Path distance surrogate.

/// Mean truncated path distance between SED paths from u0 and `reference` over [0, 10].
inline McEstimate estimate_path_distance(const OdeProblem& p, const State& u0, double h, const DensePath& reference,
                                         std::size_t n, const McConfig& cfg) {
    constexpr double kTMax = 10.0;
    if (reference.t_end() < kTMax) throw RangeError("estimate_path_distance: reference shorter than 10");
    const McConfig cell = subcell(cfg, "dist/h=" + format_g17(h));
    std::vector<double> d(n);
    const auto& breaks = reference.times();
    parallel_for_index(n, cfg.workers, [&](std::size_t i) {
        RandomStream s = derive_stream({cell.master_seed, cell.label, i});
        const SedPath path = simulate_sed(p, u0, h, kTMax, s);
        d[i] = truncated_path_distance(path, [&](double t) { return reference(t); }, breaks, kTMax, 1000);
    });
    return summarize(d, {cell.master_seed, cell.label});
}

// Conditional simplex law.

/// Waiting times (H_1..H_k) of a path conditioned on exactly k jumps in [0, t], by rejection.
inline std::vector<double> sample_conditioned_waits(RandomStream& stream, double h, std::size_t k, double t) {
    for (;;) {
        std::vector<double> waits;
        double s = 0.0;
        for (;;) {
            const double w = sample_exponential(stream, h);
            if (s + w > t) break;
            s += w;
            waits.push_back(w);
            if (waits.size() > k) break;
        }
        if (waits.size() == k) return waits;
    }
}

/// Negative control: k spacings of k - 1 sorted uniforms, summing to exactly t.
inline std::vector<double> sample_full_simplex(RandomStream& stream, std::size_t k, double t) {
    if (k == 0) throw ParameterError("sample_full_simplex: k must be >= 1");
    std::vector<double> cuts(k - 1);
    for (double& c : cuts) c = t * stream.uniform();
    std::sort(cuts.begin(), cuts.end());
    std::vector<double> out(k);
    double prev = 0.0;
    for (std::size_t i = 0; i + 1 < k; ++i) {
        out[i] = cuts[i] - prev;
        prev = cuts[i];
    }
    out[k - 1] = t - prev;
    return out;
}

/// Asymptotic Kolmogorov tail Q(x) = 2 sum_{j>=1} (-1)^{j-1} exp(-2 j^2 x^2).
inline double kolmogorov_q(double x) {
    if (x < 0.2) return 1.0;
    double s = 0.0;
    for (int j = 1; j <= 100; ++j) {
        const double term = std::exp(-2.0 * j * j * x * x);
        s += (j % 2 == 1 ? 2.0 : -2.0) * term;
        if (term < 1e-18) break;
    }
    return std::clamp(s, 0.0, 1.0);
}

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
    std::size_t n1 = 0;
    std::size_t n2 = 0;
};

/// Two-sample Kolmogorov-Smirnov test with the effective-size corrected asymptotic p-value.
inline KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw ParameterError("ks_two_sample: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    const double ne = std::sqrt(na * nb / (na + nb));
    return {d, kolmogorov_q((ne + 0.12 + 0.11 / ne) * d), a.size(), b.size()};
}

enum class SimplexSampler { direct, full_simplex };

/// KS comparison of H_1 from the conditioned exponential mechanism against a direct sampler.
inline KsResult simplex_ks_test(std::size_t k, double t, double h, std::size_t n, const McConfig& cfg,
                                SimplexSampler direct = SimplexSampler::direct) {
    if (k == 0) throw ParameterError("simplex_ks_test: k must be >= 1");
    const McConfig cond = subcell(cfg, "simplex/cond/k=" + std::to_string(k));
    const McConfig dir = subcell(cfg, std::string("simplex/") +
                                          (direct == SimplexSampler::direct ? "direct" : "full") +
                                          "/k=" + std::to_string(k));
    std::vector<double> a(n), b(n);
    parallel_for_index(n, cfg.workers, [&](std::size_t i) {
        RandomStream s = derive_stream({cond.master_seed, cond.label, i});
        a[i] = sample_conditioned_waits(s, h, k, t)[0];
        RandomStream r = derive_stream({dir.master_seed, dir.label, i});
        b[i] = direct == SimplexSampler::direct ? sample_uniform_simplex(r, k, t)[0] : sample_full_simplex(r, k, t)[0];
    });
    return ks_two_sample(std::move(a), std::move(b));
}

}  // namespace stoch_euler
