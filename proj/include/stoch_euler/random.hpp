#pragma once

// Counter-based random streams.
//
// Every Monte Carlo sample owns a stream derived from (master seed,
// experiment label, sample index). Streams never share state, so results do
// not depend on how samples are scheduled across threads.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "stoch_euler/errors.hpp"

namespace stoch_euler {

inline constexpr std::uint64_t kDefaultMasterSeed = 0x5EED0001ULL;

struct SeedSpec {
    std::uint64_t master_seed = kDefaultMasterSeed;
    std::string experiment_label;
    std::uint64_t sample_index = 0;
};

namespace detail {

__extension__ using uint128 = unsigned __int128;

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline constexpr std::uint64_t fnv1a64(std::string_view s) noexcept {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

}  // namespace detail

/// Philox4x64-10 block function: 256-bit counter, 128-bit key.
inline std::array<std::uint64_t, 4> philox4x64(std::array<std::uint64_t, 4> ctr, std::array<std::uint64_t, 2> key) noexcept {
    constexpr std::uint64_t kM0 = 0xD2E7470EE14C6C93ULL;
    constexpr std::uint64_t kM1 = 0xCA5A826395121157ULL;
    constexpr std::uint64_t kW0 = 0x9E3779B97F4A7C15ULL;
    constexpr std::uint64_t kW1 = 0xBB67AE8584CAA73BULL;
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            key[0] += kW0;
            key[1] += kW1;
        }
        const detail::uint128 p0 = static_cast<detail::uint128>(kM0) * ctr[0];
        const detail::uint128 p1 = static_cast<detail::uint128>(kM1) * ctr[2];
        const auto hi0 = static_cast<std::uint64_t>(p0 >> 64);
        const auto lo0 = static_cast<std::uint64_t>(p0);
        const auto hi1 = static_cast<std::uint64_t>(p1 >> 64);
        const auto lo1 = static_cast<std::uint64_t>(p1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
}

/// Single-owner stream of 64-bit words. Counter word 0/1 is the block index,
/// word 2 the sample index, word 3 a stream tag.
class RandomStream {
public:
    using result_type = std::uint64_t;

    RandomStream(std::array<std::uint64_t, 2> key, std::uint64_t sample_index, std::uint64_t tag = 0) noexcept
        : key_(key), sample_(sample_index), tag_(tag) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept { return next_u64(); }

    std::uint64_t next_u64() noexcept {
        if (used_ == 4) refill();
        return buffer_[used_++];
    }

    /// Uniform on (0, 1]: 53 random bits mapped to {1, ..., 2^53} / 2^53.
    double uniform_open0() noexcept {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    /// Uniform on [0, 1).
    double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    [[nodiscard]] std::uint64_t blocks_consumed() const noexcept { return block_; }

private:
    void refill() noexcept {
        buffer_ = philox4x64({block_, 0, sample_, tag_}, key_);
        ++block_;
        used_ = 0;
    }

    std::array<std::uint64_t, 2> key_;
    std::uint64_t sample_;
    std::uint64_t tag_;
    std::uint64_t block_ = 0;
    std::array<std::uint64_t, 4> buffer_{};
    int used_ = 4;
};

/// Stream for one sample; a pure function of the three SeedSpec fields.
inline RandomStream derive_stream(const SeedSpec& spec) noexcept {
    const std::uint64_t label = detail::fnv1a64(spec.experiment_label);
    const std::uint64_t k0 = detail::splitmix64(spec.master_seed ^ detail::splitmix64(label));
    const std::uint64_t k1 = detail::splitmix64(k0 ^ label);
    return RandomStream({k0, k1}, spec.sample_index);
}

/// H = -h ln(U) with U uniform on (0, 1]; Exp with mean h.
inline double sample_exponential(RandomStream& stream, double h) {
    if (!(h > 0.0) || !std::isfinite(h)) throw ParameterError("sample_exponential: h must be positive");
    const double u = stream.uniform_open0();
    const double x = -h * std::log(u);
    // U == 1 gives exactly 0; step past it so waiting times stay strictly positive.
    return x > 0.0 ? x : std::numeric_limits<double>::denorm_min();
}

/// All jump times T_k <= horizon plus the first one beyond it. T_0 = 0 is not included.
inline std::vector<double> sample_jump_times(RandomStream& stream, double h, double horizon) {
    if (!(h > 0.0) || !std::isfinite(h)) throw ParameterError("sample_jump_times: h must be positive");
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ParameterError("sample_jump_times: horizon must be positive");
    std::vector<double> times;
    double t = 0.0;
    do {
        t += sample_exponential(stream, h);
        times.push_back(t);
    } while (t <= horizon);
    return times;
}

/// Uniform point of {x in [0, inf)^k : sum x <= t}: spacings of k sorted
/// uniforms on [0, t], last spacing dropped.
inline std::vector<double> sample_uniform_simplex(RandomStream& stream, std::size_t k, double t) {
    if (k == 0) throw ParameterError("sample_uniform_simplex: k must be >= 1");
    if (!(t > 0.0) || !std::isfinite(t)) throw ParameterError("sample_uniform_simplex: t must be positive");
    std::vector<double> points(k);
    for (double& p : points) p = t * stream.uniform();
    std::sort(points.begin(), points.end());
    std::vector<double> spacings(k);
    double prev = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        spacings[i] = points[i] - prev;
        prev = points[i];
    }
    return spacings;
}

}  // namespace stoch_euler
