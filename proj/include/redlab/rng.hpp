#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace redlab {

/// Identifies one replication stream: equal specs give bit-identical draws.
struct RngSpec {
    std::uint64_t master_seed = 1;
    std::uint64_t stream_id = 0;
};

/// xoshiro256** with the standard jump polynomial. Stream k is the master
/// state advanced by k jumps of 2^128 draws, so streams never overlap.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed = 1);
    explicit Rng(const RngSpec& spec);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept;

    /// Advances the state by 2^128 draws.
    void jump() noexcept;

    /// Uniform on [0, 1) with 53 bits of resolution.
    double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    /// Uniform on (0, 1].
    double uniform_open0() noexcept { return 1.0 - uniform(); }

    /// Exponential variate with the given rate.
    double exponential(double rate) noexcept;

    /// Uniform integer on [0, n); n must be positive.
    std::uint64_t below(std::uint64_t n) noexcept;

    /// Bernoulli(p).
    bool bernoulli(double p) noexcept { return uniform() < p; }

private:
    std::array<std::uint64_t, 4> s_{};
};

}  // namespace redlab
