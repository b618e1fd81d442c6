#pragma once

#include <cstdint>
#include <limits>

namespace inline_snspd {

// Counter-keyed generator: the whole draw sequence is a pure function of
// (seed, domain, index, sub), so any event can be simulated in isolation and
// sharding never changes the output. Internally SplitMix64.
class CounterRng {
public:
    using result_type = std::uint64_t;

    CounterRng(std::uint64_t seed, std::uint64_t domain, std::uint64_t index, std::uint64_t sub = 0) noexcept
    {
        std::uint64_t s = mix(seed + 0x9E3779B97F4A7C15ULL);
        s = mix(s ^ (domain * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL));
        s = mix(s ^ (index * 0xABC98388FB8FAC03ULL + 0x2545F4914F6CDD1DULL));
        state_ = mix(s ^ (sub * 0x9FB21C651E98DF25ULL + 0x632BE59BD9B4E019ULL));
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept
    {
        state_ += 0x9E3779B97F4A7C15ULL;
        return mix(state_);
    }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

private:
    static constexpr std::uint64_t mix(std::uint64_t z) noexcept
    {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t state_;
};

// Stream domains keep independent consumers of one seed apart.
namespace rng_domain {
inline constexpr std::uint64_t pulse = 1;
inline constexpr std::uint64_t spdc_block = 2;
inline constexpr std::uint64_t spdc_pair = 3;
inline constexpr std::uint64_t dark = 4;
inline constexpr std::uint64_t background = 5;
inline constexpr std::uint64_t propagate = 6;
}  // namespace rng_domain

}  // namespace inline_snspd
