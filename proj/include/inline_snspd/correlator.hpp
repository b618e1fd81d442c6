#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "inline_snspd/units.hpp"

namespace inline_snspd::correlator {

// All inputs are sorted picosecond timestamps of one channel each. Windows
// are closed: |dt| <= w/2 counts. Histogram bins are half-open.

struct Histogram {
    Picoseconds bin_width = 1;
    Picoseconds t_min = 0;
    std::vector<std::uint64_t> counts;
    std::uint64_t total_starts = 0;

    Picoseconds bin_start(std::size_t i) const { return t_min + static_cast<Picoseconds>(i) * bin_width; }
    double bin_center(std::size_t i) const { return static_cast<double>(bin_start(i)) + 0.5 * static_cast<double>(bin_width); }
};

struct ConditionalG2Config {
    Picoseconds w_coinc = 1000;     // heralding window
    Picoseconds w_bin = 100;
    Picoseconds tau_range = 10000;  // |tau| <= tau_range

    void validate() const;
};

// Undefined bins (zero denominator) carry NaN.
struct CorrelationResult {
    std::vector<Picoseconds> taus;
    std::vector<double> values;
    std::vector<double> uncertainties;  // relative

    bool defined(std::size_t i) const;
    // Value at the bin whose centre is tau == 0.
    double at_zero() const;
};

// The raw counts behind a conditional g2 curve.
struct ConditionalCounts {
    std::uint64_t idler = 0;
    std::uint64_t idler_s1 = 0;
    std::vector<std::uint64_t> idler_s2;
    std::vector<std::uint64_t> triple;
};

// Number of a-tags with at least one b-tag within +-window/2 (linear sweep).
std::uint64_t pair_coincidences(std::span<const Picoseconds> a, std::span<const Picoseconds> b, Picoseconds window);

// For each start, the first stop at or after start + t_min; its delay is
// binned if below t_max. With t_min >= 0 this is the plain first-stop rule.
Histogram start_stop_histogram(std::span<const Picoseconds> starts, std::span<const Picoseconds> stops,
                               Picoseconds bin_width, Picoseconds t_min, Picoseconds t_max);

// Cross-correlation of every (a, b) pair with bins centred on k * bin_width,
// |k * bin_width| <= tau_range, normalized by r_a * r_b * duration * bin_width.
CorrelationResult g2_normalized(std::span<const Picoseconds> a, std::span<const Picoseconds> b, Picoseconds bin_width,
                                Picoseconds tau_range, Picoseconds duration);
Histogram g2_raw_histogram(std::span<const Picoseconds> a, std::span<const Picoseconds> b, Picoseconds bin_width,
                           Picoseconds tau_range);

// Heralded autocorrelation N_is1s2(0, tau|0) N_i / (N_is1(0) N_is2(tau)).
// Each herald counts at most once per window or bin.
ConditionalCounts conditional_counts(std::span<const Picoseconds> idler, std::span<const Picoseconds> s1,
                                     std::span<const Picoseconds> s2, const ConditionalG2Config& cfg);
CorrelationResult conditional_g2(std::span<const Picoseconds> idler, std::span<const Picoseconds> s1,
                                 std::span<const Picoseconds> s2, const ConditionalG2Config& cfg = {});

}  // namespace inline_snspd::correlator
