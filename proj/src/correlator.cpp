#include "inline_snspd/correlator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "inline_snspd/error.hpp"

namespace inline_snspd::correlator {

namespace {

constexpr double nan = std::numeric_limits<double>::quiet_NaN();
constexpr double inf = std::numeric_limits<double>::infinity();

void require_sorted(std::span<const Picoseconds> v, const char* what)
{
    if (!std::is_sorted(v.begin(), v.end())) {
        throw PreconditionError(std::string(what) + ": input timestamps are not sorted");
    }
}

double relative_uncertainty(std::uint64_t n) { return n == 0 ? inf : 1.0 / std::sqrt(static_cast<double>(n)); }

// Bins centred on k * width for |k| <= half_bins. Delay d falls in bin
// floor((2d + (2J+1) w) / 2w) when 0 <= 2d + (2J+1) w < 2 (2J+1) w.
struct CentredBins {
    Picoseconds width;
    std::int64_t half_bins;

    std::size_t size() const { return static_cast<std::size_t>(2 * half_bins + 1); }
    std::int64_t span2() const { return (2 * half_bins + 1) * width; }
    // Lowest delay d with 2d >= -span2.
    Picoseconds lowest() const { return -(span2() / 2); }
    bool below(Picoseconds d) const { return 2 * d < -span2(); }
    bool above(Picoseconds d) const { return 2 * d >= span2(); }
    std::size_t index(Picoseconds d) const { return static_cast<std::size_t>((2 * d + span2()) / (2 * width)); }
    Picoseconds tau(std::size_t i) const { return (static_cast<std::int64_t>(i) - half_bins) * width; }
};

CentredBins make_bins(Picoseconds bin_width, Picoseconds tau_range)
{
    if (bin_width <= 0) {
        throw DomainError("correlator: bin width must be > 0");
    }
    if (tau_range < 0) {
        throw DomainError("correlator: tau range must be >= 0");
    }
    return {bin_width, tau_range / bin_width};
}

}  // namespace

void ConditionalG2Config::validate() const
{
    if (w_coinc <= 0 || w_bin <= 0) {
        throw DomainError("ConditionalG2Config: w_coinc and w_bin must be > 0");
    }
    if (tau_range < 0) {
        throw DomainError("ConditionalG2Config: tau_range must be >= 0");
    }
}

bool CorrelationResult::defined(std::size_t i) const { return !std::isnan(values.at(i)); }

double CorrelationResult::at_zero() const
{
    const auto it = std::find(taus.begin(), taus.end(), Picoseconds{0});
    if (it == taus.end()) {
        return nan;
    }
    return values[static_cast<std::size_t>(it - taus.begin())];
}

std::uint64_t pair_coincidences(std::span<const Picoseconds> a, std::span<const Picoseconds> b, Picoseconds window)
{
    require_sorted(a, "pair_coincidences");
    require_sorted(b, "pair_coincidences");
    if (window < 0) {
        throw DomainError("pair_coincidences: window must be >= 0");
    }
    std::uint64_t count = 0;
    std::size_t j = 0;
    for (const Picoseconds t : a) {
        // first b with 2 (b - t) >= -window
        while (j < b.size() && 2 * (b[j] - t) < -window) {
            ++j;
        }
        if (j < b.size() && 2 * (b[j] - t) <= window) {
            ++count;
        }
    }
    return count;
}

Histogram start_stop_histogram(std::span<const Picoseconds> starts, std::span<const Picoseconds> stops,
                               Picoseconds bin_width, Picoseconds t_min, Picoseconds t_max)
{
    require_sorted(starts, "start_stop_histogram");
    require_sorted(stops, "start_stop_histogram");
    if (bin_width <= 0) {
        throw DomainError("start_stop_histogram: bin width must be > 0");
    }
    if (t_min >= t_max) {
        throw DomainError("start_stop_histogram: need t_min < t_max");
    }
    Histogram h;
    h.bin_width = bin_width;
    h.t_min = t_min;
    h.counts.assign(static_cast<std::size_t>((t_max - t_min + bin_width - 1) / bin_width), 0);
    h.total_starts = starts.size();
    std::size_t j = 0;
    for (const Picoseconds start : starts) {
        while (j < stops.size() && stops[j] < start + t_min) {
            ++j;
        }
        if (j == stops.size()) {
            break;
        }
        const Picoseconds delay = stops[j] - start;
        if (delay < t_max) {
            ++h.counts[static_cast<std::size_t>((delay - t_min) / bin_width)];
        }
    }
    return h;
}

Histogram g2_raw_histogram(std::span<const Picoseconds> a, std::span<const Picoseconds> b, Picoseconds bin_width,
                           Picoseconds tau_range)
{
    require_sorted(a, "g2");
    require_sorted(b, "g2");
    const auto bins = make_bins(bin_width, tau_range);
    Histogram h;
    h.bin_width = bin_width;
    h.t_min = bins.lowest();
    h.counts.assign(bins.size(), 0);
    h.total_starts = a.size();
    std::size_t lo = 0;
    for (const Picoseconds t : a) {
        while (lo < b.size() && bins.below(b[lo] - t)) {
            ++lo;
        }
        for (std::size_t j = lo; j < b.size() && !bins.above(b[j] - t); ++j) {
            ++h.counts[bins.index(b[j] - t)];
        }
    }
    return h;
}

CorrelationResult g2_normalized(std::span<const Picoseconds> a, std::span<const Picoseconds> b, Picoseconds bin_width,
                                Picoseconds tau_range, Picoseconds duration)
{
    if (duration <= 0) {
        throw DomainError("g2_normalized: duration must be > 0");
    }
    if (a.empty() || b.empty()) {
        throw UndefinedError("g2_normalized: a channel has zero rate, normalization undefined");
    }
    const auto h = g2_raw_histogram(a, b, bin_width, tau_range);
    const auto bins = make_bins(bin_width, tau_range);
    // N_a N_b w / T == r_a r_b T w
    const double norm = static_cast<double>(a.size()) * static_cast<double>(b.size()) * static_cast<double>(bin_width) /
                        static_cast<double>(duration);
    CorrelationResult r;
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
        r.taus.push_back(bins.tau(i));
        r.values.push_back(static_cast<double>(h.counts[i]) / norm);
        r.uncertainties.push_back(relative_uncertainty(h.counts[i]));
    }
    return r;
}

ConditionalCounts conditional_counts(std::span<const Picoseconds> idler, std::span<const Picoseconds> s1,
                                     std::span<const Picoseconds> s2, const ConditionalG2Config& cfg)
{
    cfg.validate();
    require_sorted(idler, "conditional_g2");
    require_sorted(s1, "conditional_g2");
    require_sorted(s2, "conditional_g2");
    const auto bins = make_bins(cfg.w_bin, cfg.tau_range);

    ConditionalCounts c;
    c.idler = idler.size();
    c.idler_s2.assign(bins.size(), 0);
    c.triple.assign(bins.size(), 0);
    // Last idler index that hit each bin, so a herald counts once per bin.
    std::vector<std::size_t> stamp(bins.size(), std::numeric_limits<std::size_t>::max());

    std::size_t j1 = 0;
    std::size_t lo2 = 0;
    for (std::size_t i = 0; i < idler.size(); ++i) {
        const Picoseconds t = idler[i];
        while (j1 < s1.size() && 2 * (s1[j1] - t) < -cfg.w_coinc) {
            ++j1;
        }
        const bool heralded_s1 = j1 < s1.size() && 2 * (s1[j1] - t) <= cfg.w_coinc;
        if (heralded_s1) {
            ++c.idler_s1;
        }
        while (lo2 < s2.size() && bins.below(s2[lo2] - t)) {
            ++lo2;
        }
        for (std::size_t j = lo2; j < s2.size() && !bins.above(s2[j] - t); ++j) {
            const std::size_t k = bins.index(s2[j] - t);
            if (stamp[k] == i) {
                continue;
            }
            stamp[k] = i;
            ++c.idler_s2[k];
            if (heralded_s1) {
                ++c.triple[k];
            }
        }
    }
    return c;
}

CorrelationResult conditional_g2(std::span<const Picoseconds> idler, std::span<const Picoseconds> s1,
                                 std::span<const Picoseconds> s2, const ConditionalG2Config& cfg)
{
    const auto c = conditional_counts(idler, s1, s2, cfg);
    const auto bins = make_bins(cfg.w_bin, cfg.tau_range);
    CorrelationResult r;
    for (std::size_t k = 0; k < bins.size(); ++k) {
        r.taus.push_back(bins.tau(k));
        const double denominator = static_cast<double>(c.idler_s1) * static_cast<double>(c.idler_s2[k]);
        if (denominator == 0.0) {
            r.values.push_back(nan);
            r.uncertainties.push_back(nan);
            continue;
        }
        r.values.push_back(static_cast<double>(c.triple[k]) * static_cast<double>(c.idler) / denominator);
        // Each rate carries 1/sqrt(N); relative errors add in quadrature.
        double u2 = 0.0;
        for (const std::uint64_t n : {c.triple[k], c.idler, c.idler_s1, c.idler_s2[k]}) {
            const double u = relative_uncertainty(n);
            u2 += u * u;
        }
        r.uncertainties.push_back(std::sqrt(u2));
    }
    return r;
}

}  // namespace inline_snspd::correlator
