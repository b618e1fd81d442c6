#include "inline_snspd/pnr.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>

#include "inline_snspd/error.hpp"

namespace inline_snspd::pnr {

namespace {

constexpr double planck = 6.62607015e-34;     // J s
constexpr double light_speed = 299792458.0;  // m/s
constexpr std::uint64_t max_enumeration = 100'000'000;

void check_efficiency(double eta)
{
    if (!(eta >= 0.0 && eta <= 1.0)) {
        throw DomainError("detector efficiency must lie in [0, 1]");
    }
}

void check_nbar(double nbar)
{
    if (!(nbar >= 0.0)) {
        throw DomainError("nbar must be >= 0");
    }
}

}  // namespace

void PowerCalibration::validate() const
{
    if (!(p_pm > 0.0) || !(a_losses > 0.0) || !(c_tr > 0.0) || !(wavelength > 0.0)) {
        throw DomainError("PowerCalibration: all fields must be > 0");
    }
    if (a_losses > 1.0) {
        throw DomainError("PowerCalibration: a_losses must be <= 1");
    }
}

void CountRates::validate() const
{
    if (!(c_tr > 0.0)) {
        throw DomainError("CountRates: trigger rate must be > 0");
    }
    if (!(c12 >= 0.0) || c12 > std::min(c1, c2) || std::min(c1, c2) < 0.0 || std::max(c1, c2) > c_tr) {
        throw DomainError("CountRates: need 0 <= c12 <= min(c1, c2) and c1, c2 <= c_tr");
    }
}

ClickStatistics click_probs_two(double nbar, double eta1, double eta2)
{
    check_nbar(nbar);
    check_efficiency(eta1);
    check_efficiency(eta2);
    const double p0_1 = std::exp(-nbar * eta1);
    const double p0_2 = std::exp(-nbar * eta2);
    return {{p0_1 * p0_2, p0_1 * (1.0 - p0_2) + (1.0 - p0_1) * p0_2, (1.0 - p0_2) * (1.0 - p0_1)}, nbar};
}

ClickStatistics click_pattern_probs(double nbar, std::span<const double> etas)
{
    check_nbar(nbar);
    // dist[k] after folding in each detector; Poisson thinning makes them independent.
    std::vector<double> dist{1.0};
    for (double eta : etas) {
        check_efficiency(eta);
        const double click = -std::expm1(-nbar * eta);
        std::vector<double> next(dist.size() + 1, 0.0);
        for (std::size_t k = 0; k < dist.size(); ++k) {
            next[k] += dist[k] * (1.0 - click);
            next[k + 1] += dist[k] * click;
        }
        dist = std::move(next);
    }
    return {dist, nbar};
}

ClickStatistics estimate_from_counts(const CountRates& rates)
{
    rates.validate();
    const double p2 = rates.c12 / rates.c_tr;
    const double p1 = (rates.c1 + rates.c2 - 2.0 * rates.c12) / rates.c_tr;
    return {{1.0 - (p1 + p2), p1, p2}, std::numeric_limits<double>::quiet_NaN()};
}

double estimate_nbar(double p0, std::span<const double> etas)
{
    if (!(p0 > 0.0 && p0 <= 1.0)) {
        throw DomainError("estimate_nbar: p0 must lie in (0, 1]");
    }
    const double total = std::accumulate(etas.begin(), etas.end(), 0.0);
    if (!(total > 0.0)) {
        throw DomainError("estimate_nbar: total efficiency must be > 0");
    }
    return -std::log(p0) / total;
}

double photon_energy(double wavelength_m)
{
    if (!(wavelength_m > 0.0)) {
        throw DomainError("photon_energy: wavelength must be > 0");
    }
    return planck * light_speed / wavelength_m;
}

double mean_photon_from_power(const PowerCalibration& cal)
{
    cal.validate();
    return cal.p_pm * cal.a_losses / (cal.c_tr * photon_energy(cal.wavelength));
}

Ratio fock_fidelity_ratio(unsigned n, unsigned n_det)
{
    if (n == 0 || n_det == 0) {
        throw DomainError("fock_fidelity: need n >= 1 and n_det >= 1");
    }
    if (n > n_det) {
        return {0, 1};
    }
    uint128 num = 1;
    uint128 den = 1;
    for (unsigned k = 0; k < n; ++k) {
        num *= n_det - k;
        den *= n_det;
        if (den > std::numeric_limits<std::uint64_t>::max()) {
            throw DomainError("fock_fidelity_ratio: n_det^n exceeds 64 bits");
        }
    }
    return {static_cast<std::uint64_t>(num), static_cast<std::uint64_t>(den)};
}

double fock_fidelity(unsigned n, unsigned n_det)
{
    if (n == 0 || n_det == 0) {
        throw DomainError("fock_fidelity: need n >= 1 and n_det >= 1");
    }
    double f = 1.0;
    for (unsigned k = 0; k < n; ++k) {
        f *= 1.0 - static_cast<double>(k) / static_cast<double>(n_det);
    }
    return std::max(f, 0.0);
}

Ratio fock_fidelity_bruteforce_ratio(unsigned n, unsigned n_det)
{
    if (n == 0 || n_det == 0) {
        throw DomainError("fock_fidelity_bruteforce: need n >= 1 and n_det >= 1");
    }
    if (n_det > 64) {
        throw DomainError("fock_fidelity_bruteforce: enumeration too large");
    }
    std::uint64_t total = 1;
    for (unsigned k = 0; k < n; ++k) {
        total *= n_det;
        if (total > max_enumeration) {
            throw DomainError("fock_fidelity_bruteforce: n_det^n exceeds 1e8 assignments");
        }
    }
    std::vector<unsigned> digits(n, 0);
    std::uint64_t injective = 0;
    for (std::uint64_t i = 0; i < total; ++i) {
        std::uint64_t used = 0;
        for (unsigned d : digits) {
            used |= std::uint64_t{1} << d;
        }
        if (static_cast<unsigned>(std::popcount(used)) == n) {
            ++injective;
        }
        for (unsigned pos = 0; pos < n; ++pos) {
            if (++digits[pos] < n_det) {
                break;
            }
            digits[pos] = 0;
        }
    }
    return {injective, total};
}

double fock_fidelity_bruteforce(unsigned n, unsigned n_det) { return fock_fidelity_bruteforce_ratio(n, n_det).value(); }

CountRates ClickTally::two_detector_rates() const
{
    if (per_detector.size() < 2) {
        throw PreconditionError("two_detector_rates: tally has fewer than two detectors");
    }
    return {static_cast<double>(per_detector[0]), static_cast<double>(per_detector[1]),
            static_cast<double>(both_first_two), static_cast<double>(triggers)};
}

ClickStatistics ClickTally::empirical() const
{
    ClickStatistics stats;
    stats.nbar = std::numeric_limits<double>::quiet_NaN();
    for (std::uint64_t count : by_click_count) {
        stats.p.push_back(triggers == 0 ? 0.0 : static_cast<double>(count) / static_cast<double>(triggers));
    }
    return stats;
}

ClickTally tally_clicks(const TagStream& stream, Channel trigger_channel, std::span<const Channel> detectors,
                        Picoseconds half_window)
{
    if (!stream.is_sorted()) {
        throw PreconditionError("tally_clicks: stream is not sorted");
    }
    if (detectors.size() > 64) {
        throw PreconditionError("tally_clicks: at most 64 detectors");
    }
    std::vector<int> slot(stream.channel_count, -1);
    for (std::size_t d = 0; d < detectors.size(); ++d) {
        if (detectors[d] >= stream.channel_count || detectors[d] == trigger_channel) {
            throw PreconditionError("tally_clicks: detector channel " + std::to_string(detectors[d]) +
                                    " is missing or is the trigger");
        }
        slot[detectors[d]] = static_cast<int>(d);
    }
    const auto triggers = stream.times(trigger_channel);
    std::vector<std::uint64_t> masks(triggers.size(), 0);
    std::size_t j = 0;
    for (const auto& tag : stream.tags) {
        if (tag.channel >= slot.size() || slot[tag.channel] < 0) {
            continue;
        }
        while (j < triggers.size() && triggers[j] < tag.t - half_window) {
            ++j;
        }
        if (j < triggers.size() && triggers[j] <= tag.t + half_window) {
            masks[j] |= std::uint64_t{1} << slot[tag.channel];
        }
    }

    ClickTally tally;
    tally.triggers = triggers.size();
    tally.per_detector.assign(detectors.size(), 0);
    tally.by_click_count.assign(detectors.size() + 1, 0);
    for (const std::uint64_t mask : masks) {
        ++tally.by_click_count[static_cast<std::size_t>(std::popcount(mask))];
        for (std::size_t d = 0; d < detectors.size(); ++d) {
            if ((mask >> d) & 1u) {
                ++tally.per_detector[d];
            }
        }
        if ((mask & 3u) == 3u) {
            ++tally.both_first_two;
        }
    }
    return tally;
}

}  // namespace inline_snspd::pnr
