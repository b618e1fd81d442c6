#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "inline_snspd/tags.hpp"

namespace inline_snspd::pnr {

// p[k] = probability of k clicks per pulse.
struct ClickStatistics {
    std::vector<double> p;
    double nbar = 0.0;

    double at(std::size_t k) const { return k < p.size() ? p[k] : 0.0; }
};

struct PowerCalibration {
    double p_pm;        // W at the power meter
    double a_losses;    // total transmission to the chip, <= 1
    double c_tr;        // Hz repetition rate
    double wavelength;  // m

    void validate() const;
};

struct CountRates {
    double c1;
    double c2;
    double c12;
    double c_tr;

    void validate() const;
};

// Two-detector no-click product model with per-wire efficiencies referenced
// to the chip input.
ClickStatistics click_probs_two(double nbar, double eta1, double eta2);

// Poisson-binomial click-count law of independent detectors with
// p_i = 1 - exp(-nbar eta_i).
ClickStatistics click_pattern_probs(double nbar, std::span<const double> etas);

ClickStatistics estimate_from_counts(const CountRates& rates);

// -ln(p0) / sum(eta).
double estimate_nbar(double p0, std::span<const double> etas);

double photon_energy(double wavelength_m);
double mean_photon_from_power(const PowerCalibration& cal);

__extension__ using uint128 = unsigned __int128;

struct Ratio {
    std::uint64_t num;
    std::uint64_t den;

    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
    // Cross-multiplied comparison, exact for the sizes used here.
    friend bool operator==(const Ratio& a, const Ratio& b)
    {
        return static_cast<uint128>(a.num) * b.den == static_cast<uint128>(b.num) * a.den;
    }
};

// n photons on an equal-split, unit-efficiency cascade of n_det wires land on
// n distinct wires: n_det! / ((n_det - n)! n_det^n).
Ratio fock_fidelity_ratio(unsigned n, unsigned n_det);
double fock_fidelity(unsigned n, unsigned n_det);

// Enumerates all n_det^n wire assignments (at most 1e8) and counts the
// injective ones. Throws DomainError when the enumeration is too large.
Ratio fock_fidelity_bruteforce_ratio(unsigned n, unsigned n_det);
double fock_fidelity_bruteforce(unsigned n, unsigned n_det);

// Per-trigger click tally inside +-half_window of each trigger tag.
struct ClickTally {
    std::uint64_t triggers = 0;
    std::vector<std::uint64_t> per_detector;    // pulses with >= 1 click on detector d
    std::vector<std::uint64_t> by_click_count;  // pulses with k detectors clicked
    std::uint64_t both_first_two = 0;           // pulses where detectors 0 and 1 both clicked

    CountRates two_detector_rates() const;
    ClickStatistics empirical() const;
};

ClickTally tally_clicks(const TagStream& stream, Channel trigger_channel, std::span<const Channel> detectors,
                        Picoseconds half_window);

}  // namespace inline_snspd::pnr
