#pragma once

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "inline_snspd/rng.hpp"
#include "inline_snspd/units.hpp"

namespace inline_snspd::sources {

struct CoherentPulsed {
    double nbar = 1.0;
    double rep_rate = 50e6;  // Hz
};

// Single-mode thermal light, pulsed at rep_rate.
struct Thermal {
    double nbar = 1.0;
    double rep_rate = 50e6;
};

struct FockPulsed {
    unsigned n = 1;
    double rep_rate = 50e6;
};

// CW-pumped pair source: each pair gives a herald (idler) tag and one signal
// photon created at the same instant.
struct SpdcCw {
    double pair_rate = 1e6;            // Hz
    double herald_efficiency = 0.5;
    double signal_transmission = 0.5;
    double herald_jitter_fwhm = 450.0;  // ps
};

using SourceSpec = std::variant<CoherentPulsed, Thermal, FockPulsed, SpdcCw>;

void validate(const SourceSpec& spec);
bool is_pulsed(const SourceSpec& spec);
// Trigger period in ps of a pulsed source.
double period_ps(const SourceSpec& spec);

struct EmissionEvent {
    Picoseconds time = 0;
    unsigned photons = 0;
    std::optional<Picoseconds> herald_time;

    friend bool operator==(const EmissionEvent&, const EmissionEvent&) = default;
};

// Photon number of trigger k for a pulsed source. The generator must be the
// per-trigger stream CounterRng(seed, rng_domain::pulse, k); the simulator
// continues drawing from the same stream.
unsigned draw_pulse_photons(const SourceSpec& spec, CounterRng& rng);

Picoseconds trigger_time(const SourceSpec& spec, std::uint64_t k);

// Poisson (coherent), exact (Fock) or Bose-Einstein (thermal) counts per
// trigger at times k / rep_rate.
std::vector<EmissionEvent> sample_pulse_counts(const SourceSpec& spec, std::uint64_t n_triggers, std::uint64_t seed);

struct SpdcStreams {
    std::vector<Picoseconds> heralds;    // sorted
    std::vector<EmissionEvent> signal;   // sorted, photons == 1
};

// Fixed time block for SPDC and dark-count generation; keys the RNG.
inline constexpr Picoseconds generation_block_ps = 1'000'000'000;  // 1 ms

struct SpdcPair {
    Picoseconds created;
    std::optional<Picoseconds> herald;  // jittered, if detected
    bool signal_kept;
};

// Pairs of one generation block, in creation order. Pure function of
// (spec, seed, block, block_end).
std::vector<SpdcPair> spdc_block_pairs(const SpdcCw& spec, std::uint64_t seed, std::uint64_t block,
                                       Picoseconds block_end);

SpdcStreams sample_spdc_stream(const SourceSpec& spec, double duration_s, std::uint64_t seed);

// g2(0): coherent 1, thermal 2, Fock n -> 1 - 1/n. SPDC throws.
double theoretical_g2_zero(const SourceSpec& spec);

}  // namespace inline_snspd::sources
