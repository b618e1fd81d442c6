#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "inline_snspd/cascade.hpp"
#include "inline_snspd/sources.hpp"
#include "inline_snspd/tags.hpp"

namespace inline_snspd::simkernel {

// Exactly one of n_triggers (pulsed sources) or duration_s (SPDC) is set.
struct RunConfig {
    std::uint64_t seed = 1;
    std::optional<std::uint64_t> n_triggers;
    std::optional<double> duration_s;
    // Channel carrying laser triggers or heralds; wires take the remaining ids
    // in optical order. nullopt drops reference tags entirely.
    std::optional<Channel> reference_channel = Channel{0};
    double trigger_jitter_fwhm = 0.0;   // ps, setup contribution on reference tags
    double readout_jitter_fwhm = 0.0;   // ps, electronic contribution on every click
    double reference_dead_time = 0.0;   // ps
    // Uncorrelated background, Hz per wire per unit nbar (pulsed sources).
    double background_rate_per_nbar = 0.0;
    unsigned workers = 1;               // 0 = hardware concurrency

    void validate() const;
};

struct ChannelLayout {
    Channel channel_count = 0;
    std::optional<Channel> reference;
    std::vector<Channel> wires;  // optical order
};

// Throws ConfigError if the reference channel does not fit the layout.
ChannelLayout channel_layout(std::size_t wire_count, const RunConfig& run);

// Monte Carlo of the source through the cascade. Per photon: absorbed by
// wire k with its conditional absorption, clicks with eta_int, timestamp
// smeared by the wire and readout jitter. Then dark counts and background are
// merged, dead time applied per channel, and the stream sorted. Tags jittered
// outside [0, duration] are dropped. Output depends on the seed only, never
// on the worker count.
TagStream simulate(const sources::SourceSpec& source, const cascade::CascadeDesign& design, const RunConfig& run);

// Per channel, keep a tag iff it is at least dead_time after the last kept tag.
TagStream apply_dead_time(const TagStream& stream, double dead_time_ps);
TagStream apply_dead_time(const TagStream& stream, std::span<const double> dead_time_per_channel);

// Merge homogeneous Poisson tags over [0, duration] on every channel
// (or with per-channel rates, zero to skip a channel).
TagStream add_dark_counts(const TagStream& stream, double rate_hz, std::uint64_t seed);
TagStream add_dark_counts(const TagStream& stream, std::span<const double> rate_per_channel, std::uint64_t seed,
                          std::uint64_t domain = rng_domain::dark);

struct WindowFilterResult {
    TagStream stream;
    bool no_triggers = false;
};

// Trigger tags plus every other tag within [-half_window, +half_window] of
// some trigger.
WindowFilterResult window_filter(const TagStream& stream, Channel trigger_channel, Picoseconds half_window);

}  // namespace inline_snspd::simkernel
