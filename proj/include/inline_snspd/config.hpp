#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "inline_snspd/bicwave.hpp"
#include "inline_snspd/cascade.hpp"
#include "inline_snspd/correlator.hpp"
#include "inline_snspd/nanowire.hpp"
#include "inline_snspd/simkernel.hpp"
#include "inline_snspd/sources.hpp"

namespace inline_snspd::config {

// Exactly one of n, fractions or conditional describes the cascade.
struct CascadeSection {
    std::optional<std::size_t> n;
    std::vector<double> fractions;
    std::vector<double> conditional;
    double last_cap = cascade::default_last_cap;
};

struct AnalysisSection {
    correlator::ConditionalG2Config conditional;
    Picoseconds click_half_window = 1000;  // around each trigger
    Picoseconds g2_bin = 1000;
    Picoseconds g2_tau_range = 100000;
    Picoseconds jitter_bin = 2;
    Picoseconds jitter_t_min = -1000;
    Picoseconds jitter_t_max = 1000;
    double nbar_min = 0.01;
    double nbar_max = 3.0;
    std::size_t nbar_points = 9;
};

struct ToolkitConfig {
    bicwave::BicModelParams waveguide = bicwave::default_params();
    double residual_db_per_cm = bicwave::default_residual_db_per_cm;
    nanowire::NanowireSpec detector;
    double recovery_time_ns = nanowire::default_recovery_time_ns;
    // When set, eta_int and dark_rate follow the bias curve at this bias.
    std::optional<double> bias;
    nanowire::BiasCurve bias_curve = nanowire::default_bias_curve();
    CascadeSection cascade;
    sources::SourceSpec source = sources::CoherentPulsed{};
    // n_triggers and duration_s both live here; run_config() keeps the one
    // that matches the source.
    simkernel::RunConfig run;
    AnalysisSection analysis;

    // Throws ConfigError naming the offending section.
    void validate() const;

    nanowire::NanowireSpec wire_template() const;
    cascade::CascadeDesign build_cascade() const;
    simkernel::RunConfig run_config() const;
};

// The built-in defaults profile: the quoted device numbers (alpha 0.62 dB/um,
// BIC at 1.57 um, 1.7 ns recovery, 68.8/29.5/4.5 ps jitter components, 1 ns
// heralding window, 100 ps bins) with a two-wire 50/50 cascade and a
// coherent nbar = 1 source at 50 MHz.
ToolkitConfig defaults();

// INI text with [waveguide], [detector], [cascade], [source], [run] and
// [analysis]. Missing keys keep their defaults; unknown keys are errors.
// Overrides are "section.key=value" strings applied on top of the text.
ToolkitConfig parse(std::istream& in, std::span<const std::string> overrides = {});
// An empty path means the defaults profile plus overrides.
ToolkitConfig load(const std::filesystem::path& path, std::span<const std::string> overrides = {});
std::string to_ini(const ToolkitConfig& cfg);

}  // namespace inline_snspd::config
