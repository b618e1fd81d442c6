#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "inline_snspd/nanowire.hpp"

namespace inline_snspd::cascade {

inline constexpr double default_last_cap = 0.999;

// Nanowires in optical order along one waveguide. input_fractions[k] is the
// share of the original input absorbed by wire k; residual leaves the end.
struct CascadeDesign {
    std::vector<nanowire::NanowireSpec> wires;
    std::vector<double> conditional_absorption;
    std::vector<double> input_fractions;
    double residual = 1.0;
    // Wires whose requested conditional absorption exceeded the cap.
    std::vector<bool> capped;

    std::size_t size() const { return wires.size(); }
    bool cap_applied() const;
    double total_length() const;
    std::vector<double> lengths() const;
    std::vector<double> cumulative_absorption() const;
};

struct InputFractions {
    std::vector<double> fractions;
    double residual;
};

// Forward model: f_k = T_{k-1} A(l_k), T_k = T_{k-1} (1 - A(l_k)).
InputFractions input_fractions(std::span<const double> lengths_um, double alpha_db_per_um);

// Per-wire lengths realizing the requested input fractions; conditional
// absorption above last_cap is clipped to it and flagged.
CascadeDesign design_from_fractions(std::span<const double> fractions, const nanowire::NanowireSpec& wire_template,
                                    double last_cap = default_last_cap);
CascadeDesign design_from_fractions(std::span<const double> fractions, double alpha_db_per_um,
                                    double last_cap = default_last_cap);

// n wires each absorbing 1/n of the input (last wire capped).
CascadeDesign design_equal_split(std::size_t n, const nanowire::NanowireSpec& wire_template,
                                 double last_cap = default_last_cap);
CascadeDesign design_equal_split(std::size_t n, double alpha_db_per_um, double last_cap = default_last_cap);

// Cascade straight from conditional absorptions in [0, 1]. A value of exactly
// 1 models an ideal terminating absorber (infinite length).
CascadeDesign design_from_conditional(std::span<const double> conditional, const nanowire::NanowireSpec& wire_template);

// Largest n whose equal split still gives every wire min_fraction.
std::size_t max_equal_detectors(double min_fraction);

}  // namespace inline_snspd::cascade
