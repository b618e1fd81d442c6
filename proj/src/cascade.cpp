#include "inline_snspd/cascade.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "inline_snspd/error.hpp"

namespace inline_snspd::cascade {

namespace {

nanowire::NanowireSpec alpha_template(double alpha)
{
    nanowire::NanowireSpec spec;
    spec.alpha = alpha;
    return spec;
}

// Conditional absorptions -> input fractions and residual, by transmission.
void fill_fractions(CascadeDesign& design)
{
    double transmitted = 1.0;
    design.input_fractions.clear();
    for (double a : design.conditional_absorption) {
        design.input_fractions.push_back(transmitted * a);
        transmitted *= 1.0 - a;
    }
    design.residual = transmitted;
}

}  // namespace

bool CascadeDesign::cap_applied() const { return std::find(capped.begin(), capped.end(), true) != capped.end(); }

double CascadeDesign::total_length() const
{
    return std::accumulate(wires.begin(), wires.end(), 0.0, [](double acc, const auto& w) { return acc + w.length; });
}

std::vector<double> CascadeDesign::lengths() const
{
    std::vector<double> out;
    out.reserve(wires.size());
    for (const auto& w : wires) {
        out.push_back(w.length);
    }
    return out;
}

std::vector<double> CascadeDesign::cumulative_absorption() const
{
    std::vector<double> out(input_fractions.size());
    std::partial_sum(input_fractions.begin(), input_fractions.end(), out.begin());
    return out;
}

InputFractions input_fractions(std::span<const double> lengths_um, double alpha_db_per_um)
{
    InputFractions out{{}, 1.0};
    for (double length : lengths_um) {
        const double a = nanowire::absorption_fraction(length, alpha_db_per_um);
        out.fractions.push_back(out.residual * a);
        out.residual *= 1.0 - a;
    }
    return out;
}

CascadeDesign design_from_fractions(std::span<const double> fractions, const nanowire::NanowireSpec& wire_template,
                                    double last_cap)
{
    wire_template.validate();
    if (!(last_cap >= 0.0 && last_cap < 1.0)) {
        throw DomainError("design_from_fractions: last_cap must lie in [0, 1)");
    }
    double requested = 0.0;
    for (double f : fractions) {
        if (!(f >= 0.0)) {
            throw DomainError("design_from_fractions: fractions must be >= 0");
        }
        requested += f;
    }
    if (requested > 1.0 + 1e-12) {
        throw DomainError("design_from_fractions: fractions sum to " + std::to_string(requested) + " > 1");
    }

    CascadeDesign design;
    double transmitted = 1.0;
    for (double f : fractions) {
        double a = transmitted > 0.0 ? f / transmitted : 1.0;
        const bool cap = a > last_cap;
        a = std::min(a, last_cap);
        auto wire = wire_template;
        wire.length = nanowire::length_for_absorption(a, wire.alpha);
        design.wires.push_back(wire);
        design.capped.push_back(cap);
        // The wire as built, so fractions follow the physical lengths.
        const double built = nanowire::absorption_fraction(wire.length, wire.alpha);
        design.conditional_absorption.push_back(built);
        transmitted *= 1.0 - built;
    }
    fill_fractions(design);
    return design;
}

CascadeDesign design_from_fractions(std::span<const double> fractions, double alpha_db_per_um, double last_cap)
{
    return design_from_fractions(fractions, alpha_template(alpha_db_per_um), last_cap);
}

CascadeDesign design_equal_split(std::size_t n, const nanowire::NanowireSpec& wire_template, double last_cap)
{
    if (n == 0) {
        throw DomainError("design_equal_split: need at least one wire");
    }
    const std::vector<double> fractions(n, 1.0 / static_cast<double>(n));
    return design_from_fractions(fractions, wire_template, last_cap);
}

CascadeDesign design_equal_split(std::size_t n, double alpha_db_per_um, double last_cap)
{
    return design_equal_split(n, alpha_template(alpha_db_per_um), last_cap);
}

CascadeDesign design_from_conditional(std::span<const double> conditional, const nanowire::NanowireSpec& wire_template)
{
    wire_template.validate();
    CascadeDesign design;
    for (double a : conditional) {
        if (!(a >= 0.0 && a <= 1.0)) {
            throw DomainError("design_from_conditional: conditional absorption must lie in [0, 1]");
        }
        auto wire = wire_template;
        wire.length = a < 1.0 ? nanowire::length_for_absorption(a, wire.alpha) : std::numeric_limits<double>::infinity();
        design.wires.push_back(wire);
        design.conditional_absorption.push_back(a);
        design.capped.push_back(false);
    }
    fill_fractions(design);
    return design;
}

std::size_t max_equal_detectors(double min_fraction)
{
    if (!(min_fraction > 0.0 && min_fraction <= 1.0)) {
        throw DomainError("max_equal_detectors: min_fraction must lie in (0, 1]");
    }
    // Slack so exact reciprocals (1/0.2) are not lost to rounding.
    return static_cast<std::size_t>(std::floor(1.0 / min_fraction * (1.0 + 1e-12)));
}

}  // namespace inline_snspd::cascade
