#include "inline_snspd/nanowire.hpp"

#include <cmath>

#include "inline_snspd/error.hpp"
#include "inline_snspd/units.hpp"

namespace inline_snspd::nanowire {

void NanowireSpec::validate() const
{
    if (!(length >= 0.0)) {
        throw DomainError("NanowireSpec: length must be >= 0");
    }
    if (!(alpha > 0.0)) {
        throw DomainError("NanowireSpec: alpha must be > 0");
    }
    if (!(eta_int >= 0.0 && eta_int <= 1.0)) {
        throw DomainError("NanowireSpec: eta_int must lie in [0, 1]");
    }
    if (!(dead_time >= 0.0) || !(jitter_fwhm >= 0.0) || !(dark_rate >= 0.0)) {
        throw DomainError("NanowireSpec: dead_time, jitter_fwhm and dark_rate must be >= 0");
    }
}

void BiasCurve::validate() const
{
    if (!(eta_max >= 0.0 && eta_max <= 1.0)) {
        throw DomainError("BiasCurve: eta_max must lie in [0, 1]");
    }
    if (!(bias_width > 0.0)) {
        throw DomainError("BiasCurve: bias_width must be > 0");
    }
    if (!(dcr0 >= 0.0)) {
        throw DomainError("BiasCurve: dcr0 must be >= 0");
    }
}

BiasCurve default_bias_curve()
{
    BiasCurve curve;
    curve.dcr0 = 1500.0 * std::exp(-curve.dcr_gamma * 0.85);
    return curve;
}

double JitterBudget::recomposed_system() const
{
    return std::sqrt(fwhm_electr * fwhm_electr + fwhm_setup * fwhm_setup + fwhm_intr * fwhm_intr);
}

void EfficiencyMeasurement::validate() const
{
    if (!(dcr >= 0.0) || !(lcr >= dcr)) {
        throw DomainError("EfficiencyMeasurement: need lcr >= dcr >= 0");
    }
    if (!(eta_c > 0.0 && eta_c <= 1.0)) {
        throw DomainError("EfficiencyMeasurement: eta_c must lie in (0, 1]");
    }
    if (!(flux > 0.0)) {
        throw DomainError("EfficiencyMeasurement: flux must be > 0");
    }
}

double absorption_fraction(double length_um, double alpha_db_per_um)
{
    if (!(length_um >= 0.0)) {
        throw DomainError("absorption_fraction: length must be >= 0");
    }
    if (!(alpha_db_per_um > 0.0)) {
        throw DomainError("absorption_fraction: alpha must be > 0");
    }
    // 1 - 10^(-x) via expm1 keeps short wires accurate.
    return -std::expm1(-alpha_db_per_um * length_um / 10.0 * std::log(10.0));
}

double length_for_absorption(double target, double alpha_db_per_um)
{
    if (!(target >= 0.0 && target < 1.0)) {
        throw DomainError("length_for_absorption: target must lie in [0, 1)");
    }
    if (!(alpha_db_per_um > 0.0)) {
        throw DomainError("length_for_absorption: alpha must be > 0");
    }
    return -10.0 * std::log1p(-target) / std::log(10.0) / alpha_db_per_um;
}

double internal_efficiency(double bias, const BiasCurve& curve)
{
    curve.validate();
    if (!(bias >= 0.0 && bias <= 1.0)) {
        throw DomainError("internal_efficiency: bias must lie in [0, 1]");
    }
    return curve.eta_max / (1.0 + std::exp(-(bias - curve.bias_mid) / curve.bias_width));
}

double dark_rate(double bias, const BiasCurve& curve)
{
    curve.validate();
    if (!(bias >= 0.0 && bias <= 1.0)) {
        throw DomainError("dark_rate: bias must lie in [0, 1]");
    }
    return curve.dcr0 * std::exp(curve.dcr_gamma * bias);
}

double pulse_waveform(double t_ns, double v_peak, double tau_r_ns, double rise_time_ns)
{
    if (!(tau_r_ns > 0.0) || !(rise_time_ns >= 0.0)) {
        throw DomainError("pulse_waveform: need tau_r > 0 and rise_time >= 0");
    }
    if (t_ns >= 0.0) {
        return v_peak * std::exp(-t_ns / tau_r_ns);
    }
    if (t_ns < -rise_time_ns) {
        return 0.0;
    }
    return v_peak * (t_ns + rise_time_ns) / rise_time_ns;
}

double electronic_jitter(double sigma_noise, double slew_rate_per_ns)
{
    if (!(slew_rate_per_ns > 0.0)) {
        throw DomainError("electronic_jitter: slew rate must be > 0");
    }
    return fwhm_per_sigma * (sigma_noise / slew_rate_per_ns) * ps_per_ns;
}

double intrinsic_jitter(double fwhm_system, double fwhm_electr, double fwhm_setup)
{
    const double remainder = fwhm_system * fwhm_system - fwhm_electr * fwhm_electr - fwhm_setup * fwhm_setup;
    if (!(remainder >= 0.0)) {
        throw DomainError("intrinsic_jitter: electronic and setup jitter exceed the system jitter");
    }
    return std::sqrt(remainder);
}

JitterBudget decompose_jitter(double fwhm_system, double fwhm_electr, double fwhm_setup)
{
    if (fwhm_system < 0.0 || fwhm_electr < 0.0 || fwhm_setup < 0.0) {
        throw DomainError("decompose_jitter: jitter components must be >= 0");
    }
    return {fwhm_system, fwhm_electr, fwhm_setup, intrinsic_jitter(fwhm_system, fwhm_electr, fwhm_setup)};
}

double ocde(const EfficiencyMeasurement& m)
{
    m.validate();
    return (m.lcr - m.dcr) / (m.eta_c * m.flux);
}

}  // namespace inline_snspd::nanowire
