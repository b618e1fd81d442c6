#pragma once

namespace inline_snspd::nanowire {

// One waveguide-integrated nanowire. Times are picoseconds.
struct NanowireSpec {
    double length = 45.0;          // um
    double alpha = 0.62;           // dB/um
    double eta_int = 0.87;         // internal efficiency at the operating bias
    double dead_time = 5100.0;     // ps, hard blanking (3 recovery times)
    double jitter_fwhm = 68.8;     // ps, intrinsic
    double dark_rate = 1500.0;     // Hz

    void validate() const;
};

inline constexpr double default_alpha_db_per_um = 0.62;
inline constexpr double default_recovery_time_ns = 1.7;
inline constexpr double default_rise_time_ns = 0.3;

// Phenomenological bias dependence: sigmoid efficiency, exponential DCR.
struct BiasCurve {
    double eta_max = 0.9;
    double bias_mid = 0.9;     // fraction of critical current
    double bias_width = 0.03;
    double dcr0 = 0.0;         // Hz
    double dcr_gamma = 20.0;

    void validate() const;
};

// Defaults with dcr0 solved so one detector reads 1.5 kHz at 85% bias.
BiasCurve default_bias_curve();

struct JitterBudget {
    double fwhm_system;
    double fwhm_electr;
    double fwhm_setup;
    double fwhm_intr;

    // Quadrature sum of the three components.
    double recomposed_system() const;
};

struct EfficiencyMeasurement {
    double lcr;    // Hz, laser count rate
    double dcr;    // Hz
    double eta_c;  // coupling and propagation factor
    double flux;   // photons/s at the chip

    void validate() const;
};

double absorption_fraction(double length_um, double alpha_db_per_um);
double length_for_absorption(double target, double alpha_db_per_um);

double internal_efficiency(double bias, const BiasCurve& curve);
double dark_rate(double bias, const BiasCurve& curve);

// Readout pulse: linear rise over [-rise_time, 0], exponential recovery after.
double pulse_waveform(double t_ns, double v_peak, double tau_r_ns, double rise_time_ns = default_rise_time_ns);

// Noise-induced jitter FWHM in ps; slew rate is per ns.
double electronic_jitter(double sigma_noise, double slew_rate_per_ns);

// Remaining intrinsic term of the quadrature budget. Throws DomainError when
// the components already exceed the system value.
double intrinsic_jitter(double fwhm_system, double fwhm_electr, double fwhm_setup);
JitterBudget decompose_jitter(double fwhm_system, double fwhm_electr, double fwhm_setup);

// On-chip detection efficiency (LCR - DCR) / (eta_c * flux).
double ocde(const EfficiencyMeasurement& m);

}  // namespace inline_snspd::nanowire
