#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace inline_snspd::bicwave {

// TM-mode leakage model of the etchless polymer-strip waveguide. kx is the
// transverse wavevector of the slab continuum, L0 the coupling-strength length
// and c_gc the single grating-coupler efficiency in dB.
struct BicModelParams {
    double kx;          // rad/um
    double L0;          // um
    double c_gc;        // dB, <= 0
    int mode_order = 2;

    void validate() const;
};

// Calibrated default: BIC at 1.57 um for mode order 2, L0 solved so the loss
// at a +5% width error is 3 dB/cm.
BicModelParams default_params();

inline constexpr double default_bic_width_um = 1.57;
inline constexpr double default_residual_db_per_cm = 2.6;
// Not measured; a typical single grating-coupler loss.
inline constexpr double default_coupler_db = -5.0;

struct WaveguideGeometry {
    double width;   // um
    double length;  // um

    void validate() const;
};

struct TransmissionSample {
    double x;               // width or length, um
    double transmission_db;
};

// sin(x)/x with sinc(0) = 1.
double sinc(double x);

// Power 1/e decay length L(w), +infinity exactly at BIC widths (sinc term
// below 1e-12).
double decay_length(double width_um, const BicModelParams& params);

// dB/cm; equals residual at BIC widths.
double propagation_loss(double width_um, const BicModelParams& params, double residual_db_per_cm = 0.0);

// 2*c_gc minus sinc^2 leakage over the waveguide length.
double transmission_db(const WaveguideGeometry& geom, const BicModelParams& params);
double transmission_db_unchecked(double width_um, double length_um, const BicModelParams& params);

// All 2*pi*m/kx inside [w_min, w_max], ascending.
std::vector<double> bic_widths(const BicModelParams& params, double w_min, double w_max);

// L0 making propagation_loss(width) equal target_db_per_cm (no residual).
double coupling_length_for_loss(double width_um, double kx, double target_db_per_cm);

struct BicFit {
    BicModelParams params;
    double w_bic;         // um
    double residual_rms;  // dB
    int iterations;
};

// Nonlinear least squares of the sinc^2 transmission law over (kx, L0, c_gc)
// for waveguides of a common length. Throws PreconditionError for fewer than
// 5 samples or a width span below half a sinc period, and BicFitFailure if
// the solver does not converge. The reported w_bic is 2 pi m / kx with the
// mode order m of init, since the data cannot tell the lossless orders apart.
BicFit fit_bic_model(std::span<const TransmissionSample> samples, const BicModelParams& init,
                     double length_um = 1000.0);

class BicFitFailure : public std::runtime_error {
public:
    BicFitFailure(const std::string& what, BicModelParams last) : std::runtime_error(what), last_params(last) {}
    BicModelParams last_params;
};

struct LossSlope {
    double slope_db_per_cm;
    double intercept_db;  // estimates 2*c_gc
};

// Straight line through transmission vs length (length in um).
LossSlope fit_loss_slope(std::span<const TransmissionSample> samples);

}  // namespace inline_snspd::bicwave
