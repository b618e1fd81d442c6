#include "inline_snspd/bicwave.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "inline_snspd/error.hpp"
#include "inline_snspd/fitkit.hpp"
#include "inline_snspd/units.hpp"

namespace inline_snspd::bicwave {

namespace {

constexpr double sinc_zero_tolerance = 1e-12;
const double db_per_neper_power = 10.0 * std::log10(std::numbers::e);

}  // namespace

void BicModelParams::validate() const
{
    if (!(kx > 0.0)) {
        throw DomainError("BicModelParams: kx must be > 0");
    }
    if (!(L0 > 0.0)) {
        throw DomainError("BicModelParams: L0 must be > 0");
    }
    if (mode_order < 1) {
        throw DomainError("BicModelParams: mode_order must be >= 1");
    }
}

BicModelParams default_params()
{
    constexpr int order = 2;
    const double kx = 2.0 * std::numbers::pi * order / default_bic_width_um;
    return {kx, coupling_length_for_loss(1.05 * default_bic_width_um, kx, 3.0), default_coupler_db, order};
}

void WaveguideGeometry::validate() const
{
    if (!(width > 0.0)) {
        throw DomainError("WaveguideGeometry: width must be > 0");
    }
    if (!(length >= 0.0)) {
        throw DomainError("WaveguideGeometry: length must be >= 0");
    }
}

double sinc(double x)
{
    if (x == 0.0) {
        return 1.0;
    }
    return std::sin(x) / x;
}

double decay_length(double width_um, const BicModelParams& params)
{
    if (!(width_um > 0.0)) {
        throw DomainError("decay_length: width must be > 0");
    }
    params.validate();
    const double s = sinc(params.kx * width_um / 2.0);
    if (std::abs(s) < sinc_zero_tolerance) {
        return std::numeric_limits<double>::infinity();
    }
    return 4.0 * params.L0 / (params.kx * params.kx) / (s * s);
}

double propagation_loss(double width_um, const BicModelParams& params, double residual_db_per_cm)
{
    if (!(residual_db_per_cm >= 0.0)) {
        throw DomainError("propagation_loss: residual loss must be >= 0");
    }
    const double length = decay_length(width_um, params);
    if (std::isinf(length)) {
        return residual_db_per_cm;
    }
    return db_per_neper_power * um_per_cm / length + residual_db_per_cm;
}

double transmission_db_unchecked(double width_um, double length_um, const BicModelParams& params)
{
    const double s = sinc(params.kx * width_um / 2.0);
    const double coefficient = 5.0 * length_um * params.kx * params.kx * std::log10(std::numbers::e) / (2.0 * params.L0);
    return 2.0 * params.c_gc - coefficient * s * s;
}

double transmission_db(const WaveguideGeometry& geom, const BicModelParams& params)
{
    geom.validate();
    params.validate();
    return transmission_db_unchecked(geom.width, geom.length, params);
}

std::vector<double> bic_widths(const BicModelParams& params, double w_min, double w_max)
{
    params.validate();
    if (!(w_min > 0.0) || w_max < w_min) {
        throw DomainError("bic_widths: need 0 < w_min <= w_max");
    }
    const double period = 2.0 * std::numbers::pi / params.kx;
    std::vector<double> widths;
    for (long m = std::max(1L, static_cast<long>(std::ceil(w_min / period))); m * period <= w_max; ++m) {
        if (m * period >= w_min) {
            widths.push_back(m * period);
        }
    }
    return widths;
}

double coupling_length_for_loss(double width_um, double kx, double target_db_per_cm)
{
    if (!(target_db_per_cm > 0.0) || !(kx > 0.0) || !(width_um > 0.0)) {
        throw DomainError("coupling_length_for_loss: width, kx and target loss must be > 0");
    }
    const double s = sinc(kx * width_um / 2.0);
    return db_per_neper_power * um_per_cm * kx * kx * s * s / (4.0 * target_db_per_cm);
}

BicFit fit_bic_model(std::span<const TransmissionSample> samples, const BicModelParams& init, double length_um)
{
    init.validate();
    if (samples.size() < 5) {
        throw PreconditionError("fit_bic_model: need at least 5 samples, got " + std::to_string(samples.size()));
    }
    std::vector<double> widths;
    std::vector<double> transmission;
    for (const auto& s : samples) {
        widths.push_back(s.x);
        transmission.push_back(s.transmission_db);
    }
    const auto [min_w, max_w] = std::minmax_element(widths.begin(), widths.end());
    if (*max_w - *min_w < std::numbers::pi / init.kx) {
        throw PreconditionError("fit_bic_model: widths span less than half a sinc period");
    }

    const auto model = fitkit::FitModel::sinc2_transmission(length_um);
    const double start[] = {init.kx, init.L0, init.c_gc};
    const auto fit = fitkit::nls_fit(model, widths, transmission, start);
    BicModelParams fitted{fit.parameters[0], fit.parameters[1], fit.parameters[2], init.mode_order};
    if (!fit.converged) {
        throw BicFitFailure("fit_bic_model: " + fit.message, fitted);
    }

    // Every multiple of 2 pi / kx is lossless, so the order comes from the caller.
    return {fitted, 2.0 * std::numbers::pi * fitted.mode_order / fitted.kx, fit.residual_rms, fit.iterations};
}

LossSlope fit_loss_slope(std::span<const TransmissionSample> samples)
{
    if (samples.size() < 2) {
        throw PreconditionError("fit_loss_slope: need at least 2 samples");
    }
    std::vector<double> lengths;
    std::vector<double> transmission;
    for (const auto& s : samples) {
        lengths.push_back(s.x);
        transmission.push_back(s.transmission_db);
    }
    const auto line = fitkit::ols_line(lengths, transmission);
    return {line.slope * um_per_cm, line.intercept};
}

}  // namespace inline_snspd::bicwave
