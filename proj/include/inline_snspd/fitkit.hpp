#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace inline_snspd::fitkit {

enum class ModelKind { sinc2_transmission, line, exp_decay, gaussian, exgaussian };

std::string_view to_string(ModelKind kind);
ModelKind model_kind_from_string(std::string_view name);

struct ParameterSpec {
    std::string name;
    double lower;
    double upper;
};

// Parametric model y = f(x; p). Parameter layouts:
//   sinc2_transmission  (kx [rad/um], L0 [um], c_gc [dB]), x = width [um];
//                       the waveguide length is a fixed constant of the model
//   line                (intercept, slope)
//   exp_decay           (amplitude, tau, offset)
//   gaussian            (amplitude, mu, sigma, offset), amplitude = peak height
//   exgaussian          (area, mu, sigma, tau, offset), Gaussian convolved with
//                       a unit-area exponential tail toward positive x
class FitModel {
public:
    static FitModel sinc2_transmission(double length_um);
    static FitModel line();
    static FitModel exp_decay();
    static FitModel gaussian();
    static FitModel exgaussian();
    static FitModel of_kind(ModelKind kind, double length_um = 1000.0);

    ModelKind kind() const { return kind_; }
    std::size_t arity() const { return params_.size(); }
    const std::vector<ParameterSpec>& parameters() const { return params_; }
    double fixed_length_um() const { return length_um_; }

    double evaluate(double x, std::span<const double> p) const;

private:
    FitModel(ModelKind kind, std::vector<ParameterSpec> params, double length_um = 0.0)
        : kind_(kind), params_(std::move(params)), length_um_(length_um)
    {
    }

    ModelKind kind_;
    std::vector<ParameterSpec> params_;
    double length_um_;
};

struct FitResult {
    std::vector<double> parameters;
    // Row-major arity x arity, s^2 (J^T J)^-1 with s^2 = SSR / (n - arity).
    std::vector<double> covariance;
    double residual_rms = 0.0;
    bool converged = false;
    int iterations = 0;
    std::string message;
    // Sum of squared residuals after each accepted step, starting with the init.
    std::vector<double> cost_history;

    double stddev(std::size_t i) const;
};

struct FitOptions {
    int max_iterations = 500;
    double relative_cost_tolerance = 1e-10;
    double step_tolerance = 1e-12;
};

// Levenberg-Marquardt on the sum of squared residuals with central-difference
// Jacobians. Never throws for numerical trouble: a singular system or a
// non-finite model value ends the iteration with converged = false.
FitResult nls_fit(const FitModel& model, std::span<const double> x, std::span<const double> y,
                  std::span<const double> init, const FitOptions& options = {});

// Closed-form ordinary least squares y = intercept + slope * x.
struct LineFit {
    double intercept;
    double slope;
};
LineFit ols_line(std::span<const double> x, std::span<const double> y);

// Full width at half maximum above the offset. Gaussian analytically; the
// exgaussian by bisection on both half-maximum crossings (0.01 tolerance).
double fwhm_of(const FitModel& model, std::span<const double> p);

// Unit-area exponentially modified Gaussian density.
double exgaussian_density(double x, double mu, double sigma, double tau);

}  // namespace inline_snspd::fitkit
