#include "inline_snspd/fitkit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include <Eigen/Dense>

#include "inline_snspd/bicwave.hpp"
#include "inline_snspd/error.hpp"
#include "inline_snspd/units.hpp"

namespace inline_snspd::fitkit {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

// exp(u^2) erfc(u) for u >= 0 without overflow.
double erfcx(double u)
{
    if (u < 25.0) {
        return std::exp(u * u) * std::erfc(u);
    }
    const double inv2 = 1.0 / (u * u);
    return (1.0 - 0.5 * inv2 + 0.75 * inv2 * inv2 - 1.875 * inv2 * inv2 * inv2) / (u * std::sqrt(std::numbers::pi));
}

double sum_squares(const Eigen::VectorXd& r) { return r.squaredNorm(); }

}  // namespace

std::string_view to_string(ModelKind kind)
{
    switch (kind) {
    case ModelKind::sinc2_transmission: return "sinc2_transmission";
    case ModelKind::line: return "line";
    case ModelKind::exp_decay: return "exp_decay";
    case ModelKind::gaussian: return "gaussian";
    case ModelKind::exgaussian: return "exgaussian";
    }
    return "unknown";
}

ModelKind model_kind_from_string(std::string_view name)
{
    for (auto kind : {ModelKind::sinc2_transmission, ModelKind::line, ModelKind::exp_decay, ModelKind::gaussian,
                      ModelKind::exgaussian}) {
        if (to_string(kind) == name) {
            return kind;
        }
    }
    throw PreconditionError("unknown fit model '" + std::string(name) + "'");
}

FitModel FitModel::sinc2_transmission(double length_um)
{
    if (!(length_um >= 0.0)) {
        throw DomainError("sinc2_transmission: waveguide length must be >= 0");
    }
    return FitModel(ModelKind::sinc2_transmission,
                    {{"kx", 1e-9, inf}, {"L0", 1e-9, inf}, {"c_gc", -inf, 0.0}}, length_um);
}

FitModel FitModel::line() { return FitModel(ModelKind::line, {{"intercept", -inf, inf}, {"slope", -inf, inf}}); }

FitModel FitModel::exp_decay()
{
    return FitModel(ModelKind::exp_decay, {{"amplitude", -inf, inf}, {"tau", 1e-300, inf}, {"offset", -inf, inf}});
}

FitModel FitModel::gaussian()
{
    return FitModel(ModelKind::gaussian,
                    {{"amplitude", -inf, inf}, {"mu", -inf, inf}, {"sigma", 1e-300, inf}, {"offset", -inf, inf}});
}

FitModel FitModel::exgaussian()
{
    return FitModel(ModelKind::exgaussian, {{"area", -inf, inf},
                                            {"mu", -inf, inf},
                                            {"sigma", 1e-300, inf},
                                            {"tau", 0.0, inf},
                                            {"offset", -inf, inf}});
}

FitModel FitModel::of_kind(ModelKind kind, double length_um)
{
    switch (kind) {
    case ModelKind::sinc2_transmission: return sinc2_transmission(length_um);
    case ModelKind::line: return line();
    case ModelKind::exp_decay: return exp_decay();
    case ModelKind::gaussian: return gaussian();
    case ModelKind::exgaussian: return exgaussian();
    }
    throw PreconditionError("unknown fit model");
}

double exgaussian_density(double x, double mu, double sigma, double tau)
{
    const double z = (x - mu) / sigma;
    if (tau <= 0.0) {
        return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * std::numbers::pi));
    }
    const double k = sigma / tau;
    const double u = (k - z) / std::numbers::sqrt2;
    if (u >= 0.0) {
        return std::exp(-0.5 * z * z) * erfcx(u) / (2.0 * tau);
    }
    return std::exp(k * (0.5 * k - z)) * std::erfc(u) / (2.0 * tau);
}

double FitModel::evaluate(double x, std::span<const double> p) const
{
    switch (kind_) {
    case ModelKind::sinc2_transmission: {
        const bicwave::BicModelParams params{p[0], p[1], p[2], 1};
        return bicwave::transmission_db_unchecked(x, length_um_, params);
    }
    case ModelKind::line: return p[0] + p[1] * x;
    case ModelKind::exp_decay: return p[0] * std::exp(-x / p[1]) + p[2];
    case ModelKind::gaussian: {
        const double z = (x - p[1]) / p[2];
        return p[0] * std::exp(-0.5 * z * z) + p[3];
    }
    case ModelKind::exgaussian: return p[0] * exgaussian_density(x, p[1], p[2], p[3]) + p[4];
    }
    return std::numeric_limits<double>::quiet_NaN();
}

double FitResult::stddev(std::size_t i) const
{
    const std::size_t n = parameters.size();
    return std::sqrt(covariance.at(i * n + i));
}

LineFit ols_line(std::span<const double> x, std::span<const double> y)
{
    if (x.size() != y.size() || x.size() < 2) {
        throw PreconditionError("ols_line: need at least two (x, y) pairs");
    }
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0) {
        throw DomainError("ols_line: all x values are equal, slope is undefined");
    }
    const double slope = sxy / sxx;
    return {my - slope * mx, slope};
}

FitResult nls_fit(const FitModel& model, std::span<const double> x, std::span<const double> y,
                  std::span<const double> init, const FitOptions& options)
{
    const std::size_t n = x.size();
    const std::size_t m = model.arity();
    if (y.size() != n) {
        throw PreconditionError("nls_fit: x and y differ in length");
    }
    if (init.size() != m) {
        throw PreconditionError("nls_fit: initial parameter count does not match model arity");
    }
    if (n < m) {
        throw PreconditionError("nls_fit: fewer samples than parameters");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(x[i]) || !std::isfinite(y[i])) {
            throw PreconditionError("nls_fit: non-finite sample");
        }
    }

    const auto& specs = model.parameters();
    auto clamp = [&](Eigen::VectorXd& p) {
        for (std::size_t j = 0; j < m; ++j) {
            p[j] = std::clamp(p[j], specs[j].lower, specs[j].upper);
        }
    };
    auto residuals = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r) {
        const std::span<const double> ps(p.data(), m);
        for (std::size_t i = 0; i < n; ++i) {
            r[i] = y[i] - model.evaluate(x[i], ps);
        }
        return r.allFinite();
    };

    FitResult result;
    Eigen::VectorXd p = Eigen::Map<const Eigen::VectorXd>(init.data(), m);
    clamp(p);
    Eigen::VectorXd r(n);
    Eigen::VectorXd r_trial(n);
    Eigen::MatrixXd jac(n, m);

    auto finish = [&](bool converged, std::string message) {
        result.parameters.assign(p.data(), p.data() + m);
        residuals(p, r);
        const double ssr = sum_squares(r);
        result.residual_rms = std::sqrt(ssr / static_cast<double>(n));
        result.converged = converged;
        result.message = std::move(message);
        result.covariance.assign(m * m, std::numeric_limits<double>::quiet_NaN());
        const Eigen::MatrixXd jtj = jac.transpose() * jac;
        Eigen::FullPivLU<Eigen::MatrixXd> lu(jtj);
        if (lu.isInvertible()) {
            const double s2 = n > m ? ssr / static_cast<double>(n - m) : 0.0;
            const Eigen::MatrixXd cov = lu.inverse() * s2;
            for (std::size_t a = 0; a < m; ++a) {
                for (std::size_t b = 0; b < m; ++b) {
                    result.covariance[a * m + b] = cov(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
                }
            }
        }
        return result;
    };

    auto jacobian = [&](const Eigen::VectorXd& p0) {
        Eigen::VectorXd pp = p0;
        Eigen::VectorXd rp(n);
        Eigen::VectorXd rm(n);
        for (std::size_t j = 0; j < m; ++j) {
            const double h = 1e-6 * (p0[j] != 0.0 ? std::abs(p0[j]) : 1.0);
            pp[j] = p0[j] + h;
            const bool ok_p = residuals(pp, rp);
            pp[j] = p0[j] - h;
            const bool ok_m = residuals(pp, rm);
            pp[j] = p0[j];
            if (!ok_p || !ok_m) {
                return false;
            }
            // d(model)/dp = -d(residual)/dp
            jac.col(static_cast<Eigen::Index>(j)) = (rm - rp) / (2.0 * h);
        }
        return true;
    };

    if (!residuals(p, r)) {
        jac.setZero();
        return finish(false, "model is not finite at the initial parameters");
    }
    double cost = sum_squares(r);
    result.cost_history.push_back(cost);
    const double scale = std::max(1.0, Eigen::Map<const Eigen::VectorXd>(y.data(), n).squaredNorm());
    double lambda = 1e-3;

    for (int iter = 1; iter <= options.max_iterations; ++iter) {
        result.iterations = iter;
        if (cost <= 1e-28 * scale) {
            jacobian(p);
            return finish(true, "exact fit");
        }
        if (!jacobian(p)) {
            return finish(false, "model is not finite near the current parameters");
        }
        const Eigen::MatrixXd jtj = jac.transpose() * jac;
        const Eigen::VectorXd jtr = jac.transpose() * r;
        if (!jtj.allFinite() || jtj.diagonal().maxCoeff() <= 0.0) {
            return finish(false, "singular normal equations");
        }

        bool accepted = false;
        while (lambda < 1e16) {
            Eigen::MatrixXd damped = jtj;
            for (Eigen::Index j = 0; j < damped.rows(); ++j) {
                damped(j, j) += lambda * std::max(jtj(j, j), 1e-12 * jtj.diagonal().maxCoeff());
            }
            const Eigen::VectorXd step = damped.ldlt().solve(jtr);
            if (!step.allFinite()) {
                lambda *= 10.0;
                continue;
            }
            Eigen::VectorXd trial = p + step;
            clamp(trial);
            const double step_norm = (trial - p).norm();
            if (residuals(trial, r_trial)) {
                const double trial_cost = sum_squares(r_trial);
                if (trial_cost < cost) {
                    const double rel_change = (cost - trial_cost) / cost;
                    p = trial;
                    r = r_trial;
                    cost = trial_cost;
                    result.cost_history.push_back(cost);
                    lambda = std::max(lambda / 10.0, 1e-12);
                    accepted = true;
                    if (rel_change < options.relative_cost_tolerance ||
                        step_norm < options.step_tolerance * (p.norm() + options.step_tolerance)) {
                        jacobian(p);
                        return finish(true, "converged");
                    }
                    break;
                }
            }
            if (step_norm < options.step_tolerance * (p.norm() + options.step_tolerance)) {
                // No descent left at machine resolution: a stationary point.
                return finish(true, "converged (step below tolerance)");
            }
            lambda *= 10.0;
        }
        if (!accepted) {
            return finish(true, "converged (no further descent)");
        }
    }
    jacobian(p);
    return finish(false, "iteration cap reached");
}

double fwhm_of(const FitModel& model, std::span<const double> p)
{
    if (p.size() != model.arity()) {
        throw PreconditionError("fwhm_of: parameter count does not match model arity");
    }
    if (model.kind() == ModelKind::gaussian) {
        return fwhm_per_sigma * std::abs(p[2]);
    }
    if (model.kind() != ModelKind::exgaussian) {
        throw DomainError("fwhm_of: only gaussian and exgaussian models have a FWHM");
    }

    const double mu = p[1];
    const double sigma = std::abs(p[2]);
    const double tau = std::max(p[3], 0.0);
    auto shape = [&](double t) { return exgaussian_density(t, mu, sigma, tau); };

    // The mode lies in [mu - sigma, mu + tau]; scan then golden-section refine.
    const double lo = mu - 10.0 * sigma;
    const double hi = mu + 10.0 * sigma + 40.0 * tau;
    constexpr int scan_points = 4001;
    double best_t = mu;
    double best_v = -1.0;
    for (int i = 0; i < scan_points; ++i) {
        const double t = lo + (hi - lo) * i / (scan_points - 1);
        const double v = shape(t);
        if (v > best_v) {
            best_v = v;
            best_t = t;
        }
    }
    const double cell = (hi - lo) / (scan_points - 1);
    double a = best_t - cell;
    double b = best_t + cell;
    const double golden = (std::sqrt(5.0) - 1.0) / 2.0;
    for (int i = 0; i < 200 && (b - a) > 1e-9 * std::max(1.0, sigma); ++i) {
        const double c = b - golden * (b - a);
        const double d = a + golden * (b - a);
        if (shape(c) > shape(d)) {
            b = d;
        } else {
            a = c;
        }
    }
    const double peak_t = 0.5 * (a + b);
    const double half = 0.5 * shape(peak_t);

    // Absolute tolerance 0.01 in x units, tightened for narrow peaks.
    const double tolerance = std::min(0.01, 1e-6 * (sigma + tau));
    auto crossing = [&](double inside, double outside) {
        while (std::abs(outside - inside) > tolerance) {
            const double mid = 0.5 * (inside + outside);
            if (shape(mid) >= half) {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        return 0.5 * (inside + outside);
    };
    return crossing(peak_t, hi) - crossing(peak_t, lo);
}

}  // namespace inline_snspd::fitkit
