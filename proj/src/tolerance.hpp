#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "hessian.hpp"
#include "pulse.hpp"

namespace qrobust {

/// N_k = prod_{j != k} sqrt(lambda_j / (2 pi alpha)).
std::vector<double> normalization_factors(std::span<const double> lambda, double alpha);

/// <J'> = sqrt(pi alpha^3 / 2) sum_k N_k / sqrt(lambda_k). Scales as alpha^{(4-M)/2}.
double average_cost_norm(std::span<const double> lambda, double alpha);

/// Inverse of average_cost_norm in alpha for M <= 3.
double invert_alpha(std::span<const double> lambda, double target_norm);

enum class FitExponent { fixed_half, free };

const char *fit_exponent_name(FitExponent mode) noexcept;
FitExponent parse_fit_exponent(const std::string &name);

struct CalibrationFamily {
    std::string label;
    DistortionSpec spec; // distortion at unit strength
};

struct CalibrationSample {
    std::string family;
    double strength = 0.0;
    double exact_infidelity = 0.0;
    double quad_form = 0.0; // du H du^T
    double implied_alpha = 0.0;
    bool used = false; // inside the second-order regime and informative
};

/// alpha(J) = a J + b J^c
struct ToleranceFit {
    double a = 0.0;
    double b = 0.0;
    double c = 0.5;
    FitExponent mode = FitExponent::fixed_half;
    std::vector<CalibrationSample> samples;
    std::size_t used_samples = 0;
    double residual_rms = 0.0;
    double mean_alpha = 0.0;
    double relative_rms = 0.0; // rms of (fit - alpha) / alpha, the minimized quantity

    double operator()(double infidelity) const;
};

struct CalibrationOptions {
    FitExponent exponent = FitExponent::fixed_half;
    double max_infidelity = 0.2;
    std::size_t threads = 1;
};

ToleranceFit calibrate(const ControlProblem &problem, const ControlPulse &optimum, const HessianMatrix &hessian,
                       const std::vector<CalibrationFamily> &families, std::span<const double> strengths,
                       const CalibrationOptions &options = {});

/// Least-squares fit of alpha against infidelity on the usable samples.
void fit_tolerance(ToleranceFit &fit, FitExponent mode);

/// Strengths whose second-order infidelity estimate is log-spaced over [infidelity_min, infidelity_max].
std::vector<double> strengths_for_infidelity(const HessianMatrix &hessian, const ControlPulse &optimum,
                                             const DistortionSpec &unit_spec, double infidelity_min,
                                             double infidelity_max, std::size_t count);

/// l(F) = 2 <J'>(lambda, alpha(1 - F)): bound on du H du^T.
double threshold_ell(const ToleranceFit &fit, std::span<const double> lambda, double fidelity_target);

/// Acceptance statistic compared against the target infidelity J:
/// I = J (du H du^T / l)^{2/3}, with l evaluated at alpha.
double criterion_I(double quad_form, std::span<const double> lambda, double alpha, double target_infidelity);
double criterion_I(double quad_form, std::span<const double> lambda, const ToleranceFit &fit,
                   double target_infidelity);

void write_calibration_csv(std::ostream &os, const ToleranceFit &fit);
std::string fit_to_json(const ToleranceFit &fit);
ToleranceFit fit_from_json(const std::string &text);

} // namespace qrobust
