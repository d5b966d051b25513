#include "tolerance.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include <json.hpp>

#include "error.hpp"
#include "numfmt.hpp"
#include "parallel.hpp"

namespace qrobust {

namespace {

void check_spectrum(std::span<const double> lambda)
{
    require(!lambda.empty(), ErrorCode::invalid_spectrum, "spectrum is empty");
    for (double l : lambda) {
        require(std::isfinite(l) && l > 0.0, ErrorCode::invalid_spectrum,
                "nonzero eigenvalues must be positive, got " + format_double(l));
    }
}

struct LinearFit {
    double a = 0.0;
    double b = 0.0;
    double sse = 0.0;
};

double sse_of(std::span<const double> x, std::span<const double> y, std::span<const double> z, double a, double b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        const double r = a * x[i] + b * y[i] - z[i];
        s += r * r;
    }
    return s;
}

// min |a x + b y - z|^2 subject to a, b >= 0.
LinearFit nonnegative_fit(std::span<const double> x, std::span<const double> y, std::span<const double> z)
{
    double xx = 0.0, xy = 0.0, yy = 0.0, xz = 0.0, yz = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        xx += x[i] * x[i];
        xy += x[i] * y[i];
        yy += y[i] * y[i];
        xz += x[i] * z[i];
        yz += y[i] * z[i];
    }
    std::vector<LinearFit> candidates;
    const double det = xx * yy - xy * xy;
    if (det > 1e-12 * xx * yy) {
        const double a = (xz * yy - yz * xy) / det;
        const double b = (yz * xx - xz * xy) / det;
        if (a >= 0.0 && b >= 0.0) {
            candidates.push_back({a, b, 0.0});
        }
    }
    candidates.push_back({xx > 0.0 ? std::max(0.0, xz / xx) : 0.0, 0.0, 0.0});
    candidates.push_back({0.0, yy > 0.0 ? std::max(0.0, yz / yy) : 0.0, 0.0});
    for (auto &c : candidates) {
        c.sse = sse_of(x, y, z, c.a, c.b);
    }
    return *std::min_element(candidates.begin(), candidates.end(),
                             [](const LinearFit &l, const LinearFit &r) { return l.sse < r.sse; });
}

// Residuals are taken relative to each implied alpha, since the samples span several decades.
LinearFit fit_with_exponent(std::span<const double> e, std::span<const double> alpha, double c)
{
    std::vector<double> x(e.size());
    std::vector<double> y(e.size());
    std::vector<double> z(e.size(), 1.0);
    for (std::size_t i = 0; i < e.size(); ++i) {
        x[i] = e[i] / alpha[i];
        y[i] = std::pow(e[i], c) / alpha[i];
    }
    return nonnegative_fit(x, y, z);
}

} // namespace

std::vector<double> normalization_factors(std::span<const double> lambda, double alpha)
{
    check_spectrum(lambda);
    require(alpha > 0.0, ErrorCode::invalid_parameter, "normalization factors: alpha must be positive");
    // |int dxi exp(i lambda xi^2 / (2 alpha))| = sqrt(2 pi alpha / lambda)
    std::vector<double> out(lambda.size(), 1.0);
    for (std::size_t k = 0; k < lambda.size(); ++k) {
        for (std::size_t j = 0; j < lambda.size(); ++j) {
            if (j != k) {
                out[k] *= std::sqrt(lambda[j] / (2.0 * std::numbers::pi * alpha));
            }
        }
    }
    return out;
}

double average_cost_norm(std::span<const double> lambda, double alpha)
{
    check_spectrum(lambda);
    require(alpha >= 0.0, ErrorCode::invalid_parameter, "average cost norm: alpha must be non-negative");
    if (alpha == 0.0) {
        require(lambda.size() < 4, ErrorCode::degenerate_inversion, "average cost norm: alpha = 0 with M >= 4");
        return 0.0;
    }
    const auto factors = normalization_factors(lambda, alpha);
    double sum = 0.0;
    for (std::size_t k = 0; k < lambda.size(); ++k) {
        sum += factors[k] / std::sqrt(lambda[k]);
    }
    return std::sqrt(std::numbers::pi * alpha * alpha * alpha / 2.0) * sum;
}

double invert_alpha(std::span<const double> lambda, double target_norm)
{
    check_spectrum(lambda);
    require(target_norm >= 0.0 && std::isfinite(target_norm), ErrorCode::invalid_parameter,
            "invert_alpha: target must be finite and non-negative");
    if (target_norm == 0.0) {
        return 0.0;
    }
    const auto m = static_cast<int>(lambda.size());
    require(m != 4, ErrorCode::degenerate_inversion, "invert_alpha: with M = 4 the norm does not depend on alpha");
    require(m < 4, ErrorCode::ambiguous_inversion,
            "invert_alpha: with M = " + std::to_string(m) + " the norm decreases with alpha; no tolerance can be assigned");
    const double unit = average_cost_norm(lambda, 1.0);
    return std::pow(target_norm / unit, 2.0 / (4.0 - m));
}

const char *fit_exponent_name(FitExponent mode) noexcept
{
    return mode == FitExponent::fixed_half ? "fixed_half" : "free";
}

FitExponent parse_fit_exponent(const std::string &name)
{
    if (name == "fixed_half") {
        return FitExponent::fixed_half;
    }
    if (name == "free") {
        return FitExponent::free;
    }
    fail(ErrorCode::invalid_parameter, "unknown fit exponent mode '" + name + "' (expected fixed_half or free)");
}

double ToleranceFit::operator()(double infidelity) const
{
    if (infidelity <= 0.0) {
        return 0.0;
    }
    return a * infidelity + b * std::pow(infidelity, c);
}

void fit_tolerance(ToleranceFit &fit, FitExponent mode)
{
    std::vector<double> e;
    std::vector<double> alpha;
    for (const auto &s : fit.samples) {
        if (s.used) {
            e.push_back(s.exact_infidelity);
            alpha.push_back(s.implied_alpha);
        }
    }
    require(e.size() >= 5, ErrorCode::insufficient_data,
            "calibration: " + std::to_string(e.size()) + " usable samples, at least 5 required");
    fit.mode = mode;
    fit.used_samples = e.size();

    double best_c = 0.5;
    LinearFit best = fit_with_exponent(e, alpha, best_c);
    if (mode == FitExponent::free) {
        for (double c = 0.05; c <= 3.0 + 1e-12; c += 0.01) {
            const auto f = fit_with_exponent(e, alpha, c);
            if (f.sse < best.sse) {
                best = f;
                best_c = c;
            }
        }
        // golden-section refinement around the grid minimum
        double lo = std::max(0.01, best_c - 0.01);
        double hi = best_c + 0.01;
        const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
        for (int it = 0; it < 60; ++it) {
            const double c1 = hi - ratio * (hi - lo);
            const double c2 = lo + ratio * (hi - lo);
            if (fit_with_exponent(e, alpha, c1).sse < fit_with_exponent(e, alpha, c2).sse) {
                hi = c2;
            } else {
                lo = c1;
            }
        }
        const double c = 0.5 * (lo + hi);
        const auto f = fit_with_exponent(e, alpha, c);
        if (f.sse <= best.sse) {
            best = f;
            best_c = c;
        }
    }
    fit.a = best.a;
    fit.b = best.b;
    fit.c = best_c;
    double mean = 0.0;
    for (double v : alpha) {
        mean += v;
    }
    fit.mean_alpha = mean / static_cast<double>(alpha.size());
    double sse = 0.0;
    for (std::size_t i = 0; i < alpha.size(); ++i) {
        const double r = fit.a * e[i] + fit.b * std::pow(e[i], fit.c) - alpha[i];
        sse += r * r;
    }
    fit.residual_rms = std::sqrt(sse / static_cast<double>(alpha.size()));
    fit.relative_rms = std::sqrt(best.sse / static_cast<double>(alpha.size()));
    require(fit.a > 0.0 || fit.b > 0.0, ErrorCode::insufficient_data, "calibration: fit is identically zero");
}

ToleranceFit calibrate(const ControlProblem &problem, const ControlPulse &optimum, const HessianMatrix &hessian,
                       const std::vector<CalibrationFamily> &families, std::span<const double> strengths,
                       const CalibrationOptions &options)
{
    require(hessian.size() + 2 == optimum.size(), ErrorCode::shape_mismatch,
            "calibrate: Hessian does not match the pulse grid");
    require(!families.empty() && !strengths.empty(), ErrorCode::insufficient_data,
            "calibrate: need at least one family and one strength");
    const auto lambda = eigen_spectrum(hessian).nonzero();

    std::vector<std::vector<double>> shapes;
    for (const auto &f : families) {
        shapes.push_back(generate_distortion(optimum, f.spec));
    }
    ToleranceFit fit;
    fit.samples.resize(families.size() * strengths.size());
    parallel_for(fit.samples.size(), options.threads, [&](std::size_t i) {
        const std::size_t fi = i / strengths.size();
        const double s = strengths[i % strengths.size()];
        std::vector<double> delta = shapes[fi];
        for (auto &v : delta) {
            v *= s;
        }
        CalibrationSample sample;
        sample.family = families[fi].label;
        sample.strength = s;
        sample.exact_infidelity = problem.cost(optimum.perturbed(delta));
        sample.quad_form = std::max(0.0, quadratic_form_full(hessian, delta));
        sample.implied_alpha = invert_alpha(lambda, 0.5 * sample.quad_form);
        sample.used = sample.exact_infidelity > 0.0 && sample.exact_infidelity <= options.max_infidelity &&
                      sample.quad_form > 0.0 && std::isfinite(sample.implied_alpha);
        fit.samples[i] = sample;
    });
    fit_tolerance(fit, options.exponent);
    return fit;
}

std::vector<double> strengths_for_infidelity(const HessianMatrix &hessian, const ControlPulse &optimum,
                                             const DistortionSpec &unit_spec, double infidelity_min,
                                             double infidelity_max, std::size_t count)
{
    require(infidelity_min > 0.0 && infidelity_max >= infidelity_min && count >= 1, ErrorCode::invalid_parameter,
            "strength schedule: need 0 < min <= max and count >= 1");
    const auto shape = generate_distortion(optimum, unit_spec);
    const double q = quadratic_form_full(hessian, shape);
    require(q > 0.0, ErrorCode::invalid_distortion, "strength schedule: distortion has no curvature");
    std::vector<double> out(count);
    for (std::size_t k = 0; k < count; ++k) {
        const double t = count == 1 ? 0.0 : static_cast<double>(k) / static_cast<double>(count - 1);
        const double e = infidelity_min * std::pow(infidelity_max / infidelity_min, t);
        out[k] = std::sqrt(2.0 * e / q);
    }
    return out;
}

double threshold_ell(const ToleranceFit &fit, std::span<const double> lambda, double fidelity_target)
{
    require(fidelity_target > 0.0 && fidelity_target < 1.0, ErrorCode::invalid_parameter,
            "threshold: target fidelity must lie in (0, 1)");
    return 2.0 * average_cost_norm(lambda, fit(1.0 - fidelity_target));
}

double criterion_I(double quad_form, std::span<const double> lambda, double alpha, double target_infidelity)
{
    require(alpha > 0.0, ErrorCode::invalid_parameter, "criterion: alpha must be positive");
    require(target_infidelity > 0.0, ErrorCode::invalid_parameter, "criterion: target infidelity must be positive");
    const double ell = 2.0 * average_cost_norm(lambda, alpha);
    return target_infidelity * std::pow(std::max(0.0, quad_form) / ell, 2.0 / 3.0);
}

double criterion_I(double quad_form, std::span<const double> lambda, const ToleranceFit &fit,
                   double target_infidelity)
{
    return criterion_I(quad_form, lambda, fit(target_infidelity), target_infidelity);
}

void write_calibration_csv(std::ostream &os, const ToleranceFit &fit)
{
    os << "family,strength,exact_infidelity,quad_form,implied_alpha,used\n";
    for (const auto &s : fit.samples) {
        os << s.family << ',' << format_double(s.strength) << ',' << format_double(s.exact_infidelity) << ','
           << format_double(s.quad_form) << ',' << format_double(s.implied_alpha) << ',' << (s.used ? 1 : 0) << '\n';
    }
}

std::string fit_to_json(const ToleranceFit &fit)
{
    nlohmann::json j;
    j["a"] = fit.a;
    j["b"] = fit.b;
    j["c"] = fit.c;
    j["mode"] = fit_exponent_name(fit.mode);
    j["used_samples"] = fit.used_samples;
    j["residual_rms"] = fit.residual_rms;
    j["mean_alpha"] = fit.mean_alpha;
    j["relative_rms"] = fit.relative_rms;
    auto &samples = j["samples"] = nlohmann::json::array();
    for (const auto &s : fit.samples) {
        samples.push_back({{"family", s.family},
                           {"strength", s.strength},
                           {"exact_infidelity", s.exact_infidelity},
                           {"quad_form", s.quad_form},
                           {"implied_alpha", s.implied_alpha},
                           {"used", s.used}});
    }
    return j.dump();
}

ToleranceFit fit_from_json(const std::string &text)
{
    try {
        const auto j = nlohmann::json::parse(text);
        ToleranceFit fit;
        fit.a = j.at("a").get<double>();
        fit.b = j.at("b").get<double>();
        fit.c = j.at("c").get<double>();
        fit.mode = parse_fit_exponent(j.at("mode").get<std::string>());
        fit.used_samples = j.value("used_samples", std::size_t{0});
        fit.residual_rms = j.value("residual_rms", 0.0);
        fit.mean_alpha = j.value("mean_alpha", 0.0);
        fit.relative_rms = j.value("relative_rms", 0.0);
        if (j.contains("samples")) {
            for (const auto &s : j.at("samples")) {
                fit.samples.push_back({s.at("family").get<std::string>(), s.at("strength").get<double>(),
                                       s.at("exact_infidelity").get<double>(), s.at("quad_form").get<double>(),
                                       s.at("implied_alpha").get<double>(), s.at("used").get<bool>()});
            }
        }
        require(fit.a >= 0.0 && fit.b >= 0.0 && fit.c > 0.0 && (fit.a > 0.0 || fit.b > 0.0),
                ErrorCode::invalid_input, "fit json: coefficients must satisfy a, b >= 0, c > 0, not both zero");
        return fit;
    } catch (const nlohmann::json::exception &e) {
        fail(ErrorCode::io_error, std::string("fit json: ") + e.what());
    }
}

} // namespace qrobust
