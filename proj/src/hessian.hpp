#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "problem.hpp"

namespace qrobust {

enum class HessianBackend { gateaux, finite_difference, bfgs };

const char *backend_name(HessianBackend backend) noexcept;
HessianBackend parse_backend(const std::string &name);

/// Curvature of the reduced cost over the N-2 interior samples, so that
/// J'[u + du] ~ J'[u] + du H du^T / 2.
struct HessianMatrix {
    Eigen::MatrixXd entries;
    HessianBackend backend = HessianBackend::gateaux;
    std::size_t samples = 0; // N
    double dt = 0.0;
    std::vector<std::string> warnings;

    std::size_t size() const noexcept { return static_cast<std::size_t>(entries.rows()); }
};

struct HessianOptions {
    HessianBackend backend = HessianBackend::gateaux;
    bool require_optimum = true;
    double optimum_tolerance = 1e-6; // on gradient_norm
    double fd_step = 0.0;            // 0 selects 1e-3 max(1, |u|_inf)
    std::size_t threads = 1;
    // bfgs backend
    std::uint64_t seed = 1;
    double probe_tolerance = 1e-6;
    std::size_t max_directions = 0; // 0 selects 2 (N - 2)
};

using CostFunction = std::function<double(const ControlPulse &)>;
using GradientFunction = std::function<std::vector<double>(const ControlPulse &)>;

HessianMatrix build_hessian(const ControlProblem &problem, const ControlPulse &pulse, const HessianOptions &options);

/// Four-point stencil on pairs of interior samples.
HessianMatrix finite_difference_hessian(const CostFunction &cost, const ControlPulse &center, double step,
                                        std::size_t threads = 1);

/// Secant curvature accumulation from gradient differences along random directions,
/// stopped once the quadratic form reproduces fresh probes.
HessianMatrix secant_hessian(const GradientFunction &gradient, const ControlPulse &center,
                             const HessianOptions &options);

/// Second variation assembled from the exact step derivatives of the discrete dynamics.
HessianMatrix gateaux_hessian(const ControlProblem &problem, const ControlPulse &pulse);

/// du H du^T over interior samples (twice the second-order cost estimate).
double quadratic_form(const HessianMatrix &hessian, std::span<const double> interior_delta);
/// Same, for a full-length distortion with zero endpoints.
double quadratic_form_full(const HessianMatrix &hessian, std::span<const double> delta);

struct Spectrum {
    Eigen::VectorXd eigenvalues;  // descending, negatives clamped to 0
    Eigen::MatrixXd eigenvectors; // columns match eigenvalues
    double smallest_raw = 0.0;    // before clamping
    double threshold = 0.0;       // absolute cut = rel_threshold * lambda_max
    std::size_t rank = 0;         // M: eigenvalues above threshold

    std::vector<double> nonzero() const;
};

Spectrum eigen_spectrum(const HessianMatrix &hessian, double rel_threshold = 1e-8);

struct RankOneSummary {
    double mean_entry = 0.0;      // h_bar
    double rank_one_value = 0.0;  // (N - 2) h_bar
    double largest = 0.0;         // lambda_1
    double discrepancy = 0.0;     // |lambda_rank_one - lambda_1| / lambda_1
    std::size_t rank = 0;
    bool approximation_valid = false; // rank 1 and discrepancy within 10%
};

RankOneSummary rank_one_summary(const HessianMatrix &hessian, double rel_threshold = 1e-8);

double symmetry_error(const Eigen::MatrixXd &m);

void write_hessian_csv(std::ostream &os, const HessianMatrix &hessian);
std::string hessian_to_json(const HessianMatrix &hessian);
HessianMatrix hessian_from_json(const std::string &text);
void write_spectrum_csv(std::ostream &os, const Spectrum &spectrum);
std::string spectrum_to_json(const Spectrum &spectrum);

} // namespace qrobust
