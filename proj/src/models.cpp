#include "models.hpp"

#include <cmath>
#include <numbers>

#include "error.hpp"

namespace qrobust {

LandauZenerModel::LandauZenerModel(double coupling, double u_start, double u_end)
    : coupling_(coupling), u_start_(u_start), u_end_(u_end)
{
    require(std::isfinite(coupling) && coupling > 0.0, ErrorCode::invalid_parameter,
            "Landau-Zener: coupling must be positive");
    require(u_start < 0.0 && u_end > 0.0, ErrorCode::invalid_parameter,
            "Landau-Zener: sweep must satisfy u_start < 0 < u_end");
}

bool LandauZenerModel::well_polarized() const noexcept
{
    return std::abs(u_start_) >= 5.0 * coupling_ && std::abs(u_end_) >= 5.0 * coupling_;
}

ComplexMatrix LandauZenerModel::hamiltonian(double u) const
{
    ComplexMatrix h(2, 2);
    h << u, coupling_, coupling_, -u;
    return h;
}

ComplexMatrix LandauZenerModel::d_hamiltonian(double) const
{
    ComplexMatrix h(2, 2);
    h << 1.0, 0.0, 0.0, -1.0;
    return h;
}

ComplexMatrix LandauZenerModel::d2_hamiltonian(double) const { return ComplexMatrix::Zero(2, 2); }

StateVector lz_ground_state(double u, double coupling)
{
    require(coupling > 0.0, ErrorCode::invalid_parameter, "lz_ground_state: coupling must be positive");
    const double energy = std::hypot(u, coupling);
    double a = 0.0;
    double b = 0.0;
    // Two algebraically equal eigenvector forms; pick the one without cancellation.
    if (u <= 0.0) {
        a = coupling;
        b = -coupling * coupling / (energy - u);
    } else {
        a = coupling * coupling / (energy + u);
        b = -coupling;
    }
    const double norm = std::hypot(a, b);
    StateVector psi(2);
    psi << a / norm, b / norm;
    return psi;
}

std::pair<StateVector, StateVector> lz_boundary_states(const LandauZenerModel &model)
{
    return {lz_ground_state(model.u_start(), model.coupling()), lz_ground_state(model.u_end(), model.coupling())};
}

HarmonicFockModel::HarmonicFockModel(std::size_t fock_dimension) : dim_(fock_dimension)
{
    require(fock_dimension >= 2, ErrorCode::invalid_parameter, "harmonic Fock model: dimension must be >= 2");
    const auto d = static_cast<Eigen::Index>(dim_);
    position_ = ComplexMatrix::Zero(d, d);
    oscillator_ = ComplexMatrix::Zero(d, d);
    for (Eigen::Index n = 0; n < d; ++n) {
        oscillator_(n, n) = static_cast<double>(n) + 0.5;
        if (n + 1 < d) {
            const double v = std::sqrt(static_cast<double>(n + 1) / 2.0);
            position_(n, n + 1) = v;
            position_(n + 1, n) = v;
        }
    }
}

ComplexMatrix HarmonicFockModel::hamiltonian(double u) const
{
    ComplexMatrix h = oscillator_ - u * position_;
    h.diagonal().array() += 0.5 * u * u;
    return h;
}

ComplexMatrix HarmonicFockModel::d_hamiltonian(double u) const
{
    ComplexMatrix h = -position_;
    h.diagonal().array() += u;
    return h;
}

ComplexMatrix HarmonicFockModel::d2_hamiltonian(double) const
{
    const auto d = static_cast<Eigen::Index>(dim_);
    return ComplexMatrix::Identity(d, d);
}

StateVector coherent_state(std::size_t fock_dimension, double x, double p)
{
    require(fock_dimension >= 1, ErrorCode::invalid_parameter, "coherent_state: empty basis");
    const Complex alpha = Complex(x, p) / std::sqrt(2.0);
    StateVector c(static_cast<Eigen::Index>(fock_dimension));
    c[0] = std::exp(-0.5 * std::norm(alpha));
    for (Eigen::Index n = 1; n < c.size(); ++n) {
        c[n] = c[n - 1] * alpha / std::sqrt(static_cast<double>(n));
    }
    return c / c.norm();
}

std::vector<CoherentPoint> harmonic_classical_evolve(const ControlPulse &pulse)
{
    const auto u = pulse.values();
    const double dt = pulse.grid().dt();
    const double c = std::cos(dt);
    const double s = std::sin(dt);
    std::vector<CoherentPoint> out;
    out.reserve(u.size());
    out.push_back({0.0, 0.0});
    for (std::size_t j = 0; j + 1 < u.size(); ++j) {
        const double m = 0.5 * (u[j] + u[j + 1]);
        const auto prev = out.back();
        const double y = prev.x - m;
        out.push_back({m + y * c + prev.p * s, -y * s + prev.p * c});
    }
    return out;
}

double harmonic_fidelity(const ControlPulse &pulse, double displacement)
{
    const auto end = harmonic_classical_evolve(pulse).back();
    const double dx = end.x - displacement;
    return std::exp(-0.5 * (dx * dx + end.p * end.p));
}

double harmonic_infidelity(const ControlPulse &pulse, double displacement)
{
    const auto end = harmonic_classical_evolve(pulse).back();
    const double dx = end.x - displacement;
    return -std::expm1(-0.5 * (dx * dx + end.p * end.p));
}

double smooth_ramp(double x) { return x * x * x * (10.0 + x * (-15.0 + 6.0 * x)); }

namespace {

ControlPulse reference_family(const TimeGrid &grid, double displacement, double beta1, double beta2)
{
    std::vector<double> u(grid.size());
    for (std::size_t n = 0; n < grid.size(); ++n) {
        const double tau = grid.time(n) / grid.final_time();
        const double s1 = std::sin(std::numbers::pi * tau);
        const double s2 = std::sin(2.0 * std::numbers::pi * tau);
        u[n] = displacement * smooth_ramp(tau) + beta1 * s1 * s1 + beta2 * s1 * s2;
    }
    u.front() = 0.0;
    u.back() = displacement;
    return ControlPulse(grid, std::move(u));
}

Eigen::Vector2d terminal_residual(const ControlPulse &pulse, double displacement)
{
    const auto end = harmonic_classical_evolve(pulse).back();
    return {end.x - displacement, end.p};
}

} // namespace

ControlPulse harmonic_reference_optimal_pulse(double displacement, double final_time, std::size_t samples)
{
    require(std::isfinite(displacement), ErrorCode::invalid_parameter, "reference optimum: displacement not finite");
    const TimeGrid grid(final_time, samples);
    Eigen::Vector2d beta = Eigen::Vector2d::Zero();
    for (int iter = 0; iter < 100; ++iter) {
        const Eigen::Vector2d r0 = terminal_residual(reference_family(grid, displacement, beta[0], beta[1]), displacement);
        if (r0.norm() <= 1e-13 * std::max(1.0, std::abs(displacement))) {
            auto pulse = reference_family(grid, displacement, beta[0], beta[1]);
            require(1.0 - harmonic_fidelity(pulse, displacement) <= 1e-10, ErrorCode::no_optimum_found,
                    "reference optimum: residual infidelity above 1e-10");
            return pulse;
        }
        // The terminal point is affine in beta, so unit perturbations give the exact Jacobian.
        Eigen::Matrix2d jac;
        jac.col(0) = terminal_residual(reference_family(grid, displacement, beta[0] + 1.0, beta[1]), displacement) - r0;
        jac.col(1) = terminal_residual(reference_family(grid, displacement, beta[0], beta[1] + 1.0), displacement) - r0;
        const auto lu = jac.fullPivLu();
        if (!lu.isInvertible()) {
            break;
        }
        beta -= lu.solve(r0);
    }
    fail(ErrorCode::no_optimum_found, "reference optimum: terminal-condition root find did not converge");
}

ControlPulse optimal_family_shift(const ControlPulse &pulse, double alpha)
{
    const auto velocity = time_derivative(pulse);
    std::vector<double> out(pulse.values().begin(), pulse.values().end());
    for (std::size_t n = 0; n < out.size(); ++n) {
        out[n] += alpha * velocity[n];
    }
    return ControlPulse(pulse.grid(), std::move(out));
}

} // namespace qrobust
