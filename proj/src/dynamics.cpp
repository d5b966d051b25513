#include "dynamics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <ostream>

#include "error.hpp"
#include "numfmt.hpp"

namespace qrobust {

const char *objective_name(Objective objective) noexcept
{
    return objective == Objective::phase_sensitive ? "phase_sensitive" : "overlap";
}

Objective parse_objective(const std::string &name)
{
    if (name == "phase_sensitive") {
        return Objective::phase_sensitive;
    }
    if (name == "overlap") {
        return Objective::overlap;
    }
    fail(ErrorCode::invalid_parameter, "unknown objective '" + name + "' (expected phase_sensitive or overlap)");
}

namespace {

constexpr Complex I{0.0, 1.0};

// Divided differences of f(x) = exp(-i tau x).
Complex exp_dd1(double x, double y, double tau)
{
    const double half = 0.5 * tau * (x - y);
    const double sinc = std::abs(half) < 1e-8 ? 1.0 - half * half / 6.0 : std::sin(half) / half;
    return std::exp(-I * tau * 0.5 * (x + y)) * (-I * tau) * sinc;
}

Complex exp_dd2(double x, double y, double z, double tau)
{
    std::array<double, 3> v{x, y, z};
    std::sort(v.begin(), v.end());
    const double spread = v[2] - v[0];
    if (tau * spread < 1e-4) {
        const double c = (v[0] + v[1] + v[2]) / 3.0;
        double sq = 0.0;
        for (double e : v) {
            sq += (e - c) * (e - c);
        }
        return (-I * tau) * (-I * tau) * std::exp(-I * tau * c) * (0.5 - tau * tau * sq / 48.0);
    }
    return (exp_dd1(v[1], v[2], tau) - exp_dd1(v[0], v[1], tau)) / spread;
}

} // namespace

StepPropagator::StepPropagator(const ComplexMatrix &hamiltonian, double dt) : dt_(dt)
{
    require(hamiltonian.rows() == hamiltonian.cols(), ErrorCode::shape_mismatch, "step: Hamiltonian not square");
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(hamiltonian);
    require(solver.info() == Eigen::Success, ErrorCode::internal, "step: eigendecomposition failed");
    energies_ = solver.eigenvalues();
    basis_ = solver.eigenvectors();
    phases_.resize(energies_.size());
    for (Eigen::Index a = 0; a < energies_.size(); ++a) {
        phases_[a] = std::exp(-I * energies_[a] * dt_);
    }
}

StateVector StepPropagator::apply(const StateVector &psi) const
{
    StateVector c = basis_.adjoint() * psi;
    c.array() *= phases_.array();
    return basis_ * c;
}

StateVector StepPropagator::apply_adjoint(const StateVector &psi) const
{
    StateVector c = basis_.adjoint() * psi;
    c.array() *= phases_.array().conjugate();
    return basis_ * c;
}

ComplexMatrix StepPropagator::matrix() const { return basis_ * phases_.asDiagonal() * basis_.adjoint(); }

ComplexMatrix StepPropagator::to_eigenbasis(const ComplexMatrix &m) const { return basis_.adjoint() * m * basis_; }

ComplexMatrix StepPropagator::from_eigenbasis(const ComplexMatrix &m) const { return basis_ * m * basis_.adjoint(); }

ComplexMatrix StepPropagator::derivative(const ComplexMatrix &direction) const
{
    ComplexMatrix b = to_eigenbasis(direction);
    const Eigen::Index d = b.rows();
    for (Eigen::Index a = 0; a < d; ++a) {
        for (Eigen::Index c = 0; c < d; ++c) {
            b(a, c) *= exp_dd1(energies_[a], energies_[c], dt_);
        }
    }
    return from_eigenbasis(b);
}

ComplexMatrix StepPropagator::second_derivative(const ComplexMatrix &direction, const ComplexMatrix &curvature) const
{
    const ComplexMatrix b = to_eigenbasis(direction);
    const ComplexMatrix k = to_eigenbasis(curvature);
    const Eigen::Index d = b.rows();
    ComplexMatrix dd1(d, d);
    for (Eigen::Index a = 0; a < d; ++a) {
        for (Eigen::Index c = 0; c < d; ++c) {
            dd1(a, c) = exp_dd1(energies_[a], energies_[c], dt_);
        }
    }
    ComplexMatrix out(d, d);
    for (Eigen::Index a = 0; a < d; ++a) {
        for (Eigen::Index c = 0; c < d; ++c) {
            const double gap = energies_[a] - energies_[c];
            const bool recurse = std::abs(dt_ * gap) >= 1e-4;
            Complex sum = dd1(a, c) * k(a, c);
            for (Eigen::Index m = 0; m < d; ++m) {
                const Complex dd2 = recurse ? (dd1(a, m) - dd1(m, c)) / gap
                                            : exp_dd2(energies_[a], energies_[m], energies_[c], dt_);
                sum += 2.0 * dd2 * b(a, m) * b(m, c);
            }
            out(a, c) = sum;
        }
    }
    return from_eigenbasis(out);
}

StepSequence::StepSequence(const HamiltonianModel &model, const ControlPulse &pulse, int derivative_order)
    : order_(derivative_order)
{
    require(static_cast<std::size_t>(pulse.size()) >= 2, ErrorCode::invalid_grid, "step sequence: empty pulse");
    const auto u = pulse.values();
    const double dt = pulse.grid().dt();
    const std::size_t steps = u.size() - 1;
    props_.reserve(steps);
    midpoints_.reserve(steps);
    first_.reserve(order_ >= 1 ? steps : 0);
    second_.reserve(order_ >= 2 ? steps : 0);
    for (std::size_t j = 0; j < steps; ++j) {
        const double m = 0.5 * (u[j] + u[j + 1]);
        midpoints_.push_back(m);
        props_.emplace_back(model.hamiltonian(m), dt);
        if (order_ >= 1) {
            const ComplexMatrix dh = model.d_hamiltonian(m);
            first_.push_back(props_.back().derivative(dh));
            if (order_ >= 2) {
                second_.push_back(props_.back().second_derivative(dh, model.d2_hamiltonian(m)));
            }
        }
    }
}

Trajectory propagate(const StepSequence &steps, const TimeGrid &grid, const StateVector &psi0)
{
    Trajectory out{grid, {}};
    out.states.reserve(steps.steps() + 1);
    out.states.push_back(psi0);
    for (std::size_t j = 0; j < steps.steps(); ++j) {
        out.states.push_back(steps.step(j).apply(out.states.back()));
    }
    return out;
}

Trajectory propagate(const HamiltonianModel &model, const ControlPulse &pulse, const StateVector &psi0)
{
    require(static_cast<std::size_t>(psi0.size()) == model.dimension(), ErrorCode::shape_mismatch,
            "propagate: initial state has dimension " + std::to_string(psi0.size()) + ", model has " +
                std::to_string(model.dimension()));
    return propagate(StepSequence(model, pulse, 0), pulse.grid(), psi0);
}

GateauxSolution solve_gateaux(const StepSequence &steps, const Trajectory &trajectory,
                              std::span<const double> delta_u)
{
    require(steps.derivative_order() >= 2, ErrorCode::internal, "solve_gateaux: step derivatives not computed");
    require(delta_u.size() == steps.steps() + 1 && trajectory.states.size() == delta_u.size(),
            ErrorCode::shape_mismatch, "solve_gateaux: length mismatch between pulse, trajectory and distortion");
    require(delta_u.front() == 0.0 && delta_u.back() == 0.0, ErrorCode::invalid_distortion,
            "solve_gateaux: distortion must vanish at both endpoints");
    const Eigen::Index d = trajectory.states.front().size();
    GateauxSolution out;
    out.delta_psi.assign(1, StateVector::Zero(d));
    out.delta2_psi.assign(1, StateVector::Zero(d));
    for (std::size_t j = 0; j < steps.steps(); ++j) {
        const double dm = 0.5 * (delta_u[j] + delta_u[j + 1]);
        const auto &psi = trajectory.states[j];
        const auto &dpsi = out.delta_psi.back();
        const auto &d2psi = out.delta2_psi.back();
        StateVector next2 = steps.step(j).apply(d2psi) + 2.0 * dm * (steps.derivative(j) * dpsi) +
                            dm * dm * (steps.second_derivative(j) * psi);
        StateVector next1 = steps.step(j).apply(dpsi) + dm * (steps.derivative(j) * psi);
        out.delta_psi.push_back(std::move(next1));
        out.delta2_psi.push_back(std::move(next2));
    }
    return out;
}

GateauxSolution solve_gateaux(const HamiltonianModel &model, const ControlPulse &pulse, const Trajectory &trajectory,
                              std::span<const double> delta_u)
{
    require(delta_u.size() == pulse.size(), ErrorCode::shape_mismatch, "solve_gateaux: distortion length mismatch");
    require(trajectory.states.size() == pulse.size(), ErrorCode::shape_mismatch,
            "solve_gateaux: trajectory does not match pulse");
    return solve_gateaux(StepSequence(model, pulse, 2), trajectory, delta_u);
}

namespace {

void check_pair(const StateVector &a, const StateVector &b)
{
    require(a.size() == b.size(), ErrorCode::shape_mismatch, "infidelity: dimension mismatch");
}

} // namespace

double infidelity_terminal(const StateVector &psi_T, const StateVector &goal)
{
    check_pair(psi_T, goal);
    // |psi_perp|^2 avoids the cancellation in 1 - |<g|psi>|^2 near an optimum.
    const StateVector psi = psi_T / psi_T.norm();
    return std::min(1.0, (psi - goal.dot(psi) * goal).squaredNorm());
}

double infidelity_phase_sensitive(const StateVector &psi_T, const StateVector &goal)
{
    check_pair(psi_T, goal);
    // For unit vectors 1 - Re<g|psi> = |psi - g|^2 / 2.
    const StateVector psi = psi_T / psi_T.norm();
    return 0.5 * (psi - goal).squaredNorm();
}

double infidelity(Objective objective, const StateVector &psi_T, const StateVector &goal)
{
    return objective == Objective::phase_sensitive ? infidelity_phase_sensitive(psi_T, goal)
                                                   : infidelity_terminal(psi_T, goal);
}

double infidelity_integral(const HamiltonianModel &model, const ControlPulse &pulse, const Trajectory &trajectory,
                           const StateVector &goal)
{
    require(trajectory.states.size() == pulse.size(), ErrorCode::shape_mismatch,
            "infidelity_integral: trajectory does not match pulse");
    check_pair(trajectory.states.front(), goal);
    require(static_cast<std::size_t>(goal.size()) == model.dimension(), ErrorCode::shape_mismatch,
            "infidelity_integral: goal dimension does not match model");
    const auto u = pulse.values();
    const double dt = pulse.grid().dt();
    // Simpson per step, with the step's own generator so the integrand is that of the discrete flow
    double integral = 0.0;
    for (std::size_t n = 0; n + 1 < u.size(); ++n) {
        const double mid = 0.5 * (u[n] + u[n + 1]);
        const StateVector h_goal = model.apply_H(mid, goal);
        auto rate = [&](const StateVector &psi) { return 2.0 * (goal.dot(psi) * psi.dot(h_goal)).imag(); };
        const StateVector half = StepPropagator(model.hamiltonian(mid), 0.5 * dt).apply(trajectory.states[n]);
        integral += dt / 6.0 * (rate(trajectory.states[n]) + 4.0 * rate(half) + rate(trajectory.states[n + 1]));
    }
    return 1.0 - std::norm(goal.dot(trajectory.states.front())) + integral;
}

void write_trajectory_csv(std::ostream &os, const Trajectory &trajectory)
{
    const Eigen::Index d = trajectory.states.empty() ? 0 : trajectory.states.front().size();
    os << 't';
    for (Eigen::Index a = 0; a < d; ++a) {
        os << ",re" << a << ",im" << a;
    }
    os << '\n';
    for (std::size_t n = 0; n < trajectory.states.size(); ++n) {
        os << format_double(trajectory.grid.time(n));
        for (Eigen::Index a = 0; a < d; ++a) {
            os << ',' << format_double(trajectory.states[n][a].real()) << ','
               << format_double(trajectory.states[n][a].imag());
        }
        os << '\n';
    }
}

} // namespace qrobust
