#pragma once

#include <complex>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pulse.hpp"

namespace qrobust {

using Complex = std::complex<double>;
using StateVector = Eigen::VectorXcd;
using ComplexMatrix = Eigen::MatrixXcd;

/// A closed system H(u) with a single real control. Matrices are dense and Hermitian.
class HamiltonianModel {
public:
    virtual ~HamiltonianModel() = default;

    virtual std::size_t dimension() const = 0;
    virtual ComplexMatrix hamiltonian(double u) const = 0;
    /// dH/du at u.
    virtual ComplexMatrix d_hamiltonian(double u) const = 0;
    /// d^2H/du^2 at u.
    virtual ComplexMatrix d2_hamiltonian(double u) const = 0;

    StateVector apply_H(double u, const StateVector &psi) const { return hamiltonian(u) * psi; }
    StateVector apply_dH(double u, const StateVector &psi) const { return d_hamiltonian(u) * psi; }
    StateVector apply_d2H(double u, const StateVector &psi) const { return d2_hamiltonian(u) * psi; }
};

enum class Objective {
    phase_sensitive, // J' = 1 - Re<g|psi_T>
    overlap,         // J' = 1 - |<g|psi_T>|^2
};

const char *objective_name(Objective objective) noexcept;
Objective parse_objective(const std::string &name);

struct Trajectory {
    TimeGrid grid;
    std::vector<StateVector> states;

    const StateVector &final_state() const { return states.back(); }
};

struct GateauxSolution {
    std::vector<StateVector> delta_psi;
    std::vector<StateVector> delta2_psi;
};

/// exp(-i H dt) for one step, held in the eigenbasis of H, with its exact derivatives
/// along Hermitian directions (Daleckii-Krein divided differences).
class StepPropagator {
public:
    StepPropagator(const ComplexMatrix &hamiltonian, double dt);

    StateVector apply(const StateVector &psi) const;
    StateVector apply_adjoint(const StateVector &psi) const;
    ComplexMatrix matrix() const;

    /// d/da exp(-i (H + a B) dt) at a = 0.
    ComplexMatrix derivative(const ComplexMatrix &direction) const;
    /// d^2/da^2 exp(-i (H + a B + a^2 C / 2) dt) at a = 0.
    ComplexMatrix second_derivative(const ComplexMatrix &direction, const ComplexMatrix &curvature) const;

    const Eigen::VectorXd &eigenvalues() const noexcept { return energies_; }

private:
    ComplexMatrix to_eigenbasis(const ComplexMatrix &m) const;
    ComplexMatrix from_eigenbasis(const ComplexMatrix &m) const;

    double dt_;
    Eigen::VectorXd energies_;
    ComplexMatrix basis_;
    Eigen::VectorXcd phases_;
};

/// Per-step propagators of a pulse (control held at the midpoint (u_n + u_{n+1})/2),
/// optionally with the step derivatives dU/dm (order >= 1) and d^2U/dm^2 (order 2).
class StepSequence {
public:
    StepSequence(const HamiltonianModel &model, const ControlPulse &pulse, int derivative_order);

    std::size_t steps() const noexcept { return props_.size(); }
    const StepPropagator &step(std::size_t j) const { return props_[j]; }
    double midpoint(std::size_t j) const { return midpoints_[j]; }
    const ComplexMatrix &derivative(std::size_t j) const { return first_[j]; }
    const ComplexMatrix &second_derivative(std::size_t j) const { return second_[j]; }
    int derivative_order() const noexcept { return order_; }

private:
    std::vector<StepPropagator> props_;
    std::vector<double> midpoints_;
    std::vector<ComplexMatrix> first_;
    std::vector<ComplexMatrix> second_;
    int order_;
};

Trajectory propagate(const HamiltonianModel &model, const ControlPulse &pulse, const StateVector &psi0);
Trajectory propagate(const StepSequence &steps, const TimeGrid &grid, const StateVector &psi0);

/// First and second Gateaux variations of the trajectory along delta_u (zero endpoints).
GateauxSolution solve_gateaux(const HamiltonianModel &model, const ControlPulse &pulse, const Trajectory &trajectory,
                              std::span<const double> delta_u);
GateauxSolution solve_gateaux(const StepSequence &steps, const Trajectory &trajectory,
                              std::span<const double> delta_u);

double infidelity_terminal(const StateVector &psi_T, const StateVector &goal);
double infidelity_phase_sensitive(const StateVector &psi_T, const StateVector &goal);
double infidelity(Objective objective, const StateVector &psi_T, const StateVector &goal);

/// 1 - F(psi_0) + 2 int_0^T Im[<g|psi_t><psi_t|H(u_t)|g>] dt, Simpson on each step with the midpoint control.
double infidelity_integral(const HamiltonianModel &model, const ControlPulse &pulse, const Trajectory &trajectory,
                           const StateVector &goal);

void write_trajectory_csv(std::ostream &os, const Trajectory &trajectory);

} // namespace qrobust
