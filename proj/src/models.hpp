#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "dynamics.hpp"
#include "pulse.hpp"

namespace qrobust {

/// H(u) = u sigma_z + Omega sigma_x, swept from u_start < 0 to u_end > 0.
class LandauZenerModel final : public HamiltonianModel {
public:
    LandauZenerModel(double coupling, double u_start, double u_end);

    std::size_t dimension() const override { return 2; }
    ComplexMatrix hamiltonian(double u) const override;
    ComplexMatrix d_hamiltonian(double u) const override;
    ComplexMatrix d2_hamiltonian(double u) const override;

    double coupling() const noexcept { return coupling_; }
    double u_start() const noexcept { return u_start_; }
    double u_end() const noexcept { return u_end_; }
    /// True when |u_start|, |u_end| >= 5 Omega, so the boundary ground states are well polarized.
    bool well_polarized() const noexcept;

private:
    double coupling_;
    double u_start_;
    double u_end_;
};

/// Ground state of u sigma_z + Omega sigma_x; first component real and >= 0
/// (second made real positive if the first vanishes).
StateVector lz_ground_state(double u, double coupling);
std::pair<StateVector, StateVector> lz_boundary_states(const LandauZenerModel &model);

/// Moving harmonic trap H(u) = (p^2 + (x - u)^2) / 2 in a truncated Fock basis.
class HarmonicFockModel final : public HamiltonianModel {
public:
    explicit HarmonicFockModel(std::size_t fock_dimension);

    std::size_t dimension() const override { return dim_; }
    ComplexMatrix hamiltonian(double u) const override;
    ComplexMatrix d_hamiltonian(double u) const override;
    ComplexMatrix d2_hamiltonian(double u) const override;

private:
    std::size_t dim_;
    ComplexMatrix position_;
    ComplexMatrix oscillator_;
};

/// Coherent state centred at (x, p) in a truncated Fock basis (renormalized).
StateVector coherent_state(std::size_t fock_dimension, double x, double p);

struct HarmonicTransportModel {
    double displacement = 5.0;     // Delta x in oscillator lengths
    std::size_t grid_points = 512; // spatial grid used by the wave-packet cross-check
    double x_range = 15.0;         // half-width of the spatial box
    std::size_t fock_dimension = 64;
};

struct CoherentPoint {
    double x = 0.0;
    double p = 0.0;
};

/// Classical centre of the driven coherent state, starting from (0, 0). The control is held
/// at the step midpoint, matching propagate().
std::vector<CoherentPoint> harmonic_classical_evolve(const ControlPulse &pulse);

/// exp(-[(x_c(T) - dx)^2 + p_c(T)^2] / 2)
double harmonic_fidelity(const ControlPulse &pulse, double displacement);
/// 1 - harmonic_fidelity without cancellation.
double harmonic_infidelity(const ControlPulse &pulse, double displacement);

ControlPulse harmonic_reference_optimal_pulse(double displacement, double final_time, std::size_t samples);

/// u + alpha u_dot
ControlPulse optimal_family_shift(const ControlPulse &pulse, double alpha);

/// Quintic smooth ramp 10x^3 - 15x^4 + 6x^5.
double smooth_ramp(double x);

} // namespace qrobust
