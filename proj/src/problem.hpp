#pragma once

#include <memory>
#include <string>
#include <vector>

#include "dynamics.hpp"
#include "models.hpp"

namespace qrobust {

/// Reduced cost J'[u] of steering psi0 to goal under a model. Immutable after construction.
class ControlProblem {
public:
    ControlProblem(std::shared_ptr<const HamiltonianModel> model, StateVector initial, StateVector goal,
                   Objective objective);
    virtual ~ControlProblem() = default;

    const HamiltonianModel &model() const noexcept { return *model_; }
    const StateVector &initial_state() const noexcept { return initial_; }
    const StateVector &goal() const noexcept { return goal_; }
    Objective objective() const noexcept { return objective_; }

    /// Exact J' of the discretized dynamics (no second-order approximation).
    virtual double cost(const ControlPulse &pulse) const;
    /// dJ'/du_n for all N samples (endpoint entries included, interior ones are the free variables).
    virtual std::vector<double> gradient(const ControlPulse &pulse) const;

    virtual std::string name() const { return "generic"; }

private:
    std::shared_ptr<const HamiltonianModel> model_;
    StateVector initial_;
    StateVector goal_;
    Objective objective_;
};

class LandauZenerProblem final : public ControlProblem {
public:
    LandauZenerProblem(const LandauZenerModel &model, Objective objective);

    const LandauZenerModel &lz() const noexcept { return lz_; }
    std::string name() const override { return "landau_zener"; }

private:
    LandauZenerModel lz_;
};

/// Ground-state transport over Delta x. The Fock-basis model serves the generic machinery;
/// cost and gradient use the exact coherent-state path of the same discrete dynamics.
class HarmonicTransportProblem final : public ControlProblem {
public:
    explicit HarmonicTransportProblem(const HarmonicTransportModel &params);

    double cost(const ControlPulse &pulse) const override;
    std::vector<double> gradient(const ControlPulse &pulse) const override;
    std::string name() const override { return "harmonic"; }

    const HarmonicTransportModel &params() const noexcept { return params_; }

private:
    HarmonicTransportModel params_;
};

/// Gradient of the discretized cost via forward states and backward costates.
std::vector<double> adjoint_gradient(const ControlProblem &problem, const ControlPulse &pulse);

/// Norm of the interior gradient; at a (numerical) optimum this is ~0.
double gradient_norm(const ControlProblem &problem, const ControlPulse &pulse);

} // namespace qrobust
