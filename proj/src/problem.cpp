#include "problem.hpp"

#include <cmath>

#include "error.hpp"

namespace qrobust {

ControlProblem::ControlProblem(std::shared_ptr<const HamiltonianModel> model, StateVector initial, StateVector goal,
                               Objective objective)
    : model_(std::move(model)), initial_(std::move(initial)), goal_(std::move(goal)), objective_(objective)
{
    require(model_ != nullptr, ErrorCode::invalid_input, "control problem: null model");
    const auto d = static_cast<Eigen::Index>(model_->dimension());
    require(initial_.size() == d && goal_.size() == d, ErrorCode::shape_mismatch,
            "control problem: state dimension does not match model");
    require(std::abs(initial_.norm() - 1.0) <= 1e-10 && std::abs(goal_.norm() - 1.0) <= 1e-10,
            ErrorCode::invalid_input, "control problem: states must be normalized");
}

double ControlProblem::cost(const ControlPulse &pulse) const
{
    return infidelity(objective_, propagate(*model_, pulse, initial_).final_state(), goal_);
}

std::vector<double> ControlProblem::gradient(const ControlPulse &pulse) const { return adjoint_gradient(*this, pulse); }

std::vector<double> adjoint_gradient(const ControlProblem &problem, const ControlPulse &pulse)
{
    const StepSequence steps(problem.model(), pulse, 1);
    const auto trajectory = propagate(steps, pulse.grid(), problem.initial_state());
    const Complex overlap = problem.goal().dot(trajectory.final_state());
    const std::size_t nsteps = steps.steps();
    std::vector<double> step_grad(nsteps);
    StateVector costate = problem.goal();
    for (std::size_t j = nsteps; j-- > 0;) {
        const Complex c = costate.dot(steps.derivative(j) * trajectory.states[j]);
        step_grad[j] = problem.objective() == Objective::phase_sensitive ? -c.real()
                                                                          : -2.0 * (std::conj(overlap) * c).real();
        costate = steps.step(j).apply_adjoint(costate);
    }
    std::vector<double> grad(pulse.size(), 0.0);
    for (std::size_t j = 0; j < nsteps; ++j) {
        grad[j] += 0.5 * step_grad[j];
        grad[j + 1] += 0.5 * step_grad[j];
    }
    return grad;
}

double gradient_norm(const ControlProblem &problem, const ControlPulse &pulse)
{
    const auto grad = problem.gradient(pulse);
    double sum = 0.0;
    for (std::size_t n = 1; n + 1 < grad.size(); ++n) {
        sum += grad[n] * grad[n];
    }
    return std::sqrt(sum);
}

LandauZenerProblem::LandauZenerProblem(const LandauZenerModel &model, Objective objective)
    : ControlProblem(std::make_shared<LandauZenerModel>(model), lz_boundary_states(model).first,
                     lz_boundary_states(model).second, objective),
      lz_(model)
{
}

HarmonicTransportProblem::HarmonicTransportProblem(const HarmonicTransportModel &params)
    : ControlProblem(std::make_shared<HarmonicFockModel>(params.fock_dimension),
                     coherent_state(params.fock_dimension, 0.0, 0.0),
                     coherent_state(params.fock_dimension, params.displacement, 0.0), Objective::overlap),
      params_(params)
{
}

double HarmonicTransportProblem::cost(const ControlPulse &pulse) const
{
    return harmonic_infidelity(pulse, params_.displacement);
}

std::vector<double> HarmonicTransportProblem::gradient(const ControlPulse &pulse) const
{
    const auto path = harmonic_classical_evolve(pulse);
    const double rx = path.back().x - params_.displacement;
    const double rp = path.back().p;
    const double fidelity = std::exp(-0.5 * (rx * rx + rp * rp));
    const double dt = pulse.grid().dt();
    const double c = std::cos(dt);
    const double s = std::sin(dt);
    const std::size_t nsteps = pulse.size() - 1;
    // Sensitivity of the terminal point to the held control of step j: R^(steps after j) (1 - c, s).
    std::vector<double> step_grad(nsteps);
    double vx = 1.0 - c;
    double vp = s;
    for (std::size_t j = nsteps; j-- > 0;) {
        step_grad[j] = fidelity * (rx * vx + rp * vp);
        const double nx = c * vx + s * vp;
        const double np = -s * vx + c * vp;
        vx = nx;
        vp = np;
    }
    std::vector<double> grad(pulse.size(), 0.0);
    for (std::size_t j = 0; j < nsteps; ++j) {
        grad[j] += 0.5 * step_grad[j];
        grad[j + 1] += 0.5 * step_grad[j];
    }
    return grad;
}

} // namespace qrobust
