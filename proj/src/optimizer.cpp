#include "optimizer.hpp"

#include <cmath>
#include <ostream>

#include "error.hpp"
#include "numfmt.hpp"

namespace qrobust {

namespace {

struct StepData {
    StepPropagator prop;
    ComplexMatrix derivative;
};

StepData make_step(const HamiltonianModel &model, double midpoint, double dt)
{
    StepPropagator prop(model.hamiltonian(midpoint), dt);
    ComplexMatrix d = prop.derivative(model.d_hamiltonian(midpoint));
    return {std::move(prop), std::move(d)};
}

// -Re<chi_{j+1}| dU_j/dm |psi_j>: derivative of the cost w.r.t. the held control of step j,
// with the costate already carrying the overlap factor.
double step_sensitivity(const StepData &step, const StateVector &costate_after, const StateVector &psi_before)
{
    return -costate_after.dot(step.derivative * psi_before).real();
}

} // namespace

std::vector<double> first_variation_kernel(const ControlProblem &problem, const ControlPulse &pulse)
{
    auto grad = problem.gradient(pulse);
    const double scale = problem.objective() == Objective::overlap ? 2.0 : 1.0;
    for (auto &g : grad) {
        g = -g / (scale * pulse.grid().dt());
    }
    return grad;
}

OptimizationTrace krotov_optimize(const ControlProblem &problem, const ControlPulse &initial,
                                  const KrotovConfig &config)
{
    require(config.step_weight > 0.0 && config.max_iters > 0 && config.target_infidelity > 0.0 &&
                config.stall_tolerance >= 0.0,
            ErrorCode::invalid_parameter, "krotov: step_weight, max_iters, target_infidelity must be positive");
    const auto &model = problem.model();
    const auto &grid = initial.grid();
    const double dt = grid.dt();
    const std::size_t n = initial.size();

    std::vector<double> u(initial.values().begin(), initial.values().end());
    OptimizationTrace trace{{problem.cost(initial)}, initial, false, 0};
    if (trace.costs.back() <= config.target_infidelity) {
        trace.converged = true;
        return trace;
    }

    for (std::size_t iter = 1; iter <= config.max_iters; ++iter) {
        // Backward costates under the current pulse.
        std::vector<StepPropagator> old_steps;
        old_steps.reserve(n - 1);
        for (std::size_t j = 0; j + 1 < n; ++j) {
            old_steps.emplace_back(model.hamiltonian(0.5 * (u[j] + u[j + 1])), dt);
        }
        StateVector psi_T = problem.initial_state();
        for (const auto &s : old_steps) {
            psi_T = s.apply(psi_T);
        }
        std::vector<StateVector> costates(n);
        costates[n - 1] = problem.objective() == Objective::phase_sensitive
                              ? StateVector(problem.goal())
                              : StateVector(problem.goal().dot(psi_T) * problem.goal());
        for (std::size_t j = n - 1; j-- > 0;) {
            costates[j] = old_steps[j].apply_adjoint(costates[j + 1]);
        }

        // Sequential forward sweep.
        StateVector psi = problem.initial_state();
        for (std::size_t k = 1; k + 1 < n; ++k) {
            const auto before = make_step(model, 0.5 * (u[k - 1] + u[k]), dt);
            const StateVector psi_k = before.prop.apply(psi);
            const auto after = make_step(model, 0.5 * (u[k] + u[k + 1]), dt);
            const double grad = 0.5 * (step_sensitivity(before, costates[k], psi) +
                                       step_sensitivity(after, costates[k + 1], psi_k));
            u[k] -= grad / (dt * config.step_weight);
            psi = StepPropagator(model.hamiltonian(0.5 * (u[k - 1] + u[k])), dt).apply(psi);
        }

        ControlPulse updated(grid, u);
        const double cost = problem.cost(updated);
        const double previous = trace.costs.back();
        if (cost > previous + config.stall_tolerance) {
            fail(ErrorCode::monotonicity_violation,
                 "krotov: cost increased from " + format_double(previous) + " to " + format_double(cost) +
                     " at iteration " + std::to_string(iter) + "; increase step_weight");
        }
        trace.costs.push_back(cost);
        trace.pulse = std::move(updated);
        trace.iterations = iter;
        if (cost <= config.target_infidelity) {
            trace.converged = true;
            break;
        }
        if (previous - cost < config.stall_tolerance) {
            break;
        }
    }
    return trace;
}

void write_trace_csv(std::ostream &os, const OptimizationTrace &trace)
{
    os << "iteration,cost\n";
    for (std::size_t k = 0; k < trace.costs.size(); ++k) {
        os << k << ',' << format_double(trace.costs[k]) << '\n';
    }
}

} // namespace qrobust
