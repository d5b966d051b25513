#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "problem.hpp"

namespace qrobust {

struct KrotovConfig {
    double step_weight = 1.0; // lambda_K; updates scale as 1 / lambda_K
    std::size_t max_iters = 500;
    double target_infidelity = 1e-4;
    double stall_tolerance = 1e-14;
};

struct OptimizationTrace {
    std::vector<double> costs; // costs[0] is the initial cost
    ControlPulse pulse;
    bool converged = false;
    std::size_t iterations = 0;
};

/// Krotov-style sequential optimization with pinned endpoints. Interior samples are updated
/// one at a time by (1/lambda_K) Im<chi|dH/du|psi>, with psi re-propagated through each update.
/// Throws monotonicity_violation if an iteration raises the cost by more than stall_tolerance.
OptimizationTrace krotov_optimize(const ControlProblem &problem, const ControlPulse &initial,
                                  const KrotovConfig &config);

/// Im<chi(t_n)|dH/du|psi(t_n)> in the exact discrete form, with chi_T = g (phase-sensitive)
/// or <g|psi_T> g (overlap). Equals -(dJ'/du_n)/dt, halved for the overlap objective.
std::vector<double> first_variation_kernel(const ControlProblem &problem, const ControlPulse &pulse);

void write_trace_csv(std::ostream &os, const OptimizationTrace &trace);

} // namespace qrobust
