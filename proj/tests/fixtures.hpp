#pragma once

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "hessian.hpp"
#include "models.hpp"
#include "optimizer.hpp"
#include "problem.hpp"
#include "tolerance.hpp"

namespace fixtures {

using namespace qrobust;

inline const LandauZenerProblem &lz_problem()
{
    static const LandauZenerProblem problem(LandauZenerModel(1.0, -10.0, 10.0), Objective::phase_sensitive);
    return problem;
}

inline KrotovConfig tight_krotov()
{
    KrotovConfig cfg;
    cfg.target_infidelity = 1e-20;
    cfg.stall_tolerance = 0.0;
    cfg.max_iters = 2000;
    return cfg;
}

inline const ControlPulse &lz_optimum_128()
{
    static const ControlPulse pulse =
        krotov_optimize(lz_problem(), ControlPulse::linear_ramp(TimeGrid(10.0, 128), -10.0, 10.0), tight_krotov()).pulse;
    return pulse;
}

inline const ControlPulse &lz_optimum_64()
{
    static const ControlPulse pulse =
        krotov_optimize(lz_problem(), ControlPulse::linear_ramp(TimeGrid(10.0, 64), -10.0, 10.0), tight_krotov()).pulse;
    return pulse;
}

inline const HessianMatrix &lz_hessian_128()
{
    static const HessianMatrix h = build_hessian(lz_problem(), lz_optimum_128(), {});
    return h;
}

inline const HarmonicTransportProblem &harmonic_problem()
{
    static const HarmonicTransportProblem problem(HarmonicTransportModel{});
    return problem;
}

inline const ControlPulse &harmonic_optimum()
{
    static const ControlPulse pulse = harmonic_reference_optimal_pulse(5.0, 4.0 * std::numbers::pi, 128);
    return pulse;
}

inline const HessianMatrix &harmonic_hessian()
{
    static const HessianMatrix h = build_hessian(harmonic_problem(), harmonic_optimum(), {});
    return h;
}

inline CalibrationFamily single_k1() { return {"single_k1", SingleFrequency{1.0, 1}}; }
inline CalibrationFamily fourier5() { return {"fourier5", FourierSum::random(5, 1.0, 7)}; }

/// One family, strengths log-spaced in second-order infidelity over [1e-4, 0.2].
inline ToleranceFit calibrate_one(const ControlProblem &problem, const ControlPulse &opt, const HessianMatrix &h,
                                  const CalibrationFamily &family, FitExponent mode)
{
    const auto strengths = strengths_for_infidelity(h, opt, family.spec, 1e-4, 0.2, 20);
    CalibrationOptions o;
    o.exponent = mode;
    return calibrate(problem, opt, h, {family}, strengths, o);
}

inline const ToleranceFit &lz_fit()
{
    static const ToleranceFit fit =
        calibrate_one(lz_problem(), lz_optimum_128(), lz_hessian_128(), single_k1(), FitExponent::free);
    return fit;
}

inline const ToleranceFit &harmonic_fit()
{
    static const ToleranceFit fit = calibrate_one(harmonic_problem(), harmonic_optimum(), harmonic_hessian(),
                                                  single_k1(), FitExponent::fixed_half);
    return fit;
}

/// Smooth random distortion with pinned endpoints: sum of the first five sine harmonics.
inline std::vector<double> random_distortion(const TimeGrid &grid, std::mt19937_64 &rng, double scale)
{
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    FourierSum spec;
    for (int k = 0; k < 5; ++k) {
        spec.amplitudes.push_back(scale * u(rng));
    }
    return fourier_distortion(grid, spec);
}

} // namespace fixtures
