#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tolerance.hpp"

namespace qrobust {

enum class SamplerFamily { single_frequency, fourier };

const char *sampler_family_name(SamplerFamily family) noexcept;
SamplerFamily parse_sampler_family(const std::string &name);

/// Random distortions: a family plus a strength drawn uniformly from [strength_min, strength_max].
struct EnsembleSampler {
    SamplerFamily family = SamplerFamily::single_frequency;
    int rate_min = 1; // single frequency: kappa uniform in [rate_min, rate_max]
    int rate_max = 1;
    std::size_t harmonics = 5; // fourier: unit amplitudes uniform in [-1, 1], scaled by the strength
    double strength_min = 0.0;
    double strength_max = 1.0;
};

struct EnsembleRecord {
    std::size_t index = 0; // draw order
    double strength = 0.0;
    int rate = 0;
    std::uint64_t harmonic_seed = 0;
    double quad_form = 0.0;
    double criterion = 0.0; // I
    double score = 0.0;     // implementability of u_opt + du
    bool accepted = false;
    std::optional<double> exact_infidelity;
};

struct PulseEnsemble {
    ControlPulse optimum;
    EnsembleSampler sampler;
    std::uint64_t seed = 0;
    double target = 0.0; // J
    double alpha = 0.0;  // fit(J)
    std::vector<double> lambda;
    ImplementabilityWeights weights;
    std::vector<EnsembleRecord> records; // every draw, in draw order
    std::vector<std::size_t> order;      // accepted draws; draw order until select_best reorders it

    std::size_t accepted_count() const noexcept { return order.size(); }
    std::size_t rejected_count() const noexcept { return records.size() - order.size(); }
    ControlPulse pulse(std::size_t draw) const;
};

struct EnsembleOptions {
    ImplementabilityWeights weights;
    std::size_t threads = 1;
};

/// Draws `count` distortions and keeps those with I <= target. Deterministic in `seed`.
PulseEnsemble generate_ensemble(const ControlPulse &optimum, const HessianMatrix &hessian, const ToleranceFit &fit,
                                double target, const EnsembleSampler &sampler, std::size_t count, std::uint64_t seed,
                                const EnsembleOptions &options = {});

std::vector<double> sampled_distortion(const ControlPulse &optimum, const EnsembleSampler &sampler,
                                       const EnsembleRecord &record);

/// Fills exact_infidelity for accepted draws, or for every draw when include_rejected is set.
void evaluate_exact(const ControlProblem &problem, PulseEnsemble &ensemble, bool include_rejected,
                    std::size_t threads = 1);

struct VerificationReport {
    double pass_fraction = 0.0;
    std::size_t passed = 0;
    std::size_t checked = 0;
    std::vector<std::size_t> draws;
    std::vector<double> exact_infidelities;
};

VerificationReport verify_ensemble(const ControlProblem &problem, PulseEnsemble &ensemble, double target, double slack,
                                   std::size_t threads = 1);

/// Orders accepted pulses by implementability score, then I, then draw index.
void select_best(PulseEnsemble &ensemble, const ImplementabilityWeights &weights);

std::string ensemble_to_json(const PulseEnsemble &ensemble);
PulseEnsemble ensemble_from_json(const std::string &text);
/// Summary without per-draw records.
std::string ensemble_manifest_json(const PulseEnsemble &ensemble, const ToleranceFit &fit);
void write_ensemble_csv(std::ostream &os, const PulseEnsemble &ensemble);
/// draw, I, exact infidelity, threshold J
void write_verification_csv(std::ostream &os, const PulseEnsemble &ensemble, bool include_rejected);

} // namespace qrobust
