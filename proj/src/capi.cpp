#include "qrobust/qrobust.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <limits>
#include <memory>
#include <new>
#include <sstream>
#include <string>

#include "ensemble.hpp"
#include "error.hpp"
#include "optimizer.hpp"

using namespace qrobust;

struct qr_problem {
    std::unique_ptr<ControlProblem> impl;
    bool well_polarized = true;
};
struct qr_pulse {
    ControlPulse impl;
};
struct qr_trace {
    OptimizationTrace impl;
};
struct qr_hessian {
    HessianMatrix impl;
};
struct qr_fit {
    ToleranceFit impl;
};
struct qr_ensemble {
    PulseEnsemble impl;
};

namespace {

thread_local std::string last_error;

qr_status record(ErrorCode code, const std::string &message)
{
    last_error = message;
    return static_cast<qr_status>(code);
}

template <typename Body>
qr_status guarded(Body &&body)
{
    try {
        last_error.clear();
        body();
        return QR_OK;
    } catch (const Error &e) {
        return record(e.code(), e.what());
    } catch (const std::bad_alloc &) {
        return record(ErrorCode::internal, "out of memory");
    } catch (const std::exception &e) {
        return record(ErrorCode::internal, e.what());
    }
}

void need(const void *p, const char *what)
{
    require(p != nullptr, ErrorCode::invalid_input, std::string(what) + " is null");
}

char *dup_string(const std::string &s)
{
    char *out = static_cast<char *>(std::malloc(s.size() + 1));
    if (out == nullptr) {
        throw std::bad_alloc();
    }
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

template <typename Writer>
char *capture(Writer &&writer)
{
    std::ostringstream os;
    writer(os);
    return dup_string(os.str());
}

Objective to_objective(qr_objective o)
{
    require(o == QR_PHASE_SENSITIVE || o == QR_OVERLAP, ErrorCode::invalid_parameter, "unknown objective");
    return o == QR_PHASE_SENSITIVE ? Objective::phase_sensitive : Objective::overlap;
}

HessianBackend to_backend(qr_backend b)
{
    switch (b) {
    case QR_BACKEND_GATEAUX:
        return HessianBackend::gateaux;
    case QR_BACKEND_FINITE_DIFFERENCE:
        return HessianBackend::finite_difference;
    case QR_BACKEND_BFGS:
        return HessianBackend::bfgs;
    }
    fail(ErrorCode::invalid_parameter, "unknown Hessian backend");
}

qr_backend from_backend(HessianBackend b)
{
    switch (b) {
    case HessianBackend::gateaux:
        return QR_BACKEND_GATEAUX;
    case HessianBackend::finite_difference:
        return QR_BACKEND_FINITE_DIFFERENCE;
    case HessianBackend::bfgs:
        return QR_BACKEND_BFGS;
    }
    return QR_BACKEND_GATEAUX;
}

ImplementabilityWeights to_weights(const qr_weights *w)
{
    return w ? ImplementabilityWeights{w->bandwidth, w->slew, w->amplitude} : ImplementabilityWeights{};
}

CalibrationFamily to_family(const qr_family &f, std::size_t position)
{
    CalibrationFamily out;
    out.label = f.label ? f.label : "family" + std::to_string(position);
    if (f.kind == QR_SINGLE_FREQUENCY) {
        out.spec = SingleFrequency{1.0, f.rate};
    } else if (f.kind == QR_FOURIER) {
        if (f.amplitudes != nullptr) {
            require(f.harmonics >= 1, ErrorCode::invalid_parameter, "fourier family: no harmonics");
            out.spec = FourierSum{{f.amplitudes, f.amplitudes + f.harmonics}, f.seed};
        } else {
            out.spec = FourierSum::random(f.harmonics, 1.0, f.seed);
        }
    } else {
        fail(ErrorCode::invalid_parameter, "unknown distortion family kind");
    }
    return out;
}

std::vector<double> lambda_of(const qr_hessian *h) { return eigen_spectrum(h->impl).nonzero(); }

} // namespace

extern "C" {

const char *qr_last_error(void) { return last_error.c_str(); }

const char *qr_status_name(qr_status status) { return error_code_name(static_cast<ErrorCode>(status)); }

const char *qr_version(void) { return "1.0.0"; }

void qr_string_free(char *text) { std::free(text); }

qr_status qr_problem_create_landau_zener(double coupling, double u_start, double u_end, qr_objective objective,
                                         qr_problem **out)
{
    return guarded([&] {
        need(out, "out");
        const LandauZenerModel model(coupling, u_start, u_end);
        auto p = std::make_unique<qr_problem>();
        p->impl = std::make_unique<LandauZenerProblem>(model, to_objective(objective));
        p->well_polarized = model.well_polarized();
        *out = p.release();
    });
}

qr_status qr_problem_create_harmonic(double displacement, size_t fock_dimension, qr_problem **out)
{
    return guarded([&] {
        need(out, "out");
        require(std::isfinite(displacement), ErrorCode::invalid_parameter, "harmonic: displacement must be finite");
        require(fock_dimension >= 2, ErrorCode::invalid_parameter, "harmonic: Fock dimension must be at least 2");
        HarmonicTransportModel params;
        params.displacement = displacement;
        params.fock_dimension = fock_dimension;
        auto p = std::make_unique<qr_problem>();
        p->impl = std::make_unique<HarmonicTransportProblem>(params);
        *out = p.release();
    });
}

void qr_problem_free(qr_problem *problem) { delete problem; }

qr_status qr_problem_cost(const qr_problem *problem, const qr_pulse *pulse, double *out)
{
    return guarded([&] {
        need(problem, "problem");
        need(pulse, "pulse");
        need(out, "out");
        *out = problem->impl->cost(pulse->impl);
    });
}

qr_status qr_problem_gradient_norm(const qr_problem *problem, const qr_pulse *pulse, double *out)
{
    return guarded([&] {
        need(problem, "problem");
        need(pulse, "pulse");
        need(out, "out");
        *out = gradient_norm(*problem->impl, pulse->impl);
    });
}

int qr_problem_well_polarized(const qr_problem *problem) { return problem && problem->well_polarized ? 1 : 0; }

qr_status qr_pulse_create(double final_time, size_t samples, const double *values, qr_pulse **out)
{
    return guarded([&] {
        need(values, "values");
        need(out, "out");
        TimeGrid grid(final_time, samples);
        *out = new qr_pulse{ControlPulse(grid, std::vector<double>(values, values + samples))};
    });
}

qr_status qr_pulse_linear_ramp(double final_time, size_t samples, double start, double end, qr_pulse **out)
{
    return guarded([&] {
        need(out, "out");
        *out = new qr_pulse{ControlPulse::linear_ramp(TimeGrid(final_time, samples), start, end)};
    });
}

qr_status qr_pulse_harmonic_reference(double displacement, double final_time, size_t samples, qr_pulse **out)
{
    return guarded([&] {
        need(out, "out");
        *out = new qr_pulse{harmonic_reference_optimal_pulse(displacement, final_time, samples)};
    });
}

qr_status qr_pulse_family_shift(const qr_pulse *pulse, double alpha, qr_pulse **out)
{
    return guarded([&] {
        need(pulse, "pulse");
        need(out, "out");
        *out = new qr_pulse{optimal_family_shift(pulse->impl, alpha)};
    });
}

qr_status qr_pulse_perturbed(const qr_pulse *pulse, const double *delta, size_t length, qr_pulse **out)
{
    return guarded([&] {
        need(pulse, "pulse");
        need(delta, "delta");
        need(out, "out");
        *out = new qr_pulse{pulse->impl.perturbed(std::span<const double>(delta, length))};
    });
}

qr_status qr_pulse_copy(const qr_pulse *pulse, qr_pulse **out)
{
    return guarded([&] {
        need(pulse, "pulse");
        need(out, "out");
        *out = new qr_pulse{pulse->impl};
    });
}

void qr_pulse_free(qr_pulse *pulse) { delete pulse; }

size_t qr_pulse_size(const qr_pulse *pulse) { return pulse ? pulse->impl.size() : 0; }

double qr_pulse_final_time(const qr_pulse *pulse) { return pulse ? pulse->impl.grid().final_time() : 0.0; }

qr_status qr_pulse_values(const qr_pulse *pulse, double *out, size_t length)
{
    return guarded([&] {
        need(pulse, "pulse");
        need(out, "out");
        require(length == pulse->impl.size(), ErrorCode::shape_mismatch, "pulse values: buffer length mismatch");
        std::copy(pulse->impl.values().begin(), pulse->impl.values().end(), out);
    });
}

qr_status qr_pulse_to_json(const qr_pulse *pulse, char **out)
{
    return guarded([&] {
        need(pulse, "pulse");
        need(out, "out");
        *out = dup_string(pulse_to_json(pulse->impl));
    });
}

qr_status qr_pulse_from_json(const char *text, qr_pulse **out)
{
    return guarded([&] {
        need(text, "text");
        need(out, "out");
        *out = new qr_pulse{pulse_from_json(text)};
    });
}

qr_status qr_pulse_to_csv(const qr_pulse *pulse, char **out)
{
    return guarded([&] {
        need(pulse, "pulse");
        need(out, "out");
        *out = capture([&](std::ostream &os) { write_pulse_csv(os, pulse->impl); });
    });
}

qr_status qr_pulse_from_csv(const char *text, qr_pulse **out)
{
    return guarded([&] {
        need(text, "text");
        need(out, "out");
        std::istringstream is(text);
        *out = new qr_pulse{read_pulse_csv(is)};
    });
}

void qr_weights_default(qr_weights *weights)
{
    if (weights) {
        const ImplementabilityWeights w;
        *weights = {w.bandwidth, w.slew, w.amplitude};
    }
}

qr_status qr_pulse_implementability(const qr_pulse *pulse, const qr_weights *weights, double *out)
{
    return guarded([&] {
        need(pulse, "pulse");
        need(out, "out");
        *out = implementability_score(pulse->impl, to_weights(weights));
    });
}

qr_status qr_distortion(const qr_pulse *base, const qr_family *family, double strength, double *out, size_t length)
{
    return guarded([&] {
        need(base, "base");
        need(family, "family");
        need(out, "out");
        require(length == base->impl.size(), ErrorCode::shape_mismatch, "distortion: buffer length mismatch");
        const auto delta = generate_distortion(base->impl, to_family(*family, 0).spec);
        for (std::size_t n = 0; n < length; ++n) {
            out[n] = strength * delta[n];
        }
    });
}

void qr_krotov_config_default(qr_krotov_config *config)
{
    if (config) {
        const KrotovConfig c;
        *config = {c.step_weight, c.max_iters, c.target_infidelity, c.stall_tolerance};
    }
}

qr_status qr_krotov_optimize(const qr_problem *problem, const qr_pulse *initial, const qr_krotov_config *config,
                             qr_trace **out)
{
    return guarded([&] {
        need(problem, "problem");
        need(initial, "initial");
        need(out, "out");
        KrotovConfig c;
        if (config) {
            c = {config->step_weight, config->max_iters, config->target_infidelity, config->stall_tolerance};
        }
        *out = new qr_trace{krotov_optimize(*problem->impl, initial->impl, c)};
    });
}

void qr_trace_free(qr_trace *trace) { delete trace; }

int qr_trace_converged(const qr_trace *trace) { return trace && trace->impl.converged ? 1 : 0; }

size_t qr_trace_iterations(const qr_trace *trace) { return trace ? trace->impl.iterations : 0; }

double qr_trace_final_cost(const qr_trace *trace)
{
    return trace ? trace->impl.costs.back() : std::numeric_limits<double>::quiet_NaN();
}

qr_status qr_trace_pulse(const qr_trace *trace, qr_pulse **out)
{
    return guarded([&] {
        need(trace, "trace");
        need(out, "out");
        *out = new qr_pulse{trace->impl.pulse};
    });
}

qr_status qr_trace_to_csv(const qr_trace *trace, char **out)
{
    return guarded([&] {
        need(trace, "trace");
        need(out, "out");
        *out = capture([&](std::ostream &os) { write_trace_csv(os, trace->impl); });
    });
}

void qr_hessian_options_default(qr_hessian_options *options)
{
    if (options) {
        const HessianOptions o;
        *options = {from_backend(o.backend), o.require_optimum ? 1 : 0, o.optimum_tolerance, o.fd_step,
                    o.threads,               o.seed,                    o.probe_tolerance,   o.max_directions};
    }
}

qr_status qr_hessian_build(const qr_problem *problem, const qr_pulse *pulse, const qr_hessian_options *options,
                           qr_hessian **out)
{
    return guarded([&] {
        need(problem, "problem");
        need(pulse, "pulse");
        need(out, "out");
        HessianOptions o;
        if (options) {
            o.backend = to_backend(options->backend);
            o.require_optimum = options->require_optimum != 0;
            o.optimum_tolerance = options->optimum_tolerance;
            o.fd_step = options->fd_step;
            o.threads = options->threads;
            o.seed = options->seed;
            o.probe_tolerance = options->probe_tolerance;
            o.max_directions = options->max_directions;
        }
        *out = new qr_hessian{build_hessian(*problem->impl, pulse->impl, o)};
    });
}

void qr_hessian_free(qr_hessian *hessian) { delete hessian; }

size_t qr_hessian_size(const qr_hessian *hessian) { return hessian ? hessian->impl.size() : 0; }

qr_backend qr_hessian_backend(const qr_hessian *hessian)
{
    return hessian ? from_backend(hessian->impl.backend) : QR_BACKEND_GATEAUX;
}

qr_status qr_hessian_entries(const qr_hessian *hessian, double *out, size_t length)
{
    return guarded([&] {
        need(hessian, "hessian");
        need(out, "out");
        const auto n = hessian->impl.size();
        require(length == n * n, ErrorCode::shape_mismatch, "hessian entries: buffer length mismatch");
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t c = 0; c < n; ++c) {
                out[r * n + c] = hessian->impl.entries(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
            }
        }
    });
}

qr_status qr_hessian_quadratic_form(const qr_hessian *hessian, const double *delta, size_t length, double *out)
{
    return guarded([&] {
        need(hessian, "hessian");
        need(delta, "delta");
        need(out, "out");
        *out = quadratic_form_full(hessian->impl, std::span<const double>(delta, length));
    });
}

qr_status qr_hessian_spectrum(const qr_hessian *hessian, double rel_threshold, double *eigenvalues, size_t length,
                              size_t *rank, double *smallest_raw)
{
    return guarded([&] {
        need(hessian, "hessian");
        const auto s = eigen_spectrum(hessian->impl, rel_threshold);
        if (eigenvalues) {
            require(length == static_cast<std::size_t>(s.eigenvalues.size()), ErrorCode::shape_mismatch,
                    "spectrum: buffer length mismatch");
            std::copy(s.eigenvalues.data(), s.eigenvalues.data() + s.eigenvalues.size(), eigenvalues);
        }
        if (rank) {
            *rank = s.rank;
        }
        if (smallest_raw) {
            *smallest_raw = s.smallest_raw;
        }
    });
}

qr_status qr_hessian_rank_one(const qr_hessian *hessian, qr_rank_one *out)
{
    return guarded([&] {
        need(hessian, "hessian");
        need(out, "out");
        const auto r = rank_one_summary(hessian->impl);
        *out = {r.mean_entry, r.rank_one_value, r.largest, r.discrepancy, r.rank, r.approximation_valid ? 1 : 0};
    });
}

double qr_hessian_symmetry_error(const qr_hessian *hessian)
{
    return hessian ? symmetry_error(hessian->impl.entries) : std::numeric_limits<double>::quiet_NaN();
}

qr_status qr_hessian_compare(const qr_hessian *reference, const qr_hessian *other, double *out)
{
    return guarded([&] {
        need(reference, "reference");
        need(other, "other");
        need(out, "out");
        require(reference->impl.size() == other->impl.size(), ErrorCode::shape_mismatch,
                "hessian compare: size mismatch");
        const double scale = reference->impl.entries.cwiseAbs().maxCoeff();
        require(scale > 0.0, ErrorCode::invalid_input, "hessian compare: reference is zero");
        *out = (reference->impl.entries - other->impl.entries).cwiseAbs().maxCoeff() / scale;
    });
}

size_t qr_hessian_warning_count(const qr_hessian *hessian) { return hessian ? hessian->impl.warnings.size() : 0; }

const char *qr_hessian_warning(const qr_hessian *hessian, size_t index)
{
    if (!hessian || index >= hessian->impl.warnings.size()) {
        return nullptr;
    }
    return hessian->impl.warnings[index].c_str();
}

qr_status qr_hessian_to_json(const qr_hessian *hessian, char **out)
{
    return guarded([&] {
        need(hessian, "hessian");
        need(out, "out");
        *out = dup_string(hessian_to_json(hessian->impl));
    });
}

qr_status qr_hessian_from_json(const char *text, qr_hessian **out)
{
    return guarded([&] {
        need(text, "text");
        need(out, "out");
        *out = new qr_hessian{hessian_from_json(text)};
    });
}

qr_status qr_hessian_to_csv(const qr_hessian *hessian, char **out)
{
    return guarded([&] {
        need(hessian, "hessian");
        need(out, "out");
        *out = capture([&](std::ostream &os) { write_hessian_csv(os, hessian->impl); });
    });
}

qr_status qr_hessian_spectrum_csv(const qr_hessian *hessian, double rel_threshold, char **out)
{
    return guarded([&] {
        need(hessian, "hessian");
        need(out, "out");
        const auto s = eigen_spectrum(hessian->impl, rel_threshold);
        *out = capture([&](std::ostream &os) { write_spectrum_csv(os, s); });
    });
}

qr_status qr_hessian_spectrum_json(const qr_hessian *hessian, double rel_threshold, char **out)
{
    return guarded([&] {
        need(hessian, "hessian");
        need(out, "out");
        *out = dup_string(spectrum_to_json(eigen_spectrum(hessian->impl, rel_threshold)));
    });
}

qr_status qr_average_cost_norm(const double *lambda, size_t count, double alpha, double *out)
{
    return guarded([&] {
        need(lambda, "lambda");
        need(out, "out");
        *out = average_cost_norm(std::span<const double>(lambda, count), alpha);
    });
}

qr_status qr_invert_alpha(const double *lambda, size_t count, double target_norm, double *out)
{
    return guarded([&] {
        need(lambda, "lambda");
        need(out, "out");
        *out = invert_alpha(std::span<const double>(lambda, count), target_norm);
    });
}

qr_status qr_strengths_for_infidelity(const qr_hessian *hessian, const qr_pulse *optimum, const qr_family *family,
                                      double infidelity_min, double infidelity_max, size_t count, double *out)
{
    return guarded([&] {
        need(hessian, "hessian");
        need(optimum, "optimum");
        need(family, "family");
        need(out, "out");
        const auto s = strengths_for_infidelity(hessian->impl, optimum->impl, to_family(*family, 0).spec,
                                                infidelity_min, infidelity_max, count);
        std::copy(s.begin(), s.end(), out);
    });
}

qr_status qr_calibrate(const qr_problem *problem, const qr_pulse *optimum, const qr_hessian *hessian,
                       const qr_family *families, size_t family_count, const double *strengths, size_t strength_count,
                       qr_fit_mode mode, double max_infidelity, size_t threads, qr_fit **out)
{
    return guarded([&] {
        need(problem, "problem");
        need(optimum, "optimum");
        need(hessian, "hessian");
        need(out, "out");
        require(family_count == 0 || families != nullptr, ErrorCode::invalid_input, "families is null");
        require(strength_count == 0 || strengths != nullptr, ErrorCode::invalid_input, "strengths is null");
        require(mode == QR_FIT_FIXED_HALF || mode == QR_FIT_FREE, ErrorCode::invalid_parameter, "unknown fit mode");
        std::vector<CalibrationFamily> fams;
        for (std::size_t k = 0; k < family_count; ++k) {
            fams.push_back(to_family(families[k], k));
        }
        CalibrationOptions options;
        options.exponent = mode == QR_FIT_FREE ? FitExponent::free : FitExponent::fixed_half;
        options.max_infidelity = max_infidelity;
        options.threads = threads;
        *out = new qr_fit{calibrate(*problem->impl, optimum->impl, hessian->impl, fams,
                                    std::span<const double>(strengths, strength_count), options)};
    });
}

void qr_fit_free(qr_fit *fit) { delete fit; }

qr_status qr_fit_params(const qr_fit *fit, double *a, double *b, double *c, qr_fit_mode *mode)
{
    return guarded([&] {
        need(fit, "fit");
        if (a) {
            *a = fit->impl.a;
        }
        if (b) {
            *b = fit->impl.b;
        }
        if (c) {
            *c = fit->impl.c;
        }
        if (mode) {
            *mode = fit->impl.mode == FitExponent::free ? QR_FIT_FREE : QR_FIT_FIXED_HALF;
        }
    });
}

qr_status qr_fit_stats(const qr_fit *fit, size_t *used_samples, double *residual_rms, double *relative_rms,
                       double *mean_alpha)
{
    return guarded([&] {
        need(fit, "fit");
        if (used_samples) {
            *used_samples = fit->impl.used_samples;
        }
        if (residual_rms) {
            *residual_rms = fit->impl.residual_rms;
        }
        if (relative_rms) {
            *relative_rms = fit->impl.relative_rms;
        }
        if (mean_alpha) {
            *mean_alpha = fit->impl.mean_alpha;
        }
    });
}

double qr_fit_eval(const qr_fit *fit, double infidelity)
{
    return fit ? fit->impl(infidelity) : std::numeric_limits<double>::quiet_NaN();
}

qr_status qr_threshold_ell(const qr_fit *fit, const qr_hessian *hessian, double fidelity_target, double *out)
{
    return guarded([&] {
        need(fit, "fit");
        need(hessian, "hessian");
        need(out, "out");
        *out = threshold_ell(fit->impl, lambda_of(hessian), fidelity_target);
    });
}

qr_status qr_criterion(const qr_fit *fit, const qr_hessian *hessian, double quad_form, double target, double *out)
{
    return guarded([&] {
        need(fit, "fit");
        need(hessian, "hessian");
        need(out, "out");
        *out = criterion_I(quad_form, lambda_of(hessian), fit->impl, target);
    });
}

qr_status qr_fit_to_json(const qr_fit *fit, char **out)
{
    return guarded([&] {
        need(fit, "fit");
        need(out, "out");
        *out = dup_string(fit_to_json(fit->impl));
    });
}

qr_status qr_fit_from_json(const char *text, qr_fit **out)
{
    return guarded([&] {
        need(text, "text");
        need(out, "out");
        *out = new qr_fit{fit_from_json(text)};
    });
}

qr_status qr_fit_samples_csv(const qr_fit *fit, char **out)
{
    return guarded([&] {
        need(fit, "fit");
        need(out, "out");
        *out = capture([&](std::ostream &os) { write_calibration_csv(os, fit->impl); });
    });
}

void qr_sampler_default(qr_sampler *sampler)
{
    if (sampler) {
        const EnsembleSampler s;
        *sampler = {QR_SINGLE_FREQUENCY, s.rate_min, s.rate_max, s.harmonics, s.strength_min, s.strength_max};
    }
}

qr_status qr_ensemble_generate(const qr_pulse *optimum, const qr_hessian *hessian, const qr_fit *fit, double target,
                               const qr_sampler *sampler, size_t count, uint64_t seed, const qr_weights *weights,
                               size_t threads, qr_ensemble **out)
{
    return guarded([&] {
        need(optimum, "optimum");
        need(hessian, "hessian");
        need(fit, "fit");
        need(sampler, "sampler");
        need(out, "out");
        require(sampler->family == QR_SINGLE_FREQUENCY || sampler->family == QR_FOURIER, ErrorCode::invalid_parameter,
                "unknown sampler family");
        const EnsembleSampler s{sampler->family == QR_SINGLE_FREQUENCY ? SamplerFamily::single_frequency
                                                                       : SamplerFamily::fourier,
                                sampler->rate_min,
                                sampler->rate_max,
                                sampler->harmonics,
                                sampler->strength_min,
                                sampler->strength_max};
        EnsembleOptions options{to_weights(weights), threads};
        *out = new qr_ensemble{
            generate_ensemble(optimum->impl, hessian->impl, fit->impl, target, s, count, seed, options)};
    });
}

void qr_ensemble_free(qr_ensemble *ensemble) { delete ensemble; }

size_t qr_ensemble_draws(const qr_ensemble *ensemble) { return ensemble ? ensemble->impl.records.size() : 0; }

size_t qr_ensemble_accepted(const qr_ensemble *ensemble) { return ensemble ? ensemble->impl.accepted_count() : 0; }

qr_status qr_ensemble_accepted_draw(const qr_ensemble *ensemble, size_t rank, size_t *draw)
{
    return guarded([&] {
        need(ensemble, "ensemble");
        need(draw, "draw");
        require(rank < ensemble->impl.order.size(), ErrorCode::invalid_parameter, "ensemble: rank out of range");
        *draw = ensemble->impl.order[rank];
    });
}

qr_status qr_ensemble_record(const qr_ensemble *ensemble, size_t draw, qr_record *out)
{
    return guarded([&] {
        need(ensemble, "ensemble");
        need(out, "out");
        require(draw < ensemble->impl.records.size(), ErrorCode::invalid_parameter, "ensemble: draw out of range");
        const auto &r = ensemble->impl.records[draw];
        *out = {r.index,
                r.strength,
                r.rate,
                r.quad_form,
                r.criterion,
                r.score,
                r.accepted ? 1 : 0,
                r.exact_infidelity ? 1 : 0,
                r.exact_infidelity.value_or(std::numeric_limits<double>::quiet_NaN())};
    });
}

qr_status qr_ensemble_pulse(const qr_ensemble *ensemble, size_t draw, qr_pulse **out)
{
    return guarded([&] {
        need(ensemble, "ensemble");
        need(out, "out");
        *out = new qr_pulse{ensemble->impl.pulse(draw)};
    });
}

qr_status qr_ensemble_evaluate_exact(const qr_problem *problem, qr_ensemble *ensemble, int include_rejected,
                                     size_t threads)
{
    return guarded([&] {
        need(problem, "problem");
        need(ensemble, "ensemble");
        evaluate_exact(*problem->impl, ensemble->impl, include_rejected != 0, threads);
    });
}

qr_status qr_ensemble_verify(const qr_problem *problem, qr_ensemble *ensemble, double target, double slack,
                             size_t threads, qr_verification *out)
{
    return guarded([&] {
        need(problem, "problem");
        need(ensemble, "ensemble");
        need(out, "out");
        const auto report = verify_ensemble(*problem->impl, ensemble->impl, target, slack, threads);
        *out = {report.pass_fraction, report.passed, report.checked};
    });
}

qr_status qr_ensemble_select_best(qr_ensemble *ensemble, const qr_weights *weights)
{
    return guarded([&] {
        need(ensemble, "ensemble");
        select_best(ensemble->impl, to_weights(weights));
    });
}

qr_status qr_ensemble_to_json(const qr_ensemble *ensemble, char **out)
{
    return guarded([&] {
        need(ensemble, "ensemble");
        need(out, "out");
        *out = dup_string(ensemble_to_json(ensemble->impl));
    });
}

qr_status qr_ensemble_from_json(const char *text, qr_ensemble **out)
{
    return guarded([&] {
        need(text, "text");
        need(out, "out");
        *out = new qr_ensemble{ensemble_from_json(text)};
    });
}

qr_status qr_ensemble_manifest(const qr_ensemble *ensemble, const qr_fit *fit, char **out)
{
    return guarded([&] {
        need(ensemble, "ensemble");
        need(fit, "fit");
        need(out, "out");
        *out = dup_string(ensemble_manifest_json(ensemble->impl, fit->impl));
    });
}

qr_status qr_ensemble_to_csv(const qr_ensemble *ensemble, char **out)
{
    return guarded([&] {
        need(ensemble, "ensemble");
        need(out, "out");
        *out = capture([&](std::ostream &os) { write_ensemble_csv(os, ensemble->impl); });
    });
}

qr_status qr_ensemble_verification_csv(const qr_ensemble *ensemble, int include_rejected, char **out)
{
    return guarded([&] {
        need(ensemble, "ensemble");
        need(out, "out");
        *out = capture([&](std::ostream &os) { write_verification_csv(os, ensemble->impl, include_rejected != 0); });
    });
}

} // extern "C"
