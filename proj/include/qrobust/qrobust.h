#ifndef QROBUST_QROBUST_H
#define QROBUST_QROBUST_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define QR_API __declspec(dllexport)
#else
#define QR_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum qr_status {
    QR_OK = 0,
    QR_INVALID_GRID = 1,
    QR_INVALID_PARAMETER = 2,
    QR_SHAPE_MISMATCH = 3,
    QR_INVALID_INPUT = 4,
    QR_INVALID_DISTORTION = 5,
    QR_NOT_AT_OPTIMUM = 6,
    QR_INVALID_SPECTRUM = 7,
    QR_DEGENERATE_INVERSION = 8,
    QR_AMBIGUOUS_INVERSION = 9,
    QR_INSUFFICIENT_DATA = 10,
    QR_NO_OPTIMUM_FOUND = 11,
    QR_MONOTONICITY_VIOLATION = 12,
    QR_EMPTY_INPUT = 13,
    QR_IO_ERROR = 14,
    QR_INTERNAL = 99
} qr_status;

typedef enum qr_objective { QR_PHASE_SENSITIVE = 0, QR_OVERLAP = 1 } qr_objective;
typedef enum qr_backend { QR_BACKEND_GATEAUX = 0, QR_BACKEND_FINITE_DIFFERENCE = 1, QR_BACKEND_BFGS = 2 } qr_backend;
typedef enum qr_fit_mode { QR_FIT_FIXED_HALF = 0, QR_FIT_FREE = 1 } qr_fit_mode;
typedef enum qr_family_kind { QR_SINGLE_FREQUENCY = 0, QR_FOURIER = 1 } qr_family_kind;

typedef struct qr_problem qr_problem;
typedef struct qr_pulse qr_pulse;
typedef struct qr_trace qr_trace;
typedef struct qr_hessian qr_hessian;
typedef struct qr_fit qr_fit;
typedef struct qr_ensemble qr_ensemble;

/* Message of the last failed call on this thread ("" if none). */
QR_API const char *qr_last_error(void);
QR_API const char *qr_status_name(qr_status status);
QR_API const char *qr_version(void);
/* Releases strings returned through char ** out-parameters. */
QR_API void qr_string_free(char *text);

/* ---- problems ---- */

QR_API qr_status qr_problem_create_landau_zener(double coupling, double u_start, double u_end, qr_objective objective,
                                                qr_problem **out);
/* Transport of the trap ground state over `displacement`; overlap objective. */
QR_API qr_status qr_problem_create_harmonic(double displacement, size_t fock_dimension, qr_problem **out);
QR_API void qr_problem_free(qr_problem *problem);
QR_API qr_status qr_problem_cost(const qr_problem *problem, const qr_pulse *pulse, double *out);
QR_API qr_status qr_problem_gradient_norm(const qr_problem *problem, const qr_pulse *pulse, double *out);
/* Whether the Landau-Zener boundary states are well polarized (|u| >= 5 Omega). Always 1 for other problems. */
QR_API int qr_problem_well_polarized(const qr_problem *problem);

/* ---- pulses ---- */

QR_API qr_status qr_pulse_create(double final_time, size_t samples, const double *values, qr_pulse **out);
QR_API qr_status qr_pulse_linear_ramp(double final_time, size_t samples, double start, double end, qr_pulse **out);
QR_API qr_status qr_pulse_harmonic_reference(double displacement, double final_time, size_t samples, qr_pulse **out);
QR_API qr_status qr_pulse_family_shift(const qr_pulse *pulse, double alpha, qr_pulse **out);
/* pulse + delta; delta has the pulse length and zero endpoints. */
QR_API qr_status qr_pulse_perturbed(const qr_pulse *pulse, const double *delta, size_t length, qr_pulse **out);
QR_API qr_status qr_pulse_copy(const qr_pulse *pulse, qr_pulse **out);
QR_API void qr_pulse_free(qr_pulse *pulse);
QR_API size_t qr_pulse_size(const qr_pulse *pulse);
QR_API double qr_pulse_final_time(const qr_pulse *pulse);
QR_API qr_status qr_pulse_values(const qr_pulse *pulse, double *out, size_t length);
QR_API qr_status qr_pulse_to_json(const qr_pulse *pulse, char **out);
QR_API qr_status qr_pulse_from_json(const char *text, qr_pulse **out);
QR_API qr_status qr_pulse_to_csv(const qr_pulse *pulse, char **out);
QR_API qr_status qr_pulse_from_csv(const char *text, qr_pulse **out);

typedef struct qr_weights {
    double bandwidth;
    double slew;
    double amplitude;
} qr_weights;

QR_API void qr_weights_default(qr_weights *weights);
QR_API qr_status qr_pulse_implementability(const qr_pulse *pulse, const qr_weights *weights, double *out);

/* Distortion family at unit strength. For QR_FOURIER the amplitudes are either given
   (amplitudes != NULL, `harmonics` entries) or drawn uniformly from [-1, 1] with `seed`. */
typedef struct qr_family {
    qr_family_kind kind;
    int rate;
    size_t harmonics;
    const double *amplitudes;
    uint64_t seed;
    const char *label;
} qr_family;

/* Writes strength * (unit distortion of the family) into out (pulse length). */
QR_API qr_status qr_distortion(const qr_pulse *base, const qr_family *family, double strength, double *out,
                               size_t length);

/* ---- optimizer ---- */

typedef struct qr_krotov_config {
    double step_weight;
    size_t max_iters;
    double target_infidelity;
    double stall_tolerance;
} qr_krotov_config;

QR_API void qr_krotov_config_default(qr_krotov_config *config);
/* On QR_OK the trace may still be unconverged; check qr_trace_converged. */
QR_API qr_status qr_krotov_optimize(const qr_problem *problem, const qr_pulse *initial, const qr_krotov_config *config,
                                    qr_trace **out);
QR_API void qr_trace_free(qr_trace *trace);
QR_API int qr_trace_converged(const qr_trace *trace);
QR_API size_t qr_trace_iterations(const qr_trace *trace);
QR_API double qr_trace_final_cost(const qr_trace *trace);
QR_API qr_status qr_trace_pulse(const qr_trace *trace, qr_pulse **out);
QR_API qr_status qr_trace_to_csv(const qr_trace *trace, char **out);

/* ---- Hessian ---- */

typedef struct qr_hessian_options {
    qr_backend backend;
    int require_optimum;
    double optimum_tolerance;
    double fd_step; /* 0: 1e-3 max(1, |u|_inf) */
    size_t threads;
    uint64_t seed;
    double probe_tolerance;
    size_t max_directions; /* 0: 2 (N - 2) */
} qr_hessian_options;

typedef struct qr_rank_one {
    double mean_entry;
    double rank_one_value;
    double largest;
    double discrepancy;
    size_t rank;
    int approximation_valid;
} qr_rank_one;

QR_API void qr_hessian_options_default(qr_hessian_options *options);
QR_API qr_status qr_hessian_build(const qr_problem *problem, const qr_pulse *pulse, const qr_hessian_options *options,
                                  qr_hessian **out);
QR_API void qr_hessian_free(qr_hessian *hessian);
QR_API size_t qr_hessian_size(const qr_hessian *hessian);
QR_API qr_backend qr_hessian_backend(const qr_hessian *hessian);
/* Row-major (N-2) x (N-2). */
QR_API qr_status qr_hessian_entries(const qr_hessian *hessian, double *out, size_t length);
/* du H du^T for a full-length distortion with zero endpoints. */
QR_API qr_status qr_hessian_quadratic_form(const qr_hessian *hessian, const double *delta, size_t length, double *out);
/* Eigenvalues (descending, clamped at 0) and the count above rel_threshold * largest. */
QR_API qr_status qr_hessian_spectrum(const qr_hessian *hessian, double rel_threshold, double *eigenvalues,
                                     size_t length, size_t *rank, double *smallest_raw);
QR_API qr_status qr_hessian_rank_one(const qr_hessian *hessian, qr_rank_one *out);
QR_API double qr_hessian_symmetry_error(const qr_hessian *hessian);
/* max |A - B| / max |A| entrywise. */
QR_API qr_status qr_hessian_compare(const qr_hessian *reference, const qr_hessian *other, double *out);
QR_API size_t qr_hessian_warning_count(const qr_hessian *hessian);
QR_API const char *qr_hessian_warning(const qr_hessian *hessian, size_t index);
QR_API qr_status qr_hessian_to_json(const qr_hessian *hessian, char **out);
QR_API qr_status qr_hessian_from_json(const char *text, qr_hessian **out);
QR_API qr_status qr_hessian_to_csv(const qr_hessian *hessian, char **out);
QR_API qr_status qr_hessian_spectrum_csv(const qr_hessian *hessian, double rel_threshold, char **out);
QR_API qr_status qr_hessian_spectrum_json(const qr_hessian *hessian, double rel_threshold, char **out);

/* ---- tolerance ---- */

QR_API qr_status qr_average_cost_norm(const double *lambda, size_t count, double alpha, double *out);
QR_API qr_status qr_invert_alpha(const double *lambda, size_t count, double target_norm, double *out);

QR_API qr_status qr_strengths_for_infidelity(const qr_hessian *hessian, const qr_pulse *optimum,
                                             const qr_family *family, double infidelity_min, double infidelity_max,
                                             size_t count, double *out);
QR_API qr_status qr_calibrate(const qr_problem *problem, const qr_pulse *optimum, const qr_hessian *hessian,
                              const qr_family *families, size_t family_count, const double *strengths,
                              size_t strength_count, qr_fit_mode mode, double max_infidelity, size_t threads,
                              qr_fit **out);
QR_API void qr_fit_free(qr_fit *fit);
QR_API qr_status qr_fit_params(const qr_fit *fit, double *a, double *b, double *c, qr_fit_mode *mode);
QR_API qr_status qr_fit_stats(const qr_fit *fit, size_t *used_samples, double *residual_rms, double *relative_rms,
                              double *mean_alpha);
QR_API double qr_fit_eval(const qr_fit *fit, double infidelity);
QR_API qr_status qr_threshold_ell(const qr_fit *fit, const qr_hessian *hessian, double fidelity_target, double *out);
QR_API qr_status qr_criterion(const qr_fit *fit, const qr_hessian *hessian, double quad_form, double target,
                              double *out);
QR_API qr_status qr_fit_to_json(const qr_fit *fit, char **out);
QR_API qr_status qr_fit_from_json(const char *text, qr_fit **out);
QR_API qr_status qr_fit_samples_csv(const qr_fit *fit, char **out);

/* ---- ensemble ---- */

typedef struct qr_sampler {
    qr_family_kind family;
    int rate_min;
    int rate_max;
    size_t harmonics;
    double strength_min;
    double strength_max;
} qr_sampler;

typedef struct qr_record {
    size_t draw;
    double strength;
    int rate;
    double quad_form;
    double criterion;
    double score;
    int accepted;
    int has_exact;
    double exact_infidelity;
} qr_record;

typedef struct qr_verification {
    double pass_fraction;
    size_t passed;
    size_t checked;
} qr_verification;

QR_API void qr_sampler_default(qr_sampler *sampler);
QR_API qr_status qr_ensemble_generate(const qr_pulse *optimum, const qr_hessian *hessian, const qr_fit *fit,
                                      double target, const qr_sampler *sampler, size_t count, uint64_t seed,
                                      const qr_weights *weights, size_t threads, qr_ensemble **out);
QR_API void qr_ensemble_free(qr_ensemble *ensemble);
QR_API size_t qr_ensemble_draws(const qr_ensemble *ensemble);
QR_API size_t qr_ensemble_accepted(const qr_ensemble *ensemble);
/* Draw index of the accepted pulse at `rank` in the current ordering. */
QR_API qr_status qr_ensemble_accepted_draw(const qr_ensemble *ensemble, size_t rank, size_t *draw);
QR_API qr_status qr_ensemble_record(const qr_ensemble *ensemble, size_t draw, qr_record *out);
QR_API qr_status qr_ensemble_pulse(const qr_ensemble *ensemble, size_t draw, qr_pulse **out);
QR_API qr_status qr_ensemble_evaluate_exact(const qr_problem *problem, qr_ensemble *ensemble, int include_rejected,
                                            size_t threads);
QR_API qr_status qr_ensemble_verify(const qr_problem *problem, qr_ensemble *ensemble, double target, double slack,
                                    size_t threads, qr_verification *out);
QR_API qr_status qr_ensemble_select_best(qr_ensemble *ensemble, const qr_weights *weights);
QR_API qr_status qr_ensemble_to_json(const qr_ensemble *ensemble, char **out);
QR_API qr_status qr_ensemble_from_json(const char *text, qr_ensemble **out);
QR_API qr_status qr_ensemble_manifest(const qr_ensemble *ensemble, const qr_fit *fit, char **out);
QR_API qr_status qr_ensemble_to_csv(const qr_ensemble *ensemble, char **out);
QR_API qr_status qr_ensemble_verification_csv(const qr_ensemble *ensemble, int include_rejected, char **out);

#ifdef __cplusplus
}
#endif

#endif
