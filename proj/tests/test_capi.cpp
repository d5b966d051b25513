#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <numbers>
#include <string>
#include <thread>
#include <vector>

#include "qrobust/qrobust.h"

namespace {

std::string take(char *text)
{
    REQUIRE(text != nullptr);
    std::string s(text);
    qr_string_free(text);
    return s;
}

qr_pulse *reference_pulse()
{
    qr_pulse *p = nullptr;
    REQUIRE(qr_pulse_harmonic_reference(5.0, 4.0 * std::numbers::pi, 64, &p) == QR_OK);
    return p;
}

} // namespace

TEST_CASE("status names and error messages")
{
    CHECK(std::string(qr_status_name(QR_OK)) == "ok");
    CHECK(std::string(qr_status_name(QR_INVALID_GRID)) == "invalid_grid");
    CHECK(std::string(qr_status_name(QR_EMPTY_INPUT)) == "empty_input");
    CHECK(std::strlen(qr_version()) > 0);

    qr_pulse *p = nullptr;
    CHECK(qr_pulse_linear_ramp(1.0, 2, 0.0, 1.0, &p) == QR_INVALID_GRID);
    CHECK(p == nullptr);
    CHECK(std::strlen(qr_last_error()) > 0);
    CHECK(qr_pulse_linear_ramp(1.0, 8, 0.0, 1.0, &p) == QR_OK);
    CHECK(std::string(qr_last_error()).empty());

    // errors are per thread
    std::string other;
    std::thread t([&] {
        qr_pulse *q = nullptr;
        qr_pulse_linear_ramp(-1.0, 8, 0.0, 1.0, &q);
        other = qr_last_error();
    });
    t.join();
    CHECK(!other.empty());
    CHECK(std::string(qr_last_error()).empty());
    qr_pulse_free(p);
}

TEST_CASE("null handles are rejected")
{
    qr_pulse *p = nullptr;
    double v = 0.0;
    CHECK(qr_pulse_linear_ramp(1.0, 8, 0.0, 1.0, nullptr) == QR_INVALID_INPUT);
    CHECK(qr_problem_cost(nullptr, nullptr, &v) == QR_INVALID_INPUT);
    CHECK(qr_pulse_create(1.0, 8, nullptr, &p) == QR_INVALID_INPUT);
    CHECK(qr_pulse_from_json(nullptr, &p) == QR_INVALID_INPUT);
    CHECK(qr_average_cost_norm(nullptr, 1, 0.1, &v) == QR_INVALID_INPUT);
    qr_pulse_free(nullptr);
    qr_problem_free(nullptr);
    qr_hessian_free(nullptr);
    qr_fit_free(nullptr);
    qr_ensemble_free(nullptr);
    qr_trace_free(nullptr);
    qr_string_free(nullptr);
}

TEST_CASE("pulses through the C interface")
{
    const double values[] = {0.0, 0.5, 1.5, 2.0, 3.0};
    qr_pulse *p = nullptr;
    REQUIRE(qr_pulse_create(2.0, 5, values, &p) == QR_OK);
    CHECK(qr_pulse_size(p) == 5);
    CHECK(qr_pulse_final_time(p) == 2.0);
    double out[5];
    CHECK(qr_pulse_values(p, out, 4) == QR_SHAPE_MISMATCH);
    REQUIRE(qr_pulse_values(p, out, 5) == QR_OK);
    CHECK(std::memcmp(out, values, sizeof values) == 0);

    char *text = nullptr;
    REQUIRE(qr_pulse_to_json(p, &text) == QR_OK);
    qr_pulse *back = nullptr;
    REQUIRE(qr_pulse_from_json(text, &back) == QR_OK);
    qr_string_free(text);
    REQUIRE(qr_pulse_values(back, out, 5) == QR_OK);
    CHECK(std::memcmp(out, values, sizeof values) == 0);
    qr_pulse_free(back);

    REQUIRE(qr_pulse_to_csv(p, &text) == QR_OK);
    const std::string csv = take(text);
    CHECK(csv.rfind("t,u\n", 0) == 0);
    REQUIRE(qr_pulse_from_csv(csv.c_str(), &back) == QR_OK);
    CHECK(qr_pulse_size(back) == 5);
    qr_pulse_free(back);
    CHECK(qr_pulse_from_csv("x,y\n", &back) == QR_IO_ERROR);
    CHECK(qr_pulse_from_json("{", &back) == QR_IO_ERROR);

    const double bad_delta[] = {0.1, 0.0, 0.0, 0.0, 0.0};
    CHECK(qr_pulse_perturbed(p, bad_delta, 5, &back) == QR_INVALID_DISTORTION);
    CHECK(qr_pulse_perturbed(p, bad_delta, 4, &back) == QR_SHAPE_MISMATCH);

    qr_weights w;
    qr_weights_default(&w);
    double score = -1.0;
    CHECK(qr_pulse_implementability(p, &w, &score) == QR_OK);
    CHECK(score >= 0.0);
    qr_pulse_free(p);
}

TEST_CASE("distortion families")
{
    qr_pulse *p = reference_pulse();
    std::vector<double> d(qr_pulse_size(p));
    qr_family single{QR_SINGLE_FREQUENCY, 1, 0, nullptr, 0, "k1"};
    REQUIRE(qr_distortion(p, &single, 0.2, d.data(), d.size()) == QR_OK);
    CHECK(d.front() == 0.0);
    CHECK(d.back() == 0.0);

    const double amps[] = {1.0, 0.0, -0.5};
    qr_family given{QR_FOURIER, 0, 3, amps, 0, "given"};
    REQUIRE(qr_distortion(p, &given, 2.0, d.data(), d.size()) == QR_OK);
    const double t = 4.0 * std::numbers::pi * 10.0 / 63.0;
    const double expect = 2.0 * (std::sin(std::numbers::pi * t / (4.0 * std::numbers::pi)) -
                                 0.5 * std::sin(3.0 * std::numbers::pi * t / (4.0 * std::numbers::pi)));
    CHECK(d[10] == doctest::Approx(expect).epsilon(1e-12));

    qr_family seeded{QR_FOURIER, 0, 5, nullptr, 7, "seeded"};
    std::vector<double> d2(d.size());
    REQUIRE(qr_distortion(p, &seeded, 1.0, d.data(), d.size()) == QR_OK);
    REQUIRE(qr_distortion(p, &seeded, 1.0, d2.data(), d2.size()) == QR_OK);
    CHECK(d == d2);
    CHECK(qr_distortion(p, &seeded, 1.0, d.data(), d.size() - 1) == QR_SHAPE_MISMATCH);
    qr_pulse_free(p);
}

TEST_CASE("Landau-Zener optimization through the C interface")
{
    qr_problem *lz = nullptr;
    REQUIRE(qr_problem_create_landau_zener(1.0, -10.0, 10.0, QR_PHASE_SENSITIVE, &lz) == QR_OK);
    CHECK(qr_problem_well_polarized(lz) == 1);
    qr_pulse *ramp = nullptr;
    REQUIRE(qr_pulse_linear_ramp(10.0, 48, -10.0, 10.0, &ramp) == QR_OK);
    double before = 0.0;
    REQUIRE(qr_problem_cost(lz, ramp, &before) == QR_OK);

    qr_krotov_config cfg;
    qr_krotov_config_default(&cfg);
    cfg.target_infidelity = 1e-12;
    qr_trace *trace = nullptr;
    REQUIRE(qr_krotov_optimize(lz, ramp, &cfg, &trace) == QR_OK);
    CHECK(qr_trace_converged(trace) == 1);
    CHECK(qr_trace_final_cost(trace) <= 1e-12);
    CHECK(qr_trace_final_cost(trace) < before);
    CHECK(qr_trace_iterations(trace) >= 1);
    const std::string csv = take([&] {
        char *t = nullptr;
        REQUIRE(qr_trace_to_csv(trace, &t) == QR_OK);
        return t;
    }());
    CHECK(csv.find('\n') != std::string::npos);

    qr_pulse *opt = nullptr;
    REQUIRE(qr_trace_pulse(trace, &opt) == QR_OK);
    double g = 1.0;
    REQUIRE(qr_problem_gradient_norm(lz, opt, &g) == QR_OK);
    CHECK(g <= 1e-5);

    qr_hessian_options ho;
    qr_hessian_options_default(&ho);
    qr_hessian *h = nullptr;
    CHECK(qr_hessian_build(lz, ramp, &ho, &h) == QR_NOT_AT_OPTIMUM);
    CHECK(h == nullptr);

    cfg.step_weight = -1.0;
    qr_trace *bad = nullptr;
    CHECK(qr_krotov_optimize(lz, ramp, &cfg, &bad) == QR_INVALID_PARAMETER);

    qr_problem *weak = nullptr;
    REQUIRE(qr_problem_create_landau_zener(1.0, -2.0, 2.0, QR_OVERLAP, &weak) == QR_OK);
    CHECK(qr_problem_well_polarized(weak) == 0);

    qr_problem_free(weak);
    qr_pulse_free(opt);
    qr_trace_free(trace);
    qr_pulse_free(ramp);
    qr_problem_free(lz);
}

TEST_CASE("tolerance algebra through the C interface")
{
    const double lambda[] = {2.0};
    double norm = 0.0;
    REQUIRE(qr_average_cost_norm(lambda, 1, 0.1, &norm) == QR_OK);
    CHECK(norm == doctest::Approx(std::sqrt(0.00025 * std::numbers::pi)).epsilon(1e-14));
    double alpha = 0.0;
    REQUIRE(qr_invert_alpha(lambda, 1, norm, &alpha) == QR_OK);
    CHECK(alpha == doctest::Approx(0.1).epsilon(1e-13));
    const double four[] = {1.0, 2.0, 3.0, 4.0};
    CHECK(qr_invert_alpha(four, 4, 0.1, &alpha) == QR_DEGENERATE_INVERSION);
    const double negative[] = {1.0, -1.0};
    CHECK(qr_average_cost_norm(negative, 2, 0.1, &norm) == QR_INVALID_SPECTRUM);
}

TEST_CASE("harmonic pipeline through the C interface")
{
    qr_problem *problem = nullptr;
    REQUIRE(qr_problem_create_harmonic(5.0, 64, &problem) == QR_OK);
    qr_pulse *opt = reference_pulse();
    double cost = 1.0;
    REQUIRE(qr_problem_cost(problem, opt, &cost) == QR_OK);
    CHECK(cost <= 1e-10);

    qr_hessian_options ho;
    qr_hessian_options_default(&ho);
    qr_hessian *h = nullptr;
    REQUIRE(qr_hessian_build(problem, opt, &ho, &h) == QR_OK);
    CHECK(qr_hessian_backend(h) == QR_BACKEND_GATEAUX);
    const std::size_t n = qr_hessian_size(h);
    CHECK(n == 62);
    std::vector<double> entries(n * n);
    REQUIRE(qr_hessian_entries(h, entries.data(), entries.size()) == QR_OK);
    CHECK(qr_hessian_entries(h, entries.data(), entries.size() - 1) == QR_SHAPE_MISMATCH);
    CHECK(qr_hessian_symmetry_error(h) <= 1e-8);
    std::vector<double> eig(n);
    std::size_t rank = 0;
    double smallest = 0.0;
    REQUIRE(qr_hessian_spectrum(h, 1e-8, eig.data(), eig.size(), &rank, &smallest) == QR_OK);
    CHECK(rank >= 1);
    CHECK(rank <= 2);
    CHECK(smallest >= -1e-8 * eig[0]);
    qr_rank_one r1;
    REQUIRE(qr_hessian_rank_one(h, &r1) == QR_OK);
    CHECK(r1.rank == rank);

    ho.backend = QR_BACKEND_FINITE_DIFFERENCE;
    qr_hessian *hf = nullptr;
    REQUIRE(qr_hessian_build(problem, opt, &ho, &hf) == QR_OK);
    double diff = 1.0;
    REQUIRE(qr_hessian_compare(h, hf, &diff) == QR_OK);
    CHECK(diff <= 1e-4);
    qr_hessian_free(hf);

    const std::string hjson = take([&] {
        char *t = nullptr;
        REQUIRE(qr_hessian_to_json(h, &t) == QR_OK);
        return t;
    }());
    qr_hessian *h2 = nullptr;
    REQUIRE(qr_hessian_from_json(hjson.c_str(), &h2) == QR_OK);
    REQUIRE(qr_hessian_compare(h, h2, &diff) == QR_OK);
    CHECK(diff == 0.0);
    qr_hessian_free(h2);

    qr_family families[] = {{QR_SINGLE_FREQUENCY, 1, 0, nullptr, 0, "single_k1"},
                            {QR_FOURIER, 0, 5, nullptr, 7, "fourier5"}};
    std::vector<double> strengths(12);
    REQUIRE(qr_strengths_for_infidelity(h, opt, &families[0], 1e-4, 0.2, strengths.size(), strengths.data()) ==
            QR_OK);
    qr_fit *fit = nullptr;
    REQUIRE(qr_calibrate(problem, opt, h, families, 2, strengths.data(), strengths.size(), QR_FIT_FIXED_HALF, 0.2, 1,
                         &fit) == QR_OK);
    double a = 0, b = 0, c = 0;
    qr_fit_mode mode = QR_FIT_FREE;
    REQUIRE(qr_fit_params(fit, &a, &b, &c, &mode) == QR_OK);
    CHECK(mode == QR_FIT_FIXED_HALF);
    CHECK(c == 0.5);
    CHECK(qr_fit_eval(fit, 0.01) == doctest::Approx(a * 0.01 + b * 0.1));
    std::size_t used = 0;
    double rms = 0, rel = 0, mean = 0;
    REQUIRE(qr_fit_stats(fit, &used, &rms, &rel, &mean) == QR_OK);
    CHECK(used >= 5);
    double ell90 = 0, ell99 = 0;
    REQUIRE(qr_threshold_ell(fit, h, 0.9, &ell90) == QR_OK);
    REQUIRE(qr_threshold_ell(fit, h, 0.99, &ell99) == QR_OK);
    CHECK(ell90 > ell99);
    double crit = 0.0;
    REQUIRE(qr_criterion(fit, h, ell99, 0.01, &crit) == QR_OK);
    CHECK(crit == doctest::Approx(0.01).epsilon(1e-12));
    CHECK(qr_threshold_ell(fit, h, 1.0, &ell99) == QR_INVALID_PARAMETER);

    const std::vector<double> zeros(6, 0.0);
    qr_fit *empty_fit = nullptr;
    CHECK(qr_calibrate(problem, opt, h, families, 1, zeros.data(), zeros.size(), QR_FIT_FIXED_HALF, 0.2, 1,
                       &empty_fit) == QR_INSUFFICIENT_DATA);

    qr_sampler sampler;
    qr_sampler_default(&sampler);
    sampler.strength_max = 0.08;
    qr_weights w;
    qr_weights_default(&w);
    qr_ensemble *e = nullptr;
    REQUIRE(qr_ensemble_generate(opt, h, fit, 0.01, &sampler, 60, 3, &w, 1, &e) == QR_OK);
    CHECK(qr_ensemble_draws(e) == 60);
    const std::size_t accepted = qr_ensemble_accepted(e);
    REQUIRE(accepted > 0);
    REQUIRE(qr_ensemble_select_best(e, &w) == QR_OK);
    qr_verification report;
    REQUIRE(qr_ensemble_verify(problem, e, 0.01, 0.25, 1, &report) == QR_OK);
    CHECK(report.checked == accepted);
    CHECK(report.pass_fraction >= 0.9);
    std::size_t draw = 0;
    REQUIRE(qr_ensemble_accepted_draw(e, 0, &draw) == QR_OK);
    CHECK(qr_ensemble_accepted_draw(e, accepted, &draw) == QR_INVALID_PARAMETER);
    qr_record rec;
    REQUIRE(qr_ensemble_record(e, draw, &rec) == QR_OK);
    CHECK(rec.accepted == 1);
    CHECK(rec.has_exact == 1);
    CHECK(rec.criterion <= 0.01);
    qr_pulse *member = nullptr;
    REQUIRE(qr_ensemble_pulse(e, draw, &member) == QR_OK);
    double member_cost = 0.0;
    REQUIRE(qr_problem_cost(problem, member, &member_cost) == QR_OK);
    CHECK(member_cost == rec.exact_infidelity);
    qr_pulse_free(member);

    const std::string ejson = take([&] {
        char *t = nullptr;
        REQUIRE(qr_ensemble_to_json(e, &t) == QR_OK);
        return t;
    }());
    qr_ensemble *e2 = nullptr;
    REQUIRE(qr_ensemble_from_json(ejson.c_str(), &e2) == QR_OK);
    CHECK(qr_ensemble_accepted(e2) == accepted);
    const std::string v1 = take([&] {
        char *t = nullptr;
        REQUIRE(qr_ensemble_verification_csv(e, 0, &t) == QR_OK);
        return t;
    }());
    const std::string v2 = take([&] {
        char *t = nullptr;
        REQUIRE(qr_ensemble_verification_csv(e2, 0, &t) == QR_OK);
        return t;
    }());
    CHECK(v1 == v2);
    const std::string manifest = take([&] {
        char *t = nullptr;
        REQUIRE(qr_ensemble_manifest(e, fit, &t) == QR_OK);
        return t;
    }());
    CHECK(manifest.find("\"seed\"") != std::string::npos);
    qr_ensemble_free(e2);
    qr_ensemble_free(e);

    sampler.strength_min = 50.0;
    sampler.strength_max = 60.0;
    REQUIRE(qr_ensemble_generate(opt, h, fit, 0.01, &sampler, 5, 3, &w, 1, &e) == QR_OK);
    CHECK(qr_ensemble_accepted(e) == 0);
    CHECK(qr_ensemble_verify(problem, e, 0.01, 0.25, 1, &report) == QR_EMPTY_INPUT);
    qr_ensemble_free(e);

    qr_fit_free(fit);
    qr_hessian_free(h);
    qr_pulse_free(opt);
    qr_problem_free(problem);
}
