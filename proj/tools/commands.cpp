#include "commands.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <set>
#include <vector>

#include "artifacts.hpp"
#include "handles.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace qrcli {

namespace {

constexpr double kAgreementTolerance = 1e-4;
constexpr double kVerifyPassFraction = 0.9;

fs::path command_dir(const RunConfig &c, const std::string &name) { return fs::path(c.output_dir) / name; }

fs::path input_path(const RunConfig &c, const std::string &command, const std::string &file)
{
    const fs::path path = command_dir(c, command) / file;
    if (!fs::is_regular_file(path)) {
        throw ConfigError("missing input " + path.string() + "; run `" + command +
                          "` first with the same --config/--out");
    }
    return path;
}

json parse_json(const std::string &text) { return json::parse(text); }

Problem make_problem(const RunConfig &c)
{
    qr_problem *p = nullptr;
    if (c.model == "harmonic") {
        check(qr_problem_create_harmonic(c.displacement, c.fock_dimension, &p), "harmonic problem");
    } else {
        check(qr_problem_create_landau_zener(c.coupling, c.u_start, c.u_end, c.objective, &p), "landau-zener problem");
    }
    return Problem(p);
}

double cost_of(const qr_problem *problem, const qr_pulse *pulse)
{
    double v = 0.0;
    check(qr_problem_cost(problem, pulse, &v), "cost");
    return v;
}

double gradient_norm_of(const qr_problem *problem, const qr_pulse *pulse)
{
    double v = 0.0;
    check(qr_problem_gradient_norm(problem, pulse, &v), "gradient norm");
    return v;
}

struct OptimumRun {
    Pulse pulse;
    Trace trace;
    json summary;
    bool ok = false;
};

OptimumRun find_optimum(const RunConfig &c, const qr_problem *problem)
{
    OptimumRun run;
    qr_pulse *p = nullptr;
    if (c.model == "harmonic") {
        check(qr_pulse_harmonic_reference(c.displacement, c.final_time, c.samples, &p), "reference optimum");
        run.pulse.reset(p);
        run.summary["method"] = "reference";
    } else {
        qr_pulse *ramp = nullptr;
        check(qr_pulse_linear_ramp(c.final_time, c.samples, c.u_start, c.u_end, &ramp), "initial ramp");
        Pulse initial(ramp);
        qr_trace *t = nullptr;
        check(qr_krotov_optimize(problem, initial.get(), &c.optimizer, &t), "krotov");
        run.trace.reset(t);
        check(qr_trace_pulse(t, &p), "trace pulse");
        run.pulse.reset(p);
        run.summary["method"] = "krotov";
        run.summary["iterations"] = qr_trace_iterations(t);
        run.summary["converged"] = qr_trace_converged(t) != 0;
    }
    const double infidelity = cost_of(problem, run.pulse.get());
    const double grad = gradient_norm_of(problem, run.pulse.get());
    run.summary["infidelity"] = infidelity;
    run.summary["gradient_norm"] = grad;
    run.ok = (run.trace && qr_trace_converged(run.trace.get())) || grad <= c.optimum_tolerance;
    run.summary["at_optimum"] = grad <= c.optimum_tolerance;
    return run;
}

qr_hessian_options hessian_options(const RunConfig &c, qr_backend backend)
{
    qr_hessian_options o;
    qr_hessian_options_default(&o);
    o.backend = backend;
    o.require_optimum = 1;
    o.optimum_tolerance = c.optimum_tolerance;
    o.fd_step = c.fd_step;
    o.threads = c.threads;
    o.seed = c.seed;
    o.probe_tolerance = c.probe_tolerance;
    o.max_directions = c.max_directions;
    return o;
}

Hessian build_hessian(const RunConfig &c, const qr_problem *problem, const qr_pulse *pulse, qr_backend backend)
{
    const auto options = hessian_options(c, backend);
    qr_hessian *h = nullptr;
    check(qr_hessian_build(problem, pulse, &options, &h), "hessian");
    return Hessian(h);
}

std::vector<qr_family> families_of(const RunConfig &c)
{
    std::vector<qr_family> out;
    for (const auto &f : c.families) {
        out.push_back(qr_family{f.kind, f.rate, f.harmonics, f.amplitudes.empty() ? nullptr : f.amplitudes.data(),
                                f.seed, f.label.c_str()});
    }
    return out;
}

std::vector<double> calibration_strengths(const RunConfig &c, const qr_hessian *h, const qr_pulse *optimum)
{
    if (!c.strengths.empty()) {
        return c.strengths;
    }
    std::set<double> merged;
    for (const auto &f : families_of(c)) {
        std::vector<double> s(c.schedule_points);
        check(qr_strengths_for_infidelity(h, optimum, &f, c.schedule_min, c.schedule_max, s.size(), s.data()),
              "strength schedule");
        merged.insert(s.begin(), s.end());
    }
    return {merged.begin(), merged.end()};
}

Fit calibrate(const RunConfig &c, const qr_problem *problem, const qr_pulse *optimum, const qr_hessian *h)
{
    const auto families = families_of(c);
    const auto strengths = calibration_strengths(c, h, optimum);
    qr_fit *f = nullptr;
    check(qr_calibrate(problem, optimum, h, families.data(), families.size(), strengths.data(), strengths.size(),
                       c.fit_mode, c.max_infidelity, c.threads, &f),
          "calibration");
    return Fit(f);
}

json fit_summary(const qr_fit *fit)
{
    double a = 0, b = 0, cc = 0, rms = 0, rel = 0, mean_alpha = 0;
    qr_fit_mode mode{};
    std::size_t used = 0;
    check(qr_fit_params(fit, &a, &b, &cc, &mode), "fit params");
    check(qr_fit_stats(fit, &used, &rms, &rel, &mean_alpha), "fit stats");
    return {{"a", a},
            {"b", b},
            {"c", cc},
            {"mode", mode == QR_FIT_FREE ? "free" : "fixed_half"},
            {"form", mode == QR_FIT_FREE ? "alpha = a(1-F) + b(1-F)^c" : "alpha = a(1-F) + b(1-F)^(1/2)"},
            {"used_samples", used},
            {"residual_rms", rms},
            {"relative_rms", rel},
            {"mean_alpha", mean_alpha}};
}

Ensemble generate(const RunConfig &c, const qr_pulse *optimum, const qr_hessian *h, const qr_fit *fit,
                  std::size_t count)
{
    qr_ensemble *e = nullptr;
    check(qr_ensemble_generate(optimum, h, fit, c.target_infidelity, &c.sampler, count, c.seed, &c.weights, c.threads,
                               &e),
          "ensemble");
    return Ensemble(e);
}

Pulse load_pulse(const RunConfig &c)
{
    qr_pulse *p = nullptr;
    check(qr_pulse_from_json(read_file(input_path(c, "optimize", "pulse.json")).c_str(), &p), "reading pulse");
    return Pulse(p);
}

Hessian load_hessian(const RunConfig &c)
{
    qr_hessian *h = nullptr;
    check(qr_hessian_from_json(read_file(input_path(c, "hessian", "hessian.json")).c_str(), &h), "reading hessian");
    return Hessian(h);
}

Fit load_fit(const RunConfig &c)
{
    qr_fit *f = nullptr;
    check(qr_fit_from_json(read_file(input_path(c, "calibrate", "fit.json")).c_str(), &f), "reading fit");
    return Fit(f);
}

json base_manifest(const RunConfig &c, const std::string &command)
{
    return {{"command", command}, {"version", qr_version()}, {"config", config_to_json(c)}};
}

std::string dump(const json &j) { return j.dump(2) + "\n"; }

std::string spectrum_json(const qr_hessian *h, double rel)
{
    char *s = nullptr;
    check(qr_hessian_spectrum_json(h, rel, &s), "spectrum json");
    return take(s);
}

} // namespace

int exit_code_for(qr_status status)
{
    switch (status) {
    case QR_OK:
        return 0;
    case QR_INVALID_GRID:
    case QR_INVALID_PARAMETER:
    case QR_SHAPE_MISMATCH:
    case QR_INVALID_INPUT:
    case QR_INVALID_DISTORTION:
    case QR_IO_ERROR:
        return 1;
    default:
        return 2;
    }
}

int cmd_optimize(const RunConfig &c)
{
    auto problem = make_problem(c);
    auto run = find_optimum(c, problem.get());
    StagedDir out(command_dir(c, "optimize"));
    char *s = nullptr;
    check(qr_pulse_to_json(run.pulse.get(), &s), "pulse json");
    out.write("pulse.json", take(s));
    check(qr_pulse_to_csv(run.pulse.get(), &s), "pulse csv");
    out.write("pulse.csv", take(s));
    if (run.trace) {
        check(qr_trace_to_csv(run.trace.get(), &s), "trace csv");
        out.write("trace.csv", take(s));
    }
    auto manifest = base_manifest(c, "optimize");
    manifest["result"] = run.summary;
    manifest["success"] = run.ok;
    out.write("manifest.json", dump(manifest));
    out.commit();
    if (!run.ok) {
        std::cerr << "optimize: optimizer did not converge (infidelity " << fmt(run.summary["infidelity"].get<double>())
                  << ", gradient norm " << fmt(run.summary["gradient_norm"].get<double>()) << ")\n";
        return 2;
    }
    return 0;
}

int cmd_hessian(const RunConfig &c)
{
    auto pulse = load_pulse(c);
    auto problem = make_problem(c);
    auto h = build_hessian(c, problem.get(), pulse.get(), c.backend);

    StagedDir out(command_dir(c, "hessian"));
    char *s = nullptr;
    check(qr_hessian_to_json(h.get(), &s), "hessian json");
    out.write("hessian.json", take(s));
    check(qr_hessian_to_csv(h.get(), &s), "hessian csv");
    out.write("hessian.csv", take(s));
    check(qr_hessian_spectrum_csv(h.get(), c.rel_threshold, &s), "spectrum csv");
    out.write("spectrum.csv", take(s));
    out.write("spectrum.json", spectrum_json(h.get(), c.rel_threshold));

    auto manifest = base_manifest(c, "hessian");
    qr_rank_one r1{};
    check(qr_hessian_rank_one(h.get(), &r1), "rank-one summary");
    manifest["symmetry_error"] = qr_hessian_symmetry_error(h.get());
    manifest["spectrum"] = parse_json(spectrum_json(h.get(), c.rel_threshold));
    manifest["rank_one"] = {{"mean_entry", r1.mean_entry},
                            {"lambda_rank_one", r1.rank_one_value},
                            {"lambda_largest", r1.largest},
                            {"discrepancy", r1.discrepancy},
                            {"rank", r1.rank},
                            {"approximation_valid", r1.approximation_valid != 0}};
    auto warnings = json::array();
    for (std::size_t k = 0; k < qr_hessian_warning_count(h.get()); ++k) {
        warnings.push_back(qr_hessian_warning(h.get(), k));
    }
    manifest["warnings"] = warnings;

    int code = 0;
    if (c.compare_with) {
        auto other = build_hessian(c, problem.get(), pulse.get(), *c.compare_with);
        double diff = 0.0;
        check(qr_hessian_compare(h.get(), other.get(), &diff), "hessian comparison");
        const bool agree = diff <= kAgreementTolerance;
        json report{{"reference", manifest["config"]["hessian"]["backend"]},
                    {"other", manifest["config"]["hessian"]["compare_with"]},
                    {"relative_difference", diff},
                    {"tolerance", kAgreementTolerance},
                    {"agree", agree}};
        out.write("compare.json", dump(report));
        manifest["comparison"] = report;
        if (!agree) {
            std::cerr << "hessian: backends disagree (relative difference " << fmt(diff) << ")\n";
            code = 2;
        }
    }
    out.write("manifest.json", dump(manifest));
    out.commit();
    return code;
}

int cmd_calibrate(const RunConfig &c)
{
    auto pulse = load_pulse(c);
    auto h = load_hessian(c);
    auto problem = make_problem(c);
    auto fit = calibrate(c, problem.get(), pulse.get(), h.get());

    StagedDir out(command_dir(c, "calibrate"));
    char *s = nullptr;
    check(qr_fit_to_json(fit.get(), &s), "fit json");
    out.write("fit.json", take(s));
    check(qr_fit_samples_csv(fit.get(), &s), "samples csv");
    out.write("samples.csv", take(s));
    auto manifest = base_manifest(c, "calibrate");
    manifest["fit"] = fit_summary(fit.get());
    out.write("manifest.json", dump(manifest));
    out.commit();
    return 0;
}

int cmd_ensemble(const RunConfig &c)
{
    auto pulse = load_pulse(c);
    auto h = load_hessian(c);
    auto fit = load_fit(c);
    auto problem = make_problem(c);
    auto ens = generate(c, pulse.get(), h.get(), fit.get(), c.ensemble_count);
    check(qr_ensemble_evaluate_exact(problem.get(), ens.get(), 1, c.threads), "exact evaluation");
    if (qr_ensemble_accepted(ens.get()) > 0) {
        check(qr_ensemble_select_best(ens.get(), &c.weights), "ranking");
    }

    StagedDir out(command_dir(c, "ensemble"));
    char *s = nullptr;
    check(qr_ensemble_to_json(ens.get(), &s), "ensemble json");
    out.write("ensemble.json", take(s));
    check(qr_ensemble_to_csv(ens.get(), &s), "ensemble csv");
    out.write("ensemble.csv", take(s));
    check(qr_ensemble_verification_csv(ens.get(), 1, &s), "verification csv");
    out.write("verification.csv", take(s));
    check(qr_ensemble_manifest(ens.get(), fit.get(), &s), "manifest");
    auto manifest = base_manifest(c, "ensemble");
    manifest["ensemble"] = parse_json(take(s));
    out.write("manifest.json", dump(manifest));

    const std::size_t accepted = qr_ensemble_accepted(ens.get());
    for (std::size_t rank = 0; rank < accepted; ++rank) {
        std::size_t draw = 0;
        check(qr_ensemble_accepted_draw(ens.get(), rank, &draw), "accepted draw");
        qr_pulse *p = nullptr;
        check(qr_ensemble_pulse(ens.get(), draw, &p), "ensemble pulse");
        Pulse owned(p);
        check(qr_pulse_to_csv(owned.get(), &s), "pulse csv");
        char name[32];
        std::snprintf(name, sizeof(name), "pulse_%04zu.csv", draw);
        out.write(name, take(s));
    }
    out.commit();
    if (accepted == 0) {
        std::cerr << "ensemble: no draw satisfied the acceptance criterion; lower the sampler strengths\n";
        return 2;
    }
    return 0;
}

int cmd_verify(const RunConfig &c)
{
    const std::string text = read_file(input_path(c, "ensemble", "ensemble.json"));
    qr_ensemble *e = nullptr;
    check(qr_ensemble_from_json(text.c_str(), &e), "reading ensemble");
    Ensemble ens(e);
    auto problem = make_problem(c);
    const double target = parse_json(text).at("target").get<double>();
    qr_verification report{};
    check(qr_ensemble_verify(problem.get(), ens.get(), target, c.slack, c.threads, &report), "verification");

    StagedDir out(command_dir(c, "verify"));
    char *s = nullptr;
    check(qr_ensemble_verification_csv(ens.get(), 0, &s), "verification csv");
    out.write("verification.csv", take(s));
    const bool pass = report.pass_fraction >= kVerifyPassFraction;
    auto manifest = base_manifest(c, "verify");
    manifest["report"] = {{"target_infidelity", target},
                          {"slack", c.slack},
                          {"bound", target * (1.0 + c.slack)},
                          {"checked", report.checked},
                          {"passed", report.passed},
                          {"pass_fraction", report.pass_fraction},
                          {"required_fraction", kVerifyPassFraction},
                          {"pass", pass}};
    out.write("report.json", dump(manifest));
    out.commit();
    if (!pass) {
        std::cerr << "verify: pass fraction " << fmt(report.pass_fraction) << " below " << fmt(kVerifyPassFraction)
                  << "\n";
        return 2;
    }
    return 0;
}

int cmd_reproduce(const RunConfig &c, const std::string &figure)
{
    if (figure != "fig2a" && figure != "fig2b" && figure != "fig3") {
        throw ConfigError("reproduce: unknown figure '" + figure + "' (expected fig2a, fig2b or fig3)");
    }
    auto problem = make_problem(c);
    auto run = find_optimum(c, problem.get());
    if (!run.ok) {
        throw DataError("reproduce: could not reach the optimum");
    }
    auto h = build_hessian(c, problem.get(), run.pulse.get(), c.backend);
    auto manifest = base_manifest(c, "reproduce");
    manifest["figure"] = figure;
    manifest["optimum"] = run.summary;

    StagedDir out(command_dir(c, "reproduce") / figure);
    if (figure == "fig2a") {
        const std::size_t n = qr_pulse_size(run.pulse.get());
        std::vector<double> delta(n), values(n), shifted(n);
        check(qr_pulse_values(run.pulse.get(), values.data(), n), "pulse values");
        std::string csv = "family,amplitude,exact_infidelity,quadratic_estimate\n";
        for (const auto &f : families_of(c)) {
            for (double a : c.fig2a_amplitudes) {
                check(qr_distortion(run.pulse.get(), &f, a, delta.data(), n), "distortion");
                for (std::size_t i = 0; i < n; ++i) {
                    shifted[i] = values[i] + delta[i];
                }
                qr_pulse *p = nullptr;
                check(qr_pulse_create(qr_pulse_final_time(run.pulse.get()), n, shifted.data(), &p), "distorted pulse");
                Pulse distorted(p);
                double q = 0.0;
                check(qr_hessian_quadratic_form(h.get(), delta.data(), n, &q), "quadratic form");
                csv += std::string(f.label) + "," + fmt(a) + "," + fmt(cost_of(problem.get(), distorted.get())) + "," +
                       fmt(0.5 * q) + "\n";
            }
        }
        out.write("fig2a.csv", csv);
    } else if (figure == "fig2b") {
        auto fit = calibrate(c, problem.get(), run.pulse.get(), h.get());
        char *s = nullptr;
        check(qr_fit_samples_csv(fit.get(), &s), "samples csv");
        out.write("samples.csv", take(s));
        check(qr_fit_to_json(fit.get(), &s), "fit json");
        const std::string samples = take(s);
        out.write("fit.json", samples);
        std::string csv = "family,exact_infidelity,implied_alpha,fit_alpha\n";
        const json doc = parse_json(samples);
        for (const auto &sample : doc.at("samples")) {
            if (!sample.at("used").get<bool>()) {
                continue;
            }
            const double e = sample.at("exact_infidelity").get<double>();
            csv += sample.at("family").get<std::string>() + "," + fmt(e) + "," +
                   fmt(sample.at("implied_alpha").get<double>()) + "," + fmt(qr_fit_eval(fit.get(), e)) + "\n";
        }
        out.write("fig2b.csv", csv);
        manifest["fit"] = fit_summary(fit.get());
    } else {
        auto fit = calibrate(c, problem.get(), run.pulse.get(), h.get());
        auto ens = generate(c, run.pulse.get(), h.get(), fit.get(), c.fig3_realizations);
        check(qr_ensemble_evaluate_exact(problem.get(), ens.get(), 1, c.threads), "exact evaluation");
        char *s = nullptr;
        check(qr_ensemble_verification_csv(ens.get(), 1, &s), "fig3 csv");
        out.write("fig3.csv", take(s));
        manifest["fit"] = fit_summary(fit.get());
        check(qr_ensemble_manifest(ens.get(), fit.get(), &s), "manifest");
        manifest["ensemble"] = parse_json(take(s));
    }
    out.write("manifest.json", dump(manifest));
    out.commit();
    return 0;
}

} // namespace qrcli
