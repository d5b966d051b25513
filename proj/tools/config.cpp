#include "config.hpp"

#include <cmath>
#include <numbers>
#include <set>

namespace qrcli {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string &path, const std::string &what)
{
    throw ConfigError("config: " + path + ": " + what);
}

void check_keys(const json &obj, const std::string &path, std::initializer_list<const char *> allowed)
{
    if (!obj.is_object()) {
        bad(path.empty() ? "<root>" : path, "expected an object");
    }
    const std::set<std::string> keys(allowed.begin(), allowed.end());
    for (const auto &item : obj.items()) {
        if (!keys.count(item.key())) {
            bad(path.empty() ? item.key() : path + "." + item.key(), "unknown key");
        }
    }
}

std::string join(const std::string &path, const char *key) { return path.empty() ? key : path + "." + key; }

double get_number(const json &obj, const std::string &path, const char *key, double fallback)
{
    if (!obj.contains(key)) {
        return fallback;
    }
    const auto &v = obj.at(key);
    if (!v.is_number()) {
        bad(join(path, key), "expected a number");
    }
    const double d = v.get<double>();
    if (!std::isfinite(d)) {
        bad(join(path, key), "must be finite");
    }
    return d;
}

template <typename Int>
Int get_integer(const json &obj, const std::string &path, const char *key, Int fallback)
{
    if (!obj.contains(key)) {
        return fallback;
    }
    const auto &v = obj.at(key);
    if (!v.is_number_integer()) {
        bad(join(path, key), "expected an integer");
    }
    if constexpr (std::is_unsigned_v<Int>) {
        if (v.is_number_unsigned() || v.get<std::int64_t>() >= 0) {
            return v.get<Int>();
        }
        bad(join(path, key), "must be non-negative");
    } else {
        return v.get<Int>();
    }
}

std::string get_string(const json &obj, const std::string &path, const char *key, const std::string &fallback)
{
    if (!obj.contains(key)) {
        return fallback;
    }
    if (!obj.at(key).is_string()) {
        bad(join(path, key), "expected a string");
    }
    return obj.at(key).get<std::string>();
}

std::vector<double> get_numbers(const json &obj, const std::string &path, const char *key)
{
    std::vector<double> out;
    if (!obj.contains(key)) {
        return out;
    }
    const auto &v = obj.at(key);
    if (!v.is_array()) {
        bad(join(path, key), "expected an array of numbers");
    }
    for (const auto &x : v) {
        if (!x.is_number() || !std::isfinite(x.get<double>())) {
            bad(join(path, key), "expected an array of finite numbers");
        }
        out.push_back(x.get<double>());
    }
    return out;
}

void positive(double v, const std::string &path)
{
    if (!(v > 0.0)) {
        bad(path, "must be positive");
    }
}

void non_negative(double v, const std::string &path)
{
    if (v < 0.0) {
        bad(path, "must be non-negative");
    }
}

qr_backend parse_backend_name(const std::string &name, const std::string &path)
{
    if (name == "gateaux") {
        return QR_BACKEND_GATEAUX;
    }
    if (name == "fd" || name == "finite_difference") {
        return QR_BACKEND_FINITE_DIFFERENCE;
    }
    if (name == "bfgs") {
        return QR_BACKEND_BFGS;
    }
    bad(path, "unknown backend '" + name + "' (expected gateaux, fd or bfgs)");
}

const char *backend_label(qr_backend b)
{
    switch (b) {
    case QR_BACKEND_GATEAUX:
        return "gateaux";
    case QR_BACKEND_FINITE_DIFFERENCE:
        return "finite_difference";
    case QR_BACKEND_BFGS:
        return "bfgs";
    }
    return "gateaux";
}

qr_family_kind parse_kind(const std::string &name, const std::string &path)
{
    if (name == "single_frequency") {
        return QR_SINGLE_FREQUENCY;
    }
    if (name == "fourier") {
        return QR_FOURIER;
    }
    bad(path, "unknown distortion family '" + name + "' (expected single_frequency or fourier)");
}

const char *kind_label(qr_family_kind k) { return k == QR_SINGLE_FREQUENCY ? "single_frequency" : "fourier"; }

FamilyConfig parse_family(const json &j, const std::string &path)
{
    check_keys(j, path, {"label", "kind", "rate", "harmonics", "amplitudes", "seed"});
    FamilyConfig f;
    f.kind = parse_kind(get_string(j, path, "kind", "single_frequency"), join(path, "kind"));
    f.rate = get_integer<int>(j, path, "rate", 1);
    f.harmonics = get_integer<std::size_t>(j, path, "harmonics", 5);
    f.amplitudes = get_numbers(j, path, "amplitudes");
    f.seed = get_integer<std::uint64_t>(j, path, "seed", 7);
    if (f.kind == QR_SINGLE_FREQUENCY && f.rate < 1) {
        bad(join(path, "rate"), "must be a positive integer");
    }
    if (f.kind == QR_FOURIER) {
        if (!f.amplitudes.empty()) {
            f.harmonics = f.amplitudes.size();
        }
        if (f.harmonics < 1) {
            bad(join(path, "harmonics"), "must be at least 1");
        }
    }
    const std::string fallback = f.kind == QR_SINGLE_FREQUENCY ? "single_k" + std::to_string(f.rate)
                                                              : "fourier" + std::to_string(f.harmonics);
    f.label = get_string(j, path, "label", fallback);
    if (f.label.empty() || f.label.find_first_of(",\n\"") != std::string::npos) {
        bad(join(path, "label"), "must be non-empty and free of commas, quotes and newlines");
    }
    return f;
}

} // namespace

RunConfig default_config(const std::string &model)
{
    RunConfig c;
    c.model = model;
    qr_krotov_config_default(&c.optimizer);
    c.optimizer.target_infidelity = 1e-20;
    c.optimizer.stall_tolerance = 1e-24;
    qr_sampler_default(&c.sampler);
    qr_weights_default(&c.weights);
    if (model == "harmonic") {
        c.objective = QR_OVERLAP;
        c.final_time = 4.0 * std::numbers::pi;
        c.samples = 128;
        c.fit_mode = QR_FIT_FIXED_HALF;
        c.sampler.strength_min = 0.0;
        c.sampler.strength_max = 0.08;
        c.fig2a_amplitudes = {0.0, 0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.08, 0.1, 0.12, 0.15, 0.2, 0.25, 0.3};
    } else if (model == "landau_zener") {
        c.objective = QR_PHASE_SENSITIVE;
        c.final_time = 10.0;
        c.samples = 128;
        c.fit_mode = QR_FIT_FREE;
        c.sampler.strength_min = 0.0;
        c.sampler.strength_max = 0.025;
        c.fig2a_amplitudes = {0.0, 0.002, 0.004, 0.006, 0.008, 0.01, 0.0125, 0.015, 0.02, 0.025, 0.03, 0.04, 0.05};
    } else {
        bad("model", "unknown model '" + model + "' (expected landau_zener or harmonic)");
    }
    c.sampler.family = QR_SINGLE_FREQUENCY;
    c.sampler.rate_min = 1;
    c.sampler.rate_max = 1;
    c.families = {FamilyConfig{"single_k1", QR_SINGLE_FREQUENCY, 1, 0, {}, 0},
                  FamilyConfig{"fourier5", QR_FOURIER, 0, 5, {}, 7}};
    return c;
}

RunConfig parse_config(const std::string &text)
{
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error &e) {
        throw ConfigError(std::string("config: not valid JSON: ") + e.what());
    }
    check_keys(root, "", {"model", "landau_zener", "harmonic", "grid", "optimizer", "hessian", "calibration", "ensemble",
                          "reproduce", "seed", "threads", "output_dir"});
    RunConfig c = default_config(get_string(root, "", "model", "landau_zener"));

    if (root.contains("landau_zener")) {
        if (c.model != "landau_zener") {
            bad("landau_zener", "section given but model is '" + c.model + "'");
        }
        const auto &j = root.at("landau_zener");
        check_keys(j, "landau_zener", {"coupling", "u_start", "u_end", "objective"});
        c.coupling = get_number(j, "landau_zener", "coupling", c.coupling);
        c.u_start = get_number(j, "landau_zener", "u_start", c.u_start);
        c.u_end = get_number(j, "landau_zener", "u_end", c.u_end);
        const auto obj = get_string(j, "landau_zener", "objective", "phase_sensitive");
        if (obj == "phase_sensitive") {
            c.objective = QR_PHASE_SENSITIVE;
        } else if (obj == "overlap") {
            c.objective = QR_OVERLAP;
        } else {
            bad("landau_zener.objective", "expected phase_sensitive or overlap");
        }
        positive(c.coupling, "landau_zener.coupling");
        if (!(c.u_start < 0.0 && c.u_end > 0.0)) {
            bad("landau_zener", "need u_start < 0 < u_end");
        }
    }
    if (root.contains("harmonic")) {
        if (c.model != "harmonic") {
            bad("harmonic", "section given but model is '" + c.model + "'");
        }
        const auto &j = root.at("harmonic");
        check_keys(j, "harmonic", {"displacement", "fock_dimension"});
        c.displacement = get_number(j, "harmonic", "displacement", c.displacement);
        c.fock_dimension = get_integer<std::size_t>(j, "harmonic", "fock_dimension", c.fock_dimension);
        if (c.fock_dimension < 2) {
            bad("harmonic.fock_dimension", "must be at least 2");
        }
    }
    if (root.contains("grid")) {
        const auto &j = root.at("grid");
        check_keys(j, "grid", {"T", "N"});
        c.final_time = get_number(j, "grid", "T", c.final_time);
        c.samples = get_integer<std::size_t>(j, "grid", "N", c.samples);
    }
    positive(c.final_time, "grid.T");
    if (c.samples < 4) {
        bad("grid.N", "must be at least 4");
    }
    if (root.contains("optimizer")) {
        const auto &j = root.at("optimizer");
        check_keys(j, "optimizer", {"step_weight", "max_iters", "target_infidelity", "stall_tolerance"});
        c.optimizer.step_weight = get_number(j, "optimizer", "step_weight", c.optimizer.step_weight);
        c.optimizer.max_iters = get_integer<std::size_t>(j, "optimizer", "max_iters", c.optimizer.max_iters);
        c.optimizer.target_infidelity = get_number(j, "optimizer", "target_infidelity", c.optimizer.target_infidelity);
        c.optimizer.stall_tolerance = get_number(j, "optimizer", "stall_tolerance", c.optimizer.stall_tolerance);
        positive(c.optimizer.step_weight, "optimizer.step_weight");
        positive(static_cast<double>(c.optimizer.max_iters), "optimizer.max_iters");
        positive(c.optimizer.target_infidelity, "optimizer.target_infidelity");
        non_negative(c.optimizer.stall_tolerance, "optimizer.stall_tolerance");
    }
    if (root.contains("hessian")) {
        const auto &j = root.at("hessian");
        check_keys(j, "hessian", {"backend", "optimum_tolerance", "fd_step", "rel_threshold", "compare_with",
                                  "probe_tolerance", "max_directions"});
        if (j.contains("backend")) {
            c.backend = parse_backend_name(get_string(j, "hessian", "backend", ""), "hessian.backend");
        }
        if (j.contains("compare_with") && !j.at("compare_with").is_null()) {
            c.compare_with = parse_backend_name(get_string(j, "hessian", "compare_with", ""), "hessian.compare_with");
        }
        c.optimum_tolerance = get_number(j, "hessian", "optimum_tolerance", c.optimum_tolerance);
        c.fd_step = get_number(j, "hessian", "fd_step", c.fd_step);
        c.rel_threshold = get_number(j, "hessian", "rel_threshold", c.rel_threshold);
        c.probe_tolerance = get_number(j, "hessian", "probe_tolerance", c.probe_tolerance);
        c.max_directions = get_integer<std::size_t>(j, "hessian", "max_directions", c.max_directions);
        positive(c.optimum_tolerance, "hessian.optimum_tolerance");
        non_negative(c.fd_step, "hessian.fd_step");
        positive(c.rel_threshold, "hessian.rel_threshold");
        positive(c.probe_tolerance, "hessian.probe_tolerance");
    }
    if (root.contains("calibration")) {
        const auto &j = root.at("calibration");
        check_keys(j, "calibration",
                   {"families", "strengths", "infidelity_min", "infidelity_max", "points", "fit_c", "max_infidelity"});
        if (j.contains("families")) {
            if (!j.at("families").is_array() || j.at("families").empty()) {
                bad("calibration.families", "expected a non-empty array");
            }
            c.families.clear();
            std::set<std::string> labels;
            for (std::size_t k = 0; k < j.at("families").size(); ++k) {
                c.families.push_back(parse_family(j.at("families")[k], "calibration.families[" + std::to_string(k) + "]"));
                if (!labels.insert(c.families.back().label).second) {
                    bad("calibration.families", "duplicate label '" + c.families.back().label + "'");
                }
            }
        }
        c.strengths = get_numbers(j, "calibration", "strengths");
        for (double s : c.strengths) {
            non_negative(s, "calibration.strengths");
        }
        c.schedule_min = get_number(j, "calibration", "infidelity_min", c.schedule_min);
        c.schedule_max = get_number(j, "calibration", "infidelity_max", c.schedule_max);
        c.schedule_points = get_integer<std::size_t>(j, "calibration", "points", c.schedule_points);
        c.max_infidelity = get_number(j, "calibration", "max_infidelity", c.max_infidelity);
        const auto mode = get_string(j, "calibration", "fit_c", c.fit_mode == QR_FIT_FREE ? "free" : "fixed_half");
        if (mode == "free") {
            c.fit_mode = QR_FIT_FREE;
        } else if (mode == "fixed_half") {
            c.fit_mode = QR_FIT_FIXED_HALF;
        } else {
            bad("calibration.fit_c", "expected fixed_half or free");
        }
        positive(c.schedule_min, "calibration.infidelity_min");
        if (c.schedule_max < c.schedule_min) {
            bad("calibration.infidelity_max", "must be >= infidelity_min");
        }
        if (c.schedule_points < 1) {
            bad("calibration.points", "must be at least 1");
        }
        positive(c.max_infidelity, "calibration.max_infidelity");
    }
    if (root.contains("ensemble")) {
        const auto &j = root.at("ensemble");
        check_keys(j, "ensemble", {"target_infidelity", "count", "slack", "sampler", "weights"});
        c.target_infidelity = get_number(j, "ensemble", "target_infidelity", c.target_infidelity);
        c.ensemble_count = get_integer<std::size_t>(j, "ensemble", "count", c.ensemble_count);
        c.slack = get_number(j, "ensemble", "slack", c.slack);
        if (!(c.target_infidelity > 0.0 && c.target_infidelity <= 0.2)) {
            bad("ensemble.target_infidelity", "must lie in (0, 0.2]");
        }
        non_negative(c.slack, "ensemble.slack");
        if (j.contains("sampler")) {
            const auto &s = j.at("sampler");
            const std::string p = "ensemble.sampler";
            check_keys(s, p, {"family", "rate_min", "rate_max", "harmonics", "strength_min", "strength_max"});
            c.sampler.family = parse_kind(get_string(s, p, "family", kind_label(c.sampler.family)), p + ".family");
            c.sampler.rate_min = get_integer<int>(s, p, "rate_min", c.sampler.rate_min);
            c.sampler.rate_max = get_integer<int>(s, p, "rate_max", c.sampler.rate_max);
            c.sampler.harmonics = get_integer<std::size_t>(s, p, "harmonics", c.sampler.harmonics);
            c.sampler.strength_min = get_number(s, p, "strength_min", c.sampler.strength_min);
            c.sampler.strength_max = get_number(s, p, "strength_max", c.sampler.strength_max);
            if (c.sampler.rate_min < 1 || c.sampler.rate_max < c.sampler.rate_min) {
                bad(p, "need 1 <= rate_min <= rate_max");
            }
            if (c.sampler.harmonics < 1) {
                bad(p + ".harmonics", "must be at least 1");
            }
            if (c.sampler.strength_min < 0.0 || c.sampler.strength_max < c.sampler.strength_min) {
                bad(p, "need 0 <= strength_min <= strength_max");
            }
        }
        if (j.contains("weights")) {
            const auto &w = j.at("weights");
            check_keys(w, "ensemble.weights", {"bandwidth", "slew", "amplitude"});
            c.weights.bandwidth = get_number(w, "ensemble.weights", "bandwidth", c.weights.bandwidth);
            c.weights.slew = get_number(w, "ensemble.weights", "slew", c.weights.slew);
            c.weights.amplitude = get_number(w, "ensemble.weights", "amplitude", c.weights.amplitude);
            non_negative(c.weights.bandwidth, "ensemble.weights.bandwidth");
            non_negative(c.weights.slew, "ensemble.weights.slew");
            non_negative(c.weights.amplitude, "ensemble.weights.amplitude");
        }
    }
    if (root.contains("reproduce")) {
        const auto &j = root.at("reproduce");
        check_keys(j, "reproduce", {"fig2a_amplitudes", "fig3_realizations"});
        if (j.contains("fig2a_amplitudes")) {
            c.fig2a_amplitudes = get_numbers(j, "reproduce", "fig2a_amplitudes");
        }
        c.fig3_realizations = get_integer<std::size_t>(j, "reproduce", "fig3_realizations", c.fig3_realizations);
        if (c.fig3_realizations < 1) {
            bad("reproduce.fig3_realizations", "must be at least 1");
        }
    }
    c.seed = get_integer<std::uint64_t>(root, "", "seed", c.seed);
    c.threads = get_integer<std::size_t>(root, "", "threads", c.threads);
    if (c.threads < 1) {
        bad("threads", "must be at least 1");
    }
    c.output_dir = get_string(root, "", "output_dir", c.output_dir);
    if (c.output_dir.empty()) {
        bad("output_dir", "must not be empty");
    }
    return c;
}

nlohmann::json config_to_json(const RunConfig &c)
{
    json j;
    j["model"] = c.model;
    if (c.model == "landau_zener") {
        j["landau_zener"] = {{"coupling", c.coupling},
                             {"u_start", c.u_start},
                             {"u_end", c.u_end},
                             {"objective", c.objective == QR_PHASE_SENSITIVE ? "phase_sensitive" : "overlap"}};
    } else {
        j["harmonic"] = {{"displacement", c.displacement}, {"fock_dimension", c.fock_dimension}};
    }
    j["grid"] = {{"T", c.final_time}, {"N", c.samples}};
    j["optimizer"] = {{"step_weight", c.optimizer.step_weight},
                      {"max_iters", c.optimizer.max_iters},
                      {"target_infidelity", c.optimizer.target_infidelity},
                      {"stall_tolerance", c.optimizer.stall_tolerance}};
    j["hessian"] = {{"backend", backend_label(c.backend)},
                    {"optimum_tolerance", c.optimum_tolerance},
                    {"fd_step", c.fd_step},
                    {"rel_threshold", c.rel_threshold},
                    {"compare_with", c.compare_with ? json(backend_label(*c.compare_with)) : json(nullptr)},
                    {"probe_tolerance", c.probe_tolerance},
                    {"max_directions", c.max_directions}};
    auto families = json::array();
    for (const auto &f : c.families) {
        json fj{{"label", f.label}, {"kind", kind_label(f.kind)}};
        if (f.kind == QR_SINGLE_FREQUENCY) {
            fj["rate"] = f.rate;
        } else {
            fj["harmonics"] = f.harmonics;
            fj["seed"] = f.seed;
            if (!f.amplitudes.empty()) {
                fj["amplitudes"] = f.amplitudes;
            }
        }
        families.push_back(fj);
    }
    j["calibration"] = {{"families", families},
                        {"infidelity_min", c.schedule_min},
                        {"infidelity_max", c.schedule_max},
                        {"points", c.schedule_points},
                        {"fit_c", c.fit_mode == QR_FIT_FREE ? "free" : "fixed_half"},
                        {"max_infidelity", c.max_infidelity}};
    if (!c.strengths.empty()) {
        j["calibration"]["strengths"] = c.strengths;
    }
    j["ensemble"] = {{"target_infidelity", c.target_infidelity},
                     {"count", c.ensemble_count},
                     {"slack", c.slack},
                     {"sampler",
                      {{"family", kind_label(c.sampler.family)},
                       {"rate_min", c.sampler.rate_min},
                       {"rate_max", c.sampler.rate_max},
                       {"harmonics", c.sampler.harmonics},
                       {"strength_min", c.sampler.strength_min},
                       {"strength_max", c.sampler.strength_max}}},
                     {"weights",
                      {{"bandwidth", c.weights.bandwidth}, {"slew", c.weights.slew}, {"amplitude", c.weights.amplitude}}}};
    j["reproduce"] = {{"fig2a_amplitudes", c.fig2a_amplitudes}, {"fig3_realizations", c.fig3_realizations}};
    j["seed"] = c.seed;
    j["threads"] = c.threads;
    j["output_dir"] = c.output_dir;
    return j;
}

} // namespace qrcli
