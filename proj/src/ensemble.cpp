#include "ensemble.hpp"

#include <algorithm>
#include <ostream>
#include <random>

#include <json.hpp>

#include "error.hpp"
#include "numfmt.hpp"
#include "parallel.hpp"

namespace qrobust {

const char *sampler_family_name(SamplerFamily family) noexcept
{
    return family == SamplerFamily::single_frequency ? "single_frequency" : "fourier";
}

SamplerFamily parse_sampler_family(const std::string &name)
{
    if (name == "single_frequency") {
        return SamplerFamily::single_frequency;
    }
    if (name == "fourier") {
        return SamplerFamily::fourier;
    }
    fail(ErrorCode::invalid_parameter, "unknown sampler family '" + name + "' (expected single_frequency or fourier)");
}

namespace {

void check_sampler(const EnsembleSampler &s)
{
    require(s.strength_min >= 0.0 && s.strength_max >= s.strength_min, ErrorCode::invalid_parameter,
            "sampler: need 0 <= strength_min <= strength_max");
    if (s.family == SamplerFamily::single_frequency) {
        require(s.rate_min >= 1 && s.rate_max >= s.rate_min, ErrorCode::invalid_parameter,
                "sampler: need 1 <= rate_min <= rate_max");
    } else {
        require(s.harmonics >= 1, ErrorCode::invalid_parameter, "sampler: need at least one harmonic");
    }
}

} // namespace

ControlPulse PulseEnsemble::pulse(std::size_t draw) const
{
    require(draw < records.size(), ErrorCode::invalid_parameter, "ensemble: draw index out of range");
    return optimum.perturbed(sampled_distortion(optimum, sampler, records[draw]));
}

std::vector<double> sampled_distortion(const ControlPulse &optimum, const EnsembleSampler &sampler,
                                       const EnsembleRecord &record)
{
    if (sampler.family == SamplerFamily::single_frequency) {
        return single_frequency_distortion(optimum, record.strength, record.rate);
    }
    auto spec = FourierSum::random(sampler.harmonics, 1.0, record.harmonic_seed);
    for (auto &c : spec.amplitudes) {
        c *= record.strength;
    }
    return fourier_distortion(optimum.grid(), spec);
}

PulseEnsemble generate_ensemble(const ControlPulse &optimum, const HessianMatrix &hessian, const ToleranceFit &fit,
                                double target, const EnsembleSampler &sampler, std::size_t count, std::uint64_t seed,
                                const EnsembleOptions &options)
{
    require(target > 0.0 && target <= 0.2, ErrorCode::invalid_parameter, "ensemble: target infidelity must lie in (0, 0.2]");
    require(hessian.size() + 2 == optimum.size(), ErrorCode::shape_mismatch,
            "ensemble: Hessian does not match the pulse grid");
    check_sampler(sampler);

    PulseEnsemble out{optimum, sampler, seed, target, fit(target), eigen_spectrum(hessian).nonzero(), options.weights,
                      {}, {}};
    require(out.alpha > 0.0, ErrorCode::invalid_parameter, "ensemble: fit gives a non-positive tolerance");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> strength(sampler.strength_min, sampler.strength_max);
    std::uniform_int_distribution<int> rate(sampler.rate_min, std::max(sampler.rate_min, sampler.rate_max));
    out.records.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        auto &r = out.records[i];
        r.index = i;
        r.strength = sampler.strength_max > sampler.strength_min ? strength(rng) : sampler.strength_min;
        if (sampler.family == SamplerFamily::single_frequency) {
            r.rate = rate(rng);
        } else {
            r.harmonic_seed = rng();
        }
    }
    parallel_for(count, options.threads, [&](std::size_t i) {
        auto &r = out.records[i];
        const auto delta = sampled_distortion(optimum, sampler, r);
        r.quad_form = std::max(0.0, quadratic_form_full(hessian, delta));
        r.criterion = criterion_I(r.quad_form, out.lambda, out.alpha, target);
        r.score = implementability_score(optimum.perturbed(delta), options.weights);
        r.accepted = r.criterion <= target;
    });
    for (const auto &r : out.records) {
        if (r.accepted) {
            out.order.push_back(r.index);
        }
    }
    return out;
}

void evaluate_exact(const ControlProblem &problem, PulseEnsemble &ensemble, bool include_rejected, std::size_t threads)
{
    std::vector<std::size_t> todo;
    for (const auto &r : ensemble.records) {
        if (include_rejected || r.accepted) {
            todo.push_back(r.index);
        }
    }
    parallel_for(todo.size(), threads, [&](std::size_t k) {
        auto &r = ensemble.records[todo[k]];
        r.exact_infidelity = problem.cost(ensemble.pulse(r.index));
    });
}

VerificationReport verify_ensemble(const ControlProblem &problem, PulseEnsemble &ensemble, double target, double slack,
                                   std::size_t threads)
{
    require(ensemble.accepted_count() > 0, ErrorCode::empty_input, "verify: ensemble has no accepted pulses");
    require(target > 0.0 && slack >= 0.0, ErrorCode::invalid_parameter, "verify: need target > 0 and slack >= 0");
    evaluate_exact(problem, ensemble, false, threads);
    VerificationReport report;
    for (std::size_t draw : ensemble.order) {
        const double e = *ensemble.records[draw].exact_infidelity;
        report.draws.push_back(draw);
        report.exact_infidelities.push_back(e);
        if (e <= target * (1.0 + slack)) {
            ++report.passed;
        }
    }
    report.checked = report.draws.size();
    report.pass_fraction = static_cast<double>(report.passed) / static_cast<double>(report.checked);
    return report;
}

void select_best(PulseEnsemble &ensemble, const ImplementabilityWeights &weights)
{
    require(ensemble.accepted_count() > 0, ErrorCode::empty_input, "select_best: ensemble has no accepted pulses");
    for (std::size_t draw : ensemble.order) {
        ensemble.records[draw].score = implementability_score(ensemble.pulse(draw), weights);
    }
    ensemble.weights = weights;
    std::stable_sort(ensemble.order.begin(), ensemble.order.end(), [&](std::size_t l, std::size_t r) {
        const auto &a = ensemble.records[l];
        const auto &b = ensemble.records[r];
        if (a.score != b.score) {
            return a.score < b.score;
        }
        if (a.criterion != b.criterion) {
            return a.criterion < b.criterion;
        }
        return a.index < b.index;
    });
}

namespace {

nlohmann::json sampler_json(const EnsembleSampler &s)
{
    return {{"family", sampler_family_name(s.family)}, {"rate_min", s.rate_min},         {"rate_max", s.rate_max},
            {"harmonics", s.harmonics},                {"strength_min", s.strength_min}, {"strength_max", s.strength_max}};
}

nlohmann::json weights_json(const ImplementabilityWeights &w)
{
    return {{"bandwidth", w.bandwidth}, {"slew", w.slew}, {"amplitude", w.amplitude}};
}

} // namespace

std::string ensemble_to_json(const PulseEnsemble &ensemble)
{
    nlohmann::json j;
    j["optimum"] = nlohmann::json::parse(pulse_to_json(ensemble.optimum));
    j["sampler"] = sampler_json(ensemble.sampler);
    j["seed"] = ensemble.seed;
    j["target"] = ensemble.target;
    j["alpha"] = ensemble.alpha;
    j["lambda"] = ensemble.lambda;
    j["weights"] = weights_json(ensemble.weights);
    auto &records = j["records"] = nlohmann::json::array();
    for (const auto &r : ensemble.records) {
        nlohmann::json rec{{"index", r.index},         {"strength", r.strength},   {"rate", r.rate},
                           {"harmonic_seed", r.harmonic_seed}, {"quad_form", r.quad_form}, {"criterion", r.criterion},
                           {"score", r.score},         {"accepted", r.accepted}};
        if (r.exact_infidelity) {
            rec["exact_infidelity"] = *r.exact_infidelity;
        }
        records.push_back(std::move(rec));
    }
    j["order"] = ensemble.order;
    return j.dump();
}

PulseEnsemble ensemble_from_json(const std::string &text)
{
    try {
        const auto j = nlohmann::json::parse(text);
        const auto &s = j.at("sampler");
        EnsembleSampler sampler{parse_sampler_family(s.at("family").get<std::string>()), s.at("rate_min").get<int>(),
                                s.at("rate_max").get<int>(), s.at("harmonics").get<std::size_t>(),
                                s.at("strength_min").get<double>(), s.at("strength_max").get<double>()};
        check_sampler(sampler);
        const auto &w = j.at("weights");
        PulseEnsemble out{pulse_from_json(j.at("optimum").dump()),
                          sampler,
                          j.at("seed").get<std::uint64_t>(),
                          j.at("target").get<double>(),
                          j.at("alpha").get<double>(),
                          j.at("lambda").get<std::vector<double>>(),
                          {w.at("bandwidth").get<double>(), w.at("slew").get<double>(), w.at("amplitude").get<double>()},
                          {},
                          j.at("order").get<std::vector<std::size_t>>()};
        for (const auto &r : j.at("records")) {
            EnsembleRecord rec;
            rec.index = r.at("index").get<std::size_t>();
            rec.strength = r.at("strength").get<double>();
            rec.rate = r.at("rate").get<int>();
            rec.harmonic_seed = r.at("harmonic_seed").get<std::uint64_t>();
            rec.quad_form = r.at("quad_form").get<double>();
            rec.criterion = r.at("criterion").get<double>();
            rec.score = r.at("score").get<double>();
            rec.accepted = r.at("accepted").get<bool>();
            if (r.contains("exact_infidelity")) {
                rec.exact_infidelity = r.at("exact_infidelity").get<double>();
            }
            require(rec.index == out.records.size(), ErrorCode::invalid_input, "ensemble json: records out of order");
            out.records.push_back(rec);
        }
        for (std::size_t draw : out.order) {
            require(draw < out.records.size() && out.records[draw].accepted, ErrorCode::invalid_input,
                    "ensemble json: order lists a draw that was not accepted");
        }
        return out;
    } catch (const nlohmann::json::exception &e) {
        fail(ErrorCode::io_error, std::string("ensemble json: ") + e.what());
    }
}

std::string ensemble_manifest_json(const PulseEnsemble &ensemble, const ToleranceFit &fit)
{
    nlohmann::json j;
    j["seed"] = ensemble.seed;
    j["sampler"] = sampler_json(ensemble.sampler);
    j["target_infidelity"] = ensemble.target;
    j["fit"] = {{"a", fit.a}, {"b", fit.b}, {"c", fit.c}, {"mode", fit_exponent_name(fit.mode)}};
    j["alpha"] = ensemble.alpha;
    j["lambda"] = ensemble.lambda;
    j["weights"] = weights_json(ensemble.weights);
    j["draws"] = ensemble.records.size();
    j["accepted"] = ensemble.accepted_count();
    j["rejected"] = ensemble.rejected_count();
    j["acceptance_rate"] =
        ensemble.records.empty() ? 0.0
                                 : static_cast<double>(ensemble.accepted_count()) / static_cast<double>(ensemble.records.size());
    j["ranking"] = ensemble.order;
    return j.dump(2);
}

void write_ensemble_csv(std::ostream &os, const PulseEnsemble &ensemble)
{
    os << "draw,strength,rate,quad_form,criterion_I,score,accepted\n";
    for (const auto &r : ensemble.records) {
        os << r.index << ',' << format_double(r.strength) << ',' << r.rate << ',' << format_double(r.quad_form) << ','
           << format_double(r.criterion) << ',' << format_double(r.score) << ',' << (r.accepted ? 1 : 0) << '\n';
    }
}

void write_verification_csv(std::ostream &os, const PulseEnsemble &ensemble, bool include_rejected)
{
    os << "draw,criterion_I,exact_infidelity,threshold\n";
    for (const auto &r : ensemble.records) {
        if (!include_rejected && !r.accepted) {
            continue;
        }
        require(r.exact_infidelity.has_value(), ErrorCode::invalid_input,
                "verification csv: draw " + std::to_string(r.index) + " has no exact infidelity");
        os << r.index << ',' << format_double(r.criterion) << ',' << format_double(*r.exact_infidelity) << ','
           << format_double(ensemble.target) << '\n';
    }
}

} // namespace qrobust
