#include "hessian.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>

#include <json.hpp>

#include "error.hpp"
#include "numfmt.hpp"
#include "parallel.hpp"

namespace qrobust {

const char *backend_name(HessianBackend backend) noexcept
{
    switch (backend) {
    case HessianBackend::gateaux:
        return "gateaux";
    case HessianBackend::finite_difference:
        return "finite_difference";
    case HessianBackend::bfgs:
        return "bfgs";
    }
    return "unknown";
}

HessianBackend parse_backend(const std::string &name)
{
    if (name == "gateaux") {
        return HessianBackend::gateaux;
    }
    if (name == "finite_difference" || name == "fd") {
        return HessianBackend::finite_difference;
    }
    if (name == "bfgs") {
        return HessianBackend::bfgs;
    }
    fail(ErrorCode::invalid_parameter, "unknown Hessian backend '" + name + "' (expected gateaux, fd or bfgs)");
}

namespace {

double max_abs(std::span<const double> v)
{
    double m = 0.0;
    for (double x : v) {
        m = std::max(m, std::abs(x));
    }
    return m;
}

// Maps a Hessian over step-held controls m_j = (u_j + u_{j+1})/2 onto interior samples.
Eigen::MatrixXd step_to_interior(const Eigen::MatrixXd &step_hessian)
{
    const Eigen::Index steps = step_hessian.rows();
    const Eigen::Index interior = steps - 1;
    Eigen::MatrixXd map = Eigen::MatrixXd::Zero(steps, interior);
    for (Eigen::Index k = 0; k < interior; ++k) {
        // interior sample k+1 feeds steps k and k+1
        map(k, k) = 0.5;
        map(k + 1, k) = 0.5;
    }
    return map.transpose() * step_hessian * map;
}

void attach_psd_warning(HessianMatrix &h)
{
    if (h.entries.size() == 0) {
        return;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h.entries, Eigen::EigenvaluesOnly);
    const double largest = solver.eigenvalues().maxCoeff();
    const double smallest = solver.eigenvalues().minCoeff();
    if (smallest < -1e-6 * std::max(largest, 0.0)) {
        h.warnings.push_back("not positive semidefinite: smallest eigenvalue " + format_double(smallest) +
                             ", largest " + format_double(largest));
    }
}

} // namespace

HessianMatrix finite_difference_hessian(const CostFunction &cost, const ControlPulse &center, double step,
                                        std::size_t threads)
{
    require(step > 0.0, ErrorCode::invalid_parameter, "finite-difference Hessian: step must be positive");
    const std::size_t n = center.grid().interior_size();
    const auto base = center.interior();
    auto eval = [&](std::size_t a, double sa, std::size_t b, double sb) {
        auto x = base;
        x[a] += sa;
        x[b] += sb;
        return cost(center.with_interior(x));
    };
    Eigen::MatrixXd h(n, n);
    const double denom = 4.0 * step * step;
    parallel_for(n, threads, [&](std::size_t a) {
        for (std::size_t b = a; b < n; ++b) {
            const double v = (eval(a, step, b, step) - eval(a, step, b, -step) - eval(a, -step, b, step) +
                              eval(a, -step, b, -step)) /
                             denom;
            h(a, b) = v;
            h(b, a) = v;
        }
    });
    HessianMatrix out{h, HessianBackend::finite_difference, center.size(), center.grid().dt(), {}};
    return out;
}

HessianMatrix secant_hessian(const GradientFunction &gradient, const ControlPulse &center,
                             const HessianOptions &options)
{
    const std::size_t n = center.grid().interior_size();
    const auto base = center.interior();
    const double h = 1e-4 * std::max(1.0, max_abs(center.values()));
    std::mt19937_64 rng(options.seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    auto random_direction = [&] {
        Eigen::VectorXd s(n);
        for (auto &x : s) {
            x = normal(rng);
        }
        return Eigen::VectorXd(s / s.norm());
    };
    // Curvature along s from central gradient differences.
    auto curvature = [&](const Eigen::VectorXd &s) {
        auto plus = base;
        auto minus = base;
        for (std::size_t k = 0; k < n; ++k) {
            plus[k] += h * s[k];
            minus[k] -= h * s[k];
        }
        const auto gp = gradient(center.with_interior(plus));
        const auto gm = gradient(center.with_interior(minus));
        Eigen::VectorXd y(n);
        for (std::size_t k = 0; k < n; ++k) {
            y[k] = (gp[k + 1] - gm[k + 1]) / (2.0 * h);
        }
        return y;
    };

    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n, n);
    const std::size_t limit = options.max_directions ? options.max_directions : 2 * n;
    std::size_t stable_rounds = 0;
    for (std::size_t k = 0; k < limit; ++k) {
        const Eigen::VectorXd s = random_direction();
        const Eigen::VectorXd y = curvature(s);
        // Symmetric rank-one member of the Broyden family; from a zero start it accumulates
        // the curvature seen along every direction probed so far.
        const Eigen::VectorXd r = y - b * s;
        const double denom = s.dot(r);
        if (std::abs(denom) > 1e-10 * r.norm() && r.norm() > 1e-14 * std::max(1.0, y.norm())) {
            b += r * r.transpose() / denom;
        }
        // Probe test on a fresh direction.
        const Eigen::VectorXd v = random_direction();
        const double predicted = v.dot(b * v);
        const double measured = v.dot(curvature(v));
        const double scale = std::max({std::abs(measured), 1e-12 * std::max(1.0, b.norm())});
        stable_rounds = std::abs(predicted - measured) <= options.probe_tolerance * scale ? stable_rounds + 1 : 0;
        if (stable_rounds >= 3) {
            break;
        }
    }
    HessianMatrix out{0.5 * (b + b.transpose()), HessianBackend::bfgs, center.size(), center.grid().dt(), {}};
    if (stable_rounds < 3) {
        out.warnings.push_back("secant accumulation hit the direction limit before the probe test stabilized");
    }
    return out;
}

HessianMatrix gateaux_hessian(const ControlProblem &problem, const ControlPulse &pulse)
{
    const StepSequence steps(problem.model(), pulse, 2);
    const auto trajectory = propagate(steps, pulse.grid(), problem.initial_state());
    const std::size_t ns = steps.steps();
    const auto &goal = problem.goal();

    // costates[j] is the backward image of the goal at sample j.
    std::vector<StateVector> costates(ns + 1);
    costates[ns] = goal;
    for (std::size_t j = ns; j-- > 0;) {
        costates[j] = steps.step(j).apply_adjoint(costates[j + 1]);
    }
    // First-order sources of the variational equation per unit held-control variation.
    std::vector<StateVector> sources(ns);
    Eigen::VectorXcd first(ns);
    Eigen::MatrixXcd second(ns, ns);
    for (std::size_t j = 0; j < ns; ++j) {
        sources[j] = steps.derivative(j) * trajectory.states[j];
        first[j] = costates[j + 1].dot(sources[j]);
        second(j, j) = costates[j + 1].dot(steps.second_derivative(j) * trajectory.states[j]);
    }
    // Mixed terms: variation injected at step j, propagated to step l, differentiated again there.
    for (std::size_t l = 1; l < ns; ++l) {
        StateVector probe = steps.derivative(l).adjoint() * costates[l + 1];
        for (std::size_t j = l; j-- > 0;) {
            const Complex v = probe.dot(sources[j]);
            second(j, l) = v;
            second(l, j) = v;
            probe = steps.step(j).apply_adjoint(probe);
        }
    }
    Eigen::MatrixXd step_hessian(ns, ns);
    if (problem.objective() == Objective::phase_sensitive) {
        step_hessian = -second.real();
    } else {
        const Complex overlap = goal.dot(trajectory.final_state());
        for (std::size_t j = 0; j < ns; ++j) {
            for (std::size_t l = 0; l < ns; ++l) {
                step_hessian(j, l) =
                    -2.0 * (std::conj(first[j]) * first[l] + std::conj(overlap) * second(j, l)).real();
            }
        }
    }
    Eigen::MatrixXd h = step_to_interior(step_hessian);
    return HessianMatrix{0.5 * (h + h.transpose()), HessianBackend::gateaux, pulse.size(), pulse.grid().dt(), {}};
}

HessianMatrix build_hessian(const ControlProblem &problem, const ControlPulse &pulse, const HessianOptions &options)
{
    if (options.require_optimum) {
        const double g = gradient_norm(problem, pulse);
        require(g <= options.optimum_tolerance, ErrorCode::not_at_optimum,
                "build_hessian: pulse is not at an optimum (gradient norm " + format_double(g) + " > " +
                    format_double(options.optimum_tolerance) + ")");
    }
    HessianMatrix out;
    switch (options.backend) {
    case HessianBackend::gateaux:
        out = gateaux_hessian(problem, pulse);
        break;
    case HessianBackend::finite_difference: {
        const double step = options.fd_step > 0.0 ? options.fd_step : 1e-3 * std::max(1.0, max_abs(pulse.values()));
        out = finite_difference_hessian([&](const ControlPulse &p) { return problem.cost(p); }, pulse, step,
                                        options.threads);
        break;
    }
    case HessianBackend::bfgs:
        out = secant_hessian([&](const ControlPulse &p) { return problem.gradient(p); }, pulse, options);
        break;
    }
    out.entries = 0.5 * (out.entries + out.entries.transpose()).eval();
    attach_psd_warning(out);
    return out;
}

double quadratic_form(const HessianMatrix &hessian, std::span<const double> interior_delta)
{
    require(interior_delta.size() == hessian.size(), ErrorCode::shape_mismatch,
            "quadratic_form: distortion has " + std::to_string(interior_delta.size()) + " interior samples, Hessian " +
                std::to_string(hessian.size()));
    const Eigen::Map<const Eigen::VectorXd> v(interior_delta.data(), static_cast<Eigen::Index>(interior_delta.size()));
    return v.dot(hessian.entries * v);
}

double quadratic_form_full(const HessianMatrix &hessian, std::span<const double> delta)
{
    require(delta.size() == hessian.size() + 2, ErrorCode::shape_mismatch, "quadratic_form: length mismatch");
    return quadratic_form(hessian, delta.subspan(1, delta.size() - 2));
}

std::vector<double> Spectrum::nonzero() const
{
    return {eigenvalues.data(), eigenvalues.data() + static_cast<std::ptrdiff_t>(rank)};
}

Spectrum eigen_spectrum(const HessianMatrix &hessian, double rel_threshold)
{
    require(hessian.size() > 0, ErrorCode::empty_input, "eigen_spectrum: empty Hessian");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(hessian.entries);
    require(solver.info() == Eigen::Success, ErrorCode::internal, "eigen_spectrum: eigendecomposition failed");
    const Eigen::Index n = solver.eigenvalues().size();
    Spectrum s;
    s.eigenvalues.resize(n);
    s.eigenvectors.resize(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        // Eigen returns ascending order.
        s.eigenvalues[k] = std::max(0.0, solver.eigenvalues()[n - 1 - k]);
        s.eigenvectors.col(k) = solver.eigenvectors().col(n - 1 - k);
    }
    s.smallest_raw = solver.eigenvalues()[0];
    s.threshold = rel_threshold * s.eigenvalues[0];
    for (Eigen::Index k = 0; k < n; ++k) {
        if (s.eigenvalues[k] > s.threshold && s.eigenvalues[k] > 0.0) {
            ++s.rank;
        }
    }
    return s;
}

RankOneSummary rank_one_summary(const HessianMatrix &hessian, double rel_threshold)
{
    const double n = static_cast<double>(hessian.size());
    RankOneSummary r;
    r.mean_entry = hessian.entries.sum() / (n * n);
    r.rank_one_value = n * r.mean_entry;
    const auto spectrum = eigen_spectrum(hessian, rel_threshold);
    r.largest = spectrum.eigenvalues[0];
    r.rank = spectrum.rank;
    r.discrepancy = r.largest > 0.0 ? std::abs(r.rank_one_value - r.largest) / r.largest : 0.0;
    r.approximation_valid = r.rank == 1 && r.discrepancy <= 0.1;
    return r;
}

double symmetry_error(const Eigen::MatrixXd &m)
{
    const double scale = m.cwiseAbs().maxCoeff();
    if (scale == 0.0) {
        return 0.0;
    }
    return (m - m.transpose()).cwiseAbs().maxCoeff() / scale;
}

void write_hessian_csv(std::ostream &os, const HessianMatrix &hessian)
{
    os << "# N=" << hessian.samples << ",dt=" << format_double(hessian.dt) << ",backend=" << backend_name(hessian.backend)
       << '\n';
    for (Eigen::Index r = 0; r < hessian.entries.rows(); ++r) {
        for (Eigen::Index c = 0; c < hessian.entries.cols(); ++c) {
            os << (c ? "," : "") << format_double(hessian.entries(r, c));
        }
        os << '\n';
    }
}

std::string hessian_to_json(const HessianMatrix &hessian)
{
    nlohmann::json j;
    j["N"] = hessian.samples;
    j["dt"] = hessian.dt;
    j["backend"] = backend_name(hessian.backend);
    j["size"] = hessian.size();
    std::vector<double> flat;
    flat.reserve(hessian.entries.size());
    for (Eigen::Index r = 0; r < hessian.entries.rows(); ++r) {
        for (Eigen::Index c = 0; c < hessian.entries.cols(); ++c) {
            flat.push_back(hessian.entries(r, c));
        }
    }
    j["entries"] = flat;
    j["warnings"] = hessian.warnings;
    return j.dump();
}

HessianMatrix hessian_from_json(const std::string &text)
{
    try {
        const auto j = nlohmann::json::parse(text);
        HessianMatrix h;
        h.samples = j.at("N").get<std::size_t>();
        h.dt = j.at("dt").get<double>();
        h.backend = parse_backend(j.at("backend").get<std::string>());
        const auto n = j.at("size").get<std::size_t>();
        const auto flat = j.at("entries").get<std::vector<double>>();
        require(flat.size() == n * n && n + 2 == h.samples, ErrorCode::shape_mismatch,
                "hessian json: entries do not match size");
        h.entries.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t c = 0; c < n; ++c) {
                h.entries(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = flat[r * n + c];
            }
        }
        if (j.contains("warnings")) {
            h.warnings = j.at("warnings").get<std::vector<std::string>>();
        }
        return h;
    } catch (const nlohmann::json::exception &e) {
        fail(ErrorCode::io_error, std::string("hessian json: ") + e.what());
    }
}

void write_spectrum_csv(std::ostream &os, const Spectrum &spectrum)
{
    os << "index,eigenvalue,above_threshold\n";
    for (Eigen::Index k = 0; k < spectrum.eigenvalues.size(); ++k) {
        os << k << ',' << format_double(spectrum.eigenvalues[k]) << ','
           << (static_cast<std::size_t>(k) < spectrum.rank ? 1 : 0) << '\n';
    }
}

std::string spectrum_to_json(const Spectrum &spectrum)
{
    nlohmann::json j;
    j["eigenvalues"] = std::vector<double>(spectrum.eigenvalues.data(),
                                           spectrum.eigenvalues.data() + spectrum.eigenvalues.size());
    j["M"] = spectrum.rank;
    j["threshold"] = spectrum.threshold;
    j["smallest_raw"] = spectrum.smallest_raw;
    return j.dump();
}

} // namespace qrobust
