#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include <json.hpp>

#include "check_error.hpp"
#include "fixtures.hpp"
#include "hessian.hpp"

using namespace qrobust;

namespace {

HessianMatrix from_entries(const Eigen::MatrixXd &m)
{
    HessianMatrix h;
    h.entries = m;
    h.samples = static_cast<std::size_t>(m.rows()) + 2;
    h.dt = 0.1;
    return h;
}

double max_abs(const Eigen::MatrixXd &m) { return m.cwiseAbs().maxCoeff(); }

} // namespace

TEST_CASE("finite differences are exact on a quadratic toy objective")
{
    const TimeGrid g(1.0, 8);
    const auto center = ControlPulse::constant(g, 0.5);
    const std::vector<double> c{0.0, 1.0, 2.5, 4.0, 0.5, 3.0, 7.0, 0.0};
    const CostFunction cost = [&](const ControlPulse &p) {
        double s = 0.0;
        for (std::size_t n = 0; n < p.size(); ++n) {
            s += 0.5 * c[n] * (p[n] - 0.5) * (p[n] - 0.5);
        }
        return s;
    };
    const auto h = finite_difference_hessian(cost, center, 1e-3);
    REQUIRE(h.size() == 6);
    for (Eigen::Index i = 0; i < 6; ++i) {
        for (Eigen::Index j = 0; j < 6; ++j) {
            CHECK(std::abs(h.entries(i, j) - (i == j ? c[static_cast<std::size_t>(i) + 1] : 0.0)) <= 1e-8);
        }
    }

    const GradientFunction gradient = [&](const ControlPulse &p) {
        std::vector<double> out(p.size());
        for (std::size_t n = 0; n < p.size(); ++n) {
            out[n] = c[n] * (p[n] - 0.5);
        }
        return out;
    };
    HessianOptions opts;
    opts.backend = HessianBackend::bfgs;
    const auto s = secant_hessian(gradient, center, opts);
    CHECK(max_abs(s.entries - h.entries) <= 1e-6);
}

TEST_CASE("Landau-Zener Hessian integrity and backend agreement")
{
    const auto &problem = fixtures::lz_problem();
    const auto &opt = fixtures::lz_optimum_64();
    REQUIRE(gradient_norm(problem, opt) <= 1e-6);
    HessianOptions o;
    const auto hg = build_hessian(problem, opt, o);
    o.backend = HessianBackend::finite_difference;
    const auto hf = build_hessian(problem, opt, o);
    o.backend = HessianBackend::bfgs;
    const auto hb = build_hessian(problem, opt, o);
    const double scale = max_abs(hg.entries);
    CHECK(max_abs(hg.entries - hf.entries) <= 1e-4 * scale);
    CHECK(max_abs(hg.entries - hb.entries) <= 1e-4 * scale);
    CHECK(hg.backend == HessianBackend::gateaux);
    CHECK(hf.backend == HessianBackend::finite_difference);
    CHECK(hb.backend == HessianBackend::bfgs);
    for (const auto *h : {&hg, &hf, &hb}) {
        CHECK(symmetry_error(h->entries) <= 1e-8);
        const auto s = eigen_spectrum(*h);
        CHECK(s.smallest_raw >= -1e-8 * s.eigenvalues[0]);
        CHECK(h->warnings.empty());
    }
    CHECK(hg.samples == 64);
    CHECK(hg.dt == doctest::Approx(10.0 / 63.0));
}

TEST_CASE("Hessian requires a verified optimum")
{
    const auto ramp = ControlPulse::linear_ramp(TimeGrid(10.0, 32), -10.0, 10.0);
    CHECK_ERROR_CODE(build_hessian(fixtures::lz_problem(), ramp, {}), ErrorCode::not_at_optimum);
    HessianOptions relaxed;
    relaxed.require_optimum = false;
    CHECK(build_hessian(fixtures::lz_problem(), ramp, relaxed).size() == 30);
}

TEST_CASE("harmonic Hessian has at most two directions of curvature")
{
    const auto &h = fixtures::harmonic_hessian();
    const auto s = eigen_spectrum(h, 1e-8);
    CHECK(s.rank <= 2);
    CHECK(s.rank >= 1);
    const auto r1 = rank_one_summary(h);
    CHECK(r1.rank == s.rank);
    CHECK(r1.approximation_valid == (r1.rank == 1 && r1.discrepancy <= 0.1));
    CHECK(std::isfinite(r1.discrepancy));
}

TEST_CASE("quadratic form")
{
    const auto id = from_entries(Eigen::MatrixXd::Identity(2, 2));
    CHECK(quadratic_form(id, std::vector<double>{0.0, 0.0}) == 0.0);
    CHECK(quadratic_form(id, std::vector<double>{3.0, 4.0}) == 25.0);
    CHECK(quadratic_form_full(id, std::vector<double>{0.0, 3.0, 4.0, 0.0}) == 25.0);
    CHECK_ERROR_CODE(quadratic_form(id, std::vector<double>{1.0}), ErrorCode::shape_mismatch);

    std::mt19937_64 rng(2);
    const auto &h = fixtures::lz_hessian_128();
    const auto du = fixtures::random_distortion(TimeGrid(10.0, 128), rng, 0.01);
    std::vector<double> du2(du);
    for (auto &v : du2) {
        v *= 2.0;
    }
    CHECK(quadratic_form_full(h, du2) == doctest::Approx(4.0 * quadratic_form_full(h, du)).epsilon(1e-12));
    CHECK(quadratic_form_full(h, du) >= 0.0);
}

TEST_CASE("eigen spectrum")
{
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(3, 3);
    d.diagonal() << 2.0, 1.0, 0.0;
    const auto s = eigen_spectrum(from_entries(d), 1e-6);
    CHECK(s.rank == 2);
    CHECK(s.eigenvalues[0] == doctest::Approx(2.0));
    CHECK(s.eigenvalues[1] == doctest::Approx(1.0));
    CHECK(s.nonzero() == std::vector<double>{s.eigenvalues[0], s.eigenvalues[1]});

    Eigen::VectorXd v(4);
    v << 1.0, 2.0, 1.0, 1.0; // |v|^2 = 7
    const auto r = eigen_spectrum(from_entries(v * v.transpose()), 1e-8);
    CHECK(r.rank == 1);
    CHECK(r.eigenvalues[0] == doctest::Approx(7.0).epsilon(1e-13));

    const auto &h = fixtures::lz_hessian_128();
    const auto full = eigen_spectrum(h);
    CHECK(full.rank <= h.size());
    for (Eigen::Index k = 1; k < full.eigenvalues.size(); ++k) {
        CHECK(full.eigenvalues[k] <= full.eigenvalues[k - 1]);
        CHECK(full.eigenvalues[k] >= 0.0);
    }
    const Eigen::MatrixXd rebuilt =
        full.eigenvectors * full.eigenvalues.asDiagonal() * full.eigenvectors.transpose();
    CHECK((h.entries - rebuilt).norm() <= 1e-8 * h.entries.norm());
}

TEST_CASE("rank-one summary")
{
    const auto flat = rank_one_summary(from_entries(Eigen::MatrixXd::Constant(5, 5, 0.3)));
    CHECK(flat.mean_entry == doctest::Approx(0.3));
    CHECK(flat.rank_one_value == doctest::Approx(1.5));
    CHECK(flat.largest == doctest::Approx(1.5));
    CHECK(flat.rank == 1);
    CHECK(flat.approximation_valid);

    const auto id = rank_one_summary(from_entries(Eigen::MatrixXd::Identity(5, 5)));
    CHECK(id.mean_entry == doctest::Approx(0.2));
    CHECK(id.rank_one_value == doctest::Approx(1.0));
    CHECK(id.largest == doctest::Approx(1.0));
    CHECK(id.rank == 5);
    CHECK_FALSE(id.approximation_valid);
}

TEST_CASE("second-order model fidelity")
{
    auto check_family = [](const ControlProblem &problem, const ControlPulse &opt, const HessianMatrix &h,
                            const std::vector<std::vector<double>> &directions) {
        int small = 0;
        for (const auto &unit : directions) {
            const double q1 = quadratic_form_full(h, unit);
            for (double target : {0.001, 0.004, 0.02, 0.045}) {
                std::vector<double> du(unit);
                for (auto &x : du) {
                    x *= std::sqrt(2.0 * target / q1);
                }
                const double exact = problem.cost(opt.perturbed(du));
                const double rel = std::abs(exact - 0.5 * quadratic_form_full(h, du)) / std::max(exact, 1e-12);
                if (exact <= 0.05) {
                    CHECK(rel <= 0.15);
                }
                if (exact <= 0.005) {
                    CHECK(rel <= 0.02);
                    ++small;
                }
            }
        }
        CHECK(small >= static_cast<int>(directions.size()));
    };

    std::mt19937_64 rng(31);
    SUBCASE("harmonic trap, random directions")
    {
        const auto &opt = fixtures::harmonic_optimum();
        std::vector<std::vector<double>> dirs;
        for (int k = 0; k < 10; ++k) {
            dirs.push_back(fixtures::random_distortion(opt.grid(), rng, 1.0));
        }
        for (int kappa = 1; kappa <= 4; ++kappa) {
            dirs.push_back(single_frequency_distortion(opt, 1.0, kappa));
        }
        check_family(fixtures::harmonic_problem(), opt, fixtures::harmonic_hessian(), dirs);
    }
    SUBCASE("Landau-Zener, single-frequency family")
    {
        const auto &opt = fixtures::lz_optimum_128();
        check_family(fixtures::lz_problem(), opt, fixtures::lz_hessian_128(),
                     {single_frequency_distortion(opt, 1.0, 1), single_frequency_distortion(opt, 1.0, 3)});
    }
}

TEST_CASE("second-order remainder is cubic on Landau-Zener")
{
    const auto &problem = fixtures::lz_problem();
    const auto &opt = fixtures::lz_optimum_128();
    const auto &h = fixtures::lz_hessian_128();
    std::mt19937_64 rng(32);
    const auto du = fixtures::random_distortion(opt.grid(), rng, 0.02);
    auto remainder = [&](double s) {
        std::vector<double> v(du);
        for (auto &x : v) {
            x *= s;
        }
        return std::abs(problem.cost(opt.perturbed(v)) - 0.5 * quadratic_form_full(h, v));
    };
    CHECK(remainder(1.0) / remainder(0.5) == doctest::Approx(8.0).epsilon(0.15));
}

TEST_CASE("Hessian and spectrum export")
{
    const auto &h = fixtures::lz_hessian_128();
    std::ostringstream csv;
    write_hessian_csv(csv, h);
    std::istringstream lines(csv.str());
    std::string header, first;
    std::getline(lines, header);
    std::getline(lines, first);
    CHECK(header.rfind("# N=128,dt=", 0) == 0);
    CHECK(header.find("backend=gateaux") != std::string::npos);
    CHECK(std::count(first.begin(), first.end(), ',') == 125);

    const auto back = hessian_from_json(hessian_to_json(h));
    CHECK(back.entries == h.entries);
    CHECK(back.samples == h.samples);
    CHECK(back.dt == h.dt);
    CHECK(back.backend == h.backend);

    const auto spec = eigen_spectrum(h);
    std::ostringstream scsv;
    write_spectrum_csv(scsv, spec);
    CHECK(scsv.str().rfind("index,eigenvalue,above_threshold\n", 0) == 0);
    const auto j = nlohmann::json::parse(spectrum_to_json(spec));
    CHECK(j.at("M").get<std::size_t>() == spec.rank);
    CHECK(j.at("eigenvalues").size() == h.size());
    CHECK_ERROR_CODE(hessian_from_json("{\"N\": 4}"), ErrorCode::io_error);
}

TEST_CASE("backend names")
{
    CHECK(parse_backend("gateaux") == HessianBackend::gateaux);
    CHECK(parse_backend("fd") == HessianBackend::finite_difference);
    CHECK(parse_backend("finite_difference") == HessianBackend::finite_difference);
    CHECK(parse_backend("bfgs") == HessianBackend::bfgs);
    CHECK_ERROR_CODE(parse_backend("newton"), ErrorCode::invalid_parameter);
}
