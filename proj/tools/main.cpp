#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "artifacts.hpp"
#include "commands.hpp"
#include "config.hpp"
#include "handles.hpp"

namespace {

struct Overrides {
    std::string config_path;
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> backend;
    std::optional<std::size_t> threads;
};

qrcli::RunConfig load(const Overrides &o)
{
    qrcli::RunConfig c = o.config_path.empty() ? qrcli::default_config("landau_zener")
                                               : qrcli::parse_config(qrcli::read_file(o.config_path));
    if (o.out) {
        if (o.out->empty()) {
            throw qrcli::ConfigError("--out must not be empty");
        }
        c.output_dir = *o.out;
    }
    if (o.seed) {
        c.seed = *o.seed;
    }
    if (o.backend) {
        if (*o.backend == "gateaux") {
            c.backend = QR_BACKEND_GATEAUX;
        } else if (*o.backend == "fd") {
            c.backend = QR_BACKEND_FINITE_DIFFERENCE;
        } else if (*o.backend == "bfgs") {
            c.backend = QR_BACKEND_BFGS;
        } else {
            throw qrcli::ConfigError("--backend must be gateaux, fd or bfgs");
        }
    }
    if (o.threads) {
        if (*o.threads < 1) {
            throw qrcli::ConfigError("--threads must be at least 1");
        }
        c.threads = *o.threads;
    }
    return c;
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"Robustness analysis of optimal control pulses"};
    app.require_subcommand(1);
    Overrides o;
    std::string figure;
    app.add_option("--config", o.config_path, "JSON run configuration");
    app.add_option("--out", o.out, "output directory (overrides config)");
    app.add_option("--seed", o.seed, "random seed (overrides config)");
    app.add_option("--backend", o.backend, "Hessian backend: gateaux, fd or bfgs");
    app.add_option("--threads", o.threads, "worker threads");

    auto *optimize = app.add_subcommand("optimize", "find the optimal pulse");
    auto *hessian = app.add_subcommand("hessian", "Hessian and spectrum at the optimum");
    auto *calibrate = app.add_subcommand("calibrate", "calibrate the infidelity tolerance");
    auto *ensemble = app.add_subcommand("ensemble", "generate and rank an ensemble of tolerated pulses");
    auto *verify = app.add_subcommand("verify", "check ensemble pulses by full propagation");
    auto *reproduce = app.add_subcommand("reproduce", "write the data series of a figure");
    reproduce->add_option("figure", figure, "fig2a, fig2b or fig3")->required();
    for (auto *sub : {optimize, hessian, calibrate, ensemble, verify, reproduce}) {
        sub->fallthrough();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        const auto config = load(o);
        if (optimize->parsed()) {
            return qrcli::cmd_optimize(config);
        }
        if (hessian->parsed()) {
            return qrcli::cmd_hessian(config);
        }
        if (calibrate->parsed()) {
            return qrcli::cmd_calibrate(config);
        }
        if (ensemble->parsed()) {
            return qrcli::cmd_ensemble(config);
        }
        if (verify->parsed()) {
            return qrcli::cmd_verify(config);
        }
        return qrcli::cmd_reproduce(config, figure);
    } catch (const qrcli::ConfigError &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const qrcli::ApiError &e) {
        std::cerr << "error: " << e.what() << "\n";
        return qrcli::exit_code_for(e.status());
    } catch (const qrcli::DataError &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
