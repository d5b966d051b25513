#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "qrobust/qrobust.h"

namespace qrcli {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct FamilyConfig {
    std::string label;
    qr_family_kind kind = QR_SINGLE_FREQUENCY;
    int rate = 1;
    std::size_t harmonics = 5;
    std::vector<double> amplitudes; // fourier: explicit amplitudes, else random from seed
    std::uint64_t seed = 7;
};

struct RunConfig {
    std::string model = "landau_zener";
    // landau_zener
    double coupling = 1.0;
    double u_start = -10.0;
    double u_end = 10.0;
    qr_objective objective = QR_PHASE_SENSITIVE;
    // harmonic
    double displacement = 5.0;
    std::size_t fock_dimension = 64;

    double final_time = 10.0;
    std::size_t samples = 128;

    qr_krotov_config optimizer{};

    qr_backend backend = QR_BACKEND_GATEAUX;
    double optimum_tolerance = 1e-6;
    double fd_step = 0.0;
    double rel_threshold = 1e-8;
    std::optional<qr_backend> compare_with;
    double probe_tolerance = 1e-6;
    std::size_t max_directions = 0;

    std::vector<FamilyConfig> families;
    std::vector<double> strengths; // explicit; empty selects the infidelity schedule
    double schedule_min = 1e-4;
    double schedule_max = 0.2;
    std::size_t schedule_points = 20;
    qr_fit_mode fit_mode = QR_FIT_FIXED_HALF;
    double max_infidelity = 0.2;

    double target_infidelity = 0.01;
    std::size_t ensemble_count = 200;
    qr_sampler sampler{};
    qr_weights weights{};
    double slack = 0.25;

    std::vector<double> fig2a_amplitudes;
    std::size_t fig3_realizations = 50;

    std::uint64_t seed = 42;
    std::size_t threads = 1;
    std::string output_dir = "out";
};

/// Parses and validates a configuration document. Unknown keys and out-of-range values raise ConfigError.
RunConfig parse_config(const std::string &text);
RunConfig default_config(const std::string &model);

nlohmann::json config_to_json(const RunConfig &config);

} // namespace qrcli
