#include "pulse.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "error.hpp"
#include "numfmt.hpp"

namespace qrobust {

TimeGrid::TimeGrid(double final_time, std::size_t samples) : final_time_(final_time), samples_(samples), dt_(0.0)
{
    require(std::isfinite(final_time) && final_time > 0.0, ErrorCode::invalid_grid,
            "time grid: final time must be positive and finite");
    require(samples >= 4, ErrorCode::invalid_grid,
            "time grid: need at least 4 samples (got " + std::to_string(samples) + ")");
    dt_ = final_time / static_cast<double>(samples - 1);
}

double TimeGrid::time(std::size_t n) const noexcept
{
    if (n + 1 == samples_) {
        return final_time_;
    }
    return static_cast<double>(n) * dt_;
}

ControlPulse::ControlPulse(TimeGrid grid, std::vector<double> values) : grid_(grid), values_(std::move(values))
{
    require(values_.size() == grid_.size(), ErrorCode::shape_mismatch,
            "control pulse: " + std::to_string(values_.size()) + " values for a grid of " +
                std::to_string(grid_.size()) + " samples");
    for (double v : values_) {
        require(std::isfinite(v), ErrorCode::invalid_input, "control pulse: non-finite sample");
    }
}

ControlPulse ControlPulse::constant(TimeGrid grid, double value)
{
    return ControlPulse(grid, std::vector<double>(grid.size(), value));
}

ControlPulse ControlPulse::linear_ramp(TimeGrid grid, double start, double end)
{
    std::vector<double> values(grid.size());
    for (std::size_t n = 0; n < grid.size(); ++n) {
        values[n] = start + (end - start) * grid.time(n) / grid.final_time();
    }
    values.back() = end;
    return ControlPulse(grid, std::move(values));
}

ControlPulse ControlPulse::perturbed(std::span<const double> delta) const
{
    require(delta.size() == values_.size(), ErrorCode::shape_mismatch, "perturbed: distortion length mismatch");
    require(delta.front() == 0.0 && delta.back() == 0.0, ErrorCode::invalid_distortion,
            "perturbed: distortion must vanish at both endpoints");
    std::vector<double> out(values_);
    for (std::size_t n = 0; n < out.size(); ++n) {
        out[n] += delta[n];
    }
    return ControlPulse(grid_, std::move(out));
}

std::vector<double> ControlPulse::interior() const { return {values_.begin() + 1, values_.end() - 1}; }

ControlPulse ControlPulse::with_interior(std::span<const double> interior) const
{
    require(interior.size() + 2 == values_.size(), ErrorCode::shape_mismatch, "with_interior: length mismatch");
    std::vector<double> out(values_);
    std::copy(interior.begin(), interior.end(), out.begin() + 1);
    return ControlPulse(grid_, std::move(out));
}

FourierSum FourierSum::random(std::size_t harmonics, double max_amplitude, std::uint64_t seed)
{
    require(harmonics >= 1, ErrorCode::invalid_parameter, "fourier sum: need at least one harmonic");
    require(max_amplitude >= 0.0, ErrorCode::invalid_parameter, "fourier sum: negative amplitude bound");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-max_amplitude, max_amplitude);
    FourierSum out;
    out.seed = seed;
    out.amplitudes.resize(harmonics);
    for (auto &c : out.amplitudes) {
        c = dist(rng);
    }
    return out;
}

std::vector<double> time_derivative(const ControlPulse &pulse)
{
    const auto u = pulse.values();
    const std::size_t n = u.size();
    require(n >= 4, ErrorCode::invalid_grid, "time_derivative: need at least 4 samples");
    const double h = pulse.grid().dt();
    std::vector<double> d(n);
    d[0] = (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * h);
    for (std::size_t k = 1; k + 1 < n; ++k) {
        d[k] = (u[k + 1] - u[k - 1]) / (2.0 * h);
    }
    d[n - 1] = (3.0 * u[n - 1] - 4.0 * u[n - 2] + u[n - 3]) / (2.0 * h);
    return d;
}

std::vector<double> single_frequency_distortion(const ControlPulse &base, double amplitude, int rate)
{
    require(rate > 0, ErrorCode::invalid_parameter, "single-frequency distortion: rate must be a positive integer");
    require(std::isfinite(amplitude), ErrorCode::invalid_parameter, "single-frequency distortion: amplitude not finite");
    const auto &grid = base.grid();
    const auto velocity = time_derivative(base);
    std::vector<double> d(grid.size(), 0.0);
    for (std::size_t n = 1; n + 1 < grid.size(); ++n) {
        const double phase = 2.0 * std::numbers::pi * rate * grid.time(n) / grid.final_time();
        d[n] = amplitude * std::sin(phase) * velocity[n];
    }
    return d;
}

std::vector<double> fourier_distortion(const TimeGrid &grid, const FourierSum &spec)
{
    require(!spec.amplitudes.empty(), ErrorCode::invalid_parameter, "fourier distortion: empty amplitude array");
    std::vector<double> d(grid.size(), 0.0);
    for (std::size_t n = 1; n + 1 < grid.size(); ++n) {
        const double x = std::numbers::pi * grid.time(n) / grid.final_time();
        double sum = 0.0;
        for (std::size_t k = 0; k < spec.amplitudes.size(); ++k) {
            sum += spec.amplitudes[k] * std::sin(static_cast<double>(k + 1) * x);
        }
        d[n] = sum;
    }
    return d;
}

std::vector<double> generate_distortion(const ControlPulse &base, const DistortionSpec &spec)
{
    if (const auto *sf = std::get_if<SingleFrequency>(&spec)) {
        return single_frequency_distortion(base, sf->amplitude, sf->rate);
    }
    return fourier_distortion(base.grid(), std::get<FourierSum>(spec));
}

namespace {

double spectral_bandwidth(const ControlPulse &pulse)
{
    const auto u = pulse.values();
    const auto &grid = pulse.grid();
    const std::size_t n = u.size();
    std::vector<double> residual(n);
    for (std::size_t k = 0; k < n; ++k) {
        residual[k] = u[k] - (u[0] + (u[n - 1] - u[0]) * grid.time(k) / grid.final_time());
    }
    // One-sided DFT power; bins above Nyquist mirror the lower half.
    const std::size_t bins = n / 2 + 1;
    std::vector<double> power(bins, 0.0);
    for (std::size_t k = 0; k < bins; ++k) {
        std::complex<double> acc{0.0, 0.0};
        for (std::size_t m = 0; m < n; ++m) {
            const double angle = -2.0 * std::numbers::pi * static_cast<double>(k * m % n) / static_cast<double>(n);
            acc += residual[m] * std::polar(1.0, angle);
        }
        power[k] = std::norm(acc);
    }
    double total = 0.0;
    for (double p : power) {
        total += p;
    }
    if (total <= 0.0) {
        return 0.0;
    }
    const double period = static_cast<double>(n) * grid.dt();
    double cumulative = 0.0;
    for (std::size_t k = 0; k < bins; ++k) {
        cumulative += power[k];
        if (cumulative >= 0.99 * total) {
            return static_cast<double>(k) / period;
        }
    }
    return static_cast<double>(bins - 1) / period;
}

} // namespace

ImplementabilityMeasures implementability_measures(const ControlPulse &pulse)
{
    ImplementabilityMeasures m;
    m.bandwidth = spectral_bandwidth(pulse);
    for (double v : time_derivative(pulse)) {
        m.max_slew = std::max(m.max_slew, std::abs(v));
    }
    for (double v : pulse.values()) {
        m.max_amplitude = std::max(m.max_amplitude, std::abs(v));
    }
    return m;
}

double implementability_score(const ControlPulse &pulse, const ImplementabilityWeights &weights)
{
    require(weights.bandwidth >= 0.0 && weights.slew >= 0.0 && weights.amplitude >= 0.0,
            ErrorCode::invalid_parameter, "implementability score: weights must be non-negative");
    const auto m = implementability_measures(pulse);
    return weights.bandwidth * m.bandwidth + weights.slew * m.max_slew + weights.amplitude * m.max_amplitude;
}

void write_pulse_csv(std::ostream &os, const ControlPulse &pulse)
{
    os << "t,u\n";
    for (std::size_t n = 0; n < pulse.size(); ++n) {
        os << format_double(pulse.grid().time(n)) << ',' << format_double(pulse[n]) << '\n';
    }
}

ControlPulse read_pulse_csv(std::istream &is)
{
    std::string line;
    require(static_cast<bool>(std::getline(is, line)), ErrorCode::io_error, "pulse csv: empty input");
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    require(line == "t,u", ErrorCode::io_error, "pulse csv: expected header 't,u'");
    std::vector<double> times;
    std::vector<double> values;
    while (std::getline(is, line)) {
        if (line.empty() || line == "\r") {
            continue;
        }
        const auto comma = line.find(',');
        require(comma != std::string::npos, ErrorCode::io_error, "pulse csv: malformed row '" + line + "'");
        try {
            times.push_back(std::stod(line.substr(0, comma)));
            values.push_back(std::stod(line.substr(comma + 1)));
        } catch (const std::exception &) {
            fail(ErrorCode::io_error, "pulse csv: malformed row '" + line + "'");
        }
    }
    require(times.size() >= 4, ErrorCode::invalid_grid, "pulse csv: need at least 4 rows");
    require(times.front() == 0.0, ErrorCode::invalid_grid, "pulse csv: first time must be 0");
    TimeGrid grid(times.back(), times.size());
    for (std::size_t n = 0; n < times.size(); ++n) {
        require(std::abs(times[n] - grid.time(n)) <= 1e-9 * grid.final_time(), ErrorCode::invalid_grid,
                "pulse csv: times are not on a uniform grid");
    }
    return ControlPulse(grid, std::move(values));
}

std::string pulse_to_json(const ControlPulse &pulse)
{
    nlohmann::json j;
    j["T"] = pulse.grid().final_time();
    j["N"] = pulse.size();
    j["values"] = std::vector<double>(pulse.values().begin(), pulse.values().end());
    return j.dump();
}

ControlPulse pulse_from_json(const std::string &text)
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
        const double T = j.at("T").get<double>();
        const auto n = j.at("N").get<std::size_t>();
        auto values = j.at("values").get<std::vector<double>>();
        require(values.size() == n, ErrorCode::shape_mismatch, "pulse json: N does not match values length");
        return ControlPulse(TimeGrid(T, n), std::move(values));
    } catch (const nlohmann::json::exception &e) {
        fail(ErrorCode::io_error, std::string("pulse json: ") + e.what());
    }
}

} // namespace qrobust
