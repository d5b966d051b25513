#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace qrobust {

/// Uniform grid on [0, T] with N samples. The last sample time is T exactly.
class TimeGrid {
public:
    TimeGrid(double final_time, std::size_t samples);

    double final_time() const noexcept { return final_time_; }
    std::size_t size() const noexcept { return samples_; }
    double dt() const noexcept { return dt_; }
    double time(std::size_t n) const noexcept;
    std::size_t interior_size() const noexcept { return samples_ - 2; }

    bool operator==(const TimeGrid &) const = default;

private:
    double final_time_;
    std::size_t samples_;
    double dt_;
};

/// Real control sampled on a TimeGrid. Endpoint samples are treated as pinned.
class ControlPulse {
public:
    ControlPulse(TimeGrid grid, std::vector<double> values);

    static ControlPulse constant(TimeGrid grid, double value);
    static ControlPulse linear_ramp(TimeGrid grid, double start, double end);

    const TimeGrid &grid() const noexcept { return grid_; }
    std::span<const double> values() const noexcept { return values_; }
    std::size_t size() const noexcept { return values_.size(); }
    double operator[](std::size_t n) const { return values_[n]; }

    /// Pulse plus a distortion vector of the same length. The distortion must vanish at both endpoints.
    ControlPulse perturbed(std::span<const double> delta) const;

    /// Interior samples u_2 ... u_{N-1}.
    std::vector<double> interior() const;
    ControlPulse with_interior(std::span<const double> interior) const;

private:
    TimeGrid grid_;
    std::vector<double> values_;
};

struct SingleFrequency {
    double amplitude = 0.0;
    int rate = 1;
};

struct FourierSum {
    std::vector<double> amplitudes;
    std::uint64_t seed = 0;

    /// K harmonics with amplitudes drawn uniformly from [-max_amplitude, max_amplitude].
    static FourierSum random(std::size_t harmonics, double max_amplitude, std::uint64_t seed);
};

using DistortionSpec = std::variant<SingleFrequency, FourierSum>;

std::vector<double> time_derivative(const ControlPulse &pulse);

/// delta u_n = a sin(kappa 2 pi t_n / T) u_dot(t_n)
std::vector<double> single_frequency_distortion(const ControlPulse &base, double amplitude, int rate);

/// delta u_n = sum_k c_k sin(k pi t_n / T)
std::vector<double> fourier_distortion(const TimeGrid &grid, const FourierSum &spec);

std::vector<double> generate_distortion(const ControlPulse &base, const DistortionSpec &spec);

struct ImplementabilityWeights {
    double bandwidth = 1.0;
    double slew = 0.0;
    double amplitude = 0.0;
};

struct ImplementabilityMeasures {
    double bandwidth = 0.0; // 99% spectral-power frequency of (u - linear ramp), in 1/time
    double max_slew = 0.0;  // max |u_dot|
    double max_amplitude = 0.0;
};

ImplementabilityMeasures implementability_measures(const ControlPulse &pulse);
double implementability_score(const ControlPulse &pulse, const ImplementabilityWeights &weights);

void write_pulse_csv(std::ostream &os, const ControlPulse &pulse);
ControlPulse read_pulse_csv(std::istream &is);
std::string pulse_to_json(const ControlPulse &pulse);
ControlPulse pulse_from_json(const std::string &text);

} // namespace qrobust
