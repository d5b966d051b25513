#pragma once

#include <charconv>
#include <memory>
#include <stdexcept>
#include <string>

#include "qrobust/qrobust.h"

namespace qrcli {

class ApiError : public std::runtime_error {
public:
    ApiError(qr_status status, const std::string &message) : std::runtime_error(message), status_(status) {}
    qr_status status() const { return status_; }

private:
    qr_status status_;
};

// Data or convergence problems; exit code 2.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline void check(qr_status status, const char *what)
{
    if (status != QR_OK) {
        throw ApiError(status, std::string(what) + ": " + qr_status_name(status) + ": " + qr_last_error());
    }
}

template <typename T, void (*Free)(T *)>
struct Deleter {
    void operator()(T *p) const { Free(p); }
};

using Problem = std::unique_ptr<qr_problem, Deleter<qr_problem, qr_problem_free>>;
using Pulse = std::unique_ptr<qr_pulse, Deleter<qr_pulse, qr_pulse_free>>;
using Trace = std::unique_ptr<qr_trace, Deleter<qr_trace, qr_trace_free>>;
using Hessian = std::unique_ptr<qr_hessian, Deleter<qr_hessian, qr_hessian_free>>;
using Fit = std::unique_ptr<qr_fit, Deleter<qr_fit, qr_fit_free>>;
using Ensemble = std::unique_ptr<qr_ensemble, Deleter<qr_ensemble, qr_ensemble_free>>;

inline std::string take(char *text)
{
    std::string out = text ? text : "";
    qr_string_free(text);
    return out;
}

inline std::string fmt(double value)
{
    char buffer[64];
    auto [end, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
    return ec == std::errc{} ? std::string(buffer, end) : std::string("nan");
}

} // namespace qrcli
