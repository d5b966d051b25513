#pragma once

#include <stdexcept>
#include <string>

namespace qrobust {

// Codes mirror qr_status in the public C header; keep the numbering in sync.
enum class ErrorCode : int {
    ok = 0,
    invalid_grid = 1,
    invalid_parameter = 2,
    shape_mismatch = 3,
    invalid_input = 4,
    invalid_distortion = 5,
    not_at_optimum = 6,
    invalid_spectrum = 7,
    degenerate_inversion = 8,
    ambiguous_inversion = 9,
    insufficient_data = 10,
    no_optimum_found = 11,
    monotonicity_violation = 12,
    empty_input = 13,
    io_error = 14,
    internal = 99,
};

const char *error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string &what) : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string &what) { throw Error(code, what); }

inline void require(bool condition, ErrorCode code, const std::string &what)
{
    if (!condition) {
        fail(code, what);
    }
}

} // namespace qrobust
