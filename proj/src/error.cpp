#include "error.hpp"

namespace qrobust {

const char *error_code_name(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::ok:
        return "ok";
    case ErrorCode::invalid_grid:
        return "invalid_grid";
    case ErrorCode::invalid_parameter:
        return "invalid_parameter";
    case ErrorCode::shape_mismatch:
        return "shape_mismatch";
    case ErrorCode::invalid_input:
        return "invalid_input";
    case ErrorCode::invalid_distortion:
        return "invalid_distortion";
    case ErrorCode::not_at_optimum:
        return "not_at_optimum";
    case ErrorCode::invalid_spectrum:
        return "invalid_spectrum";
    case ErrorCode::degenerate_inversion:
        return "degenerate_inversion";
    case ErrorCode::ambiguous_inversion:
        return "ambiguous_inversion";
    case ErrorCode::insufficient_data:
        return "insufficient_data";
    case ErrorCode::no_optimum_found:
        return "no_optimum_found";
    case ErrorCode::monotonicity_violation:
        return "monotonicity_violation";
    case ErrorCode::empty_input:
        return "empty_input";
    case ErrorCode::io_error:
        return "io_error";
    case ErrorCode::internal:
        return "internal";
    }
    return "unknown";
}

} // namespace qrobust
