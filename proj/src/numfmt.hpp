#pragma once

#include <charconv>
#include <string>
#include <system_error>

namespace qrobust {

// Shortest decimal that round-trips to the same double.
inline std::string format_double(double value)
{
    char buffer[64];
    auto [end, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
    if (ec != std::errc{}) {
        return "nan";
    }
    return std::string(buffer, end);
}

} // namespace qrobust
