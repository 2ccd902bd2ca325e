#pragma once

#include <charconv>
#include <cmath>
#include <string>
#include <system_error>

namespace beatosc {

/// Shortest decimal text that round-trips to the same double; locale-free.
inline std::string format_double(double value) {
    if (std::isnan(value)) {
        return "nan";
    }
    if (std::isinf(value)) {
        return value > 0 ? "inf" : "-inf";
    }
    char buffer[32];
    const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
    return std::string(buffer, result.ptr);
}

/// Shortest fixed-notation text (no exponent), for human-facing messages.
inline std::string format_fixed(double value) {
    if (!std::isfinite(value)) {
        return format_double(value);
    }
    char buffer[400];
    const auto result =
        std::to_chars(buffer, buffer + sizeof(buffer), value, std::chars_format::fixed);
    return std::string(buffer, result.ptr);
}

}  // namespace beatosc
