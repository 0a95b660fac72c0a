#pragma once

#include <charconv>
#include <string>

namespace tubeswarm {

/// Shortest decimal that round-trips to the same double.
inline std::string formatDouble(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace tubeswarm
