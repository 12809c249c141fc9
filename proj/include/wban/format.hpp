#pragma once

#include <charconv>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>

namespace wban::fmt {

// Shortest representation that parses back to the same double.
inline std::string shortest(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

inline std::string fixed(double v, int decimals) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, decimals);
    std::string out(buf, end);
    if (out.starts_with("-") && out.find_first_not_of("-0.") == std::string::npos) {
        out.erase(0, 1); // no "-0.00"
    }
    return out;
}

inline std::string significant(double v, int digits) {
    char buf[64];
    auto [end, ec] =
        std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, digits);
    return std::string(buf, end);
}

// Value rounded to `digits` significant digits, as a double.
inline double round_significant(double v, int digits) {
    if (!std::isfinite(v) || v == 0.0) {
        return v;
    }
    const std::string s = significant(v, digits);
    double out = 0.0;
    std::from_chars(s.data(), s.data() + s.size(), out);
    return out;
}

inline double round_decimals(double v, int decimals) {
    if (!std::isfinite(v)) {
        return v;
    }
    const std::string s = fixed(v, decimals);
    double out = 0.0;
    std::from_chars(s.data(), s.data() + s.size(), out);
    return out;
}

inline std::string_view trim(std::string_view s) noexcept {
    constexpr std::string_view ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

inline std::optional<double> parse_double(std::string_view s) noexcept {
    s = trim(s);
    if (s.starts_with('+')) {
        s.remove_prefix(1);
    }
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
        return std::nullopt;
    }
    return v;
}

} // namespace wban::fmt
