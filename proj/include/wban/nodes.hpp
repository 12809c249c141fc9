#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "wban/error.hpp"

namespace wban {

// Radio placements of the sleeping-subject measurement campaign, in table
// order. The numeric value doubles as a stable ordering key.
enum class Position : std::uint8_t { NTB_h = 0, L_w, H_f, R_w, H_b, L_a, NTB_f };

enum class Role : std::uint8_t { transceiver, receiver };

enum class LinkClass : std::uint8_t { on_body, off_body };

inline constexpr std::array<Position, 7> kAllPositions = {
    Position::NTB_h, Position::L_w, Position::H_f, Position::R_w,
    Position::H_b,   Position::L_a, Position::NTB_f};

inline constexpr std::array<Position, 3> kTransceivers = {Position::NTB_h, Position::L_w,
                                                          Position::H_f};

constexpr Role role_of(Position p) noexcept {
    switch (p) {
    case Position::NTB_h:
    case Position::L_w:
    case Position::H_f:
        return Role::transceiver;
    default:
        return Role::receiver;
    }
}

constexpr bool is_transceiver(Position p) noexcept { return role_of(p) == Role::transceiver; }

constexpr std::string_view to_string(Position p) noexcept {
    constexpr std::array<std::string_view, 7> names = {"NTB_h", "L_w", "H_f", "R_w",
                                                       "H_b",   "L_a", "NTB_f"};
    return names[static_cast<std::size_t>(p)];
}

constexpr std::string_view to_string(LinkClass c) noexcept {
    return c == LinkClass::on_body ? "on_body" : "off_body";
}

constexpr std::optional<Position> parse_position(std::string_view s) noexcept {
    for (Position p : kAllPositions) {
        if (to_string(p) == s) {
            return p;
        }
    }
    return std::nullopt;
}

inline std::optional<LinkClass> parse_link_class(std::string_view s) noexcept {
    if (s == "on_body") {
        return LinkClass::on_body;
    }
    if (s == "off_body") {
        return LinkClass::off_body;
    }
    return std::nullopt;
}

constexpr bool is_off_body(Position p) noexcept {
    return p == Position::NTB_h || p == Position::NTB_f;
}

// Any link with a bed-side endpoint is off-body.
constexpr LinkClass classify_link(Position a, Position b) noexcept {
    return (is_off_body(a) || is_off_body(b)) ? LinkClass::off_body : LinkClass::on_body;
}

// Ordered measured link. Only a transceiver can appear as tx.
struct LinkKey {
    Position tx;
    Position rx;

    auto operator<=>(const LinkKey&) const = default;

    [[nodiscard]] std::string label() const {
        return std::string(to_string(tx)) + "-" + std::string(to_string(rx));
    }
};

constexpr LinkClass classify_link(const LinkKey& k) noexcept { return classify_link(k.tx, k.rx); }

inline LinkKey make_link(Position tx, Position rx) {
    if (!is_transceiver(tx)) {
        throw RoleError("node " + std::string(to_string(tx)) + " is receiver-only and cannot transmit");
    }
    if (tx == rx) {
        throw RoleError("link endpoints must differ (" + std::string(to_string(tx)) + ")");
    }
    return LinkKey{tx, rx};
}

// "H_f-L_a" -> LinkKey. Throws ConfigError on malformed labels.
inline LinkKey parse_link_label(std::string_view s) {
    const auto dash = s.find('-');
    if (dash == std::string_view::npos) {
        throw ConfigError("link label '" + std::string(s) + "' is not of the form TX-RX");
    }
    const auto tx = parse_position(s.substr(0, dash));
    const auto rx = parse_position(s.substr(dash + 1));
    if (!tx || !rx) {
        throw ConfigError("unknown node in link label '" + std::string(s) + "'");
    }
    return make_link(*tx, *rx);
}

// Every (transceiver, other node) link the campaign topology can measure.
inline std::array<LinkKey, 18> measurable_links() {
    std::array<LinkKey, 18> out{};
    std::size_t i = 0;
    for (Position tx : kTransceivers) {
        for (Position rx : kAllPositions) {
            if (rx != tx) {
                out[i++] = LinkKey{tx, rx};
            }
        }
    }
    return out;
}

} // namespace wban
