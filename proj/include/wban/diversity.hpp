#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wban/error.hpp"
#include "wban/format.hpp"
#include "wban/nodes.hpp"
#include "wban/trace.hpp"

namespace wban {

inline constexpr double kDefaultSwitchThresholdDb = -86.0;

// Diversity branch index. The numeric value is the switch-and-examine
// examination order.
enum class Branch : std::uint8_t { direct = 0, relay1 = 1, relay2 = 2 };

enum class Policy : std::uint8_t { DL, SC, SwC };

inline constexpr std::array<Policy, 3> kAllPolicies = {Policy::DL, Policy::SC, Policy::SwC};

constexpr std::string_view to_string(Branch b) noexcept {
    switch (b) {
    case Branch::direct:
        return "direct";
    case Branch::relay1:
        return "relay1";
    default:
        return "relay2";
    }
}

constexpr std::string_view to_string(Policy p) noexcept {
    switch (p) {
    case Policy::DL:
        return "DL";
    case Policy::SC:
        return "SC";
    default:
        return "SwC";
    }
}

inline std::optional<Policy> parse_policy(std::string_view s) noexcept {
    for (Policy p : kAllPolicies) {
        if (to_string(p) == s) {
            return p;
        }
    }
    return std::nullopt;
}

constexpr std::size_t index(Branch b) noexcept { return static_cast<std::size_t>(b); }

constexpr Branch branch_at(std::size_t i) noexcept { return static_cast<Branch>(i % 3); }

// Gain of a decode-and-forward hop pair: the weaker hop limits the branch.
constexpr double two_hop_gain(double h_sr, double h_rd) noexcept { return std::min(h_sr, h_rd); }

// The direct link and two relayed branches for one source -> hub pair.
struct BranchSet {
    Position source{};
    Position dest{};
    Position relay1{};
    Position relay2{};
    double delta_ms = kDefaultDeltaMs;
    std::array<std::vector<double>, 3> gains; // indexed by Branch

    [[nodiscard]] std::size_t size() const noexcept { return gains[0].size(); }
    [[nodiscard]] std::span<const double> h_sd() const noexcept { return gains[0]; }
    [[nodiscard]] std::span<const double> h_sr1d() const noexcept { return gains[1]; }
    [[nodiscard]] std::span<const double> h_sr2d() const noexcept { return gains[2]; }
    [[nodiscard]] std::span<const double> series(Branch b) const noexcept { return gains[index(b)]; }
    [[nodiscard]] std::array<double, 3> at(std::size_t slot) const noexcept {
        return {gains[0][slot], gains[1][slot], gains[2][slot]};
    }
    [[nodiscard]] LinkClass link_class() const noexcept { return classify_link(source, dest); }
    [[nodiscard]] std::string label() const {
        return std::string(to_string(source)) + "-" + std::string(to_string(dest));
    }
};

// The two transceivers other than `source`, in table order.
inline std::array<Position, 2> relays_for(Position source) {
    if (!is_transceiver(source)) {
        throw RoleError("source " + std::string(to_string(source)) +
                        " is receiver-only and cannot originate packets");
    }
    std::array<Position, 2> out{};
    std::size_t i = 0;
    for (Position p : kTransceivers) {
        if (p != source) {
            out[i++] = p;
        }
    }
    return out;
}

// True when every hop the branch set needs can be looked up (directly or by
// reciprocity).
inline bool branches_resolvable(const DenseTraceSet& traces, Position source, Position dest) {
    if (!is_transceiver(source) || source == dest || !has_link_between(traces, source, dest)) {
        return false;
    }
    for (Position r : relays_for(source)) {
        if (r == dest) {
            continue;
        }
        if (!has_link_between(traces, source, r) || !has_link_between(traces, r, dest)) {
            return false;
        }
    }
    return true;
}

// When the hub is itself one of the relays, that relayed path degenerates to
// the direct link (there is no second hop).
inline BranchSet build_branches(const DenseTraceSet& traces, Position source, Position dest) {
    const auto relays = relays_for(source);
    if (dest == source) {
        throw RoleError("destination equals source (" + std::string(to_string(source)) + ")");
    }
    BranchSet bs;
    bs.source = source;
    bs.dest = dest;
    bs.relay1 = relays[0];
    bs.relay2 = relays[1];
    bs.delta_ms = traces.delta_ms();

    const auto direct = series_between(traces, source, dest);
    bs.gains[0].assign(direct.begin(), direct.end());
    for (std::size_t n = 0; n < 2; ++n) {
        auto& out = bs.gains[n + 1];
        const Position relay = relays[n];
        if (relay == dest) {
            out = bs.gains[0];
            continue;
        }
        const auto first = series_between(traces, source, relay);
        const auto second = series_between(traces, relay, dest);
        out.resize(first.size());
        for (std::size_t t = 0; t < first.size(); ++t) {
            out[t] = two_hop_gain(first[t], second[t]);
        }
    }
    return bs;
}

// Output of a combining policy: the selected gain and which branch supplied
// it, per slot.
struct CombinedSeries {
    Policy policy = Policy::DL;
    std::optional<double> threshold_db; // set iff policy == SwC
    double delta_ms = kDefaultDeltaMs;
    std::vector<double> gains;
    std::vector<Branch> branch_ids;

    [[nodiscard]] std::size_t size() const noexcept { return gains.size(); }
};

inline CombinedSeries combine_dl(const BranchSet& bs) {
    CombinedSeries out;
    out.policy = Policy::DL;
    out.delta_ms = bs.delta_ms;
    out.gains = bs.gains[0];
    out.branch_ids.assign(out.gains.size(), Branch::direct);
    return out;
}

// Selection combining. Ties go to the lowest branch index.
inline CombinedSeries combine_sc(const BranchSet& bs) {
    CombinedSeries out;
    out.policy = Policy::SC;
    out.delta_ms = bs.delta_ms;
    const std::size_t n = bs.size();
    out.gains.resize(n);
    out.branch_ids.resize(n);
    for (std::size_t t = 0; t < n; ++t) {
        std::size_t best = 0;
        for (std::size_t b = 1; b < 3; ++b) {
            if (bs.gains[b][t] > bs.gains[best][t]) {
                best = b;
            }
        }
        out.gains[t] = bs.gains[best][t];
        out.branch_ids[t] = branch_at(best);
    }
    return out;
}

// One switch-and-examine decision. Stay while the current branch is at or
// above threshold; otherwise examine the next two branches cyclically and
// take the first one that clears it. If none does, relay2 is taken
// regardless of its gain.
constexpr Branch swc_step(Branch current, const std::array<double, 3>& g,
                          double threshold_db) noexcept {
    const std::size_t b = index(current);
    if (g[b] >= threshold_db) {
        return current;
    }
    if (g[(b + 1) % 3] >= threshold_db) {
        return branch_at(b + 1);
    }
    if (g[(b + 2) % 3] >= threshold_db) {
        return branch_at(b + 2);
    }
    return Branch::relay2;
}

// Switch-and-examine combining over the whole series, starting on the
// direct link. State is the branch index, never a gain comparison.
inline CombinedSeries combine_swc(const BranchSet& bs,
                                  double threshold_db = kDefaultSwitchThresholdDb) {
    if (std::isnan(threshold_db)) {
        throw ConfigError("switching threshold must not be NaN");
    }
    CombinedSeries out;
    out.policy = Policy::SwC;
    out.threshold_db = threshold_db;
    out.delta_ms = bs.delta_ms;
    const std::size_t n = bs.size();
    out.gains.resize(n);
    out.branch_ids.resize(n);
    Branch current = Branch::direct;
    for (std::size_t t = 0; t < n; ++t) {
        current = swc_step(current, bs.at(t), threshold_db);
        out.gains[t] = bs.gains[index(current)][t];
        out.branch_ids[t] = current;
    }
    return out;
}

inline CombinedSeries combine(const BranchSet& bs, Policy policy,
                              double threshold_db = kDefaultSwitchThresholdDb) {
    switch (policy) {
    case Policy::DL:
        return combine_dl(bs);
    case Policy::SC:
        return combine_sc(bs);
    default:
        return combine_swc(bs, threshold_db);
    }
}

inline std::size_t switch_count(const CombinedSeries& cs) noexcept {
    std::size_t n = 0;
    for (std::size_t t = 1; t < cs.branch_ids.size(); ++t) {
        n += cs.branch_ids[t] != cs.branch_ids[t - 1] ? 1 : 0;
    }
    return n;
}

// Branch changes per second of observed time.
inline double switching_rate(const CombinedSeries& cs) {
    if (cs.size() < 2) {
        throw MetricError("switching rate needs at least two samples, got " +
                          std::to_string(cs.size()));
    }
    const double span_s = static_cast<double>(cs.size() - 1) * cs.delta_ms / 1000.0;
    return static_cast<double>(switch_count(cs)) / span_s;
}

// CSV `slot,gain_db,branch`.
inline void write_combined_csv(std::ostream& out, const CombinedSeries& cs) {
    out << "slot,gain_db,branch\n";
    for (std::size_t t = 0; t < cs.size(); ++t) {
        out << t << ',' << fmt::fixed(cs.gains[t], 2) << ',' << to_string(cs.branch_ids[t]) << '\n';
    }
}

} // namespace wban
