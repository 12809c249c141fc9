#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "wban/diversity.hpp"
#include "wban/error.hpp"
#include "wban/format.hpp"
#include "wban/nodes.hpp"
#include "wban/trace.hpp"

namespace wban {

inline constexpr double kBestCaseSensitivityDb = -100.0;
inline constexpr double kDefaultLatencyS = 0.125;
inline constexpr double kLongOutageS = 10.0;

struct CurvePoint {
    double x = 0.0;
    double y = 0.0;

    bool operator==(const CurvePoint&) const = default;
};

// Outage probability against receive sensitivity (dB), x strictly increasing.
struct OutageCurve {
    std::string label;
    std::vector<CurvePoint> points;
};

// Fraction of time spent in outage runs longer than x seconds, evaluated at
// one receive sensitivity.
struct DurationCurve {
    std::string label;
    double sensitivity_db = 0.0;
    std::vector<CurvePoint> points;
};

// Maximal run of consecutive outage slots.
struct OutageRun {
    std::size_t start_slot = 0;
    std::size_t length_slots = 0;
    double delta_ms = kDefaultDeltaMs;

    [[nodiscard]] double duration_s() const noexcept {
        return static_cast<double>(length_slots) * delta_ms / 1000.0;
    }
    bool operator==(const OutageRun&) const = default;
};

// Runs pooled over several traces of a common sample period, together with
// the total observed slot count. Runs never span two traces.
struct RunPool {
    std::vector<OutageRun> runs;
    std::size_t total_slots = 0;
    double delta_ms = kDefaultDeltaMs;

    [[nodiscard]] double total_time_s() const noexcept {
        return static_cast<double>(total_slots) * delta_ms / 1000.0;
    }
    [[nodiscard]] std::size_t outage_slots() const noexcept {
        std::size_t n = 0;
        for (const auto& r : runs) {
            n += r.length_slots;
        }
        return n;
    }

    void append(std::span<const OutageRun> more, std::size_t slots, double delta) {
        if (total_slots > 0 && delta != delta_ms) {
            throw ConfigError("cannot pool traces with different sample periods (" +
                              fmt::shortest(delta_ms) + " vs " + fmt::shortest(delta) + " ms)");
        }
        delta_ms = delta;
        runs.insert(runs.end(), more.begin(), more.end());
        total_slots += slots;
    }
};

// Outage is strict: a gain equal to the sensitivity still decodes.
inline std::vector<bool> outage_indicator(std::span<const double> gains, double sensitivity_db) {
    std::vector<bool> out(gains.size());
    for (std::size_t t = 0; t < gains.size(); ++t) {
        out[t] = gains[t] < sensitivity_db;
    }
    return out;
}

inline std::size_t outage_count(std::span<const double> gains, double sensitivity_db) noexcept {
    return static_cast<std::size_t>(std::count_if(
        gains.begin(), gains.end(), [sensitivity_db](double g) { return g < sensitivity_db; }));
}

inline double outage_probability(std::span<const double> gains, double sensitivity_db) {
    if (gains.empty()) {
        throw MetricError("outage probability of an empty series is undefined");
    }
    return static_cast<double>(outage_count(gains, sensitivity_db)) /
           static_cast<double>(gains.size());
}

// -100 dB to -60 dB in 1 dB steps.
inline std::vector<double> default_sensitivity_sweep() {
    std::vector<double> out;
    for (int s = -100; s <= -60; ++s) {
        out.push_back(static_cast<double>(s));
    }
    return out;
}

inline void require_strictly_increasing(std::span<const double> xs, const char* what) {
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (std::isnan(xs[i])) {
            throw ConfigError(std::string(what) + " contains NaN");
        }
        if (i > 0 && !(xs[i] > xs[i - 1])) {
            throw ConfigError(std::string(what) + " must be strictly increasing (" +
                              fmt::shortest(xs[i - 1]) + " then " + fmt::shortest(xs[i]) + ")");
        }
    }
}

inline OutageCurve outage_curve(std::span<const double> gains, std::span<const double> sweep,
                                std::string label = {}) {
    require_strictly_increasing(sweep, "sensitivity sweep");
    OutageCurve curve{std::move(label), {}};
    curve.points.reserve(sweep.size());
    for (double s : sweep) {
        curve.points.push_back({s, outage_probability(gains, s)});
    }
    return curve;
}

// Lowest sensitivity at which the piecewise-linear curve reaches p.
inline double sensitivity_at(const OutageCurve& curve, double p) {
    const auto& pts = curve.points;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (pts[i].y == p) {
            return pts[i].x;
        }
        if (i + 1 < pts.size()) {
            const auto& a = pts[i];
            const auto& b = pts[i + 1];
            if ((a.y < p && p < b.y) || (a.y > p && p > b.y)) {
                return a.x + (p - a.y) * (b.x - a.x) / (b.y - a.y);
            }
        }
    }
    throw NotCrossedError("curve '" + curve.label + "' does not cross probability " +
                          fmt::shortest(p) + " within its sweep");
}

// s_a(p) - s_b(p). Positive when curve a reaches p at a higher (worse)
// sensitivity than b, i.e. a is the more robust link by that many dB.
inline double gain_improvement_at(const OutageCurve& a, const OutageCurve& b, double p) {
    return sensitivity_at(a, p) - sensitivity_at(b, p);
}

inline std::vector<OutageRun> outage_runs(const std::vector<bool>& indicator,
                                          double delta_ms = kDefaultDeltaMs) {
    std::vector<OutageRun> runs;
    std::size_t t = 0;
    const std::size_t n = indicator.size();
    while (t < n) {
        if (!indicator[t]) {
            ++t;
            continue;
        }
        const std::size_t start = t;
        while (t < n && indicator[t]) {
            ++t;
        }
        runs.push_back(OutageRun{start, t - start, delta_ms});
    }
    return runs;
}

// Log-spaced from one slot (15 ms) to 1000 s, ten points per decade.
inline std::vector<double> default_cod_thresholds() {
    std::vector<double> out;
    for (int k = 0;; ++k) {
        const double x = 0.015 * std::pow(10.0, k / 10.0);
        if (x >= 1000.0) {
            break;
        }
        out.push_back(x);
    }
    out.push_back(1000.0);
    return out;
}

// F(x) = (total duration of runs longer than x) / total_time_s.
inline DurationCurve cod_curve(std::span<const OutageRun> runs, double total_time_s,
                               std::span<const double> thresholds_s, std::string label = {},
                               double sensitivity_db = 0.0) {
    if (!(total_time_s > 0.0)) {
        throw ConfigError("total observed time must be positive");
    }
    require_strictly_increasing(thresholds_s, "duration thresholds");
    DurationCurve curve{std::move(label), sensitivity_db, {}};
    for (double x : thresholds_s) {
        double sum = 0.0;
        for (const auto& r : runs) {
            if (r.duration_s() > x) {
                sum += r.duration_s();
            }
        }
        curve.points.push_back({x, sum / total_time_s});
    }
    return curve;
}

// Pool variant: accumulates slot counts as integers, so F(0) equals the
// pooled outage probability bit for bit.
inline double exceedance_fraction(const RunPool& pool, double threshold_s) {
    if (pool.total_slots == 0) {
        throw ConfigError("total observed time must be positive");
    }
    std::size_t slots = 0;
    for (const auto& r : pool.runs) {
        if (r.duration_s() > threshold_s) {
            slots += r.length_slots;
        }
    }
    return static_cast<double>(slots) / static_cast<double>(pool.total_slots);
}

inline DurationCurve cod_curve(const RunPool& pool, std::span<const double> thresholds_s,
                               std::string label = {}, double sensitivity_db = 0.0) {
    if (pool.total_slots == 0) {
        throw ConfigError("total observed time must be positive");
    }
    require_strictly_increasing(thresholds_s, "duration thresholds");
    DurationCurve curve{std::move(label), sensitivity_db, {}};
    for (double x : thresholds_s) {
        curve.points.push_back({x, exceedance_fraction(pool, x)});
    }
    return curve;
}

inline double latency_exceedance(const RunPool& pool, double latency_s = kDefaultLatencyS) {
    return exceedance_fraction(pool, latency_s);
}

inline double latency_exceedance(std::span<const OutageRun> runs, double total_time_s,
                                 double latency_s = kDefaultLatencyS) {
    const double x[] = {latency_s};
    return cod_curve(runs, total_time_s, x).points.front().y;
}

// Outage probability at -100 dB, the most permissive meaningful sensitivity.
inline double best_case_op(const OutageCurve& curve) {
    for (const auto& pt : curve.points) {
        if (pt.x == kBestCaseSensitivityDb) {
            return pt.y;
        }
    }
    throw ConfigError("curve '" + curve.label + "' has no point at -100 dB");
}

// ---------------------------------------------------------------------------
// Pooled ("agglomerate") statistics over (source, dest) pairs and subjects.

struct NodePair {
    Position source{};
    Position dest{};

    auto operator<=>(const NodePair&) const = default;
    [[nodiscard]] std::string label() const {
        return std::string(to_string(source)) + "-" + std::string(to_string(dest));
    }
};

// Sources are the transceivers, destinations every other node; a pair is
// kept when all of its hops were measured and its direct link matches the
// class filter.
inline std::vector<NodePair> enumerate_pairs(const DenseTraceSet& traces,
                                             std::optional<LinkClass> cls = std::nullopt) {
    std::vector<NodePair> out;
    for (Position s : kTransceivers) {
        for (Position d : kAllPositions) {
            if (d == s || (cls && classify_link(s, d) != *cls)) {
                continue;
            }
            if (branches_resolvable(traces, s, d)) {
                out.push_back({s, d});
            }
        }
    }
    return out;
}

// One combined series per (subject, pair).
struct PairSeries {
    std::string subject;
    NodePair pair;
    CombinedSeries combined;
};

using Selection = std::vector<PairSeries>;

inline Selection select_and_combine(std::span<const DenseTraceSet> trace_sets, Policy policy,
                                    std::optional<LinkClass> cls,
                                    double threshold_db = kDefaultSwitchThresholdDb,
                                    std::span<const NodePair> explicit_pairs = {}) {
    Selection out;
    for (const auto& ts : trace_sets) {
        std::vector<NodePair> pairs;
        if (explicit_pairs.empty()) {
            pairs = enumerate_pairs(ts, cls);
        } else {
            for (const auto& p : explicit_pairs) {
                if ((!cls || classify_link(p.source, p.dest) == *cls) &&
                    branches_resolvable(ts, p.source, p.dest)) {
                    pairs.push_back(p);
                }
            }
        }
        for (const auto& p : pairs) {
            out.push_back(PairSeries{ts.subject(), p,
                                     combine(build_branches(ts, p.source, p.dest), policy,
                                             threshold_db)});
        }
    }
    if (out.empty()) {
        std::string msg = "no (source, dest) pair matches the selection";
        if (cls) {
            msg += std::string(" for class ") + std::string(to_string(*cls));
        }
        if (!trace_sets.empty()) {
            msg += "; valid pairs:";
            for (const auto& p : enumerate_pairs(trace_sets.front())) {
                msg += " " + p.label();
            }
        }
        throw EmptySelectionError(msg);
    }
    return out;
}

inline double pooled_outage_probability(const Selection& sel, double sensitivity_db) {
    std::size_t outage = 0;
    std::size_t total = 0;
    for (const auto& ps : sel) {
        outage += outage_count(ps.combined.gains, sensitivity_db);
        total += ps.combined.size();
    }
    if (total == 0) {
        throw MetricError("outage probability of an empty selection is undefined");
    }
    return static_cast<double>(outage) / static_cast<double>(total);
}

inline OutageCurve pooled_outage_curve(const Selection& sel, std::span<const double> sweep,
                                       std::string label = {}) {
    require_strictly_increasing(sweep, "sensitivity sweep");
    OutageCurve curve{std::move(label), {}};
    for (double s : sweep) {
        curve.points.push_back({s, pooled_outage_probability(sel, s)});
    }
    return curve;
}

inline RunPool pooled_runs(const Selection& sel, double sensitivity_db) {
    RunPool pool;
    for (const auto& ps : sel) {
        const auto runs =
            outage_runs(outage_indicator(ps.combined.gains, sensitivity_db), ps.combined.delta_ms);
        pool.append(runs, ps.combined.size(), ps.combined.delta_ms);
    }
    return pool;
}

// Switches per second over all pairs; each pair contributes (N-1) intervals.
inline double pooled_switching_rate(const Selection& sel) {
    std::size_t switches = 0;
    double span_s = 0.0;
    for (const auto& ps : sel) {
        if (ps.combined.size() < 2) {
            continue;
        }
        switches += switch_count(ps.combined);
        span_s += static_cast<double>(ps.combined.size() - 1) * ps.combined.delta_ms / 1000.0;
    }
    if (!(span_s > 0.0)) {
        throw MetricError("switching rate needs at least two samples");
    }
    return static_cast<double>(switches) / span_s;
}

struct Aggregate {
    Policy policy = Policy::DL;
    LinkClass link_class = LinkClass::on_body;
    double sensitivity_db = 0.0;
    std::size_t pairs = 0;
    std::size_t outage_slots = 0;
    std::size_t total_slots = 0;
    RunPool pool;

    [[nodiscard]] double op() const noexcept {
        return static_cast<double>(outage_slots) / static_cast<double>(total_slots);
    }
};

// Time-weighted pooling of every matching pair across all trace sets.
inline Aggregate aggregate(Policy policy, LinkClass cls, std::span<const DenseTraceSet> trace_sets,
                           double sensitivity_db,
                           double threshold_db = kDefaultSwitchThresholdDb) {
    const Selection sel = select_and_combine(trace_sets, policy, cls, threshold_db);
    Aggregate out;
    out.policy = policy;
    out.link_class = cls;
    out.sensitivity_db = sensitivity_db;
    out.pairs = sel.size();
    out.pool = pooled_runs(sel, sensitivity_db);
    out.outage_slots = out.pool.outage_slots();
    out.total_slots = out.pool.total_slots;
    return out;
}

template <typename Curve>
void write_curve_csv(std::ostream& out, const Curve& curve, int x_decimals = 2) {
    out << "x,y,label\n";
    for (const auto& pt : curve.points) {
        out << (x_decimals >= 0 ? fmt::fixed(pt.x, x_decimals) : fmt::significant(pt.x, 4)) << ','
            << fmt::significant(pt.y, 4) << ',' << curve.label << '\n';
    }
}

inline void write_runs_csv(std::ostream& out, std::span<const OutageRun> runs) {
    out << "start_slot,length_slots,duration_s\n";
    for (const auto& r : runs) {
        out << r.start_slot << ',' << r.length_slots << ',' << fmt::significant(r.duration_s(), 6)
            << '\n';
    }
}

} // namespace wban
