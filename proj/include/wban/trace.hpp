#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "wban/error.hpp"
#include "wban/format.hpp"
#include "wban/nodes.hpp"

namespace wban {

inline constexpr double kDefaultDeltaMs = 15.0;
inline constexpr double kDefaultImputeFloorDb = -102.0;
inline constexpr double kMinRecordedGainDb = -110.0;
inline constexpr double kMaxRecordedGainDb = 0.0;
// Imputed samples must sit below every physically meaningful sensitivity.
inline constexpr double kReceiveSensitivityFloorDb = -100.0;

inline constexpr std::string_view kRecordHeader = "time_ms,tx,rx,rssi_dbm";

// One decoded packet. At 0 dBm transmit power the RSSI is the channel gain.
struct Record {
    double time_ms = 0.0;
    LinkKey link{};
    double gain_db = 0.0;

    bool operator==(const Record&) const = default;
};

// Parsed record CSV. Optional `# key=value` comment directives carry the
// capture length so trailing lost packets survive a write/read cycle.
struct RecordLog {
    std::vector<Record> records;
    std::optional<std::size_t> slots;
    std::optional<double> delta_ms;
    std::string subject;
};

using GainSample = std::optional<double>;

// Per-link gain series on a uniform grid. All series share one length.
// Instantiated with GainSample (may hold lost packets) and with double
// (dense, after imputation). Immutable once built.
template <typename Sample>
class BasicTraceSet {
public:
    using Series = std::vector<Sample>;
    using Map = std::map<LinkKey, Series>;

    BasicTraceSet() = default;

    BasicTraceSet(double delta_ms, std::size_t slots, Map traces, std::string subject = {})
        : delta_ms_(delta_ms), slots_(slots), traces_(std::move(traces)),
          subject_(std::move(subject)) {
        if (!(delta_ms_ > 0.0) || !std::isfinite(delta_ms_)) {
            throw ConfigError("sample period must be positive, got " + fmt::shortest(delta_ms_));
        }
        for (const auto& [key, series] : traces_) {
            if (series.size() != slots_) {
                throw ConfigError("trace " + key.label() + " has " + std::to_string(series.size()) +
                                  " samples, expected " + std::to_string(slots_));
            }
        }
    }

    [[nodiscard]] double delta_ms() const noexcept { return delta_ms_; }
    [[nodiscard]] std::size_t size() const noexcept { return slots_; }
    [[nodiscard]] double duration_ms() const noexcept {
        return static_cast<double>(slots_) * delta_ms_;
    }
    [[nodiscard]] const std::string& subject() const noexcept { return subject_; }
    [[nodiscard]] const Map& traces() const noexcept { return traces_; }
    [[nodiscard]] bool contains(const LinkKey& k) const { return traces_.contains(k); }

    [[nodiscard]] std::span<const Sample> trace(const LinkKey& k) const {
        auto it = traces_.find(k);
        if (it == traces_.end()) {
            throw MissingLinkError("link " + k.label() + " not present in trace set");
        }
        return it->second;
    }

    bool operator==(const BasicTraceSet&) const = default;

private:
    double delta_ms_ = kDefaultDeltaMs;
    std::size_t slots_ = 0;
    Map traces_;
    std::string subject_;
};

using ChannelTraceSet = BasicTraceSet<GainSample>;
using DenseTraceSet = BasicTraceSet<double>;

namespace detail {

inline std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(fmt::trim(line.substr(start, comma - start)));
        if (comma == std::string_view::npos) {
            break;
        }
        start = comma + 1;
    }
    return out;
}

inline void apply_directive(RecordLog& log, std::string_view comment, std::size_t line_no) {
    const auto eq = comment.find('=');
    if (eq == std::string_view::npos) {
        return;
    }
    const auto key = fmt::trim(comment.substr(0, eq));
    const auto value = fmt::trim(comment.substr(eq + 1));
    if (key == "subject") {
        log.subject = std::string(value);
    } else if (key == "slots") {
        const auto v = fmt::parse_double(value);
        if (!v || *v < 0 || std::floor(*v) != *v) {
            throw ParseError(line_no, "slots directive must be a non-negative integer");
        }
        log.slots = static_cast<std::size_t>(*v);
    } else if (key == "delta_ms") {
        const auto v = fmt::parse_double(value);
        if (!v || !(*v > 0)) {
            throw ParseError(line_no, "delta_ms directive must be positive");
        }
        log.delta_ms = *v;
    }
}

} // namespace detail

// Reads the record CSV (`time_ms,tx,rx,rssi_dbm`). Lines starting with '#'
// are comments; blank lines are skipped. Records come back sorted by time
// (stable, so equal timestamps keep file order).
inline RecordLog parse_records(std::istream& in) {
    RecordLog log;
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        const auto view = fmt::trim(line);
        if (view.empty()) {
            continue;
        }
        if (view.front() == '#') {
            detail::apply_directive(log, view.substr(1), line_no);
            continue;
        }
        if (!header_seen) {
            if (view.starts_with("\xEF\xBB\xBF")) {
                if (view.substr(3) != kRecordHeader) {
                    throw ParseError(line_no, "expected header '" + std::string(kRecordHeader) + "'");
                }
            } else if (view != kRecordHeader) {
                throw ParseError(line_no, "expected header '" + std::string(kRecordHeader) + "'");
            }
            header_seen = true;
            continue;
        }
        const auto fields = detail::split_commas(view);
        if (fields.size() != 4) {
            throw ParseError(line_no, "expected 4 fields, got " + std::to_string(fields.size()));
        }
        const auto t = fmt::parse_double(fields[0]);
        if (!t || !std::isfinite(*t) || *t < 0) {
            throw ParseError(line_no, "bad time_ms '" + std::string(fields[0]) + "'");
        }
        const auto tx = parse_position(fields[1]);
        if (!tx) {
            throw ParseError(line_no, "unknown tx node '" + std::string(fields[1]) + "'");
        }
        const auto rx = parse_position(fields[2]);
        if (!rx) {
            throw ParseError(line_no, "unknown rx node '" + std::string(fields[2]) + "'");
        }
        if (!is_transceiver(*tx)) {
            throw SchemaError(line_no, "node " + std::string(fields[1]) + " is receiver-only");
        }
        if (*tx == *rx) {
            throw SchemaError(line_no, "tx and rx are the same node");
        }
        const auto g = fmt::parse_double(fields[3]);
        if (!g || !std::isfinite(*g)) {
            throw ParseError(line_no, "bad rssi_dbm '" + std::string(fields[3]) + "'");
        }
        if (*g < kMinRecordedGainDb || *g > kMaxRecordedGainDb) {
            throw ParseError(line_no, "rssi_dbm " + std::string(fields[3]) +
                                          " outside [-110, 0] dB");
        }
        log.records.push_back(Record{*t, LinkKey{*tx, *rx}, *g});
    }
    if (!header_seen) {
        throw ParseError(line_no == 0 ? 1 : line_no, "missing header '" + std::string(kRecordHeader) + "'");
    }
    std::stable_sort(log.records.begin(), log.records.end(),
                     [](const Record& a, const Record& b) { return a.time_ms < b.time_ms; });
    return log;
}

inline RecordLog parse_records(std::string_view text) {
    std::istringstream in{std::string(text)};
    return parse_records(in);
}

// Bins records into slots of delta_ms. The last record in a slot wins.
// Length is one past the latest occupied slot, or min_slots if larger.
inline ChannelTraceSet align_to_grid(std::span<const Record> records,
                                     double delta_ms = kDefaultDeltaMs,
                                     std::size_t min_slots = 0, std::string subject = {}) {
    if (!(delta_ms > 0.0) || !std::isfinite(delta_ms)) {
        throw ConfigError("sample period must be positive, got " + fmt::shortest(delta_ms));
    }
    std::size_t n = min_slots;
    std::vector<std::pair<std::size_t, const Record*>> slotted;
    slotted.reserve(records.size());
    for (const Record& r : records) {
        const auto slot = static_cast<std::size_t>(std::floor(r.time_ms / delta_ms));
        n = std::max(n, slot + 1);
        slotted.emplace_back(slot, &r);
    }
    ChannelTraceSet::Map traces;
    for (const auto& [slot, rec] : slotted) {
        auto& series = traces[rec->link];
        if (series.empty()) {
            series.assign(n, std::nullopt);
        }
    }
    // Records arrive time-sorted from the parser, but do not rely on it:
    // later time wins, then later position for equal times.
    std::map<std::pair<LinkKey, std::size_t>, const Record*> winner;
    for (const auto& [slot, rec] : slotted) {
        auto [it, inserted] = winner.try_emplace({rec->link, slot}, rec);
        if (!inserted && rec->time_ms >= it->second->time_ms) {
            it->second = rec;
        }
    }
    for (const auto& [key, rec] : winner) {
        traces[key.first][key.second] = rec->gain_db;
    }
    return ChannelTraceSet(delta_ms, n, std::move(traces), std::move(subject));
}

inline ChannelTraceSet align_to_grid(const RecordLog& log, std::optional<double> delta_ms = std::nullopt) {
    const double delta = delta_ms.value_or(log.delta_ms.value_or(kDefaultDeltaMs));
    return align_to_grid(log.records, delta, log.slots.value_or(0), log.subject);
}

// Lost packets become floor_db, which must lie below every sensitivity in
// the analysis range so an imputed slot always counts as an outage.
inline DenseTraceSet impute_missing(const ChannelTraceSet& set,
                                    double floor_db = kDefaultImputeFloorDb) {
    if (!(floor_db < kReceiveSensitivityFloorDb)) {
        throw ConfigError("imputation floor " + fmt::shortest(floor_db) +
                          " dB must be below -100 dB to represent a lost packet");
    }
    DenseTraceSet::Map dense;
    for (const auto& [key, series] : set.traces()) {
        auto& out = dense[key];
        out.reserve(series.size());
        for (const GainSample& s : series) {
            out.push_back(s.value_or(floor_db));
        }
    }
    return DenseTraceSet(set.delta_ms(), set.size(), std::move(dense), set.subject());
}

inline std::size_t missing_count(const ChannelTraceSet& set) {
    std::size_t n = 0;
    for (const auto& [key, series] : set.traces()) {
        n += static_cast<std::size_t>(std::count(series.begin(), series.end(), std::nullopt));
    }
    return n;
}

// Resolves the measured link between two nodes, preferring a->b and falling
// back to the reciprocal b->a.
inline std::span<const double> series_between(const DenseTraceSet& set, Position a, Position b) {
    if (a != b && is_transceiver(a)) {
        if (auto it = set.traces().find(LinkKey{a, b}); it != set.traces().end()) {
            return it->second;
        }
    }
    if (a != b && is_transceiver(b)) {
        if (auto it = set.traces().find(LinkKey{b, a}); it != set.traces().end()) {
            return it->second;
        }
    }
    throw MissingLinkError("no measurement between " + std::string(to_string(a)) + " and " +
                           std::string(to_string(b)) + " in either direction");
}

inline bool has_link_between(const DenseTraceSet& set, Position a, Position b) {
    if (a == b) {
        return false;
    }
    return (is_transceiver(a) && set.contains(LinkKey{a, b})) ||
           (is_transceiver(b) && set.contains(LinkKey{b, a}));
}

inline double gain_at(const DenseTraceSet& set, Position a, Position b, std::size_t slot) {
    const auto s = series_between(set, a, b);
    if (slot >= s.size()) {
        throw ConfigError("slot " + std::to_string(slot) + " beyond trace length " +
                          std::to_string(s.size()));
    }
    return s[slot];
}

// Re-expresses a grid as TDMA records: within a slot the three transmitters
// take consecutive thirds of the period, in table order.
inline RecordLog to_records(const ChannelTraceSet& set) {
    RecordLog log;
    log.slots = set.size();
    log.delta_ms = set.delta_ms();
    log.subject = set.subject();
    const double sub = set.delta_ms() / 3.0;
    for (std::size_t slot = 0; slot < set.size(); ++slot) {
        for (Position tx : kTransceivers) {
            const double t = static_cast<double>(slot) * set.delta_ms() +
                             sub * static_cast<double>(static_cast<int>(tx));
            for (const auto& [key, series] : set.traces()) {
                if (key.tx == tx && series[slot]) {
                    log.records.push_back(Record{t, key, *series[slot]});
                }
            }
        }
    }
    return log;
}

// Writes a record CSV. Gains use the shortest round-trip representation so
// re-ingestion reproduces every value exactly.
inline void write_records_csv(std::ostream& out, const RecordLog& log) {
    if (!log.subject.empty()) {
        out << "# subject=" << log.subject << '\n';
    }
    if (log.delta_ms) {
        out << "# delta_ms=" << fmt::shortest(*log.delta_ms) << '\n';
    }
    if (log.slots) {
        out << "# slots=" << *log.slots << '\n';
    }
    out << kRecordHeader << '\n';
    for (const Record& r : log.records) {
        out << fmt::shortest(r.time_ms) << ',' << to_string(r.link.tx) << ','
            << to_string(r.link.rx) << ',' << fmt::shortest(r.gain_db) << '\n';
    }
}

namespace detail {

inline std::string grid_cell(double v) { return fmt::fixed(v, 2); }
inline std::string grid_cell(const GainSample& v) { return v ? fmt::fixed(*v, 2) : std::string{}; }

} // namespace detail

// Grid CSV: `slot,<tx>-<rx>,...`, one column per link in link order, gains
// with two decimals. Lost packets are empty cells.
template <typename Sample>
void write_grid_csv(std::ostream& out, const BasicTraceSet<Sample>& set) {
    out << "slot";
    for (const auto& [key, series] : set.traces()) {
        out << ',' << key.label();
    }
    out << '\n';
    for (std::size_t slot = 0; slot < set.size(); ++slot) {
        out << slot;
        for (const auto& [key, series] : set.traces()) {
            out << ',' << detail::grid_cell(series[slot]);
        }
        out << '\n';
    }
}

inline ChannelTraceSet read_grid_csv(std::istream& in, double delta_ms = kDefaultDeltaMs,
                                     std::string subject = {}) {
    std::string line;
    std::size_t line_no = 0;
    std::vector<LinkKey> columns;
    std::vector<ChannelTraceSet::Series> series;
    std::size_t rows = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        const auto view = fmt::trim(line);
        if (view.empty() || view.front() == '#') {
            continue;
        }
        const auto fields = detail::split_commas(view);
        if (!header_seen) {
            if (fields.empty() || fields[0] != "slot") {
                throw ParseError(line_no, "grid header must start with 'slot'");
            }
            for (std::size_t i = 1; i < fields.size(); ++i) {
                try {
                    columns.push_back(parse_link_label(fields[i]));
                } catch (const Error& e) {
                    throw ParseError(line_no, e.what());
                }
            }
            series.resize(columns.size());
            header_seen = true;
            continue;
        }
        if (fields.size() != columns.size() + 1) {
            throw ParseError(line_no, "expected " + std::to_string(columns.size() + 1) + " fields");
        }
        const auto slot = fmt::parse_double(fields[0]);
        if (!slot || *slot != static_cast<double>(rows)) {
            throw ParseError(line_no, "slots must be consecutive from 0");
        }
        ++rows;
        for (std::size_t i = 0; i < columns.size(); ++i) {
            if (fields[i + 1].empty()) {
                series[i].push_back(std::nullopt);
                continue;
            }
            const auto g = fmt::parse_double(fields[i + 1]);
            if (!g || *g < kMinRecordedGainDb || *g > kMaxRecordedGainDb) {
                throw ParseError(line_no, "bad gain '" + std::string(fields[i + 1]) + "'");
            }
            series[i].push_back(*g);
        }
    }
    if (!header_seen) {
        throw ParseError(line_no == 0 ? 1 : line_no, "missing grid header");
    }
    ChannelTraceSet::Map traces;
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (!traces.emplace(columns[i], std::move(series[i])).second) {
            throw ParseError(1, "duplicate column " + columns[i].label());
        }
    }
    return ChannelTraceSet(delta_ms, rows, std::move(traces), std::move(subject));
}

} // namespace wban
