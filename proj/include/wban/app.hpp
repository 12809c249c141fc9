#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "wban/diversity.hpp"
#include "wban/error.hpp"
#include "wban/format.hpp"
#include "wban/metrics.hpp"
#include "wban/nodes.hpp"
#include "wban/synthgen.hpp"
#include "wban/trace.hpp"

namespace wban::app {

namespace fs = std::filesystem;
using nlohmann::json;

struct AnalysisConfig {
    std::vector<fs::path> inputs;        // record CSVs, one per subject
    std::optional<fs::path> scenario;    // used when no inputs are given
    std::optional<std::uint64_t> seed;   // overrides the scenario's seed
    std::vector<Policy> policies = {Policy::DL, Policy::SC, Policy::SwC};
    double swc_threshold_db = kDefaultSwitchThresholdDb;
    std::vector<double> sweep = default_sensitivity_sweep();
    std::vector<double> cod_thresholds_s = default_cod_thresholds();
    std::vector<double> cod_sensitivities_db = {-86.0};
    double report_sensitivity_db = -86.0;
    double impute_floor_db = kDefaultImputeFloorDb;
    double target_probability = 0.10;
    std::optional<double> delta_ms;
    std::vector<LinkClass> classes = {LinkClass::on_body, LinkClass::off_body};
    std::vector<NodePair> pairs; // empty: enumerate every valid pair
    fs::path output_dir = "out";

    void validate() const {
        if (policies.empty()) {
            throw ConfigError("at least one combining policy is required");
        }
        if (classes.empty()) {
            throw ConfigError("at least one link class is required");
        }
        if (inputs.empty() && !scenario) {
            throw ConfigError("no input traces and no scenario given");
        }
        require_strictly_increasing(sweep, "sensitivity sweep");
        require_strictly_increasing(cod_thresholds_s, "duration thresholds");
        if (!(impute_floor_db < kReceiveSensitivityFloorDb)) {
            throw ConfigError("imputation floor must be below -100 dB");
        }
        if (!(target_probability > 0.0 && target_probability < 1.0)) {
            throw ConfigError("target probability must be in (0, 1)");
        }
        for (const auto& p : pairs) {
            if (!is_transceiver(p.source)) {
                throw RoleError("pair " + p.label() + ": source is receiver-only");
            }
            if (p.source == p.dest) {
                throw ConfigError("pair " + p.label() + ": source equals destination");
            }
        }
    }
};

inline NodePair parse_pair(std::string_view s) {
    const auto sep = s.find_first_of(":-");
    if (sep == std::string_view::npos) {
        throw ConfigError("pair '" + std::string(s) + "' is not of the form SRC:DST");
    }
    const auto a = parse_position(s.substr(0, sep));
    const auto b = parse_position(s.substr(sep + 1));
    if (!a || !b) {
        throw ConfigError("unknown node in pair '" + std::string(s) + "'");
    }
    return NodePair{*a, *b};
}

// Applies the fields present in a JSON config object. Unknown keys are
// rejected so typos do not silently fall back to defaults.
inline void apply_config_json(AnalysisConfig& cfg, const json& j) {
    if (!j.is_object()) {
        throw ConfigError("config: expected a JSON object");
    }
    try {
        for (const auto& [key, v] : j.items()) {
            if (key == "inputs") {
                cfg.inputs.clear();
                for (const auto& p : v) {
                    cfg.inputs.emplace_back(p.get<std::string>());
                }
            } else if (key == "scenario") {
                cfg.scenario = v.get<std::string>();
            } else if (key == "seed") {
                cfg.seed = v.get<std::uint64_t>();
            } else if (key == "policies") {
                cfg.policies.clear();
                for (const auto& p : v) {
                    const auto pol = parse_policy(p.get<std::string>());
                    if (!pol) {
                        throw ConfigError("config: unknown policy " + p.dump());
                    }
                    cfg.policies.push_back(*pol);
                }
            } else if (key == "swc_threshold_db") {
                cfg.swc_threshold_db = v.get<double>();
            } else if (key == "sweep") {
                cfg.sweep = v.get<std::vector<double>>();
            } else if (key == "cod_thresholds_s") {
                cfg.cod_thresholds_s = v.get<std::vector<double>>();
            } else if (key == "cod_sensitivities_db") {
                cfg.cod_sensitivities_db = v.get<std::vector<double>>();
            } else if (key == "report_sensitivity_db") {
                cfg.report_sensitivity_db = v.get<double>();
            } else if (key == "impute_floor_db") {
                cfg.impute_floor_db = v.get<double>();
            } else if (key == "target_probability") {
                cfg.target_probability = v.get<double>();
            } else if (key == "delta_ms") {
                cfg.delta_ms = v.get<double>();
            } else if (key == "classes") {
                cfg.classes.clear();
                for (const auto& c : v) {
                    const auto cls = parse_link_class(c.get<std::string>());
                    if (!cls) {
                        throw ConfigError("config: unknown link class " + c.dump());
                    }
                    cfg.classes.push_back(*cls);
                }
            } else if (key == "pairs") {
                cfg.pairs.clear();
                for (const auto& p : v) {
                    cfg.pairs.push_back(parse_pair(p.get<std::string>()));
                }
            } else if (key == "output_dir") {
                cfg.output_dir = v.get<std::string>();
            } else {
                throw ConfigError("config: unknown field '" + key + "'");
            }
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

inline AnalysisConfig load_config_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file " + path.string());
    }
    AnalysisConfig cfg;
    try {
        apply_config_json(cfg, json::parse(in));
    } catch (const json::exception& e) {
        throw ConfigError("config " + path.string() + ": " + e.what());
    }
    return cfg;
}

inline synth::ScenarioSpec load_scenario_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open scenario file " + path.string());
    }
    return synth::parse_scenario(in);
}

inline DenseTraceSet load_trace_file(const fs::path& path, double impute_floor_db,
                                     std::optional<double> delta_ms) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open trace file " + path.string());
    }
    RecordLog log;
    try {
        log = parse_records(in);
    } catch (const ParseError& e) {
        throw ParseError(e.line(), path.string() + ": " + e.reason());
    } catch (const SchemaError& e) {
        throw SchemaError(e.line(), path.string() + ": " + e.reason());
    }
    if (log.subject.empty()) {
        log.subject = path.stem().string();
    }
    return impute_missing(align_to_grid(log, delta_ms), impute_floor_db);
}

inline std::vector<DenseTraceSet> load_trace_sets(const AnalysisConfig& cfg) {
    std::vector<DenseTraceSet> sets;
    if (!cfg.inputs.empty()) {
        std::map<std::string, int> seen;
        for (const auto& p : cfg.inputs) {
            DenseTraceSet ts = load_trace_file(p, cfg.impute_floor_db, cfg.delta_ms);
            // Subjects name output files and per-subject tables; keep them unique.
            const int n = ++seen[ts.subject()];
            if (n > 1) {
                ts = DenseTraceSet(ts.delta_ms(), ts.size(), ts.traces(),
                                   ts.subject() + "-" + std::to_string(n));
            }
            sets.push_back(std::move(ts));
        }
    } else {
        auto spec = load_scenario_file(*cfg.scenario);
        if (cfg.seed) {
            spec.seed = *cfg.seed;
        }
        sets.push_back(impute_missing(synth::generate_scenario(spec), cfg.impute_floor_db));
    }
    return sets;
}

// ---------------------------------------------------------------------------
// Report assembly

inline double prob(double v) { return fmt::round_significant(v, 4); }
inline double db(double v) { return fmt::round_decimals(v, 2); }

// "on_body", "off_body", or "all" (both classes pooled).
using GroupKey = std::string;

inline std::optional<LinkClass> class_of(const GroupKey& key) {
    return parse_link_class(key);
}

inline std::vector<GroupKey> group_keys(const AnalysisConfig& cfg) {
    std::vector<GroupKey> keys;
    for (LinkClass c : cfg.classes) {
        keys.emplace_back(to_string(c));
    }
    if (cfg.classes.size() > 1) {
        keys.emplace_back("all");
    }
    return keys;
}

inline std::string sensitivity_tag(double s) {
    std::string t = fmt::fixed(s, s == std::floor(s) ? 0 : 2);
    for (auto& c : t) {
        if (c == '-') {
            c = 'm';
        } else if (c == '.') {
            c = 'p';
        }
    }
    return t;
}

struct GroupResult {
    OutageCurve curve;
    json summary;
    std::vector<DurationCurve> cod_curves;
};

inline GroupResult summarize(const Selection& sel, const AnalysisConfig& cfg,
                             const std::string& label) {
    GroupResult r;
    r.curve = pooled_outage_curve(sel, cfg.sweep, label);
    const RunPool pool = pooled_runs(sel, cfg.report_sensitivity_db);
    json s;
    s["pairs"] = sel.size();
    s["total_slots"] = pool.total_slots;
    s["op_at_report_sensitivity"] = prob(pooled_outage_probability(sel, cfg.report_sensitivity_db));
    s["cod_gt_10s"] = prob(exceedance_fraction(pool, kLongOutageS));
    s["cod_gt_125ms"] = prob(latency_exceedance(pool, kDefaultLatencyS));
    try {
        s["best_case_op"] = prob(best_case_op(r.curve));
    } catch (const ConfigError&) {
        s["best_case_op"] = nullptr; // sweep does not include -100 dB
    }
    try {
        s["switching_rate_hz"] = prob(pooled_switching_rate(sel));
    } catch (const MetricError&) {
        s["switching_rate_hz"] = nullptr;
    }
    r.summary = std::move(s);
    for (double sens : cfg.cod_sensitivities_db) {
        r.cod_curves.push_back(cod_curve(pooled_runs(sel, sens), cfg.cod_thresholds_s,
                                         label + "@" + fmt::fixed(sens, 2), sens));
    }
    return r;
}

inline json curve_json(const OutageCurve& c) {
    json pts = json::array();
    for (const auto& p : c.points) {
        pts.push_back({db(p.x), prob(p.y)});
    }
    return {{"label", c.label}, {"points", pts}};
}

inline json curve_json(const DurationCurve& c) {
    json pts = json::array();
    for (const auto& p : c.points) {
        pts.push_back({prob(p.x), prob(p.y)});
    }
    return {{"label", c.label}, {"sensitivity_db", db(c.sensitivity_db)}, {"points", pts}};
}

inline void write_text_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ConfigError("cannot write " + path.string());
    }
    out << text;
}

template <typename Writer>
void write_file_with(const fs::path& path, Writer&& w) {
    std::ostringstream ss;
    w(ss);
    write_text_file(path, ss.str());
}

// Runs every requested policy over every selected group and writes
// curves/*.csv, runs/*.csv and summary.json under cfg.output_dir. Returns
// the summary document.
inline json run_analyze(const AnalysisConfig& cfg) {
    cfg.validate();
    const std::vector<DenseTraceSet> sets = load_trace_sets(cfg);

    const fs::path curves_dir = cfg.output_dir / "curves";
    const fs::path runs_dir = cfg.output_dir / "runs";
    fs::create_directories(curves_dir);
    fs::create_directories(runs_dir);

    json summary;
    json cfg_json;
    cfg_json["policies"] = json::array();
    for (Policy p : cfg.policies) {
        cfg_json["policies"].push_back(to_string(p));
    }
    cfg_json["swc_threshold_db"] = db(cfg.swc_threshold_db);
    cfg_json["report_sensitivity_db"] = db(cfg.report_sensitivity_db);
    cfg_json["impute_floor_db"] = db(cfg.impute_floor_db);
    cfg_json["target_probability"] = prob(cfg.target_probability);
    cfg_json["subjects"] = json::array();
    for (const auto& s : sets) {
        cfg_json["subjects"].push_back(s.subject());
    }
    summary["config"] = cfg_json;

    json pooled = json::object();
    json improvements = json::object();
    json per_subject = json::object();
    json curves_out = {{"outage", json::array()}, {"cod", json::array()}};
    std::size_t groups_run = 0;

    for (const GroupKey& key : group_keys(cfg)) {
        const auto cls = class_of(key);
        std::map<Policy, OutageCurve> curves_by_policy;
        for (Policy policy : cfg.policies) {
            Selection sel;
            try {
                sel = select_and_combine(sets, policy, cls, cfg.swc_threshold_db, cfg.pairs);
            } catch (const EmptySelectionError&) {
                continue;
            }
            ++groups_run;
            const std::string label = std::string(to_string(policy)) + "_" + key;
            GroupResult r = summarize(sel, cfg, label);
            pooled[key][std::string(to_string(policy))] = r.summary;
            write_file_with(curves_dir / ("op_" + label + ".csv"),
                            [&](std::ostream& o) { write_curve_csv(o, r.curve, 2); });
            curves_out["outage"].push_back(curve_json(r.curve));
            for (const auto& cc : r.cod_curves) {
                write_file_with(curves_dir / ("cod_" + label + "_" +
                                              sensitivity_tag(cc.sensitivity_db) + ".csv"),
                                [&](std::ostream& o) { write_curve_csv(o, cc, -1); });
                curves_out["cod"].push_back(curve_json(cc));
            }
            curves_by_policy.emplace(policy, r.curve);

            if (key != "all") {
                for (const auto& ps : sel) {
                    const auto runs = outage_runs(
                        outage_indicator(ps.combined.gains, cfg.report_sensitivity_db),
                        ps.combined.delta_ms);
                    const std::string name = ps.subject + "_" + ps.pair.label() + "_" +
                                             std::string(to_string(policy)) + ".csv";
                    write_file_with(runs_dir / name,
                                    [&](std::ostream& o) { write_runs_csv(o, runs); });
                }
            }

            // Per-subject breakdown of the same group.
            if (sets.size() > 1) {
                for (const auto& ts : sets) {
                    Selection one;
                    for (const auto& ps : sel) {
                        if (ps.subject == ts.subject()) {
                            one.push_back(ps);
                        }
                    }
                    if (one.empty()) {
                        continue;
                    }
                    per_subject[ts.subject()][key][std::string(to_string(policy))] =
                        summarize(one, cfg, label).summary;
                }
            }
        }
        auto dl = curves_by_policy.find(Policy::DL);
        if (dl != curves_by_policy.end()) {
            for (Policy coop : {Policy::SC, Policy::SwC}) {
                auto it = curves_by_policy.find(coop);
                if (it == curves_by_policy.end()) {
                    continue;
                }
                try {
                    improvements[key][std::string(to_string(coop))] =
                        db(gain_improvement_at(it->second, dl->second, cfg.target_probability));
                } catch (const NotCrossedError&) {
                    improvements[key][std::string(to_string(coop))] = nullptr;
                }
            }
        }
    }
    if (groups_run == 0) {
        std::string msg = "no (source, dest) pair matches the selection; valid pairs:";
        for (const auto& p : enumerate_pairs(sets.front())) {
            msg += " " + p.label();
        }
        throw EmptySelectionError(msg);
    }
    summary["pooled"] = pooled;
    summary["improvement_db_at_target_op"] = improvements;
    if (sets.size() > 1) {
        summary["per_subject"] = per_subject;
    }
    summary["curves"] = curves_out;
    write_text_file(cfg.output_dir / "summary.json", summary.dump(2) + "\n");
    return summary;
}

// Generates the scenario and writes it as a record CSV.
inline ChannelTraceSet run_synth(const fs::path& spec_path, std::optional<std::uint64_t> seed,
                                 const fs::path& out_path) {
    auto spec = load_scenario_file(spec_path);
    if (seed) {
        spec.seed = *seed;
    }
    ChannelTraceSet traces = synth::generate_scenario(spec);
    if (out_path.has_parent_path()) {
        fs::create_directories(out_path.parent_path());
    }
    write_file_with(out_path, [&](std::ostream& o) { write_records_csv(o, to_records(traces)); });
    return traces;
}

struct SweepRow {
    double threshold_db = 0.0;
    double op = 0.0;
    double switching_rate_hz = 0.0;
};

// SwC outage probability at the report sensitivity and switching rate, per
// threshold, pooled over the selected classes. Rows keep input order.
inline std::vector<SweepRow> run_sweep_threshold(const AnalysisConfig& cfg,
                                                 const std::vector<double>& thresholds) {
    if (thresholds.empty()) {
        throw ConfigError("threshold list is empty");
    }
    AnalysisConfig c = cfg;
    c.policies = {Policy::SwC};
    c.validate();
    const std::vector<DenseTraceSet> sets = load_trace_sets(c);
    const std::optional<LinkClass> cls =
        c.classes.size() == 1 ? std::optional<LinkClass>(c.classes.front()) : std::nullopt;
    std::vector<SweepRow> rows;
    for (double t : thresholds) {
        const Selection sel = select_and_combine(sets, Policy::SwC, cls, t, c.pairs);
        rows.push_back(SweepRow{t, pooled_outage_probability(sel, c.report_sensitivity_db),
                                pooled_switching_rate(sel)});
    }
    return rows;
}

inline void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
    out << "threshold_db,op,switching_rate_hz\n";
    for (const auto& r : rows) {
        out << fmt::fixed(r.threshold_db, 2) << ',' << fmt::significant(r.op, 4) << ','
            << fmt::significant(r.switching_rate_hz, 4) << '\n';
    }
}

} // namespace wban::app
