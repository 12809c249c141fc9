// wbancoop: cooperative receive-diversity analysis of body-area-network
// channel-gain traces.
//
//   wbancoop analyze --input subj1.csv --input subj2.csv --out report/
//   wbancoop analyze --scenario scenarios/sleeping.json --policies SC,DL
//   wbancoop synth --spec scenarios/sleeping.json --seed 7 --out trace.csv
//   wbancoop sweep-threshold --scenario scenarios/sleeping.json --thresholds=-95,-90,-86

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wban/wban.hpp"

namespace {

using wban::app::AnalysisConfig;

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const auto comma = s.find(',', start);
        const auto item = wban::fmt::trim(std::string_view(s).substr(start, comma - start));
        if (!item.empty()) {
            out.emplace_back(item);
        }
        if (comma == std::string::npos) {
            break;
        }
        start = comma + 1;
    }
    return out;
}

std::vector<double> parse_numbers(const std::string& s, const char* what) {
    std::vector<double> out;
    for (const auto& item : split_list(s)) {
        const auto v = wban::fmt::parse_double(item);
        if (!v) {
            throw wban::ConfigError(std::string("bad number '") + item + "' in " + what);
        }
        out.push_back(*v);
    }
    return out;
}

// Flags shared by analyze and sweep-threshold. Values are applied on top of
// the config file only when the flag was given.
struct SelectionFlags {
    std::string config_path;
    std::vector<std::string> inputs;
    std::string scenario;
    std::uint64_t seed = 0;
    std::string policies;
    double threshold = wban::kDefaultSwitchThresholdDb;
    double sensitivity = -86.0;
    std::string cod_sensitivities;
    std::string cod_thresholds;
    double floor = wban::kDefaultImputeFloorDb;
    double delta = wban::kDefaultDeltaMs;
    double sweep_min = -100.0;
    double sweep_max = -60.0;
    double sweep_step = 1.0;
    std::string link_class;
    bool all = false;
    std::vector<std::string> pairs;
    std::string out_dir;

    CLI::Option* o_inputs = nullptr;
    CLI::Option* o_scenario = nullptr;
    CLI::Option* o_seed = nullptr;
    CLI::Option* o_policies = nullptr;
    CLI::Option* o_threshold = nullptr;
    CLI::Option* o_sensitivity = nullptr;
    CLI::Option* o_cod_sens = nullptr;
    CLI::Option* o_cod_thr = nullptr;
    CLI::Option* o_floor = nullptr;
    CLI::Option* o_delta = nullptr;
    CLI::Option* o_sweep_min = nullptr;
    CLI::Option* o_sweep_max = nullptr;
    CLI::Option* o_sweep_step = nullptr;
    CLI::Option* o_class = nullptr;
    CLI::Option* o_pairs = nullptr;
    CLI::Option* o_out = nullptr;

    void attach(CLI::App* app) {
        app->add_option("-c,--config", config_path, "JSON analysis config (flags override it)");
        o_inputs = app->add_option("-i,--input", inputs, "record CSV trace file (repeatable)");
        o_scenario = app->add_option("--scenario", scenario, "synthetic scenario spec (JSON)");
        o_seed = app->add_option("--seed", seed, "override the scenario seed");
        o_policies = app->add_option("--policies", policies, "comma list from DL,SC,SwC");
        o_threshold = app->add_option("--threshold", threshold, "SwC switching threshold [dB]");
        o_sensitivity = app->add_option("--sensitivity", sensitivity,
                                        "receive sensitivity for summary figures [dBm]");
        o_cod_sens = app->add_option("--cod-sensitivities", cod_sensitivities,
                                     "comma list of sensitivities for COD curves");
        o_cod_thr = app->add_option("--cod-thresholds", cod_thresholds,
                                    "comma list of duration thresholds [s]");
        o_floor = app->add_option("--floor", floor, "imputation value for lost packets [dB]");
        o_delta = app->add_option("--delta-ms", delta, "sample period [ms]");
        o_sweep_min = app->add_option("--sweep-min", sweep_min, "first sweep sensitivity [dBm]");
        o_sweep_max = app->add_option("--sweep-max", sweep_max, "last sweep sensitivity [dBm]");
        o_sweep_step = app->add_option("--sweep-step", sweep_step, "sweep step [dB]");
        o_class = app->add_option("--class", link_class, "restrict to on_body or off_body");
        app->add_flag("--all", all, "enumerate every valid pair of both classes");
        o_pairs = app->add_option("--pair", pairs, "explicit SRC:DST pair (repeatable)");
        o_out = app->add_option("-o,--out", out_dir, "output directory");
    }

    AnalysisConfig build() const {
        AnalysisConfig cfg = config_path.empty() ? AnalysisConfig{}
                                                 : wban::app::load_config_file(config_path);
        if (o_inputs->count() > 0) {
            cfg.inputs.assign(inputs.begin(), inputs.end());
        }
        if (o_scenario->count() > 0) {
            cfg.scenario = scenario;
        }
        if (o_seed->count() > 0) {
            cfg.seed = seed;
        }
        if (o_policies->count() > 0) {
            cfg.policies.clear();
            for (const auto& p : split_list(policies)) {
                const auto pol = wban::parse_policy(p);
                if (!pol) {
                    throw wban::ConfigError("unknown policy '" + p + "'");
                }
                cfg.policies.push_back(*pol);
            }
        }
        if (o_threshold->count() > 0) {
            cfg.swc_threshold_db = threshold;
        }
        if (o_sensitivity->count() > 0) {
            cfg.report_sensitivity_db = sensitivity;
        }
        if (o_cod_sens->count() > 0) {
            cfg.cod_sensitivities_db = parse_numbers(cod_sensitivities, "--cod-sensitivities");
        }
        if (o_cod_thr->count() > 0) {
            cfg.cod_thresholds_s = parse_numbers(cod_thresholds, "--cod-thresholds");
        }
        if (o_floor->count() > 0) {
            cfg.impute_floor_db = floor;
        }
        if (o_delta->count() > 0) {
            cfg.delta_ms = delta;
        }
        if (o_sweep_min->count() + o_sweep_max->count() + o_sweep_step->count() > 0) {
            if (!(sweep_step > 0.0) || sweep_max < sweep_min) {
                throw wban::ConfigError("sweep needs --sweep-step > 0 and --sweep-max >= --sweep-min");
            }
            cfg.sweep.clear();
            const auto n = static_cast<long>((sweep_max - sweep_min) / sweep_step + 1e-9);
            for (long k = 0; k <= n; ++k) {
                cfg.sweep.push_back(sweep_min + static_cast<double>(k) * sweep_step);
            }
        }
        if (o_class->count() > 0) {
            const auto cls = wban::parse_link_class(link_class);
            if (!cls) {
                throw wban::ConfigError("unknown link class '" + link_class + "'");
            }
            cfg.classes = {*cls};
        }
        if (all) {
            cfg.classes = {wban::LinkClass::on_body, wban::LinkClass::off_body};
            cfg.pairs.clear();
        }
        if (o_pairs->count() > 0) {
            cfg.pairs.clear();
            for (const auto& p : pairs) {
                cfg.pairs.push_back(wban::app::parse_pair(p));
            }
        }
        if (o_out->count() > 0) {
            cfg.output_dir = out_dir;
        }
        return cfg;
    }
};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cooperative receive-diversity analysis for body-area-network channel traces"};
    app.require_subcommand(1);

    auto* analyze = app.add_subcommand("analyze", "outage and outage-duration report");
    SelectionFlags analyze_flags;
    analyze_flags.attach(analyze);

    auto* synth = app.add_subcommand("synth", "generate a synthetic record CSV");
    std::string spec_path;
    std::string synth_out;
    std::uint64_t synth_seed = 0;
    synth->add_option("-s,--spec", spec_path, "scenario spec (JSON)")->required();
    auto* synth_seed_opt = synth->add_option("--seed", synth_seed, "override the scenario seed");
    synth->add_option("-o,--out", synth_out, "output record CSV")->required();

    auto* sweep = app.add_subcommand("sweep-threshold", "SwC outage and switching rate per threshold");
    SelectionFlags sweep_flags;
    sweep_flags.attach(sweep);
    std::string thresholds;
    sweep->add_option("--thresholds", thresholds, "comma list of thresholds [dB]")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*analyze) {
            const AnalysisConfig cfg = analyze_flags.build();
            wban::app::run_analyze(cfg);
            std::cout << "wrote " << (cfg.output_dir / "summary.json").string() << '\n';
        } else if (*synth) {
            std::optional<std::uint64_t> seed;
            if (synth_seed_opt->count() > 0) {
                seed = synth_seed;
            }
            const auto traces = wban::app::run_synth(spec_path, seed, synth_out);
            std::cout << "wrote " << synth_out << " (" << traces.size() << " slots, "
                      << traces.traces().size() << " links)\n";
        } else if (*sweep) {
            const AnalysisConfig cfg = sweep_flags.build();
            const auto rows =
                wban::app::run_sweep_threshold(cfg, parse_numbers(thresholds, "--thresholds"));
            if (sweep_flags.o_out->count() > 0) {
                std::filesystem::create_directories(cfg.output_dir);
                wban::app::write_file_with(cfg.output_dir / "sweep_threshold.csv",
                                           [&](std::ostream& o) { wban::app::write_sweep_csv(o, rows); });
            }
            wban::app::write_sweep_csv(std::cout, rows);
        }
    } catch (const wban::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
