#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "wban/error.hpp"
#include "wban/format.hpp"
#include "wban/nodes.hpp"
#include "wban/trace.hpp"

namespace wban::synth {

// Per-link generator parameters. The gain in dB is
//   mean + shadow[t] - (blocked[t] ? block_atten : 0)
// where shadow is a stationary AR(1) process and blocked follows a two-state
// Markov chain. Each slot is independently lost with loss_prob.
struct LinkParams {
    double mean_gain_db = -70.0;
    double shadow_sigma_db = 4.0;
    double shadow_corr = 0.99;
    double block_enter_prob = 0.001;
    double block_exit_prob = 0.01;
    double block_atten_db = 20.0;
    double loss_prob = 0.02;

    bool operator==(const LinkParams&) const = default;

    void validate(const std::string& where) const {
        auto bad = [&](const char* field, const char* range) {
            throw ConfigError(where + ": " + field + " must be in " + range);
        };
        if (!std::isfinite(mean_gain_db)) {
            bad("mean_gain_db", "the finite reals");
        }
        if (!(shadow_sigma_db >= 0.0) || !std::isfinite(shadow_sigma_db)) {
            bad("shadow_sigma_db", "[0, inf)");
        }
        if (!(shadow_corr >= 0.0 && shadow_corr < 1.0)) {
            bad("shadow_corr", "[0, 1)");
        }
        if (!(block_enter_prob >= 0.0 && block_enter_prob <= 1.0)) {
            bad("block_enter_prob", "[0, 1]");
        }
        if (!(block_exit_prob > 0.0 && block_exit_prob <= 1.0)) {
            bad("block_exit_prob", "(0, 1]");
        }
        if (!(block_atten_db >= 0.0) || !std::isfinite(block_atten_db)) {
            bad("block_atten_db", "[0, inf)");
        }
        if (!(loss_prob >= 0.0 && loss_prob < 1.0)) {
            bad("loss_prob", "[0, 1)");
        }
    }

    // Long-run fraction of slots spent blocked.
    [[nodiscard]] double stationary_block_fraction() const noexcept {
        return block_enter_prob / (block_enter_prob + block_exit_prob);
    }
};

struct ScenarioSpec {
    std::size_t slots = 1;
    double delta_ms = kDefaultDeltaMs;
    std::uint64_t seed = 0;
    std::string subject = "synthetic";
    std::map<LinkKey, LinkParams> links;

    // Same parameters on every measurable link.
    static ScenarioSpec uniform(const LinkParams& p, std::size_t slots, std::uint64_t seed) {
        ScenarioSpec s;
        s.slots = slots;
        s.seed = seed;
        for (const auto& k : measurable_links()) {
            s.links[k] = p;
        }
        return s;
    }

    void validate() const {
        if (slots < 1) {
            throw ConfigError("scenario needs at least one slot");
        }
        if (!(delta_ms > 0.0) || !std::isfinite(delta_ms)) {
            throw ConfigError("scenario delta_ms must be positive");
        }
        for (const auto& k : measurable_links()) {
            if (!links.contains(k)) {
                throw ConfigError("scenario does not cover measurable link " + k.label());
            }
        }
        for (const auto& [k, p] : links) {
            p.validate("link " + k.label());
        }
    }
};

// Substream for one link, keyed by its label so the draw sequence does not
// depend on how many links exist or in what order they were declared.
inline std::mt19937_64 link_engine(std::uint64_t seed, const LinkKey& link) {
    std::vector<std::uint32_t> material = {static_cast<std::uint32_t>(seed),
                                           static_cast<std::uint32_t>(seed >> 32)};
    for (char c : link.label()) {
        material.push_back(static_cast<unsigned char>(c));
    }
    std::seed_seq seq(material.begin(), material.end());
    return std::mt19937_64(seq);
}

// Gains are clamped to the recordable range [-110, 0] dB so every generated
// value survives the record-CSV validation on re-ingestion.
inline std::vector<GainSample> generate_link(const LinkParams& p, const LinkKey& link,
                                             std::size_t slots, std::uint64_t seed) {
    p.validate("link " + link.label());
    auto rng = link_engine(seed, link);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);

    const double innovation = p.shadow_sigma_db * std::sqrt(1.0 - p.shadow_corr * p.shadow_corr);
    double shadow = p.shadow_sigma_db * normal(rng);
    bool blocked = uniform(rng) < p.stationary_block_fraction();

    std::vector<GainSample> out;
    out.reserve(slots);
    for (std::size_t t = 0; t < slots; ++t) {
        if (t > 0) {
            const double w = normal(rng);
            const double u = uniform(rng);
            shadow = p.shadow_corr * shadow + innovation * w;
            blocked = blocked ? !(u < p.block_exit_prob) : (u < p.block_enter_prob);
        }
        const bool lost = uniform(rng) < p.loss_prob;
        if (lost) {
            out.emplace_back(std::nullopt);
            continue;
        }
        double g = p.mean_gain_db + shadow - (blocked ? p.block_atten_db : 0.0);
        out.emplace_back(std::clamp(g, kMinRecordedGainDb, kMaxRecordedGainDb));
    }
    return out;
}

// Blocking-chain state sequence alone (same substream as generate_link).
inline std::vector<bool> blocking_states(const LinkParams& p, const LinkKey& link,
                                         std::size_t slots, std::uint64_t seed) {
    p.validate("link " + link.label());
    auto rng = link_engine(seed, link);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    (void)normal(rng);
    bool blocked = uniform(rng) < p.stationary_block_fraction();
    std::vector<bool> out;
    out.reserve(slots);
    for (std::size_t t = 0; t < slots; ++t) {
        if (t > 0) {
            (void)normal(rng);
            const double u = uniform(rng);
            blocked = blocked ? !(u < p.block_exit_prob) : (u < p.block_enter_prob);
        }
        (void)uniform(rng);
        out.push_back(blocked);
    }
    return out;
}

inline ChannelTraceSet generate_scenario(const ScenarioSpec& spec) {
    spec.validate();
    ChannelTraceSet::Map traces;
    for (const auto& [key, params] : spec.links) {
        traces.emplace(key, generate_link(params, key, spec.slots, spec.seed));
    }
    return ChannelTraceSet(spec.delta_ms, spec.slots, std::move(traces), spec.subject);
}

inline ChannelTraceSet generate_scenario(ScenarioSpec spec, std::uint64_t seed) {
    spec.seed = seed;
    return generate_scenario(spec);
}

// ---------------------------------------------------------------------------
// Scenario file (JSON):
//   { "slots": N, "delta_ms": 15, "seed": 1, "subject": "...",
//     "defaults": { <LinkParams fields> },
//     "links": { "H_f-L_a": { <overrides> }, ... } }
// Links not listed take the defaults.

namespace detail {

inline void read_params(const nlohmann::json& j, LinkParams& p, const std::string& where) {
    if (!j.is_object()) {
        throw ConfigError(where + ": expected an object");
    }
    for (const auto& [key, value] : j.items()) {
        if (!value.is_number()) {
            throw ConfigError(where + "." + key + ": expected a number");
        }
        const double v = value.get<double>();
        if (key == "mean_gain_db") {
            p.mean_gain_db = v;
        } else if (key == "shadow_sigma_db") {
            p.shadow_sigma_db = v;
        } else if (key == "shadow_corr") {
            p.shadow_corr = v;
        } else if (key == "block_enter_prob") {
            p.block_enter_prob = v;
        } else if (key == "block_exit_prob") {
            p.block_exit_prob = v;
        } else if (key == "block_atten_db") {
            p.block_atten_db = v;
        } else if (key == "loss_prob") {
            p.loss_prob = v;
        } else {
            throw ConfigError(where + ": unknown field '" + key + "'");
        }
    }
}

} // namespace detail

inline ScenarioSpec parse_scenario(const nlohmann::json& j) {
    if (!j.is_object()) {
        throw ConfigError("scenario: expected a JSON object");
    }
    ScenarioSpec spec;
    LinkParams defaults;
    for (const auto& [key, value] : j.items()) {
        if (key == "slots") {
            if (!value.is_number_integer() || value.get<long long>() < 1) {
                throw ConfigError("scenario.slots must be a positive integer");
            }
            spec.slots = value.get<std::size_t>();
        } else if (key == "delta_ms") {
            if (!value.is_number()) {
                throw ConfigError("scenario.delta_ms must be a number");
            }
            spec.delta_ms = value.get<double>();
        } else if (key == "seed") {
            if (!value.is_number_unsigned()) {
                throw ConfigError("scenario.seed must be a non-negative integer");
            }
            spec.seed = value.get<std::uint64_t>();
        } else if (key == "subject") {
            spec.subject = value.get<std::string>();
        } else if (key == "defaults") {
            detail::read_params(value, defaults, "scenario.defaults");
        } else if (key != "links") {
            throw ConfigError("scenario: unknown field '" + key + "'");
        }
    }
    for (const auto& k : measurable_links()) {
        spec.links[k] = defaults;
    }
    if (j.contains("links")) {
        const auto& links = j.at("links");
        if (!links.is_object()) {
            throw ConfigError("scenario.links must be an object");
        }
        for (const auto& [label, value] : links.items()) {
            const LinkKey k = parse_link_label(label);
            detail::read_params(value, spec.links[k], "scenario.links." + label);
        }
    }
    spec.validate();
    return spec;
}

inline ScenarioSpec parse_scenario(std::istream& in) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("scenario: ") + e.what());
    }
    return parse_scenario(j);
}

} // namespace wban::synth
