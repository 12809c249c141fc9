#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "wban/synthgen.hpp"

namespace wban::testutil {

// Scratch directory removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("wban_" + tag + "_" + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    [[nodiscard]] const std::filesystem::path& path() const noexcept { return path_; }

private:
    std::filesystem::path path_;
};

// Scenario with every link's parameters drawn from broad ranges; used by the
// property suites so combining and metrics see varied channel behaviour.
inline synth::ScenarioSpec random_scenario(std::uint64_t seed, std::size_t slots) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto in = [&](double lo, double hi) { return lo + (hi - lo) * u(rng); };
    synth::ScenarioSpec spec;
    spec.slots = slots;
    spec.seed = seed;
    spec.subject = "rand" + std::to_string(seed);
    for (const auto& k : measurable_links()) {
        synth::LinkParams p;
        p.mean_gain_db = in(-92.0, -55.0);
        p.shadow_sigma_db = in(0.0, 8.0);
        p.shadow_corr = in(0.5, 0.999);
        p.block_enter_prob = in(0.0, 0.01);
        p.block_exit_prob = in(0.001, 0.05);
        p.block_atten_db = in(0.0, 30.0);
        p.loss_prob = in(0.0, 0.1);
        spec.links[k] = p;
    }
    return spec;
}

} // namespace wban::testutil
