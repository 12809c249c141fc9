#include <array>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "test_support.hpp"
#include "wban/diversity.hpp"
#include "wban/synthgen.hpp"

using namespace wban;

namespace {

// Case conditions of the switch-and-examine selection rule, transcribed term
// by term: each returns whether that branch's defining condition holds given
// the previous output branch and the current branch gains.
struct SwitchRuleCases {
    bool direct;
    bool relay1;
    bool relay2;

    [[nodiscard]] bool holds(Branch b) const {
        return b == Branch::direct ? direct : (b == Branch::relay1 ? relay1 : relay2);
    }
    [[nodiscard]] int count() const { return int(direct) + int(relay1) + int(relay2); }
};

SwitchRuleCases evaluate_cases(Branch prev, const std::array<double, 3>& g, double th) {
    const bool sd_ok = g[0] >= th;
    const bool r1_ok = g[1] >= th;
    const bool r2_ok = g[2] >= th;
    SwitchRuleCases c{};
    c.direct = sd_ok && (prev == Branch::direct || !r2_ok);
    c.relay1 = r1_ok && (prev == Branch::relay1 || !sd_ok);
    c.relay2 = (r2_ok && (!r1_ok || prev == Branch::relay2)) || (!sd_ok && !r1_ok);
    return c;
}

BranchSet make_branches(std::vector<double> sd, std::vector<double> r1, std::vector<double> r2) {
    BranchSet bs;
    bs.source = Position::H_f;
    bs.dest = Position::L_a;
    bs.relay1 = Position::NTB_h;
    bs.relay2 = Position::L_w;
    bs.gains = {std::move(sd), std::move(r1), std::move(r2)};
    return bs;
}

DenseTraceSet full_trace_set(std::uint64_t seed, std::size_t n = 200) {
    auto spec = testutil::random_scenario(seed, n);
    return impute_missing(synth::generate_scenario(spec));
}

} // namespace

TEST(TwoHopGain, IsMinimum) {
    EXPECT_EQ(two_hop_gain(-60, -75), -75);
    EXPECT_EQ(two_hop_gain(-90, -90), -90);
    EXPECT_EQ(two_hop_gain(-102, -50), -102);
}

TEST(TwoHopGain, CommutativeIdempotentBounded) {
    std::mt19937 rng(1);
    std::uniform_real_distribution<double> g(-110, 0);
    for (int i = 0; i < 1000; ++i) {
        const double a = g(rng);
        const double b = g(rng);
        EXPECT_EQ(two_hop_gain(a, b), two_hop_gain(b, a));
        EXPECT_EQ(two_hop_gain(a, a), a);
        EXPECT_LE(two_hop_gain(a, b), a);
        EXPECT_LE(two_hop_gain(a, b), b);
    }
}

TEST(BuildBranches, RelaysInTableOrder) {
    const auto traces = full_trace_set(3);
    const auto bs = build_branches(traces, Position::H_f, Position::L_a);
    EXPECT_EQ(bs.relay1, Position::NTB_h);
    EXPECT_EQ(bs.relay2, Position::L_w);
    const auto bs2 = build_branches(traces, Position::L_w, Position::NTB_f);
    EXPECT_EQ(bs2.relay1, Position::NTB_h);
    EXPECT_EQ(bs2.relay2, Position::H_f);
}

TEST(BuildBranches, ReceiverSourceRejected) {
    const auto traces = full_trace_set(3);
    EXPECT_THROW(build_branches(traces, Position::R_w, Position::L_a), RoleError);
}

TEST(BuildBranches, MissingHopRejected) {
    DenseTraceSet set(15.0, 1, {{{Position::H_f, Position::L_a}, {-70.0}}});
    EXPECT_THROW(build_branches(set, Position::H_f, Position::L_a), MissingLinkError);
    EXPECT_FALSE(branches_resolvable(set, Position::H_f, Position::L_a));
}

TEST(BuildBranches, SeriesComposeHopsWithReciprocity) {
    const auto traces = full_trace_set(9);
    const auto bs = build_branches(traces, Position::H_f, Position::L_a);
    for (std::size_t t = 0; t < traces.size(); ++t) {
        EXPECT_EQ(bs.h_sd()[t], gain_at(traces, Position::H_f, Position::L_a, t));
        // H_f -> NTB_h is measured directly; NTB_h -> L_a too.
        EXPECT_EQ(bs.h_sr1d()[t], std::min(gain_at(traces, Position::H_f, Position::NTB_h, t),
                                           gain_at(traces, Position::NTB_h, Position::L_a, t)));
        EXPECT_EQ(bs.h_sr2d()[t], std::min(gain_at(traces, Position::H_f, Position::L_w, t),
                                           gain_at(traces, Position::L_w, Position::L_a, t)));
    }
}

TEST(BuildBranches, ReverseOnlyHopResolvedByReciprocity) {
    // Only NTB_h transmits towards H_f; the H_f -> NTB_h hop must come from it.
    DenseTraceSet set(15.0, 2,
                      {{{Position::H_f, Position::L_a}, {-80.0, -81.0}},
                       {{Position::NTB_h, Position::H_f}, {-60.0, -95.0}},
                       {{Position::NTB_h, Position::L_a}, {-70.0, -70.0}},
                       {{Position::H_f, Position::L_w}, {-50.0, -50.0}},
                       {{Position::L_w, Position::L_a}, {-90.0, -91.0}}});
    const auto bs = build_branches(set, Position::H_f, Position::L_a);
    EXPECT_EQ(bs.h_sr1d()[0], -70.0);
    EXPECT_EQ(bs.h_sr1d()[1], -95.0);
}

TEST(BuildBranches, HubThatIsARelayCollapsesToDirect) {
    const auto traces = full_trace_set(4);
    const auto bs = build_branches(traces, Position::H_f, Position::NTB_h);
    EXPECT_EQ(bs.relay1, Position::NTB_h);
    EXPECT_EQ(bs.gains[1], bs.gains[0]);
}

TEST(CombineDl, Identity) {
    const auto bs = make_branches({-80, -90}, {-10, -10}, {-20, -20});
    const auto cs = combine_dl(bs);
    EXPECT_EQ(cs.gains, (std::vector<double>{-80, -90}));
    EXPECT_EQ(cs.branch_ids, (std::vector<Branch>{Branch::direct, Branch::direct}));
    EXPECT_FALSE(cs.threshold_db.has_value());
    EXPECT_TRUE(combine_dl(make_branches({}, {}, {})).gains.empty());
}

TEST(CombineSc, MaxWithTieBreak) {
    const auto cs = combine_sc(make_branches({-80, -70, -102}, {-90, -70, -102}, {-70, -75, -102}));
    EXPECT_EQ(cs.gains, (std::vector<double>{-70, -70, -102}));
    EXPECT_EQ(cs.branch_ids, (std::vector<Branch>{Branch::relay2, Branch::direct, Branch::direct}));
}

TEST(CombineSwc, StartsOnDirect) {
    const auto cs = combine_swc(make_branches({-80}, {-70}, {-90}), -86);
    EXPECT_EQ(cs.branch_ids[0], Branch::direct);
    EXPECT_EQ(cs.gains[0], -80);
    EXPECT_EQ(cs.threshold_db, -86.0);
}

TEST(CombineSwc, SwitchesToFirstAdequateBranch) {
    // Slot 0 keeps direct; slot 1 direct fades below -86 and relay1 clears it.
    const auto cs = combine_swc(make_branches({-80, -90}, {-70, -70}, {-90, -90}), -86);
    EXPECT_EQ(cs.branch_ids[1], Branch::relay1);
    EXPECT_EQ(cs.gains[1], -70);
    EXPECT_TRUE(evaluate_cases(Branch::direct, {-90, -70, -90}, -86).relay1);
}

TEST(CombineSwc, AllBelowFallsBackToRelay2) {
    const auto cs = combine_swc(make_branches({-90, -90}, {-70, -88}, {-90, -89}), -86);
    ASSERT_EQ(cs.branch_ids[0], Branch::relay1);
    EXPECT_EQ(cs.branch_ids[1], Branch::relay2);
    EXPECT_EQ(cs.gains[1], -89);
}

TEST(CombineSwc, EqualGainsDoNotConfuseState) {
    // All branches equal: a value comparison could not tell which branch is
    // in use; the index state keeps relay1 while it stays above threshold.
    const auto cs = combine_swc(make_branches({-90, -70, -70}, {-70, -70, -70}, {-95, -70, -70}), -86);
    EXPECT_EQ(cs.branch_ids, (std::vector<Branch>{Branch::relay1, Branch::relay1, Branch::relay1}));
}

TEST(SwcStep, ExhaustiveTruthTableAgainstCaseConditions) {
    const double th = -86.0;
    int overlaps = 0;
    for (Branch prev : {Branch::direct, Branch::relay1, Branch::relay2}) {
        for (int pattern = 0; pattern < 8; ++pattern) {
            std::array<double, 3> g{};
            for (int b = 0; b < 3; ++b) {
                g[b] = (pattern >> b) & 1 ? -80.0 : -95.0;
            }
            const Branch chosen = swc_step(prev, g, th);
            const auto cases = evaluate_cases(prev, g, th);
            EXPECT_GE(cases.count(), 1);
            EXPECT_TRUE(cases.holds(chosen))
                << "prev=" << to_string(prev) << " pattern=" << pattern;
            if (cases.count() > 1) {
                ++overlaps;
                EXPECT_TRUE(cases.holds(prev));
                EXPECT_EQ(chosen, prev) << "stay-precedence, pattern=" << pattern;
            }
        }
    }
    // prev=direct (sd,r2 ok, r1 not), prev=relay1 (sd,r1 ok, r2 not),
    // prev=relay2 (r1,r2 ok, sd not).
    EXPECT_EQ(overlaps, 3);
}

TEST(SwcStep, ThresholdAtGainIsNotBelow) {
    EXPECT_EQ(swc_step(Branch::direct, {-86.0, -50.0, -50.0}, -86.0), Branch::direct);
}

TEST(CombineSwc, InfiniteThresholds) {
    const auto traces = full_trace_set(21, 500);
    const auto bs = build_branches(traces, Position::L_w, Position::H_b);
    const auto never = combine_swc(bs, -std::numeric_limits<double>::infinity());
    EXPECT_EQ(never.gains, bs.gains[0]);
    EXPECT_EQ(switch_count(never), 0u);

    const auto always = combine_swc(bs, std::numeric_limits<double>::infinity());
    for (std::size_t t = 2; t < always.size(); ++t) {
        EXPECT_EQ(always.branch_ids[t], Branch::relay2);
    }
}

TEST(Combine, DominanceAndMembershipProperties) {
    for (std::uint64_t seed = 100; seed < 120; ++seed) {
        const auto traces = full_trace_set(seed, 400);
        for (Position s : kTransceivers) {
            for (Position d : kAllPositions) {
                if (d == s) {
                    continue;
                }
                const auto bs = build_branches(traces, s, d);
                const auto dl = combine_dl(bs);
                const auto sc = combine_sc(bs);
                const auto sw = combine_swc(bs, -86.0);
                for (std::size_t t = 0; t < bs.size(); ++t) {
                    const auto g = bs.at(t);
                    EXPECT_EQ(sc.gains[t], std::max({g[0], g[1], g[2]}));
                    EXPECT_LE(sw.gains[t], sc.gains[t]);
                    EXPECT_LE(dl.gains[t], sc.gains[t]);
                    for (const auto* cs : {&dl, &sc, &sw}) {
                        EXPECT_EQ(cs->gains[t], g[index(cs->branch_ids[t])]);
                    }
                }
            }
        }
    }
}

TEST(SwitchingRate, Counts) {
    CombinedSeries cs;
    cs.branch_ids = {Branch::direct, Branch::direct, Branch::direct, Branch::direct};
    cs.gains.assign(4, -70.0);
    EXPECT_EQ(switching_rate(cs), 0.0);

    cs.branch_ids = {Branch::direct, Branch::relay1, Branch::direct, Branch::relay1};
    EXPECT_NEAR(switching_rate(cs), 3.0 / 0.045, 1e-9);

    cs.branch_ids = {Branch::direct};
    cs.gains = {-70.0};
    EXPECT_THROW(switching_rate(cs), MetricError);
}

TEST(CombinedCsv, Format) {
    const auto cs = combine_sc(make_branches({-80.5}, {-90}, {-70.25}));
    std::ostringstream out;
    write_combined_csv(out, cs);
    EXPECT_EQ(out.str(), "slot,gain_db,branch\n0,-70.25,relay2\n");
}
