#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "test_support.hpp"
#include "wban/metrics.hpp"
#include "wban/synthgen.hpp"

using namespace wban;

namespace {

// Evaluates a piecewise-linear curve at x and inverts it by bisection; an
// independent route to the crossing sensitivity.
double curve_value(const OutageCurve& c, double x) {
    const auto& p = c.points;
    for (std::size_t i = 0; i + 1 < p.size(); ++i) {
        if (x >= p[i].x && x <= p[i + 1].x) {
            const double w = (x - p[i].x) / (p[i + 1].x - p[i].x);
            return (1 - w) * p[i].y + w * p[i + 1].y;
        }
    }
    return x < p.front().x ? p.front().y : p.back().y;
}

double bisect_crossing(const OutageCurve& c, double prob) {
    double lo = c.points.front().x;
    double hi = c.points.back().x;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (curve_value(c, mid) < prob ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

std::vector<bool> bools(std::initializer_list<int> v) {
    std::vector<bool> out;
    for (int x : v) {
        out.push_back(x != 0);
    }
    return out;
}

} // namespace

TEST(OutageIndicator, StrictComparison) {
    const std::vector<double> g = {-90, -80, -100, -85};
    EXPECT_EQ(outage_indicator(g, -86), bools({1, 0, 1, 0}));
    const std::vector<double> eq = {-86.0};
    EXPECT_EQ(outage_indicator(eq, -86), bools({0}));
    const std::vector<double> imputed = {-102.0};
    EXPECT_EQ(outage_indicator(imputed, -100), bools({1}));
}

TEST(OutageProbability, Basic) {
    const std::vector<double> g = {-90, -80, -100, -85};
    EXPECT_EQ(outage_probability(g, -86), 0.5);
    EXPECT_EQ(outage_probability(g, -100), 0.0);
    const std::vector<double> lost(10, -102.0);
    EXPECT_EQ(outage_probability(lost, -101.5), 1.0);
    EXPECT_THROW(outage_probability(std::vector<double>{}, -86), MetricError);
}

TEST(OutageCurve, StepFunction) {
    const std::vector<double> g(20, -85.0);
    const std::vector<double> sweep = {-90, -85, -80};
    const auto c = outage_curve(g, sweep);
    ASSERT_EQ(c.points.size(), 3u);
    EXPECT_EQ(c.points[0].y, 0.0);
    EXPECT_EQ(c.points[1].y, 0.0);
    EXPECT_EQ(c.points[2].y, 1.0);
    EXPECT_TRUE(outage_curve(g, std::vector<double>{}).points.empty());
}

TEST(OutageCurve, MatchesPointwiseProbability) {
    const std::vector<double> g = {-90, -80, -100, -85};
    const auto sweep = default_sensitivity_sweep();
    const auto c = outage_curve(g, sweep);
    for (const auto& p : c.points) {
        EXPECT_EQ(p.y, outage_probability(g, p.x));
    }
}

TEST(OutageCurve, UnsortedSweepRejected) {
    const std::vector<double> g = {-90};
    EXPECT_THROW(outage_curve(g, std::vector<double>{-80, -90}), ConfigError);
    EXPECT_THROW(outage_curve(g, std::vector<double>{-80, -80}), ConfigError);
}

TEST(DefaultSweep, Range) {
    const auto s = default_sensitivity_sweep();
    EXPECT_EQ(s.size(), 41u);
    EXPECT_EQ(s.front(), -100.0);
    EXPECT_EQ(s.back(), -60.0);
}

TEST(GainImprovement, TwoPointCurves) {
    const OutageCurve a{"a", {{-90, 0.0}, {-80, 0.2}}};
    const OutageCurve b{"b", {{-90, 0.0}, {-80, 0.4}}};
    // Oracle: bisection on the interpolated curves.
    const double oracle = bisect_crossing(a, 0.1) - bisect_crossing(b, 0.1);
    EXPECT_NEAR(oracle, 2.5, 1e-9);
    EXPECT_NEAR(gain_improvement_at(a, b, 0.1), 2.5, 1e-12);
}

TEST(GainImprovement, SelfDifferenceIsZero) {
    std::mt19937 rng(2);
    std::normal_distribution<double> g(-80, 8);
    std::vector<double> series(3000);
    for (auto& x : series) {
        x = g(rng);
    }
    const auto sweep = default_sensitivity_sweep();
    const auto c = outage_curve(series, sweep, "c");
    for (double p : {0.05, 0.1, 0.5, 0.9}) {
        EXPECT_EQ(gain_improvement_at(c, c, p), 0.0);
        EXPECT_NEAR(sensitivity_at(c, p), bisect_crossing(c, p), 1e-6);
    }
}

TEST(GainImprovement, NotCrossedNamesCurve) {
    const OutageCurve a{"DL_on_body", {{-90, 0.0}, {-80, 0.05}}};
    const OutageCurve b{"SC_on_body", {{-90, 0.0}, {-80, 0.4}}};
    try {
        gain_improvement_at(a, b, 0.1);
        FAIL();
    } catch (const NotCrossedError& e) {
        EXPECT_NE(std::string(e.what()).find("DL_on_body"), std::string::npos);
    }
}

TEST(OutageRuns, RunLengthEncoding) {
    const auto runs = outage_runs(bools({1, 1, 0, 1}), 15.0);
    ASSERT_EQ(runs.size(), 2u);
    EXPECT_EQ(runs[0].start_slot, 0u);
    EXPECT_EQ(runs[0].length_slots, 2u);
    EXPECT_DOUBLE_EQ(runs[0].duration_s(), 0.03);
    EXPECT_EQ(runs[1].start_slot, 3u);
    EXPECT_DOUBLE_EQ(runs[1].duration_s(), 0.015);
    EXPECT_TRUE(outage_runs(bools({0, 0, 0})).empty());
    const auto all = outage_runs(std::vector<bool>(10, true));
    ASSERT_EQ(all.size(), 1u);
    EXPECT_DOUBLE_EQ(all[0].duration_s(), 0.15);
}

TEST(OutageRuns, MaximalAndAccountedProperty) {
    std::mt19937 rng(8);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<bool> ind(1 + rng() % 300);
        const double p = (rng() % 100) / 100.0;
        std::bernoulli_distribution b(p);
        for (std::size_t i = 0; i < ind.size(); ++i) {
            ind[i] = b(rng);
        }
        const auto runs = outage_runs(ind);
        std::size_t total = 0;
        for (const auto& r : runs) {
            ASSERT_GE(r.length_slots, 1u);
            total += r.length_slots;
            if (r.start_slot > 0) {
                EXPECT_FALSE(ind[r.start_slot - 1]);
            }
            const std::size_t end = r.start_slot + r.length_slots;
            if (end < ind.size()) {
                EXPECT_FALSE(ind[end]);
            }
        }
        EXPECT_EQ(total, static_cast<std::size_t>(std::count(ind.begin(), ind.end(), true)));
    }
}

TEST(CodCurve, DefinitionExample) {
    // 15 s trace (1000 slots) with runs of 1.5 s and 0.15 s.
    const std::vector<OutageRun> runs = {{0, 100, 15.0}, {500, 10, 15.0}};
    const std::vector<double> th = {0.1, 1.0, 2.0};
    const auto c = cod_curve(runs, 15.0, th);
    EXPECT_NEAR(c.points[0].y, 0.11, 1e-12);
    EXPECT_NEAR(c.points[1].y, 0.10, 1e-12);
    EXPECT_EQ(c.points[2].y, 0.0);
    EXPECT_THROW(cod_curve(runs, 0.0, th), ConfigError);
}

TEST(CodCurve, ZeroThresholdEqualsOutageProbability) {
    std::mt19937 rng(13);
    std::uniform_real_distribution<double> g(-100, -70);
    std::vector<double> series(5000);
    for (auto& x : series) {
        x = g(rng);
    }
    RunPool pool;
    const auto runs = outage_runs(outage_indicator(series, -86), 15.0);
    pool.append(runs, series.size(), 15.0);
    EXPECT_EQ(exceedance_fraction(pool, 0.0), outage_probability(series, -86));
    const auto c = cod_curve(pool, default_cod_thresholds());
    for (std::size_t i = 1; i < c.points.size(); ++i) {
        EXPECT_LE(c.points[i].y, c.points[i - 1].y);
    }
    EXPECT_EQ(c.points.back().y, 0.0);
}

TEST(CodCurve, DefaultThresholdsLogSpaced) {
    const auto th = default_cod_thresholds();
    EXPECT_DOUBLE_EQ(th.front(), 0.015);
    EXPECT_EQ(th.back(), 1000.0);
    for (std::size_t i = 1; i < th.size(); ++i) {
        EXPECT_GT(th[i], th[i - 1]);
    }
}

TEST(LatencyExceedance, Basic) {
    // 9 slots = 0.135 s exceeds 125 ms; 8 slots = 0.12 s does not.
    const std::vector<OutageRun> runs = {{0, 9, 15.0}, {20, 8, 15.0}};
    EXPECT_NEAR(latency_exceedance(runs, 1.5), 0.135 / 1.5, 1e-12);
    const std::vector<OutageRun> short_runs = {{0, 8, 15.0}};
    EXPECT_EQ(latency_exceedance(short_runs, 1.5), 0.0);
}

TEST(BestCaseOp, ReadsMinus100) {
    const std::vector<double> clean(50, -80.0);
    const auto sweep = default_sensitivity_sweep();
    EXPECT_EQ(best_case_op(outage_curve(clean, sweep)), 0.0);
    const std::vector<double> lost(50, -102.0);
    EXPECT_EQ(best_case_op(outage_curve(lost, sweep)), 1.0);
    EXPECT_THROW(best_case_op(outage_curve(clean, std::vector<double>{-90, -80})), ConfigError);
}

TEST(Aggregate, SinglePairMatchesPerPairMetrics) {
    const auto spec = testutil::random_scenario(44, 3000);
    const auto traces = impute_missing(synth::generate_scenario(spec));
    DenseTraceSet::Map only;
    for (const auto& [k, s] : traces.traces()) {
        // Keep just what H_f -> H_b needs, so one on-body pair is valid.
        const bool keep = (k == LinkKey{Position::H_f, Position::H_b}) ||
                          (k == LinkKey{Position::H_f, Position::NTB_h}) ||
                          (k == LinkKey{Position::NTB_h, Position::H_b}) ||
                          (k == LinkKey{Position::H_f, Position::L_w}) ||
                          (k == LinkKey{Position::L_w, Position::H_b});
        if (keep) {
            only.emplace(k, s);
        }
    }
    const std::vector<DenseTraceSet> sets = {DenseTraceSet(15.0, traces.size(), only, "s")};
    const auto agg = aggregate(Policy::SC, LinkClass::on_body, sets, -86.0);
    EXPECT_EQ(agg.pairs, 1u);
    const auto cs = combine_sc(build_branches(sets[0], Position::H_f, Position::H_b));
    EXPECT_EQ(agg.op(), outage_probability(cs.gains, -86.0));
    EXPECT_EQ(agg.pool.runs, outage_runs(outage_indicator(cs.gains, -86.0), 15.0));
}

TEST(Aggregate, TimeWeightedPooling) {
    // Two equal-length subjects with DL outage 0.2 and 0.4 on every pair.
    auto subject = [](double frac, const std::string& name) {
        DenseTraceSet::Map m;
        for (const auto& k : measurable_links()) {
            std::vector<double> s(10, -70.0);
            for (int i = 0; i < static_cast<int>(frac * 10); ++i) {
                s[i] = -95.0;
            }
            m.emplace(k, s);
        }
        return DenseTraceSet(15.0, 10, m, name);
    };
    const std::vector<DenseTraceSet> sets = {subject(0.2, "a"), subject(0.4, "b")};
    const auto agg = aggregate(Policy::DL, LinkClass::on_body, sets, -86.0);
    EXPECT_DOUBLE_EQ(agg.op(), 0.3);
    // Runs never cross subject boundaries, even when both touch them.
    for (const auto& r : agg.pool.runs) {
        EXPECT_LE(r.start_slot + r.length_slots, 10u);
    }
}

TEST(Aggregate, EmptySelection) {
    DenseTraceSet set(15.0, 1, {{{Position::H_f, Position::L_a}, {-70.0}}}, "x");
    const std::vector<DenseTraceSet> sets = {set};
    EXPECT_THROW(aggregate(Policy::DL, LinkClass::on_body, sets, -86.0), EmptySelectionError);
}

TEST(MetricProperties, OrderingMonotonicityAndTwoHop) {
    for (std::uint64_t seed = 300; seed < 310; ++seed) {
        const auto traces =
            impute_missing(synth::generate_scenario(testutil::random_scenario(seed, 2000)));
        const auto sweep = default_sensitivity_sweep();
        for (const auto& pair : enumerate_pairs(traces)) {
            const auto bs = build_branches(traces, pair.source, pair.dest);
            const auto dl = outage_curve(combine_dl(bs).gains, sweep);
            const auto sc = outage_curve(combine_sc(bs).gains, sweep);
            const auto sw = outage_curve(combine_swc(bs).gains, sweep);
            for (std::size_t i = 0; i < sweep.size(); ++i) {
                EXPECT_LE(sc.points[i].y, sw.points[i].y);
                EXPECT_LE(sc.points[i].y, dl.points[i].y);
                if (i > 0) {
                    EXPECT_GE(dl.points[i].y, dl.points[i - 1].y);
                    EXPECT_GE(sw.points[i].y, sw.points[i - 1].y);
                }
            }
            for (std::size_t n = 0; n < 2; ++n) {
                const Position relay = n == 0 ? bs.relay1 : bs.relay2;
                if (relay == pair.dest) {
                    continue;
                }
                const auto hop1 = series_between(traces, pair.source, relay);
                const auto hop2 = series_between(traces, relay, pair.dest);
                for (double s : {-95.0, -86.0, -75.0}) {
                    const double composed = outage_probability(bs.gains[n + 1], s);
                    EXPECT_GE(composed, outage_probability(hop1, s));
                    EXPECT_GE(composed, outage_probability(hop2, s));
                }
            }
        }
    }
}

TEST(CurveCsv, Format) {
    const OutageCurve c{"SC_on_body", {{-100, 0.0115}, {-99, 0.123456}}};
    std::ostringstream out;
    write_curve_csv(out, c);
    EXPECT_EQ(out.str(), "x,y,label\n-100.00,0.0115,SC_on_body\n-99.00,0.1235,SC_on_body\n");
}
