#include <gtest/gtest.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>

#include "pvhc/feeder_io.hpp"
#include "pvhc/hosting_capacity.hpp"
#include "pvhc/scenario.hpp"
#include "support/test_data.hpp"

namespace pvhc {
namespace {

NetworkModel desk30() { return load_feeder(test::data_path("feeders/desk30.json")); }

std::set<std::pair<std::string, Phase>> as_set(const std::vector<PlacementSite>& v) {
    std::set<std::pair<std::string, Phase>> s;
    for (const auto& x : v) s.insert({x.bus_id, x.phase});
    return s;
}

struct AugFixture : ::testing::Test {
    static void SetUpTestSuite() {
        scenario = new Scenario(load_scenario(test::data_path("scenarios/desk30_aug.json")));
        model = new NetworkModel(load_feeder(scenario->feeder_path()));
        // Two months keep the sweeps short while still exercising per-month baselines.
        Scenario s = *scenario;
        s.grid_months = {7, 8};
        setups = new std::vector<MonthSetup>(month_setups(s, *model));
    }
    static void TearDownTestSuite() {
        delete scenario;
        delete model;
        delete setups;
    }
    static Scenario* scenario;
    static NetworkModel* model;
    static std::vector<MonthSetup>* setups;
};
Scenario* AugFixture::scenario = nullptr;
NetworkModel* AugFixture::model = nullptr;
std::vector<MonthSetup>* AugFixture::setups = nullptr;

TEST(Placement, ZonesAndPermutation) {
    const NetworkModel m = desk30();
    const PlacementSet all = make_placement(m, PlacementKind::All, 5);
    const PlacementSet near = make_placement(m, PlacementKind::Near, 5);
    const PlacementSet far = make_placement(m, PlacementKind::Far, 5);
    for (const auto& c : near.candidates) EXPECT_EQ(m.find_bus(c.bus_id)->zone, Zone::Near);
    for (const auto& c : far.candidates) EXPECT_EQ(m.find_bus(c.bus_id)->zone, Zone::Far);
    auto pool = as_set(near.candidates);
    const auto far_set = as_set(far.candidates);
    pool.insert(far_set.begin(), far_set.end());
    EXPECT_EQ(as_set(all.candidates), pool);
    EXPECT_FALSE(near.candidates.empty());
    EXPECT_FALSE(far.candidates.empty());

    EXPECT_EQ(make_placement(m, PlacementKind::All, 5).candidates, all.candidates);
    EXPECT_NE(make_placement(m, PlacementKind::All, 6).candidates, all.candidates);
}

TEST(Placement, UnitsFollowCandidateOrder) {
    const NetworkModel m = desk30();
    const PlacementSet p = make_placement(m, PlacementKind::All, 9);
    const int n = static_cast<int>(p.candidates.size());
    const NetworkModel grown = with_units(m, p, n + 2);
    ASSERT_EQ(grown.pvs.size(), m.pvs.size() + static_cast<std::size_t>(n) + 2);
    EXPECT_TRUE(validate(grown).empty());
    for (int k = 0; k < n + 2; ++k) {
        const PvSystem& pv = grown.pvs[m.pvs.size() + static_cast<std::size_t>(k)];
        const PlacementSite& site = p.candidates[static_cast<std::size_t>(k % n)];
        EXPECT_EQ(pv.id, "hc_" + std::to_string(k));
        EXPECT_EQ(pv.bus_id, site.bus_id);
        EXPECT_EQ(pv.phases, PhaseSet::single(site.phase));
        EXPECT_EQ(pv.p_mpp_kw, 10.0);
        EXPECT_NEAR(pv.s_rating_kva, 11.111111, 1e-6);
        EXPECT_NEAR(pv.q_max_kvar, 4.84, 0.01);
    }
    EXPECT_EQ(existing_pv_kw(grown), existing_pv_kw(m) + 10.0 * (n + 2));
}

TEST(HcArithmetic, PercentOfPeak) {
    // Nameplate totals at the last safe level, as a share of feeder peak load.
    EXPECT_NEAR(hc_percent(1813.6 + 300.0, 10950.0), 19.3, 0.05);
    EXPECT_NEAR(hc_percent(1813.6 + 440.0, 10950.0), 20.6, 0.05);
    const NetworkModel m = desk30();
    double sum = 0.0;
    for (const auto& ld : m.loads) sum += ld.kw_peak;
    EXPECT_EQ(peak_load_kw(m), sum);
}

TEST(Baseline, NoLoadFeederStaysAtUnitTaps) {
    NetworkModel m = desk30();
    m.loads.clear();
    m.pvs.clear();
    const auto profiles = generate_profiles(1, 1, 1);
    const BaselineSettings b = tune_baseline(m, profiles, 1, {});
    ASSERT_EQ(b.taps.size(), m.regulators.size());
    for (double t : b.taps) EXPECT_EQ(t, 1.0);
    for (bool c : b.caps) EXPECT_FALSE(c);
    EXPECT_EQ(b.violations, 0);
}

TEST_F(AugFixture, TunedSettingsBeatEveryNeighbour) {
    for (const MonthSetup& ms : *setups) {
        const BaselineSettings& b = ms.baseline;
        const std::uint64_t seed = assignment_seed(*scenario);
        const BaselineSettings again = score_baseline(*model, ms.profiles, seed, b.taps, b.caps, {});
        EXPECT_EQ(again, b);
        for (std::size_t r = 0; r < b.taps.size(); ++r) {
            for (double dir : {-1.0, 1.0}) {
                std::vector<double> taps = b.taps;
                taps[r] += dir * model->regulators[r].tap_step;
                const BaselineSettings n = score_baseline(*model, ms.profiles, seed, taps, b.caps, {});
                EXPECT_LE(b.violations, n.violations) << "month " << ms.month;
            }
        }
        for (std::size_t c = 0; c < b.caps.size(); ++c) {
            std::vector<bool> caps = b.caps;
            caps[c] = !caps[c];
            EXPECT_LE(b.violations, score_baseline(*model, ms.profiles, seed, b.taps, caps, {}).violations);
        }
    }
}

TEST_F(AugFixture, ZeroPvBaselineHasNoWorstCase) {
    NetworkModel bare = *model;
    bare.pvs.clear();
    const HcOptions opts = hc_options(*scenario);
    const auto table = worst_case_table(bare, ControlMode::Upf, *setups, scenario->grid_hours, opts);
    for (const auto& row : table) {
        // Only residual violations the baseline could not remove may appear.
        const auto& ms = *std::find_if(setups->begin(), setups->end(), [&](const MonthSetup& m) { return m.month == row.month; });
        EXPECT_GT(ms.baseline.violations, 0);
    }
}

TEST_F(AugFixture, SweepIsDeterministicAndConsistent) {
    const HcOptions opts = hc_options(*scenario);
    const PlacementSet p = placement_for(*scenario, *model);
    const HcSweepResult a = hc_sweep(*model, p, ControlMode::Upf, *setups, scenario->grid_hours, opts);
    const HcSweepResult b = hc_sweep(*model, p, ControlMode::Upf, *setups, scenario->grid_hours, opts);
    ASSERT_EQ(a.rows.size(), b.rows.size());
    for (std::size_t k = 0; k < a.rows.size(); ++k) {
        EXPECT_EQ(a.rows[k].violations, b.rows[k].violations);
        EXPECT_EQ(a.rows[k].max_v, b.rows[k].max_v);
    }
    const HcReport& r = a.report;
    EXPECT_FALSE(r.exhausted);
    EXPECT_EQ(r.added_kw, r.units_added * 10.0);
    EXPECT_EQ(r.first_violation_kw, r.added_kw + 10.0);
    EXPECT_DOUBLE_EQ(r.hc_kw, r.existing_pv_kw + r.added_kw);
    EXPECT_DOUBLE_EQ(r.hc_percent, 100.0 * r.hc_kw / r.peak_load_kw);
    EXPECT_FALSE(r.limiting.node.empty());
    EXPECT_GT(r.limiting.v_pu, opts.limits.v_th_max);

    // Every level below the failing one is clean; the failing level is not.
    const std::size_t per_level = setups->size() * scenario->grid_hours.size();
    ASSERT_EQ(a.rows.size(), per_level * static_cast<std::size_t>(r.units_added + 2));
    for (std::size_t k = 0; k + per_level < a.rows.size(); ++k) EXPECT_EQ(a.rows[k].violations, 0);
    bool failed = false;
    for (std::size_t k = a.rows.size() - per_level; k < a.rows.size(); ++k) failed |= a.rows[k].violations != 0;
    EXPECT_TRUE(failed);
}

TEST_F(AugFixture, MaxUnitsMarksExhausted) {
    HcOptions opts = hc_options(*scenario);
    opts.max_units = 2;
    const HcSweepResult r =
        hc_sweep(*model, placement_for(*scenario, *model), ControlMode::Upf, *setups, {12}, opts);
    EXPECT_TRUE(r.report.exhausted);
    EXPECT_EQ(r.report.units_added, 2);
}

TEST_F(AugFixture, WorstCaseCountsMatchRecount) {
    const HcOptions opts = hc_options(*scenario);
    const PlacementSet p = placement_for(*scenario, *model);
    const NetworkModel heavy = with_units(*model, p, 60);
    const auto table = worst_case_table(heavy, ControlMode::Upf, *setups, scenario->grid_hours, opts);
    ASSERT_FALSE(table.empty());
    for (const auto& row : table) {
        const MonthSetup& ms =
            *std::find_if(setups->begin(), setups->end(), [&](const MonthSetup& m) { return m.month == row.month; });
        const NetworkModel tuned = apply_baseline(heavy, ms.baseline);
        PowerFlow flow(tuned);
        const auto assignment = assign_profiles(tuned, ms.profiles, opts.assignment_seed);
        int best = -1, best_hour = -1;
        for (int h : scenario->grid_hours) {
            const VoltageSolution sol = flow.solve(injection_at(tuned, ms.profiles, assignment, h * 60), opts.equilibrium.solver);
            const int c = count_violations(sol, opts.limits.trigger()).total();
            if (c > best) {
                best = c;
                best_hour = h;
            }
            if (h == row.hour) {
                EXPECT_EQ(row.total, c);
                EXPECT_EQ(row.per_phase[0] + row.per_phase[1] + row.per_phase[2], c);
                EXPECT_EQ(row.max_v, sol.max_v());
            }
        }
        EXPECT_EQ(row.hour, best_hour);
        EXPECT_EQ(row.total, best);
        // Violations peak with generation around midday.
        EXPECT_GE(row.hour, 10);
        EXPECT_LE(row.hour, 13);
    }
}

TEST_F(AugFixture, EvaluatePointModes) {
    const HcOptions opts = hc_options(*scenario);
    const PlacementSet p = placement_for(*scenario, *model);
    const MonthSetup& ms = setups->back();
    const NetworkModel tuned = apply_baseline(with_units(*model, p, 40), ms.baseline);
    PowerFlow flow(tuned);
    const auto assignment = assign_profiles(tuned, ms.profiles, opts.assignment_seed);
    const InjectionState inj = injection_at(tuned, ms.profiles, assignment, 12 * 60);

    const PointResult upf = evaluate_point(flow, inj, ControlMode::Upf, opts);
    const PointResult coord = evaluate_point(flow, inj, ControlMode::Coordinated, opts);
    EXPECT_EQ(upf.total_q, 0.0);
    EXPECT_EQ(upf.acceptable, upf.violations == 0);
    EXPECT_EQ(coord.acceptable, coord.violations == 0);
    EXPECT_LE(coord.violations, upf.violations);
    EXPECT_EQ(coord.injection.pv_kw, inj.pv_kw);
    const PointResult zoned = evaluate_point(flow, inj, ControlMode::Zoned, opts);
    EXPECT_EQ(zoned.acceptable, zoned.violations == 0);
}

TEST(HcModes, StringsRoundTrip) {
    for (ControlMode m : {ControlMode::Upf, ControlMode::VoltVar, ControlMode::Coordinated, ControlMode::Zoned}) {
        EXPECT_EQ(control_mode_from_string(to_string(m)), m);
    }
    for (PlacementKind k : {PlacementKind::All, PlacementKind::Near, PlacementKind::Far}) {
        EXPECT_EQ(placement_kind_from_string(to_string(k)), k);
    }
    EXPECT_THROW(control_mode_from_string("upf-ish"), std::invalid_argument);
}

}  // namespace
}  // namespace pvhc
