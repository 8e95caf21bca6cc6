#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "pvhc/feeder_io.hpp"
#include "pvhc/inverter_modes.hpp"
#include "pvhc/scenario.hpp"
#include "support/test_data.hpp"

namespace pvhc {
namespace {

// Single-phase 1 kV source, one line, a PV and a small load at the far end.
NetworkModel pv_two_bus(double slack_pu, double pv_kw) {
    NetworkModel m;
    m.slack_bus = "s";
    m.slack_voltage_pu = slack_pu;
    m.buses.push_back({"s", PhaseSet::single(Phase::A), 1.0, Zone::Near});
    m.buses.push_back({"r", PhaseSet::single(Phase::A), 1.0, Zone::Near});
    LineSegment l;
    l.id = "l";
    l.from_bus = "s";
    l.to_bus = "r";
    l.phases = PhaseSet::single(Phase::A);
    l.z_ohm[0][0] = {0.05, 0.1};
    m.lines.push_back(l);
    m.loads.push_back({"ld", "r", PhaseSet::single(Phase::A), 20.0, 0.95, ""});
    m.pvs.push_back(make_pv("pv", "r", PhaseSet::single(Phase::A), pv_kw, pv_kw / 0.9));
    return m;
}

TEST(VoltVarCurve, Examples) {
    const VoltVarCurve c;
    EXPECT_EQ(vv_q(c, 1.00, 100.0), 0.0);
    EXPECT_DOUBLE_EQ(vv_q(c, 1.08, 100.0), c.q4 * 100.0);
    EXPECT_NEAR(vv_q(c, 1.05, 100.0), -0.22 * 100.0, 1e-12);
    EXPECT_DOUBLE_EQ(vv_q(c, 0.92, 100.0), c.q1 * 100.0);
    EXPECT_DOUBLE_EQ(vv_q(c, 1.20, 100.0), c.q4 * 100.0);
    EXPECT_DOUBLE_EQ(vv_q(c, 0.50, 100.0), c.q1 * 100.0);
    EXPECT_EQ(vv_q(c, 0.98, 100.0), 0.0);
    EXPECT_EQ(vv_q(c, 1.02, 100.0), 0.0);
}

TEST(VoltVarCurve, MonotoneContinuousBounded) {
    const VoltVarCurve c;
    double prev = vv_q(c, 0.85, 1.0);
    for (double v = 0.85; v <= 1.15; v += 1e-4) {
        const double q = vv_q(c, v, 1.0);
        EXPECT_LE(q, prev + 1e-15);
        EXPECT_LE(std::abs(q - prev), 0.44 / 0.06 * 1e-4 + 1e-12);  // Lipschitz: no jumps
        EXPECT_GE(q, c.q4);
        EXPECT_LE(q, c.q1);
        prev = q;
    }
}

TEST(VoltVarCurve, CheckRejectsBadCurves) {
    VoltVarCurve c;
    EXPECT_NO_THROW(c.check());
    c.v2 = 1.03;
    EXPECT_THROW(c.check(), std::invalid_argument);
    c = {};
    c.q4 = 0.1;
    EXPECT_THROW(c.check(), std::invalid_argument);
}

TEST(Equilibrium, UpfZeroesReactivePower) {
    const NetworkModel m = load_feeder(test::data_path("feeders/desk30.json"));
    PowerFlow flow(m);
    InjectionState inj = nominal_injection(m);
    for (auto& q : inj.pv_kvar) q = -3.0;
    const Equilibrium e = equilibrium_solve(flow, inj, UnityPowerFactor{});
    EXPECT_TRUE(e.solution.converged);
    for (double q : e.injection.pv_kvar) EXPECT_EQ(q, 0.0);
    EXPECT_EQ(e.injection.pv_kw, inj.pv_kw);
}

TEST(Equilibrium, FixedPowerFactor) {
    const NetworkModel m = pv_two_bus(1.0, 100.0);
    PowerFlow flow(m);
    const Equilibrium e = equilibrium_solve(flow, nominal_injection(m), FixedPowerFactor{0.95, true});
    EXPECT_NEAR(e.injection.pv_kvar[0], -100.0 * std::tan(std::acos(0.95)), 1e-9);
}

TEST(Equilibrium, DeadbandMatchesUpf) {
    const NetworkModel m = load_feeder(test::data_path("feeders/desk30.json"));
    PowerFlow flow(m);
    InjectionState inj = nominal_injection(m);
    for (auto& x : inj.load_kw) x *= 0.15;
    for (auto& x : inj.load_kvar) x *= 0.15;
    for (auto& x : inj.pv_kw) x *= 0.15;
    const Equilibrium upf = equilibrium_solve(flow, inj, UnityPowerFactor{});
    for (std::size_t j = 0; j < m.pvs.size(); ++j) {
        const double v = pcc_voltage(flow, upf.solution, j);
        ASSERT_TRUE(v > 0.98 && v < 1.02) << "fixture left the deadband at pv " << j << ": " << v;
    }
    const Equilibrium vv = equilibrium_solve(flow, inj, VoltVar{});
    EXPECT_EQ(vv.injection, upf.injection);
    EXPECT_EQ(vv.solution.v_mag_pu, upf.solution.v_mag_pu);
}

// Plain fixed-point iteration Q <- clamp(curve(V(Q))), no damping.
std::vector<double> undamped_fixed_point(const PowerFlow& flow, InjectionState inj, const VoltVarCurve& curve) {
    for (int k = 0; k < 500; ++k) {
        const VoltageSolution sol = flow.solve(inj, {1e-12, 200});
        double change = 0.0;
        for (std::size_t j = 0; j < inj.pv_kvar.size(); ++j) {
            const PvSystem& pv = flow.model().pvs[j];
            double v = 0.0;
            for (int n : flow.pv_nodes(j)) v += sol.v_mag_pu[static_cast<std::size_t>(n)];
            v /= static_cast<double>(flow.pv_nodes(j).size());
            const double q = std::clamp(vv_q(curve, v, pv.s_rating_kva), -pv.q_max_kvar, pv.q_max_kvar);
            change = std::max(change, std::abs(q - inj.pv_kvar[j]));
            inj.pv_kvar[j] = q;
        }
        if (change < 1e-9) return inj.pv_kvar;
    }
    ADD_FAILURE() << "undamped oracle did not converge";
    return inj.pv_kvar;
}

TEST(Equilibrium, MatchesUndampedFixedPoint) {
    const NetworkModel m = pv_two_bus(1.03, 300.0);
    PowerFlow flow(m);
    const InjectionState inj = nominal_injection(m);
    const VoltVarCurve curve;
    const std::vector<double> oracle_q = undamped_fixed_point(flow, inj, curve);
    ASSERT_LT(oracle_q[0], -1.0) << "fixture must sit on the absorbing slope";

    EquilibriumOptions opts;
    opts.tolerance_kvar = 1e-4;
    const Equilibrium vv = equilibrium_solve(flow, inj, VoltVar{curve}, opts);
    EXPECT_NEAR(vv.injection.pv_kvar[0], oracle_q[0], 1e-3);
}

TEST(Equilibrium, SelfConsistentOnDeskFeeder) {
    const Instance inst = resolve_instance(load_scenario(test::data_path("scenarios/desk30_ov.json")));
    PowerFlow flow(inst.model);
    const EquilibriumOptions opts;
    const Equilibrium vv = equilibrium_solve(flow, inst.injection, VoltVar{}, opts);
    ASSERT_TRUE(vv.solution.converged);
    const VoltageSolution again = flow.solve(vv.injection, opts.solver);
    for (std::size_t j = 0; j < inst.model.pvs.size(); ++j) {
        const PvSystem& pv = inst.model.pvs[j];
        const double q = std::clamp(vv_q(VoltVarCurve{}, pcc_voltage(flow, again, j), pv.s_rating_kva),
                                    -pv.q_max_kvar, pv.q_max_kvar);
        // Converged when the last update was below tolerance, so the damped
        // step leaves at most twice that between state and curve.
        EXPECT_LE(std::abs(q - vv.injection.pv_kvar[j]), 2 * opts.tolerance_kvar) << pv.id;
        EXPECT_LE(std::abs(vv.injection.pv_kvar[j]), effective_q_max(pv) + 1e-9) << pv.id;
    }
}

TEST(Equilibrium, VoltVarReducesDeskViolations) {
    const Instance inst = resolve_instance(load_scenario(test::data_path("scenarios/desk30_ov.json")));
    PowerFlow flow(inst.model);
    const Equilibrium upf = equilibrium_solve(flow, inst.injection, UnityPowerFactor{});
    const Equilibrium vv = equilibrium_solve(flow, inst.injection, VoltVar{});
    const int upf_v = count_violations(upf.solution, {}).total();
    const int vv_v = count_violations(vv.solution, {}).total();
    ASSERT_GT(upf_v, 0);
    EXPECT_LT(vv_v, upf_v);
    double total_q = 0.0;
    for (double q : vv.injection.pv_kvar) total_q += std::abs(q);
    EXPECT_GT(total_q, 0.0);
}

TEST(Equilibrium, OscillationIsReported) {
    const NetworkModel m = pv_two_bus(1.03, 300.0);
    PowerFlow flow(m);
    EquilibriumOptions opts;
    opts.max_cycles = 2;
    opts.tolerance_kvar = 1e-9;
    EXPECT_THROW(equilibrium_solve(flow, nominal_injection(m), VoltVar{}, opts), VvOscillation);
}

TEST(QHeadroom, ActualPowerVariant) {
    const PvSystem pv = make_pv("pv", "b", PhaseSet::single(Phase::A), 10.0, 10.0 / 0.9);
    EXPECT_NEAR(q_headroom(pv, 10.0, false), 4.843, 1e-3);
    EXPECT_NEAR(q_headroom(pv, 6.0, true), std::sqrt(10.0 / 0.9 * 10.0 / 0.9 - 36.0), 1e-12);
    EXPECT_NEAR(q_headroom(pv, 0.0, true), 10.0 / 0.9, 1e-12);
}

}  // namespace
}  // namespace pvhc
