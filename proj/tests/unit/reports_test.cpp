#include <gtest/gtest.h>

#include <cmath>

#include "pvhc/errors.hpp"
#include "pvhc/feeder_io.hpp"
#include "pvhc/reports.hpp"
#include "pvhc/scenario.hpp"
#include "support/test_data.hpp"

namespace pvhc {
namespace {

using Header = std::vector<std::string>;

// Every data cell after the text columns must parse as a number.
void expect_numeric(const CsvTable& t, std::size_t first_numeric, std::size_t last_numeric) {
    for (const auto& row : t.rows) {
        for (std::size_t c = first_numeric; c <= last_numeric && c < row.size(); ++c) {
            std::size_t used = 0;
            EXPECT_NO_THROW(std::stod(row[c], &used)) << row[c];
            EXPECT_EQ(used, row[c].size()) << row[c];
        }
    }
}

struct OvFixture : ::testing::Test {
    static void SetUpTestSuite() {
        instance = new Instance(resolve_instance(load_scenario(test::data_path("scenarios/desk30_ov.json"))));
    }
    static void TearDownTestSuite() {
        delete instance;
        instance = nullptr;
    }
    static Instance* instance;
};
Instance* OvFixture::instance = nullptr;

TEST(FormatSig, Examples) {
    EXPECT_EQ(format_sig(1.0, 9), "1");
    EXPECT_EQ(format_sig(1.23456789012, 9), "1.23456789");
    EXPECT_EQ(format_sig(-0.0, 6), "0");
    EXPECT_EQ(format_sig(std::nan(""), 6), "nan");
    EXPECT_EQ(format_sig(-1.5e-5, 6), "-1.5e-05");
}

TEST_F(OvFixture, VoltagesCsv) {
    PowerFlow flow(instance->model);
    const VoltageSolution sol = flow.solve(instance->injection);
    const CsvTable t = parse_csv(voltages_csv(flow, sol));
    EXPECT_EQ(t.header, (Header{"bus", "phase", "vmag_pu", "vang_deg"}));
    ASSERT_EQ(t.rows.size(), flow.node_count());
    expect_numeric(t, 2, 3);
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        EXPECT_EQ(t.rows[i][0], flow.nodes()[i].bus_id);
        EXPECT_NEAR(std::stod(t.rows[i][2]), sol.v_mag_pu[i], 1e-8);
    }
}

TEST_F(OvFixture, SensitivityCsv) {
    PowerFlow flow(instance->model);
    const SensitivityMatrix sm = build_sensitivity(flow, instance->injection, 1.0);
    const CsvTable t = parse_csv(sensitivity_csv(flow, sm));
    ASSERT_EQ(t.header.size(), 2 + sm.pv_count());
    EXPECT_EQ(t.header[0], "bus");
    EXPECT_EQ(t.header[2], instance->model.pvs[0].id);
    ASSERT_EQ(t.rows.size(), sm.node_count());
    expect_numeric(t, 2, t.header.size() - 1);
    const double e = sm.entries(5, 3);
    EXPECT_NEAR(std::stod(t.rows[5][5]), e, 1e-5 * std::abs(e) + 1e-300);
}

TEST_F(OvFixture, TraceAndDispatchCsv) {
    PowerFlow flow(instance->model);
    const DispatchResult r = dispatch(flow, instance->injection, {});
    const CsvTable trace = parse_csv(trace_csv(r.final_state));
    EXPECT_EQ(trace.header,
              (Header{"iteration", "violations", "max_vpu", "min_vpu", "total_abs_q_kvar", "lp_status"}));
    ASSERT_EQ(trace.rows.size(), r.final_state.history.size());
    EXPECT_EQ(trace.rows[0][5], "none");
    expect_numeric(trace, 0, 4);

    const CsvTable d = parse_csv(dispatch_csv(instance->model, r));
    EXPECT_EQ(d.header, (Header{"pv", "bus", "phases", "p_kw", "q_initial_kvar", "q_kvar", "q_max_kvar"}));
    ASSERT_EQ(d.rows.size(), instance->model.pvs.size());
    expect_numeric(d, 3, 6);
    int nonzero = 0;
    for (const auto& row : d.rows) {
        nonzero += std::stod(row[5]) != 0.0;
        EXPECT_LE(std::abs(std::stod(row[5])), std::stod(row[6]) * (1 + 1e-8));
    }
    EXPECT_GT(nonzero, 0);
}

TEST(Reports, SweepAndWorstCaseCsv) {
    std::vector<SweepRow> rows{{0.0, ControlMode::Upf, 5, 7, 0, 1.01, 0.0},
                               {10.0, ControlMode::Coordinated, 8, 12, 3, 1.0612345678, 42.5}};
    const CsvTable t = parse_csv(hc_sweep_csv(rows));
    EXPECT_EQ(t.header, (Header{"level_kw", "mode", "month", "hour", "violations", "max_vpu", "total_q_kvar"}));
    ASSERT_EQ(t.rows.size(), 2u);
    EXPECT_EQ(t.rows[1][1], "Coordinated");
    EXPECT_EQ(t.rows[1][5], "1.06123457");

    std::vector<WorstCaseRow> wc{{8, 11, {1, 2, 3}, 0, 2, 6, 1.07}};
    const CsvTable w = parse_csv(worst_case_csv(wc));
    EXPECT_EQ(w.header, (Header{"month", "hour", "A", "B", "C", "secondary", "pv", "max_vpu"}));
    EXPECT_EQ(w.rows[0], (std::vector<std::string>{"8", "11", "1", "2", "3", "0", "2", "1.07"}));
}

TEST(Reports, HcReportJsonFields) {
    HcReport r;
    r.mode = ControlMode::VoltVar;
    r.units_added = 44;
    r.added_kw = 440.0;
    r.first_violation_kw = 450.0;
    r.existing_pv_kw = 1813.6;
    r.hc_kw = 2253.6;
    r.peak_load_kw = 10950.0;
    r.hc_percent = hc_percent(r.hc_kw, r.peak_load_kw);
    const nlohmann::json j = hc_report_json(r);
    EXPECT_EQ(j["mode"], "VV");
    EXPECT_EQ(j["added_kw"], 440.0);
    EXPECT_EQ(j["added_kw_at_first_violation"], 450.0);
    EXPECT_DOUBLE_EQ(j["hc_percent"].get<double>(), j["hc_kw"].get<double>() / j["peak_load_kw"].get<double>() * 100);
    EXPECT_TRUE(j.contains("limiting"));
}

TEST(Reports, ParseCsvRejectsRaggedRows) {
    EXPECT_THROW(parse_csv("a,b\n1,2\n3\n"), ParseError);
    const CsvTable t = parse_csv("a,b\r\n1,2\r\n");
    EXPECT_EQ(t.header, (Header{"a", "b"}));
    ASSERT_EQ(t.rows.size(), 1u);
    EXPECT_EQ(t.rows[0][1], "2");
}

}  // namespace
}  // namespace pvhc
