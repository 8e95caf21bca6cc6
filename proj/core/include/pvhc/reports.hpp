#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "pvhc/coordinator.hpp"
#include "pvhc/hosting_capacity.hpp"

namespace pvhc {

/// printf %.{digits}g.
std::string format_sig(double x, int digits);

/// bus,phase,vmag_pu,vang_deg
std::string voltages_csv(const PowerFlow& flow, const VoltageSolution& sol);

/// bus,phase,<pv ids...>; rows in sm.rows order, entries per kVAr absorbed.
std::string sensitivity_csv(const PowerFlow& flow, const SensitivityMatrix& sm);

/// iteration,violations,max_vpu,min_vpu,total_abs_q_kvar,lp_status
std::string trace_csv(const DispatchState& state);

/// pv,bus,phases,p_kw,q_initial_kvar,q_kvar,q_max_kvar
std::string dispatch_csv(const NetworkModel& model, const DispatchResult& result, bool use_actual_p = false);

/// pv,bus,phases,q_zoned_kvar,q_full_kvar,difference_kvar
std::string zoned_divergence_csv(const NetworkModel& model, const ZonedResult& zoned, const DispatchResult& full);

/// level_kw,mode,month,hour,violations,max_vpu,total_q_kvar
std::string hc_sweep_csv(const std::vector<SweepRow>& rows);

/// month,hour,A,B,C,secondary,pv,max_vpu
std::string worst_case_csv(const std::vector<WorstCaseRow>& rows);

nlohmann::json hc_report_json(const HcReport& report);
nlohmann::json baseline_json(const NetworkModel& model, const BaselineSettings& settings);

/// Comma-separated table without quoting. Throws ParseError when a row's
/// width differs from the header's.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

CsvTable parse_csv(std::string_view text);

}  // namespace pvhc
