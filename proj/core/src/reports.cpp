#include "pvhc/reports.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

#include "pvhc/errors.hpp"
#include "pvhc/inverter_modes.hpp"

namespace pvhc {

std::string format_sig(double x, int digits) {
    if (std::isnan(x)) return "nan";
    if (x == 0.0) x = 0.0;  // no "-0"
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, x);
    return buf;
}

namespace {

std::string node_label(const PowerFlow& flow, int node) {
    const PhaseNode& n = flow.nodes()[static_cast<std::size_t>(node)];
    return n.bus_id + "," + phase_char(n.phase);
}

}  // namespace

std::string voltages_csv(const PowerFlow& flow, const VoltageSolution& sol) {
    std::string out = "bus,phase,vmag_pu,vang_deg\n";
    for (std::size_t i = 0; i < sol.v_complex.size(); ++i) {
        const double ang = std::arg(sol.v_complex[i]) * 180.0 / std::numbers::pi;
        out += node_label(flow, static_cast<int>(i)) + "," + format_sig(sol.v_mag_pu[i], 9) + "," +
               format_sig(ang, 9) + "\n";
    }
    return out;
}

std::string sensitivity_csv(const PowerFlow& flow, const SensitivityMatrix& sm) {
    std::string out = "bus,phase";
    for (int j : sm.cols) out += "," + flow.model().pvs[static_cast<std::size_t>(j)].id;
    out += "\n";
    for (std::size_t i = 0; i < sm.rows.size(); ++i) {
        out += node_label(flow, sm.rows[i]);
        for (std::size_t j = 0; j < sm.cols.size(); ++j) {
            out += "," + format_sig(sm.entries(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)), 6);
        }
        out += "\n";
    }
    return out;
}

std::string trace_csv(const DispatchState& state) {
    std::string out = "iteration,violations,max_vpu,min_vpu,total_abs_q_kvar,lp_status\n";
    for (const auto& r : state.history) {
        out += std::to_string(r.iteration) + "," + std::to_string(r.violations) + "," + format_sig(r.max_v, 9) + "," +
               format_sig(r.min_v, 9) + "," + format_sig(r.total_abs_q, 9) + "," +
               (r.lp_status.empty() ? "none" : r.lp_status) + "\n";
    }
    return out;
}

std::string dispatch_csv(const NetworkModel& model, const DispatchResult& result, bool use_actual_p) {
    std::string out = "pv,bus,phases,p_kw,q_initial_kvar,q_kvar,q_max_kvar\n";
    const InjectionState& inj = result.final_injection;
    for (std::size_t j = 0; j < model.pvs.size(); ++j) {
        const PvSystem& pv = model.pvs[j];
        out += pv.id + "," + pv.bus_id + "," + pv.phases.str() + "," + format_sig(inj.pv_kw[j], 9) + "," +
               format_sig(result.final_state.q_initial[j], 9) + "," + format_sig(result.final_state.q[j], 9) + "," +
               format_sig(q_headroom(pv, inj.pv_kw[j], use_actual_p), 9) + "\n";
    }
    return out;
}

std::string zoned_divergence_csv(const NetworkModel& model, const ZonedResult& zoned, const DispatchResult& full) {
    std::string out = "pv,bus,phases,q_zoned_kvar,q_full_kvar,difference_kvar\n";
    for (std::size_t j = 0; j < model.pvs.size(); ++j) {
        const PvSystem& pv = model.pvs[j];
        const double qz = zoned.combined.pv_kvar[j];
        const double qf = full.final_state.q[j];
        out += pv.id + "," + pv.bus_id + "," + pv.phases.str() + "," + format_sig(qz, 9) + "," + format_sig(qf, 9) +
               "," + format_sig(qz - qf, 9) + "\n";
    }
    return out;
}

std::string hc_sweep_csv(const std::vector<SweepRow>& rows) {
    std::string out = "level_kw,mode,month,hour,violations,max_vpu,total_q_kvar\n";
    for (const auto& r : rows) {
        out += format_sig(r.level_kw, 9) + "," + to_string(r.mode) + "," + std::to_string(r.month) + "," +
               std::to_string(r.hour) + "," + std::to_string(r.violations) + "," + format_sig(r.max_v, 9) + "," +
               format_sig(r.total_q, 9) + "\n";
    }
    return out;
}

std::string worst_case_csv(const std::vector<WorstCaseRow>& rows) {
    std::string out = "month,hour,A,B,C,secondary,pv,max_vpu\n";
    for (const auto& r : rows) {
        out += std::to_string(r.month) + "," + std::to_string(r.hour) + "," + std::to_string(r.per_phase[0]) + "," +
               std::to_string(r.per_phase[1]) + "," + std::to_string(r.per_phase[2]) + "," +
               std::to_string(r.secondary) + "," + std::to_string(r.pv_nodes) + "," + format_sig(r.max_v, 9) + "\n";
    }
    return out;
}

nlohmann::json hc_report_json(const HcReport& r) {
    return {{"mode", to_string(r.mode)},
            {"placement", to_string(r.placement)},
            {"units_added", r.units_added},
            {"added_kw_at_first_violation", r.first_violation_kw},
            {"added_kw", r.added_kw},
            {"existing_pv_kw", r.existing_pv_kw},
            {"hc_kw", r.hc_kw},
            {"peak_load_kw", r.peak_load_kw},
            {"hc_percent", r.hc_percent},
            {"exhausted", r.exhausted},
            {"limiting",
             {{"month", r.limiting.month},
              {"hour", r.limiting.hour},
              {"node", r.limiting.node},
              {"v_pu", r.limiting.v_pu},
              {"cause", r.limiting.cause}}}};
}

nlohmann::json baseline_json(const NetworkModel& model, const BaselineSettings& s) {
    nlohmann::json taps = nlohmann::json::object(), caps = nlohmann::json::object();
    for (std::size_t r = 0; r < model.regulators.size(); ++r) taps[model.regulators[r].id] = s.taps[r];
    for (std::size_t c = 0; c < model.capacitors.size(); ++c) caps[model.capacitors[c].id] = static_cast<bool>(s.caps[c]);
    return {{"taps", taps}, {"capacitors", caps}, {"violations", s.violations}, {"excursion", s.excursion}};
}

CsvTable parse_csv(std::string_view text) {
    CsvTable t;
    auto split = [](std::string_view line) {
        std::vector<std::string> cells;
        std::size_t start = 0;
        for (;;) {
            const std::size_t comma = line.find(',', start);
            cells.emplace_back(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start));
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        return cells;
    };
    std::size_t pos = 0;
    int line_no = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        pos = end + 1;
        ++line_no;
        if (line.empty()) continue;
        auto cells = split(line);
        if (t.header.empty()) {
            t.header = std::move(cells);
        } else {
            if (cells.size() != t.header.size()) {
                throw ParseError("line " + std::to_string(line_no),
                                 "expected " + std::to_string(t.header.size()) + " fields, found " +
                                     std::to_string(cells.size()));
            }
            t.rows.push_back(std::move(cells));
        }
    }
    return t;
}

}  // namespace pvhc
