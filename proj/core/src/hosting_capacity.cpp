#include "pvhc/hosting_capacity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>
#include <tuple>

namespace pvhc {

const char* to_string(ControlMode m) {
    switch (m) {
        case ControlMode::Upf: return "UPF";
        case ControlMode::VoltVar: return "VV";
        case ControlMode::Coordinated: return "Coordinated";
        case ControlMode::Zoned: return "Zoned";
    }
    return "?";
}

ControlMode control_mode_from_string(const std::string& s) {
    if (s == "UPF") return ControlMode::Upf;
    if (s == "VV") return ControlMode::VoltVar;
    if (s == "Coordinated") return ControlMode::Coordinated;
    if (s == "Zoned") return ControlMode::Zoned;
    throw std::invalid_argument("unknown control mode '" + s + "' (expected UPF, VV, Coordinated or Zoned)");
}

const char* to_string(PlacementKind k) {
    switch (k) {
        case PlacementKind::All: return "All";
        case PlacementKind::Near: return "Near";
        case PlacementKind::Far: return "Far";
    }
    return "?";
}

PlacementKind placement_kind_from_string(const std::string& s) {
    if (s == "All") return PlacementKind::All;
    if (s == "Near") return PlacementKind::Near;
    if (s == "Far") return PlacementKind::Far;
    throw std::invalid_argument("unknown placement '" + s + "' (expected All, Near or Far)");
}

PlacementSet make_placement(const NetworkModel& model, PlacementKind kind, std::uint64_t seed, double unit_kw,
                            double unit_pf_sizing) {
    if (!(unit_kw > 0.0) || !(unit_pf_sizing > 0.0 && unit_pf_sizing <= 1.0)) {
        throw std::invalid_argument("unit_kw must be positive and unit_pf_sizing in (0, 1]");
    }
    PlacementSet set;
    set.kind = kind;
    set.seed = seed;
    set.unit_kw = unit_kw;
    set.unit_pf_sizing = unit_pf_sizing;
    std::set<std::pair<std::string, int>> seen;
    for (const auto& load : model.loads) {
        if (load.phases.count() != 1) continue;
        const Bus* bus = model.find_bus(load.bus_id);
        if (bus == nullptr) continue;
        if (kind == PlacementKind::Near && bus->zone != Zone::Near) continue;
        if (kind == PlacementKind::Far && bus->zone != Zone::Far) continue;
        const Phase p = load.phases.phases().front();
        if (seen.insert({load.bus_id, static_cast<int>(p)}).second) set.candidates.push_back({load.bus_id, p});
    }
    Rng rng(derive_seed(seed, 77));
    seeded_shuffle(set.candidates, rng);
    return set;
}

NetworkModel with_units(const NetworkModel& model, const PlacementSet& placement, int units) {
    if (units < 0) throw std::invalid_argument("unit count must be non-negative");
    if (units > 0 && placement.candidates.empty()) throw std::invalid_argument("placement has no candidate sites");
    NetworkModel out = model;
    const double s = placement.unit_kw / placement.unit_pf_sizing;
    for (int k = 0; k < units; ++k) {
        const PlacementSite& site = placement.candidates[static_cast<std::size_t>(k) % placement.candidates.size()];
        out.pvs.push_back(make_pv("hc_" + std::to_string(k), site.bus_id, PhaseSet::single(site.phase),
                                  placement.unit_kw, s));
    }
    return out;
}

double existing_pv_kw(const NetworkModel& model) {
    double sum = 0.0;
    for (const auto& pv : model.pvs) sum += pv.p_mpp_kw;
    return sum;
}

double peak_load_kw(const NetworkModel& model) {
    double sum = 0.0;
    for (const auto& l : model.loads) sum += l.kw_peak;
    return sum;
}

double hc_percent(double hc_kw, double peak_kw) {
    if (!(peak_kw > 0.0)) throw std::invalid_argument("peak load must be positive");
    return 100.0 * hc_kw / peak_kw;
}

NetworkModel apply_baseline(const NetworkModel& model, const BaselineSettings& settings) {
    if (settings.taps.size() != model.regulators.size() || settings.caps.size() != model.capacitors.size()) {
        throw std::invalid_argument("baseline settings do not match the model");
    }
    NetworkModel out = model;
    for (std::size_t r = 0; r < out.regulators.size(); ++r) out.regulators[r].tap_ratio = settings.taps[r];
    for (std::size_t c = 0; c < out.capacitors.size(); ++c) out.capacitors[c].on = settings.caps[c];
    return out;
}

BaselineSettings score_baseline(const NetworkModel& model, const std::vector<Profile>& profiles,
                                std::uint64_t assignment_seed, std::vector<double> taps, std::vector<bool> caps,
                                VoltageBand band, const SolverOptions& solver) {
    BaselineSettings s{std::move(taps), std::move(caps), 0, 0.0};
    const NetworkModel tuned = apply_baseline(model, s);
    const PowerFlow flow(tuned);
    const ProfileAssignment assignment = assign_profiles(tuned, profiles, assignment_seed);
    for (int hour = 0; hour < 24; ++hour) {
        const VoltageSolution sol = flow.solve(injection_at(tuned, profiles, assignment, hour * 60), solver);
        if (!sol.converged) {
            // A diverged hour is worse than any converged outcome.
            s.violations += static_cast<int>(flow.node_count()) + 1;
            s.excursion += 1.0;
            continue;
        }
        s.violations += count_violations(sol, band).total();
        for (double v : sol.v_mag_pu) s.excursion += std::max(0.0, v - band.v_max) + std::max(0.0, band.v_min - v);
    }
    return s;
}

BaselineSettings tune_baseline(const NetworkModel& model, const std::vector<Profile>& profiles,
                               std::uint64_t assignment_seed, VoltageBand band, const SolverOptions& solver) {
    auto better = [](const BaselineSettings& a, const BaselineSettings& b) {
        return std::tie(a.violations, a.excursion) < std::tie(b.violations, b.excursion);
    };
    std::vector<double> taps(model.regulators.size(), 1.0);
    std::vector<bool> caps(model.capacitors.size(), false);
    BaselineSettings best = score_baseline(model, profiles, assignment_seed, taps, caps, band, solver);

    for (;;) {
        std::optional<BaselineSettings> step;
        auto consider = [&](std::vector<double> t, std::vector<bool> c) {
            BaselineSettings cand = score_baseline(model, profiles, assignment_seed, std::move(t), std::move(c), band,
                                                   solver);
            const BaselineSettings& incumbent = step ? *step : best;
            if (better(cand, incumbent)) step = std::move(cand);
        };
        for (std::size_t r = 0; r < taps.size(); ++r) {
            const Regulator& reg = model.regulators[r];
            for (double dir : {-1.0, 1.0}) {
                // Taps stay on the step grid; rounding removes accumulated drift.
                const double pos = std::round((best.taps[r] - 1.0) / reg.tap_step) + dir;
                const double t = 1.0 + pos * reg.tap_step;
                if (t < reg.min_ratio - 1e-12 || t > reg.max_ratio + 1e-12) continue;
                std::vector<double> next = best.taps;
                next[r] = t;
                consider(std::move(next), best.caps);
            }
        }
        for (std::size_t c = 0; c < caps.size(); ++c) {
            std::vector<bool> next = best.caps;
            next[c] = !next[c];
            consider(best.taps, std::move(next));
        }
        if (!step) return best;
        best = std::move(*step);
    }
}

namespace {

double total_abs_q(const InjectionState& inj) {
    double s = 0.0;
    for (double q : inj.pv_kvar) s += std::abs(q);
    return s;
}

void fill_from_solution(PointResult& r, const VoltageSolution& sol, VoltageBand band) {
    if (sol.converged) {
        r.violations = count_violations(sol, band).total();
        r.max_v = sol.max_v();
    } else {
        r.violations = -1;
        r.max_v = std::numeric_limits<double>::quiet_NaN();
    }
}

}  // namespace

PointResult evaluate_point(const PowerFlow& flow, const InjectionState& inj, ControlMode mode,
                           const HcOptions& opts) {
    PointResult r;
    InjectionState start = inj;
    std::fill(start.pv_kvar.begin(), start.pv_kvar.end(), 0.0);
    const VoltageBand band = opts.limits.trigger();

    switch (mode) {
        case ControlMode::Upf:
        case ControlMode::VoltVar: {
            const InverterMode m = mode == ControlMode::Upf ? InverterMode{UnityPowerFactor{}}
                                                            : InverterMode{VoltVar{opts.curve}};
            try {
                Equilibrium eq = equilibrium_solve(flow, start, m, opts.equilibrium);
                r.solution = std::move(eq.solution);
                r.injection = std::move(eq.injection);
                r.status = r.solution.converged ? "Solved" : "FlowDiverged";
            } catch (const VvOscillation&) {
                r.solution = flow.solve(start, opts.equilibrium.solver);
                r.injection = start;
                r.status = "VvOscillation";
                fill_from_solution(r, r.solution, band);
                r.acceptable = false;
                return r;
            }
            fill_from_solution(r, r.solution, band);
            r.acceptable = r.solution.converged && r.violations == 0;
            break;
        }
        case ControlMode::Coordinated: {
            DispatchResult d = dispatch(flow, start, opts.limits, opts.dispatch);
            r.status = to_string(d.status);
            r.solution = std::move(d.final_solution);
            r.injection = std::move(d.final_injection);
            fill_from_solution(r, r.solution, band);
            r.acceptable = d.status == DispatchStatus::Mitigated;
            break;
        }
        case ControlMode::Zoned: {
            ZonedResult z = dispatch_zoned(flow, start, opts.limits, opts.dispatch);
            r.solution = std::move(z.validation);
            r.injection = std::move(z.combined);
            fill_from_solution(r, r.solution, band);
            r.acceptable = r.solution.converged && r.violations == 0;
            r.status = r.acceptable ? "Mitigated" : (r.solution.converged ? "Residual" : "FlowDiverged");
            break;
        }
    }
    r.total_q = total_abs_q(r.injection);
    return r;
}

namespace {

struct MonthFlow {
    const MonthSetup* setup = nullptr;
    NetworkModel model;
    ProfileAssignment assignment;
};

std::string worst_node(const PowerFlow& flow, const VoltageSolution& sol, VoltageBand band, double& v_out) {
    double worst = -1.0;
    std::string name;
    for (std::size_t i = 0; i < sol.v_mag_pu.size(); ++i) {
        const double v = sol.v_mag_pu[i];
        const double ex = std::max(v - band.v_max, band.v_min - v);
        if (ex > worst) {
            worst = ex;
            name = flow.nodes()[i].bus_id + "." + phase_char(flow.nodes()[i].phase);
            v_out = v;
        }
    }
    return name;
}

}  // namespace

HcSweepResult hc_sweep(const NetworkModel& model, const PlacementSet& placement, ControlMode mode,
                       const std::vector<MonthSetup>& months, const std::vector<int>& hours, const HcOptions& opts) {
    if (months.empty() || hours.empty()) throw std::invalid_argument("scenario grid is empty");
    for (int h : hours) {
        if (h < 0 || h > 23) throw std::invalid_argument("grid hour out of range");
    }
    HcSweepResult out;
    HcReport& rep = out.report;
    rep.mode = mode;
    rep.placement = placement.kind;
    rep.existing_pv_kw = existing_pv_kw(model);
    rep.peak_load_kw = opts.peak_load_kw.value_or(peak_load_kw(model));
    const VoltageBand band = opts.limits.trigger();

    int units = 0;
    for (;; ++units) {
        const double level_kw = units * placement.unit_kw;
        const NetworkModel level = with_units(model, placement, units);
        bool failed = false;
        for (const MonthSetup& m : months) {
            const NetworkModel tuned = apply_baseline(level, m.baseline);
            const PowerFlow flow(tuned);
            const ProfileAssignment assignment = assign_profiles(tuned, m.profiles, opts.assignment_seed);
            for (int h : hours) {
                const InjectionState inj = injection_at(tuned, m.profiles, assignment, h * 60);
                const PointResult r = evaluate_point(flow, inj, mode, opts);
                out.rows.push_back({level_kw, mode, m.month, h, r.violations, r.max_v, r.total_q});
                if (!r.acceptable && !failed) {
                    failed = true;
                    rep.limiting.month = m.month;
                    rep.limiting.hour = h;
                    rep.limiting.cause = r.status;
                    if (r.solution.converged) rep.limiting.node = worst_node(flow, r.solution, band, rep.limiting.v_pu);
                }
            }
        }
        if (failed) {
            rep.first_violation_kw = level_kw;
            rep.units_added = std::max(0, units - 1);
            break;
        }
        if (units >= opts.max_units) {
            rep.exhausted = true;
            rep.units_added = units;
            rep.first_violation_kw = level_kw;
            break;
        }
    }
    rep.added_kw = rep.units_added * placement.unit_kw;
    rep.hc_kw = rep.existing_pv_kw + rep.added_kw;
    rep.hc_percent = hc_percent(rep.hc_kw, rep.peak_load_kw);
    return out;
}

std::vector<WorstCaseRow> worst_case_table(const NetworkModel& model, ControlMode mode,
                                           const std::vector<MonthSetup>& months, const std::vector<int>& hours,
                                           const HcOptions& opts) {
    const VoltageBand band = opts.limits.trigger();
    std::vector<WorstCaseRow> table;
    for (const MonthSetup& m : months) {
        const NetworkModel tuned = apply_baseline(model, m.baseline);
        const PowerFlow flow(tuned);
        const ProfileAssignment assignment = assign_profiles(tuned, m.profiles, opts.assignment_seed);

        std::vector<bool> hosts_pv(flow.node_count(), false);
        for (std::size_t j = 0; j < tuned.pvs.size(); ++j) {
            for (int n : flow.pv_nodes(j)) hosts_pv[static_cast<std::size_t>(n)] = true;
        }

        std::optional<WorstCaseRow> worst;
        for (int h : hours) {
            const PointResult r = evaluate_point(flow, injection_at(tuned, m.profiles, assignment, h * 60), mode, opts);
            if (!r.solution.converged) continue;
            WorstCaseRow row;
            row.month = m.month;
            row.hour = h;
            row.max_v = r.solution.max_v();
            for (std::size_t i = 0; i < flow.node_count(); ++i) {
                const double v = r.solution.v_mag_pu[i];
                if (v <= band.v_max && v >= band.v_min) continue;
                const PhaseNode& node = flow.nodes()[i];
                ++row.total;
                ++row.per_phase[static_cast<std::size_t>(node.phase)];
                if (tuned.find_bus(node.bus_id)->base_kv < 1.0) ++row.secondary;
                if (hosts_pv[i]) ++row.pv_nodes;
            }
            if (!worst || row.total > worst->total) worst = row;
        }
        if (worst && worst->total > 0) table.push_back(*worst);
    }
    return table;
}

}  // namespace pvhc
