#include "pvhc/coordinator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "pvhc/inverter_modes.hpp"

namespace pvhc {

void VoltageLimits::check() const {
    if (!(v_th_min < 1.0 && 1.0 < v_th_max)) throw std::invalid_argument("trigger band must contain 1.0 p.u.");
    if (!(v_th_min < v_pu_min && v_pu_min < v_pu_max && v_pu_max < v_th_max)) {
        throw std::invalid_argument("LP targets must lie strictly inside the trigger band");
    }
}

LinearProgram assemble_lp(const SensitivityMatrix& sm, std::span<const double> v, std::span<const double> q,
                          std::span<const double> q_max, const VoltageLimits& limits, Objective objective) {
    const std::size_t n = sm.node_count();
    const std::size_t m = sm.pv_count();
    if (v.size() != n || q.size() != m || q_max.size() != m ||
        static_cast<std::size_t>(sm.entries.rows()) != n || static_cast<std::size_t>(sm.entries.cols()) != m) {
        throw std::invalid_argument("assemble_lp: dimension mismatch");
    }
    const bool l1 = objective == Objective::L1;
    const std::size_t vars = l1 ? 2 * m : m;

    LinearProgram lp;
    lp.objective.assign(vars, 0.0);
    lp.bounds.resize(vars);
    for (std::size_t j = 0; j < m; ++j) {
        // |Q_j + dQ_j| <= q_max as a box on dQ_j.
        lp.bounds[j] = {-q_max[j] - q[j], q_max[j] - q[j]};
        if (l1) {
            lp.objective[m + j] = 1.0;
            lp.bounds[m + j] = {0.0, kInfinity};
        } else {
            lp.objective[j] = 1.0;
        }
    }
    if (l1) {
        for (std::size_t j = 0; j < m; ++j) {
            // t_j - dQ_j >= Q_j and t_j + dQ_j >= -Q_j
            LinearConstraint upper{std::vector<double>(vars, 0.0), Relation::GreaterEqual, q[j]};
            upper.coefficients[m + j] = 1.0;
            upper.coefficients[j] = -1.0;
            LinearConstraint lower{std::vector<double>(vars, 0.0), Relation::GreaterEqual, -q[j]};
            lower.coefficients[m + j] = 1.0;
            lower.coefficients[j] = 1.0;
            lp.constraints.push_back(std::move(upper));
            lp.constraints.push_back(std::move(lower));
        }
    }
    // Entries are per kVAr absorbed, so the predicted voltage is v_i - sum sm_ij dQ_j.
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> a(vars, 0.0);
        for (std::size_t j = 0; j < m; ++j) {
            a[j] = -sm.entries(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        }
        lp.constraints.push_back({a, Relation::LessEqual, limits.v_pu_max - v[i]});
        lp.constraints.push_back({std::move(a), Relation::GreaterEqual, limits.v_pu_min - v[i]});
    }
    return lp;
}

const char* to_string(DispatchStatus s) {
    switch (s) {
        case DispatchStatus::Mitigated: return "Mitigated";
        case DispatchStatus::LpInfeasible: return "LpInfeasible";
        case DispatchStatus::IterationLimit: return "IterationLimit";
        case DispatchStatus::FlowDiverged: return "FlowDiverged";
    }
    return "?";
}

namespace {

// Algorithm loop restricted to a node subset and a PV subset. Q of PVs outside
// `pvs` stays at its entry value; voltages outside `nodes` are not checked.
DispatchResult run_loop(const PowerFlow& flow, const InjectionState& entry, const VoltageLimits& limits,
                        const DispatchOptions& opts, const std::vector<int>& nodes, const std::vector<int>& pvs) {
    limits.check();
    if (opts.max_iterations < 0) throw std::invalid_argument("max_iterations must be non-negative");
    const auto& model_pvs = flow.model().pvs;
    const std::size_t total_pvs = model_pvs.size();
    const VoltageBand band = limits.trigger();

    std::vector<double> q_max(pvs.size());
    for (std::size_t k = 0; k < pvs.size(); ++k) {
        const auto j = static_cast<std::size_t>(pvs[k]);
        q_max[k] = q_headroom(model_pvs[j], entry.pv_kw[j], opts.use_actual_p);
    }

    DispatchResult out;
    out.final_injection = entry;
    InjectionState& inj = out.final_injection;
    DispatchState& state = out.final_state;
    state.q = entry.pv_kvar;
    state.q_initial = entry.pv_kvar;

    auto record = [&](const VoltageSolution& sol, std::uint64_t fp, std::string lp_status) {
        std::vector<double> v(nodes.size());
        for (std::size_t i = 0; i < nodes.size(); ++i) v[i] = sol.v_mag_pu[static_cast<std::size_t>(nodes[i])];
        const ViolationCount vc = count_violations(v, band);
        IterationRecord r;
        r.iteration = state.iteration;
        r.violations = vc.total();
        r.max_v = v.empty() ? 0.0 : *std::max_element(v.begin(), v.end());
        r.min_v = v.empty() ? 0.0 : *std::min_element(v.begin(), v.end());
        for (int j : pvs) r.total_abs_q += std::abs(state.q[static_cast<std::size_t>(j)]);
        r.sm_fingerprint = fp;
        r.lp_status = std::move(lp_status);
        state.history.push_back(r);
        return r.violations;
    };

    out.final_solution = flow.solve(inj, opts.solver);
    if (!out.final_solution.converged) {
        out.status = DispatchStatus::FlowDiverged;
        out.message = "base power flow did not converge";
        return out;
    }
    int violations = record(out.final_solution, 0, "");

    SensitivityOptions sens = opts.sensitivity;
    if (pvs.size() < total_pvs) sens.only_pvs = pvs;
    std::vector<int> row_pos(nodes.begin(), nodes.end());

    while (violations > 0) {
        if (state.iteration >= opts.max_iterations) {
            out.status = DispatchStatus::IterationLimit;
            out.message = std::to_string(violations) + " violations remain after " +
                          std::to_string(state.iteration) + " iterations";
            return out;
        }
        if (pvs.empty()) {
            out.status = DispatchStatus::LpInfeasible;
            out.message = "no controllable PV for the violating nodes";
            return out;
        }

        SensitivityMatrix sm;
        try {
            sm = restrict(build_sensitivity(flow, inj, opts.delta_q, sens), row_pos, pvs);
        } catch (const FlowDiverged& e) {
            out.status = DispatchStatus::FlowDiverged;
            out.message = e.what();
            return out;
        }
        std::vector<double> q(pvs.size());
        for (std::size_t k = 0; k < pvs.size(); ++k) q[k] = state.q[static_cast<std::size_t>(pvs[k])];
        const LinearProgram lp = assemble_lp(sm, sm.base_voltages, q, q_max, limits, opts.objective);

        LpSolution sol;
        try {
            sol = solve_lp(lp, opts.lp);
        } catch (const LpNumericalBreakdown& e) {
            out.status = DispatchStatus::LpInfeasible;
            out.message = std::string("LP breakdown: ") + e.what();
            return out;
        }
        const std::uint64_t fp = sm.fingerprint();
        if (opts.keep_matrices) out.matrices.push_back(std::move(sm));
        if (sol.status != LpStatus::Optimal) {
            // The loop stops here; the history notes the failed solve.
            state.history.back().lp_status = to_string(sol.status);
            state.history.back().sm_fingerprint = fp;
            out.status = DispatchStatus::LpInfeasible;
            out.message = std::string("LP ") + to_string(sol.status) + " at iteration " +
                          std::to_string(state.iteration + 1);
            return out;
        }

        for (std::size_t k = 0; k < pvs.size(); ++k) {
            const auto j = static_cast<std::size_t>(pvs[k]);
            state.q[j] = std::clamp(q[k] + sol.x[k], -q_max[k], q_max[k]);
            inj.pv_kvar[j] = state.q[j];
        }
        ++state.iteration;
        VoltageSolution next = flow.solve(inj, opts.solver, out.final_solution.v_complex);
        if (!next.converged) {
            out.final_solution = std::move(next);
            out.status = DispatchStatus::FlowDiverged;
            out.message = "power flow diverged at iteration " + std::to_string(state.iteration);
            return out;
        }
        out.final_solution = std::move(next);
        violations = record(out.final_solution, fp, to_string(sol.status));
    }
    out.status = DispatchStatus::Mitigated;
    return out;
}

}  // namespace

DispatchResult dispatch(const PowerFlow& flow, const InjectionState& inj, const VoltageLimits& limits,
                        const DispatchOptions& opts) {
    std::vector<int> nodes(flow.node_count());
    std::iota(nodes.begin(), nodes.end(), 0);
    std::vector<int> pvs(flow.model().pvs.size());
    std::iota(pvs.begin(), pvs.end(), 0);
    return run_loop(flow, inj, limits, opts, nodes, pvs);
}

ZonedResult dispatch_zoned(const PowerFlow& flow, const InjectionState& inj, const VoltageLimits& limits,
                           const DispatchOptions& opts) {
    const auto& model_pvs = flow.model().pvs;
    ZonedResult out;
    out.combined = inj;
    for (Phase p : kAllPhases) {
        std::vector<int> nodes, pvs;
        for (const PhaseNode& node : flow.nodes()) {
            if (node.phase == p) nodes.push_back(node.index);
        }
        for (std::size_t j = 0; j < model_pvs.size(); ++j) {
            if (model_pvs[j].phases == PhaseSet::single(p)) pvs.push_back(static_cast<int>(j));
        }
        DispatchResult& r = out.phases[static_cast<std::size_t>(p)];
        r = run_loop(flow, inj, limits, opts, nodes, pvs);
        for (int j : pvs) {
            out.combined.pv_kvar[static_cast<std::size_t>(j)] = r.final_state.q[static_cast<std::size_t>(j)];
        }
    }
    out.validation = flow.solve(out.combined, opts.solver);
    if (out.validation.converged) out.residual = count_violations(out.validation, limits.trigger());
    return out;
}

}  // namespace pvhc
