#include "pvhc/inverter_modes.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace pvhc {

void VoltVarCurve::check() const {
    if (!(v1 < v2 && v2 <= v3 && v3 < v4)) {
        throw std::invalid_argument("volt-VAr breakpoints must satisfy v1 < v2 <= v3 < v4");
    }
    if (!(q1 >= 0.0 && q4 <= 0.0)) throw std::invalid_argument("volt-VAr curve needs q1 >= 0 >= q4");
}

double vv_q(const VoltVarCurve& c, double v, double s_rating_kva) {
    double fraction = 0.0;
    if (v <= c.v1) {
        fraction = c.q1;
    } else if (v < c.v2) {
        fraction = c.q1 * (c.v2 - v) / (c.v2 - c.v1);
    } else if (v <= c.v3) {
        fraction = 0.0;
    } else if (v < c.v4) {
        fraction = c.q4 * (v - c.v3) / (c.v4 - c.v3);
    } else {
        fraction = c.q4;
    }
    return fraction * s_rating_kva;
}

namespace {
std::string oscillation_message(int cycles, double change) {
    std::ostringstream os;
    os << "volt-VAr equilibrium not reached after " << cycles << " cycles (last change " << change << " kVAr)";
    return os.str();
}
}  // namespace

VvOscillation::VvOscillation(int cycles, double last_change_kvar)
    : std::runtime_error(oscillation_message(cycles, last_change_kvar)), cycles_(cycles), last_change_(last_change_kvar) {}

double q_headroom(const PvSystem& pv, double p_kw, bool use_actual_p) {
    if (!use_actual_p) return pv.q_max_kvar;
    return effective_q_max(pv.s_rating_kva, std::clamp(p_kw, 0.0, pv.s_rating_kva));
}

double pcc_voltage(const PowerFlow& flow, const VoltageSolution& sol, std::size_t pv) {
    const auto& nodes = flow.pv_nodes(pv);
    double sum = 0.0;
    for (int n : nodes) sum += sol.v_mag_pu[static_cast<std::size_t>(n)];
    return sum / static_cast<double>(nodes.size());
}

Equilibrium equilibrium_solve(const PowerFlow& flow, InjectionState inj, const InverterMode& mode,
                              const EquilibriumOptions& opts) {
    const auto& pvs = flow.model().pvs;
    const std::size_t m = pvs.size();
    auto limit = [&](std::size_t j, double q) {
        const double h = q_headroom(pvs[j], inj.pv_kw[j], opts.use_actual_p);
        return std::clamp(q, -h, h);
    };

    Equilibrium out;
    if (std::holds_alternative<UnityPowerFactor>(mode)) {
        std::fill(inj.pv_kvar.begin(), inj.pv_kvar.end(), 0.0);
        out.solution = flow.solve(inj, opts.solver);
        out.injection = std::move(inj);
        out.cycles = 1;
        return out;
    }
    if (const auto* fixed = std::get_if<FixedPowerFactor>(&mode)) {
        if (!(fixed->pf > 0.0 && fixed->pf <= 1.0)) throw std::invalid_argument("power factor must be in (0, 1]");
        const double ratio = std::tan(std::acos(fixed->pf)) * (fixed->absorbing ? -1.0 : 1.0);
        for (std::size_t j = 0; j < m; ++j) inj.pv_kvar[j] = limit(j, inj.pv_kw[j] * ratio);
        out.solution = flow.solve(inj, opts.solver);
        out.injection = std::move(inj);
        out.cycles = 1;
        return out;
    }

    const VoltVarCurve& curve = std::get<VoltVar>(mode).curve;
    curve.check();
    std::fill(inj.pv_kvar.begin(), inj.pv_kvar.end(), 0.0);
    std::vector<Complex> warm;
    double change = 0.0;
    for (int cycle = 1; cycle <= opts.max_cycles; ++cycle) {
        VoltageSolution sol = flow.solve(inj, opts.solver, warm);
        if (!sol.converged) {
            out.solution = std::move(sol);
            out.injection = std::move(inj);
            out.cycles = cycle;
            return out;
        }
        std::vector<double> target(m);
        change = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            target[j] = limit(j, vv_q(curve, pcc_voltage(flow, sol, j), pvs[j].s_rating_kva));
            change = std::max(change, std::abs(target[j] - inj.pv_kvar[j]));
        }
        if (change < opts.tolerance_kvar) {
            out.solution = std::move(sol);
            out.injection = std::move(inj);
            out.cycles = cycle;
            return out;
        }
        for (std::size_t j = 0; j < m; ++j) {
            inj.pv_kvar[j] += opts.damping * (target[j] - inj.pv_kvar[j]);
        }
        warm = sol.v_complex;
    }
    throw VvOscillation(opts.max_cycles, change);
}

}  // namespace pvhc
