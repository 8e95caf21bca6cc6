#pragma once

#include <stdexcept>
#include <variant>

#include "pvhc/powerflow.hpp"

namespace pvhc {

/// Piecewise-linear volt-VAr characteristic. Reactive power is expressed as a
/// signed fraction of the inverter's kVA rating: q1 (injection) applies at and
/// below v1, q4 (absorption) at and above v4, zero inside [v2, v3].
struct VoltVarCurve {
    double v1 = 0.92;
    double v2 = 0.98;
    double v3 = 1.02;
    double v4 = 1.08;
    double q1 = 0.44;
    double q4 = -0.44;

    /// Throws std::invalid_argument unless v1 < v2 <= v3 < v4 and q1 >= 0 >= q4.
    void check() const;

    friend bool operator==(const VoltVarCurve&, const VoltVarCurve&) = default;
};

/// kVAr commanded by the curve at PCC voltage `v_pcc` (p.u.).
double vv_q(const VoltVarCurve& curve, double v_pcc, double s_rating_kva);

struct UnityPowerFactor {};

struct FixedPowerFactor {
    double pf = 0.95;
    bool absorbing = true;
};

struct VoltVar {
    VoltVarCurve curve;
};

using InverterMode = std::variant<UnityPowerFactor, FixedPowerFactor, VoltVar>;

struct EquilibriumOptions {
    SolverOptions solver{};
    double damping = 0.5;
    int max_cycles = 50;
    double tolerance_kvar = 0.01;
    // Headroom from instantaneous P instead of p_mpp.
    bool use_actual_p = false;
};

struct Equilibrium {
    VoltageSolution solution;
    InjectionState injection;
    int cycles = 0;
};

/// The volt-VAr loop did not settle within max_cycles.
class VvOscillation : public std::runtime_error {
public:
    VvOscillation(int cycles, double last_change_kvar);
    int cycles() const { return cycles_; }
    double last_change_kvar() const { return last_change_; }

private:
    int cycles_;
    double last_change_;
};

/// Reactive headroom of PV `j` at the given injection.
double q_headroom(const PvSystem& pv, double p_kw, bool use_actual_p);

/// Mean per-unit magnitude over a PV's PCC nodes.
double pcc_voltage(const PowerFlow& flow, const VoltageSolution& sol, std::size_t pv);

/// Solves the feeder with every PV under a local control mode. A power flow
/// that fails to converge ends the loop; check `solution.converged`.
Equilibrium equilibrium_solve(const PowerFlow& flow, InjectionState inj, const InverterMode& mode,
                              const EquilibriumOptions& opts = {});

}  // namespace pvhc
