#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pvhc/lp.hpp"
#include "pvhc/powerflow.hpp"
#include "pvhc/sensitivity.hpp"

namespace pvhc {

/// v_th_* trigger another iteration; v_pu_* are the tighter LP targets.
struct VoltageLimits {
    double v_th_min = 0.95;
    double v_th_max = 1.05;
    double v_pu_min = 0.955;
    double v_pu_max = 1.045;

    /// Throws std::invalid_argument unless v_th_min < v_pu_min < v_pu_max < v_th_max and v_th_min < 1 < v_th_max.
    void check() const;
    VoltageBand trigger() const { return {v_th_min, v_th_max}; }
    VoltageBand target() const { return {v_pu_min, v_pu_max}; }
};

enum class Objective {
    L1,       // minimize sum |Q_j + dQ_j|
    Literal,  // minimize sum (Q_j + dQ_j)
};

/// Variables are dQ_0..dQ_{M-1}, followed by t_0..t_{M-1} under the L1 objective.
/// v is indexed like sm.rows, q and q_max like sm.cols.
LinearProgram assemble_lp(const SensitivityMatrix& sm, std::span<const double> v, std::span<const double> q,
                          std::span<const double> q_max, const VoltageLimits& limits,
                          Objective objective = Objective::L1);

enum class DispatchStatus { Mitigated, LpInfeasible, IterationLimit, FlowDiverged };

const char* to_string(DispatchStatus s);

struct IterationRecord {
    int iteration = 0;
    int violations = 0;
    double max_v = 0.0;
    double min_v = 0.0;
    double total_abs_q = 0.0;
    std::uint64_t sm_fingerprint = 0;  // 0 for iteration 0
    std::string lp_status;             // empty for iteration 0
};

struct DispatchState {
    std::vector<double> q;          // kVAr, injection-signed, per PV
    std::vector<double> q_initial;  // Q at entry
    int iteration = 0;
    std::vector<IterationRecord> history;
};

struct DispatchOptions {
    int max_iterations = 3;
    double delta_q = 1.0;
    Objective objective = Objective::L1;
    bool use_actual_p = false;  // Q headroom from the instantaneous P instead of p_mpp
    SolverOptions solver;
    SensitivityOptions sensitivity;
    LpOptions lp;
    bool keep_matrices = false;
};

struct DispatchResult {
    DispatchStatus status = DispatchStatus::FlowDiverged;
    DispatchState final_state;
    VoltageSolution final_solution;
    InjectionState final_injection;
    std::string message;
    std::vector<SensitivityMatrix> matrices;  // one per iteration when keep_matrices
};

/// Iterative coordinated Q dispatch. Only pv_kvar ever changes.
DispatchResult dispatch(const PowerFlow& flow, const InjectionState& inj, const VoltageLimits& limits,
                        const DispatchOptions& opts = {});

struct ZonedResult {
    std::array<DispatchResult, 3> phases;  // A, B, C
    InjectionState combined;               // per-phase Q merged
    VoltageSolution validation;
    ViolationCount residual;               // at the trigger band
};

/// Per-phase dispatch on same-phase nodes and single-phase PVs only. Three-phase
/// PVs keep their entry Q. A single full flow with the merged Q validates the result.
ZonedResult dispatch_zoned(const PowerFlow& flow, const InjectionState& inj, const VoltageLimits& limits,
                           const DispatchOptions& opts = {});

}  // namespace pvhc
