#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "pvhc/powerflow.hpp"

namespace pvhc {

/// Voltage-magnitude response of each phase node to reactive power at each PV,
/// measured at one operating point.
///
/// Entries are p.u. per kVAr *absorbed*, so in-phase entries are negative and
/// cross-phase entries through mutual coupling are often positive. Q vectors
/// elsewhere are injection-signed; a change dQ moves voltages by -SM * dQ.
struct SensitivityMatrix {
    Eigen::MatrixXd entries;            // rows x cols
    std::vector<int> rows;              // node index of each row
    std::vector<int> cols;              // PV index of each column
    std::vector<double> base_voltages;  // per row, p.u.
    std::vector<double> base_q;         // per column, kVAr
    std::vector<double> applied_dq;     // injection-signed perturbation per column, kVAr
    double delta_q = 1.0;

    std::size_t node_count() const { return rows.size(); }
    std::size_t pv_count() const { return cols.size(); }

    /// FNV-1a over the entry bit patterns; identifies the matrix in traces.
    std::uint64_t fingerprint() const;
};

class FlowDiverged : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class PerturbedFlowDiverged : public FlowDiverged {
public:
    explicit PerturbedFlowDiverged(std::size_t pv);
    std::size_t pv() const { return pv_; }

private:
    std::size_t pv_;
};

struct SensitivityOptions {
    SolverOptions solver{1e-10, 200};
    int threads = 1;
    int max_halvings = 3;  // retries with delta_q / 2 when a perturbed flow diverges
    std::vector<int> only_pvs;  // when non-empty, other columns are left at zero
};

/// One base solve plus one perturbed solve per PV. Each PV's Q moves by
/// delta_q away from its nearer limit (absorption when Q >= 0).
SensitivityMatrix build_sensitivity(const PowerFlow& flow, const InjectionState& inj, double delta_q_kvar,
                                    const SensitivityOptions& opts = {});

/// Linear voltage-change estimate (p.u.) for injection-signed Q changes (kVAr).
std::vector<double> predict(const SensitivityMatrix& sm, std::span<const double> delta_q_kvar);

/// Sub-matrix over the given positions (indices into sm.rows / sm.cols).
SensitivityMatrix restrict(const SensitivityMatrix& sm, std::span<const int> row_positions,
                           std::span<const int> col_positions);

/// Same-phase restrictions for phases A, B, C. Columns keep only single-phase
/// PVs on that phase; cross-phase entries are dropped.
std::array<SensitivityMatrix, 3> per_phase_submatrices(const SensitivityMatrix& sm, const PowerFlow& flow);

}  // namespace pvhc
