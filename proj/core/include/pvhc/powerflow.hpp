#pragma once

#include <span>
#include <vector>

#include "pvhc/network.hpp"

namespace pvhc {

/// Per-instant injections. PV reactive power is signed: absorption negative.
struct InjectionState {
    std::vector<double> load_kw;
    std::vector<double> load_kvar;
    std::vector<double> pv_kw;
    std::vector<double> pv_kvar;
    std::vector<bool> cap_on;

    friend bool operator==(const InjectionState&, const InjectionState&) = default;
};

/// Loads at peak, PVs at p_mpp with zero Q, capacitors as declared.
InjectionState nominal_injection(const NetworkModel& model);

struct SolverOptions {
    double tolerance = 1e-6;     // max complex power mismatch, p.u. of base_kva
    int max_iter = 100;
    double base_kva = 1000.0;    // per-phase power base for the mismatch
    int divergence_window = 5;   // consecutive mismatch increases tolerated
};

struct VoltageSolution {
    std::vector<Complex> v_complex;  // p.u., per node_index order
    std::vector<double> v_mag_pu;
    int iterations = 0;
    bool converged = false;
    double max_mismatch = 0.0;
    std::vector<double> mismatch_trace;
    Complex slack_power_kva{};       // delivered by the source

    double max_v() const;
    double min_v() const;
};

struct VoltageBand {
    double v_min = 0.95;
    double v_max = 1.05;
};

struct ViolationCount {
    int over = 0;
    int under = 0;
    double worst_hi = 0.0;
    double worst_lo = 0.0;

    int total() const { return over + under; }
};

ViolationCount count_violations(std::span<const double> v_mag_pu, VoltageBand band);
ViolationCount count_violations(const VoltageSolution& sol, VoltageBand band);

/// Backward/forward sweep over the radial tree of a validated model.
///
/// The solver keeps a reference to the model, which must outlive it. Solves
/// are const and may run concurrently.
class PowerFlow {
public:
    explicit PowerFlow(const NetworkModel& model);

    /// Flat start unless `warm_start` (p.u. per node) is supplied.
    VoltageSolution solve(const InjectionState& inj, const SolverOptions& opts = {},
                          std::span<const Complex> warm_start = {}) const;

    const NetworkModel& model() const { return model_; }
    const std::vector<PhaseNode>& nodes() const { return nodes_; }
    std::size_t node_count() const { return nodes_.size(); }

    /// Node index of (bus, phase) or -1.
    int node_of(const std::string& bus_id, Phase p) const;
    /// Node indices of a PV's point of common coupling.
    const std::vector<int>& pv_nodes(std::size_t pv) const { return pv_nodes_[pv]; }
    /// Node indices that belong to the slack bus.
    const std::vector<int>& slack_nodes() const { return slack_nodes_; }

private:
    struct BusInfo {
        PhaseSet phases;
        double base_v = 0.0;
        int parent = -1;          // bus position
        int line = -1;            // incoming line, or
        int regulator = -1;       // incoming regulator
        double ratio = 1.0;       // regulator: V_child = ratio * V_parent in volts
        std::array<int, 3> node{-1, -1, -1};
    };

    const NetworkModel& model_;
    std::vector<PhaseNode> nodes_;
    std::vector<BusInfo> bus_;
    std::vector<int> order_;  // breadth-first from the slack
    std::vector<int> load_bus_;
    std::vector<int> pv_bus_;
    std::vector<int> cap_bus_;
    std::vector<std::vector<int>> pv_nodes_;
    std::vector<int> slack_nodes_;
    int slack_ = -1;
};

VoltageSolution solve(const NetworkModel& model, const InjectionState& inj, const SolverOptions& opts = {});

}  // namespace pvhc
