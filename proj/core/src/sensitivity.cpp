#include "pvhc/sensitivity.hpp"

#include <cstring>
#include <future>
#include <optional>
#include <string>

namespace pvhc {

std::uint64_t SensitivityMatrix::fingerprint() const {
    std::uint64_t h = 1469598103934665603ULL;
    const double* data = entries.data();
    for (Eigen::Index k = 0; k < entries.size(); ++k) {
        std::uint64_t bits = 0;
        std::memcpy(&bits, data + k, sizeof bits);
        for (int b = 0; b < 8; ++b) {
            h ^= (bits >> (8 * b)) & 0xffu;
            h *= 1099511628211ULL;
        }
    }
    return h;
}

PerturbedFlowDiverged::PerturbedFlowDiverged(std::size_t pv)
    : FlowDiverged("power flow diverged after perturbing PV " + std::to_string(pv)), pv_(pv) {}

namespace {

struct Column {
    std::vector<double> v;
    double dq = 0.0;
};

std::optional<Column> perturb(const PowerFlow& flow, const InjectionState& base_inj, const VoltageSolution& base,
                              std::size_t j, double delta_q, const SensitivityOptions& opts) {
    const double sign = base_inj.pv_kvar[j] >= 0.0 ? -1.0 : 1.0;
    double dq = sign * delta_q;
    InjectionState inj = base_inj;
    for (int attempt = 0; attempt <= opts.max_halvings; ++attempt, dq /= 2.0) {
        inj.pv_kvar[j] = base_inj.pv_kvar[j] + dq;
        VoltageSolution sol = flow.solve(inj, opts.solver, base.v_complex);
        if (sol.converged) return Column{std::move(sol.v_mag_pu), dq};
    }
    return std::nullopt;
}

}  // namespace

SensitivityMatrix build_sensitivity(const PowerFlow& flow, const InjectionState& inj, double delta_q_kvar,
                                    const SensitivityOptions& opts) {
    if (!(delta_q_kvar > 0.0)) throw std::invalid_argument("delta_q must be positive");
    const VoltageSolution base = flow.solve(inj, opts.solver);
    if (!base.converged) throw FlowDiverged("base power flow for sensitivity did not converge");

    const std::size_t n = flow.node_count();
    const std::size_t m = flow.model().pvs.size();
    SensitivityMatrix sm;
    sm.entries = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
    sm.rows.resize(n);
    for (std::size_t i = 0; i < n; ++i) sm.rows[i] = static_cast<int>(i);
    sm.cols.resize(m);
    for (std::size_t j = 0; j < m; ++j) sm.cols[j] = static_cast<int>(j);
    sm.base_voltages = base.v_mag_pu;
    sm.base_q = inj.pv_kvar;
    sm.applied_dq.assign(m, 0.0);
    sm.delta_q = delta_q_kvar;

    std::vector<std::size_t> wanted;
    if (opts.only_pvs.empty()) {
        for (std::size_t j = 0; j < m; ++j) wanted.push_back(j);
    } else {
        for (int j : opts.only_pvs) {
            if (j < 0 || static_cast<std::size_t>(j) >= m) throw std::out_of_range("only_pvs index out of range");
            wanted.push_back(static_cast<std::size_t>(j));
        }
    }

    std::vector<std::optional<Column>> columns(m);
    const auto threads = static_cast<std::size_t>(std::max(1, opts.threads));
    if (threads == 1 || wanted.size() < 2) {
        for (std::size_t j : wanted) columns[j] = perturb(flow, inj, base, j, delta_q_kvar, opts);
    } else {
        // Strided partition; each worker writes only its own slots.
        std::vector<std::future<void>> workers;
        for (std::size_t t = 0; t < threads; ++t) {
            workers.push_back(std::async(std::launch::async, [&, t] {
                for (std::size_t k = t; k < wanted.size(); k += threads) {
                    columns[wanted[k]] = perturb(flow, inj, base, wanted[k], delta_q_kvar, opts);
                }
            }));
        }
        for (auto& w : workers) w.get();
    }

    for (std::size_t j : wanted) {
        if (!columns[j]) throw PerturbedFlowDiverged(j);
        const Column& col = *columns[j];
        sm.applied_dq[j] = col.dq;
        for (std::size_t i = 0; i < n; ++i) {
            sm.entries(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                -(col.v[i] - base.v_mag_pu[i]) / col.dq;
        }
    }
    // Slack magnitudes are fixed; keep their rows exactly zero.
    for (int s : flow.slack_nodes()) sm.entries.row(s).setZero();
    return sm;
}

std::vector<double> predict(const SensitivityMatrix& sm, std::span<const double> delta_q_kvar) {
    if (delta_q_kvar.size() != sm.pv_count()) throw std::invalid_argument("delta_q length does not match columns");
    const Eigen::Map<const Eigen::VectorXd> dq(delta_q_kvar.data(), static_cast<Eigen::Index>(delta_q_kvar.size()));
    const Eigen::VectorXd dv = -(sm.entries * dq);
    return {dv.data(), dv.data() + dv.size()};
}

SensitivityMatrix restrict(const SensitivityMatrix& sm, std::span<const int> row_positions,
                           std::span<const int> col_positions) {
    SensitivityMatrix s;
    s.entries.resize(static_cast<Eigen::Index>(row_positions.size()), static_cast<Eigen::Index>(col_positions.size()));
    for (std::size_t a = 0; a < row_positions.size(); ++a) {
        for (std::size_t b = 0; b < col_positions.size(); ++b) {
            s.entries(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
                sm.entries(row_positions[a], col_positions[b]);
        }
    }
    for (int i : row_positions) {
        s.rows.push_back(sm.rows[static_cast<std::size_t>(i)]);
        s.base_voltages.push_back(sm.base_voltages[static_cast<std::size_t>(i)]);
    }
    for (int j : col_positions) {
        s.cols.push_back(sm.cols[static_cast<std::size_t>(j)]);
        s.base_q.push_back(sm.base_q[static_cast<std::size_t>(j)]);
        s.applied_dq.push_back(sm.applied_dq[static_cast<std::size_t>(j)]);
    }
    s.delta_q = sm.delta_q;
    return s;
}

std::array<SensitivityMatrix, 3> per_phase_submatrices(const SensitivityMatrix& sm, const PowerFlow& flow) {
    std::array<SensitivityMatrix, 3> out;
    const auto& nodes = flow.nodes();
    const auto& pvs = flow.model().pvs;
    for (Phase p : kAllPhases) {
        std::vector<int> r, c;
        for (std::size_t i = 0; i < sm.rows.size(); ++i) {
            if (nodes[static_cast<std::size_t>(sm.rows[i])].phase == p) r.push_back(static_cast<int>(i));
        }
        for (std::size_t j = 0; j < sm.cols.size(); ++j) {
            if (pvs[static_cast<std::size_t>(sm.cols[j])].phases == PhaseSet::single(p)) c.push_back(static_cast<int>(j));
        }
        out[static_cast<std::size_t>(p)] = restrict(sm, r, c);
    }
    return out;
}

}  // namespace pvhc
