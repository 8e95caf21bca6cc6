#include "pvhc/powerflow.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>

namespace pvhc {

namespace {

using PhaseVec = std::array<Complex, 3>;

Complex nominal_rotation(Phase p) {
    constexpr double deg = std::numbers::pi / 180.0;
    switch (p) {
        case Phase::A: return {1.0, 0.0};
        case Phase::B: return std::polar(1.0, -120.0 * deg);
        case Phase::C: return std::polar(1.0, 120.0 * deg);
    }
    return {1.0, 0.0};
}

}  // namespace

InjectionState nominal_injection(const NetworkModel& model) {
    InjectionState inj;
    for (const auto& ld : model.loads) {
        inj.load_kw.push_back(ld.kw_peak);
        inj.load_kvar.push_back(ld.kw_peak * std::tan(std::acos(ld.pf)));
    }
    for (const auto& pv : model.pvs) {
        inj.pv_kw.push_back(pv.p_mpp_kw);
        inj.pv_kvar.push_back(0.0);
    }
    for (const auto& c : model.capacitors) inj.cap_on.push_back(c.on);
    return inj;
}

double VoltageSolution::max_v() const {
    return v_mag_pu.empty() ? 0.0 : *std::max_element(v_mag_pu.begin(), v_mag_pu.end());
}

double VoltageSolution::min_v() const {
    return v_mag_pu.empty() ? 0.0 : *std::min_element(v_mag_pu.begin(), v_mag_pu.end());
}

ViolationCount count_violations(std::span<const double> v_mag_pu, VoltageBand band) {
    ViolationCount c;
    if (v_mag_pu.empty()) return c;
    c.worst_hi = v_mag_pu.front();
    c.worst_lo = v_mag_pu.front();
    for (double v : v_mag_pu) {
        if (v > band.v_max) ++c.over;
        if (v < band.v_min) ++c.under;
        c.worst_hi = std::max(c.worst_hi, v);
        c.worst_lo = std::min(c.worst_lo, v);
    }
    return c;
}

ViolationCount count_violations(const VoltageSolution& sol, VoltageBand band) {
    return count_violations(std::span<const double>(sol.v_mag_pu), band);
}

PowerFlow::PowerFlow(const NetworkModel& model) : model_(model) {
    require_valid(model);
    nodes_ = node_index(model);

    const std::size_t nb = model.buses.size();
    bus_.resize(nb);
    for (std::size_t i = 0; i < nb; ++i) {
        bus_[i].phases = model.buses[i].phases;
        bus_[i].base_v = model.buses[i].base_kv * 1000.0;
    }
    for (const auto& n : nodes_) {
        bus_[*model.bus_position(n.bus_id)].node[static_cast<std::size_t>(n.phase)] = n.index;
    }

    // Adjacency: (neighbor, line index or -(regulator index + 1)).
    std::vector<std::vector<std::pair<int, int>>> adj(nb);
    for (std::size_t k = 0; k < model.lines.size(); ++k) {
        const auto a = static_cast<int>(*model.bus_position(model.lines[k].from_bus));
        const auto b = static_cast<int>(*model.bus_position(model.lines[k].to_bus));
        adj[a].emplace_back(b, static_cast<int>(k));
        adj[b].emplace_back(a, static_cast<int>(k));
    }
    for (std::size_t k = 0; k < model.regulators.size(); ++k) {
        const auto a = static_cast<int>(*model.bus_position(model.regulators[k].from_bus));
        const auto b = static_cast<int>(*model.bus_position(model.regulators[k].to_bus));
        adj[a].emplace_back(b, -static_cast<int>(k) - 1);
        adj[b].emplace_back(a, -static_cast<int>(k) - 1);
    }

    slack_ = static_cast<int>(*model.bus_position(model.slack_bus));
    std::vector<bool> seen(nb, false);
    std::deque<int> queue{slack_};
    seen[slack_] = true;
    while (!queue.empty()) {
        const int u = queue.front();
        queue.pop_front();
        order_.push_back(u);
        for (auto [v, edge] : adj[u]) {
            if (seen[v]) continue;
            seen[v] = true;
            bus_[v].parent = u;
            if (edge >= 0) {
                bus_[v].line = edge;
            } else {
                const auto& reg = model.regulators[static_cast<std::size_t>(-edge - 1)];
                bus_[v].regulator = -edge - 1;
                // A regulator whose from_bus sits downstream would step down.
                const bool forward = model.buses[u].id == reg.from_bus;
                const double tap = forward ? reg.tap_ratio : 1.0 / reg.tap_ratio;
                bus_[v].ratio = tap * bus_[v].base_v / bus_[u].base_v;
            }
            queue.push_back(v);
        }
    }

    for (const auto& ld : model.loads) load_bus_.push_back(static_cast<int>(*model.bus_position(ld.bus_id)));
    for (const auto& c : model.capacitors) cap_bus_.push_back(static_cast<int>(*model.bus_position(c.bus_id)));
    for (const auto& pv : model.pvs) {
        const int b = static_cast<int>(*model.bus_position(pv.bus_id));
        pv_bus_.push_back(b);
        std::vector<int> idx;
        for (Phase p : pv.phases.phases()) idx.push_back(bus_[b].node[static_cast<std::size_t>(p)]);
        pv_nodes_.push_back(std::move(idx));
    }
    for (Phase p : bus_[slack_].phases.phases()) slack_nodes_.push_back(bus_[slack_].node[static_cast<std::size_t>(p)]);
}

int PowerFlow::node_of(const std::string& bus_id, Phase p) const {
    auto pos = model_.bus_position(bus_id);
    return pos ? bus_[*pos].node[static_cast<std::size_t>(p)] : -1;
}

VoltageSolution PowerFlow::solve(const InjectionState& inj, const SolverOptions& opts,
                                 std::span<const Complex> warm_start) const {
    const std::size_t nb = bus_.size();

    // Constant-power demand (VA, load minus generation) and shunt susceptance (S) per bus phase.
    std::vector<PhaseVec> demand(nb, PhaseVec{});
    std::vector<std::array<double, 3>> shunt_b(nb, std::array<double, 3>{});
    auto spread = [&](int b, PhaseSet phases, Complex total_va) {
        const double n = phases.count();
        for (Phase p : phases.phases()) demand[b][static_cast<std::size_t>(p)] += total_va / n;
    };
    for (std::size_t k = 0; k < model_.loads.size(); ++k) {
        spread(load_bus_[k], model_.loads[k].phases, Complex(inj.load_kw[k], inj.load_kvar[k]) * 1000.0);
    }
    for (std::size_t k = 0; k < model_.pvs.size(); ++k) {
        spread(pv_bus_[k], model_.pvs[k].phases, -Complex(inj.pv_kw[k], inj.pv_kvar[k]) * 1000.0);
    }
    for (std::size_t k = 0; k < model_.capacitors.size(); ++k) {
        if (!inj.cap_on[k]) continue;
        const int b = cap_bus_[k];
        const double base = bus_[b].base_v;
        for (Phase p : model_.capacitors[k].phases.phases()) {
            shunt_b[b][static_cast<std::size_t>(p)] += model_.capacitors[k].kvar_per_phase * 1000.0 / (base * base);
        }
    }

    std::vector<PhaseVec> v(nb, PhaseVec{});
    if (warm_start.size() == nodes_.size()) {
        for (std::size_t b = 0; b < nb; ++b) {
            for (Phase p : bus_[b].phases.phases()) {
                const auto i = static_cast<std::size_t>(p);
                v[b][i] = warm_start[static_cast<std::size_t>(bus_[b].node[i])] * bus_[b].base_v;
            }
        }
    } else {
        for (int b : order_) {
            for (Phase p : bus_[b].phases.phases()) {
                const auto i = static_cast<std::size_t>(p);
                if (b == slack_) continue;
                const auto& info = bus_[b];
                if (info.regulator >= 0) {
                    v[b][i] = info.ratio * v[info.parent][i];
                } else {
                    v[b][i] = v[info.parent][i] * (info.base_v / bus_[info.parent].base_v);
                }
            }
            if (b == slack_) {
                for (Phase p : bus_[b].phases.phases()) {
                    v[b][static_cast<std::size_t>(p)] = model_.slack_voltage_pu * bus_[b].base_v * nominal_rotation(p);
                }
            }
        }
    }
    for (Phase p : bus_[slack_].phases.phases()) {
        v[slack_][static_cast<std::size_t>(p)] = model_.slack_voltage_pu * bus_[slack_].base_v * nominal_rotation(p);
    }

    auto drawn = [&](int b, std::size_t i, Complex volts) {
        return std::conj(demand[b][i] / volts) + Complex(0.0, shunt_b[b][i]) * volts;
    };

    VoltageSolution sol;
    const double s_base = opts.base_kva * 1000.0;
    std::vector<PhaseVec> current(nb);
    std::vector<PhaseVec> node_current(nb);
    int rising = 0;
    double previous = std::numeric_limits<double>::infinity();

    for (int iter = 1; iter <= opts.max_iter; ++iter) {
        // Backward: node draws at the present voltage, accumulated leaf to root.
        for (int b : order_) {
            node_current[b] = PhaseVec{};
            for (Phase p : bus_[b].phases.phases()) {
                const auto i = static_cast<std::size_t>(p);
                node_current[b][i] = drawn(b, i, v[b][i]);
            }
            current[b] = node_current[b];
        }
        for (auto it = order_.rbegin(); it != order_.rend(); ++it) {
            const int b = *it;
            if (b == slack_) continue;
            const auto& info = bus_[b];
            const double scale = info.regulator >= 0 ? info.ratio : 1.0;
            for (Phase p : info.phases.phases()) {
                const auto i = static_cast<std::size_t>(p);
                current[info.parent][i] += scale * current[b][i];
            }
        }

        // Forward: voltage drops root to leaf.
        for (int b : order_) {
            if (b == slack_) continue;
            const auto& info = bus_[b];
            if (info.regulator >= 0) {
                for (Phase p : info.phases.phases()) {
                    const auto i = static_cast<std::size_t>(p);
                    v[b][i] = info.ratio * v[info.parent][i];
                }
                continue;
            }
            const auto& line = model_.lines[static_cast<std::size_t>(info.line)];
            for (Phase p : info.phases.phases()) {
                const auto i = static_cast<std::size_t>(p);
                Complex drop{};
                for (Phase q : line.phases.phases()) {
                    const auto j = static_cast<std::size_t>(q);
                    drop += line.z_ohm[i][j] * current[b][j];
                }
                v[b][i] = v[info.parent][i] - drop;
            }
        }

        double mismatch = 0.0;
        bool finite = true;
        for (int b : order_) {
            for (Phase p : bus_[b].phases.phases()) {
                const auto i = static_cast<std::size_t>(p);
                const Complex residual = drawn(b, i, v[b][i]) - node_current[b][i];
                const double m = std::abs(v[b][i] * std::conj(residual)) / s_base;
                if (!std::isfinite(m) || !std::isfinite(v[b][i].real()) || !std::isfinite(v[b][i].imag())) {
                    finite = false;
                }
                mismatch = std::max(mismatch, m);
            }
        }
        sol.mismatch_trace.push_back(mismatch);
        sol.iterations = iter;
        sol.max_mismatch = mismatch;
        if (!finite) break;
        if (mismatch < opts.tolerance) {
            sol.converged = true;
            break;
        }
        rising = mismatch > previous ? rising + 1 : 0;
        previous = mismatch;
        if (rising >= opts.divergence_window) break;
    }

    sol.v_complex.resize(nodes_.size());
    sol.v_mag_pu.resize(nodes_.size());
    for (std::size_t b = 0; b < nb; ++b) {
        for (Phase p : bus_[b].phases.phases()) {
            const auto i = static_cast<std::size_t>(p);
            const auto n = static_cast<std::size_t>(bus_[b].node[i]);
            sol.v_complex[n] = v[b][i] / bus_[b].base_v;
            sol.v_mag_pu[n] = std::abs(sol.v_complex[n]);
        }
    }
    for (Phase p : bus_[slack_].phases.phases()) {
        const auto i = static_cast<std::size_t>(p);
        sol.slack_power_kva += v[slack_][i] * std::conj(current[slack_][i]) / 1000.0;
    }
    return sol;
}

VoltageSolution solve(const NetworkModel& model, const InjectionState& inj, const SolverOptions& opts) {
    return PowerFlow(model).solve(inj, opts);
}

}  // namespace pvhc
