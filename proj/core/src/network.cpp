#include "pvhc/network.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

namespace pvhc {

char phase_char(Phase p) { return static_cast<char>('A' + static_cast<int>(p)); }

Phase phase_from_char(char c) {
    switch (c) {
        case 'A': case 'a': return Phase::A;
        case 'B': case 'b': return Phase::B;
        case 'C': case 'c': return Phase::C;
        default: break;
    }
    throw std::invalid_argument(std::string("unknown phase '") + c + "'");
}

PhaseSet PhaseSet::parse(const std::string& text) {
    std::uint8_t bits = 0;
    for (char c : text) {
        bits |= static_cast<std::uint8_t>(1u << static_cast<int>(phase_from_char(c)));
    }
    return PhaseSet(bits);
}

int PhaseSet::count() const {
    return static_cast<int>(contains(Phase::A)) + static_cast<int>(contains(Phase::B)) +
           static_cast<int>(contains(Phase::C));
}

std::vector<Phase> PhaseSet::phases() const {
    std::vector<Phase> out;
    for (Phase p : kAllPhases) {
        if (contains(p)) out.push_back(p);
    }
    return out;
}

std::string PhaseSet::str() const {
    std::string s;
    for (Phase p : phases()) s.push_back(phase_char(p));
    return s;
}

int Regulator::tap_position() const {
    return static_cast<int>(std::lround((tap_ratio - 1.0) / tap_step));
}

const Bus* NetworkModel::find_bus(const std::string& id) const {
    auto it = std::find_if(buses.begin(), buses.end(), [&](const Bus& b) { return b.id == id; });
    return it == buses.end() ? nullptr : &*it;
}

std::optional<std::size_t> NetworkModel::bus_position(const std::string& id) const {
    for (std::size_t i = 0; i < buses.size(); ++i) {
        if (buses[i].id == id) return i;
    }
    return std::nullopt;
}

const char* to_string(ViolationCode code) {
    switch (code) {
        case ViolationCode::DuplicateBusId: return "DuplicateBusId";
        case ViolationCode::EmptyPhases: return "EmptyPhases";
        case ViolationCode::NonPositiveBaseKv: return "NonPositiveBaseKv";
        case ViolationCode::UnknownBus: return "UnknownBus";
        case ViolationCode::PhaseNotAtBus: return "PhaseNotAtBus";
        case ViolationCode::ImpedanceNotSymmetric: return "ImpedanceNotSymmetric";
        case ViolationCode::NonPositiveResistance: return "NonPositiveResistance";
        case ViolationCode::TapOutOfRange: return "TapOutOfRange";
        case ViolationCode::TapNotOnStep: return "TapNotOnStep";
        case ViolationCode::NegativeKvar: return "NegativeKvar";
        case ViolationCode::NegativeLoad: return "NegativeLoad";
        case ViolationCode::PowerFactorOutOfRange: return "PowerFactorOutOfRange";
        case ViolationCode::RatingBelowPmpp: return "RatingBelowPmpp";
        case ViolationCode::QmaxInconsistent: return "QmaxInconsistent";
        case ViolationCode::MissingSlack: return "MissingSlack";
        case ViolationCode::NonRadialTopology: return "NonRadialTopology";
        case ViolationCode::Disconnected: return "Disconnected";
        case ViolationCode::DuplicateEquipmentId: return "DuplicateEquipmentId";
    }
    return "Unknown";
}

namespace {

class Checker {
public:
    explicit Checker(const NetworkModel& model) : model_(model) {}

    void add(ViolationCode code, const std::string& element, const std::string& message) {
        out_.push_back({code, element, message});
    }

    // Returns the bus if it resolves; records UnknownBus otherwise.
    const Bus* bus(const std::string& element, const std::string& bus_id) {
        const Bus* b = model_.find_bus(bus_id);
        if (b == nullptr) add(ViolationCode::UnknownBus, element, "unknown bus '" + bus_id + "'");
        return b;
    }

    void phases_at(const std::string& element, PhaseSet phases, const Bus* b) {
        if (phases.empty()) {
            add(ViolationCode::EmptyPhases, element, "no phases");
            return;
        }
        if (b != nullptr && !phases.subset_of(b->phases)) {
            add(ViolationCode::PhaseNotAtBus, element,
                "phases " + phases.str() + " not all present at bus '" + b->id + "' (" + b->phases.str() + ")");
        }
    }

    template <class Range, class IdFn>
    void unique_ids(const Range& items, IdFn id_of, const char* kind) {
        std::set<std::string> seen;
        for (const auto& item : items) {
            const std::string& id = id_of(item);
            if (!seen.insert(id).second) {
                add(ViolationCode::DuplicateEquipmentId, id, std::string("duplicate ") + kind + " id");
            }
        }
    }

    std::vector<Violation> take() { return std::move(out_); }

private:
    const NetworkModel& model_;
    std::vector<Violation> out_;
};

void check_topology(const NetworkModel& model, Checker& check) {
    const std::size_t n = model.buses.size();
    if (n == 0) return;

    struct Edge {
        std::size_t a, b;
        PhaseSet phases;
        std::string id;
    };
    std::vector<Edge> edges;
    auto add_edge = [&](const std::string& id, const std::string& from, const std::string& to, PhaseSet ph) {
        auto a = model.bus_position(from);
        auto b = model.bus_position(to);
        if (a && b) edges.push_back({*a, *b, ph, id});
    };
    for (const auto& l : model.lines) add_edge(l.id, l.from_bus, l.to_bus, l.phases);
    for (const auto& r : model.regulators) add_edge(r.id, r.from_bus, r.to_bus, r.phases);

    const std::size_t branch_count = model.lines.size() + model.regulators.size();
    if (branch_count != n - 1) {
        std::ostringstream os;
        os << branch_count << " branches for " << n << " buses (radial requires " << n - 1 << ")";
        check.add(ViolationCode::NonRadialTopology, model.name, os.str());
    }

    auto slack = model.bus_position(model.slack_bus);
    if (!slack) return;

    std::vector<std::vector<std::size_t>> adj(n);
    for (std::size_t e = 0; e < edges.size(); ++e) {
        adj[edges[e].a].push_back(e);
        adj[edges[e].b].push_back(e);
    }
    std::vector<bool> seen(n, false);
    std::vector<std::size_t> stack{*slack};
    seen[*slack] = true;
    while (!stack.empty()) {
        std::size_t u = stack.back();
        stack.pop_back();
        for (std::size_t e : adj[u]) {
            std::size_t v = edges[e].a == u ? edges[e].b : edges[e].a;
            if (seen[v]) continue;
            seen[v] = true;
            if (!model.buses[v].phases.subset_of(edges[e].phases)) {
                check.add(ViolationCode::PhaseNotAtBus, model.buses[v].id,
                          "bus phases " + model.buses[v].phases.str() + " not fed by branch '" + edges[e].id + "' (" +
                              edges[e].phases.str() + ")");
            }
            stack.push_back(v);
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!seen[i]) check.add(ViolationCode::Disconnected, model.buses[i].id, "bus not reachable from slack");
    }
}

}  // namespace

std::vector<Violation> validate(const NetworkModel& model) {
    Checker check(model);

    std::set<std::string> bus_ids;
    for (const auto& b : model.buses) {
        if (!bus_ids.insert(b.id).second) check.add(ViolationCode::DuplicateBusId, b.id, "duplicate bus id");
        if (b.phases.empty()) check.add(ViolationCode::EmptyPhases, b.id, "bus has no phases");
        if (!(b.base_kv > 0.0)) check.add(ViolationCode::NonPositiveBaseKv, b.id, "base_kv must be positive");
    }
    if (model.find_bus(model.slack_bus) == nullptr) {
        check.add(ViolationCode::MissingSlack, model.slack_bus, "slack bus does not resolve");
    }

    for (const auto& l : model.lines) {
        const Bus* from = check.bus(l.id, l.from_bus);
        const Bus* to = check.bus(l.id, l.to_bus);
        check.phases_at(l.id, l.phases, from);
        if (from != nullptr) check.phases_at(l.id, l.phases, to);
        for (Phase p : l.phases.phases()) {
            const auto i = static_cast<std::size_t>(p);
            if (!(l.z_ohm[i][i].real() > 0.0)) {
                check.add(ViolationCode::NonPositiveResistance, l.id,
                          std::string("self resistance of phase ") + phase_char(p) + " must be positive");
            }
            for (Phase q : l.phases.phases()) {
                const auto j = static_cast<std::size_t>(q);
                if (std::abs(l.z_ohm[i][j] - l.z_ohm[j][i]) > 1e-12 * (1.0 + std::abs(l.z_ohm[i][j]))) {
                    check.add(ViolationCode::ImpedanceNotSymmetric, l.id, "impedance matrix not symmetric");
                    goto next_line;
                }
            }
        }
    next_line:;
    }

    for (const auto& r : model.regulators) {
        const Bus* from = check.bus(r.id, r.from_bus);
        const Bus* to = check.bus(r.id, r.to_bus);
        check.phases_at(r.id, r.phases, from);
        if (from != nullptr) check.phases_at(r.id, r.phases, to);
        if (r.tap_ratio < r.min_ratio - 1e-12 || r.tap_ratio > r.max_ratio + 1e-12) {
            check.add(ViolationCode::TapOutOfRange, r.id, "tap ratio outside declared range");
        }
        if (!(r.tap_step > 0.0) ||
            std::abs(1.0 + r.tap_position() * r.tap_step - r.tap_ratio) > 1e-9) {
            check.add(ViolationCode::TapNotOnStep, r.id, "tap ratio is not 1 + k * tap_step");
        }
    }

    for (const auto& c : model.capacitors) {
        check.phases_at(c.id, c.phases, check.bus(c.id, c.bus_id));
        if (c.kvar_per_phase < 0.0) check.add(ViolationCode::NegativeKvar, c.id, "kvar_per_phase must be >= 0");
    }
    for (const auto& ld : model.loads) {
        check.phases_at(ld.id, ld.phases, check.bus(ld.id, ld.bus_id));
        if (ld.kw_peak < 0.0) check.add(ViolationCode::NegativeLoad, ld.id, "kw_peak must be >= 0");
        if (!(ld.pf > 0.0 && ld.pf <= 1.0)) check.add(ViolationCode::PowerFactorOutOfRange, ld.id, "pf must be in (0, 1]");
    }
    for (const auto& pv : model.pvs) {
        check.phases_at(pv.id, pv.phases, check.bus(pv.id, pv.bus_id));
        if (pv.s_rating_kva < pv.p_mpp_kw) {
            check.add(ViolationCode::RatingBelowPmpp, pv.id, "s_rating_kva below p_mpp_kw");
            continue;
        }
        const double expected = effective_q_max(pv.s_rating_kva, pv.p_mpp_kw);
        if (std::abs(pv.q_max_kvar - expected) > 1e-9 * std::max(1.0, expected)) {
            std::ostringstream os;
            os << "q_max_kvar " << pv.q_max_kvar << " but sqrt(S^2 - P^2) = " << expected;
            check.add(ViolationCode::QmaxInconsistent, pv.id, os.str());
        }
    }

    auto id_of = [](const auto& x) -> const std::string& { return x.id; };
    check.unique_ids(model.lines, id_of, "line");
    check.unique_ids(model.regulators, id_of, "regulator");
    check.unique_ids(model.capacitors, id_of, "capacitor");
    check.unique_ids(model.loads, id_of, "load");
    check.unique_ids(model.pvs, id_of, "pv");

    check_topology(model, check);
    return check.take();
}

std::vector<PhaseNode> node_index(const NetworkModel& model) {
    std::vector<const Bus*> sorted;
    sorted.reserve(model.buses.size());
    for (const auto& b : model.buses) sorted.push_back(&b);
    std::sort(sorted.begin(), sorted.end(), [](const Bus* a, const Bus* b) { return a->id < b->id; });

    std::vector<PhaseNode> nodes;
    for (const Bus* b : sorted) {
        for (Phase p : b->phases.phases()) {
            nodes.push_back({b->id, p, static_cast<int>(nodes.size())});
        }
    }
    return nodes;
}

double effective_q_max(double s_rating_kva, double p_kw) {
    if (s_rating_kva < p_kw) throw std::domain_error("apparent power rating below active power");
    return std::sqrt(s_rating_kva * s_rating_kva - p_kw * p_kw);
}

double effective_q_max(const PvSystem& pv) { return effective_q_max(pv.s_rating_kva, pv.p_mpp_kw); }

PvSystem make_pv(std::string id, std::string bus_id, PhaseSet phases, double p_mpp_kw, double s_rating_kva,
                 std::string profile_id) {
    PvSystem pv;
    pv.id = std::move(id);
    pv.bus_id = std::move(bus_id);
    pv.phases = phases;
    pv.p_mpp_kw = p_mpp_kw;
    pv.s_rating_kva = s_rating_kva;
    pv.q_max_kvar = effective_q_max(s_rating_kva, p_mpp_kw);
    pv.profile_id = std::move(profile_id);
    return pv;
}

namespace {
std::string describe(const std::vector<Violation>& v) {
    std::ostringstream os;
    os << "invalid network model (" << v.size() << " violation" << (v.size() == 1 ? "" : "s") << ")";
    for (const auto& x : v) os << "\n  " << to_string(x.code) << " [" << x.element << "]: " << x.message;
    return os.str();
}
}  // namespace

ModelError::ModelError(std::vector<Violation> violations)
    : std::runtime_error(describe(violations)), violations_(std::move(violations)) {}

void require_valid(const NetworkModel& model) {
    auto v = validate(model);
    if (!v.empty()) throw ModelError(std::move(v));
}

}  // namespace pvhc
