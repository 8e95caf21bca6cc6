#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace pvhc {

using Complex = std::complex<double>;

enum class Phase : std::uint8_t { A = 0, B = 1, C = 2 };

inline constexpr std::array<Phase, 3> kAllPhases{Phase::A, Phase::B, Phase::C};

char phase_char(Phase p);
Phase phase_from_char(char c);

/// Bit set over {A, B, C}.
class PhaseSet {
public:
    constexpr PhaseSet() = default;
    constexpr explicit PhaseSet(std::uint8_t bits) : bits_(bits & 0x7u) {}

    static PhaseSet parse(const std::string& text);
    static constexpr PhaseSet abc() { return PhaseSet(0x7u); }
    static constexpr PhaseSet single(Phase p) { return PhaseSet(static_cast<std::uint8_t>(1u << static_cast<int>(p))); }

    constexpr bool contains(Phase p) const { return (bits_ >> static_cast<int>(p)) & 1u; }
    constexpr bool empty() const { return bits_ == 0; }
    constexpr bool subset_of(PhaseSet other) const { return (bits_ & ~other.bits_) == 0; }
    constexpr std::uint8_t bits() const { return bits_; }
    int count() const;
    std::vector<Phase> phases() const;
    std::string str() const;

    friend constexpr bool operator==(PhaseSet, PhaseSet) = default;

private:
    std::uint8_t bits_ = 0;
};

enum class Zone : std::uint8_t { Near, Far };

using PhaseMatrix = std::array<std::array<Complex, 3>, 3>;

struct Bus {
    std::string id;
    PhaseSet phases;
    double base_kv = 0.0;  // line-to-neutral
    Zone zone = Zone::Near;
};

struct LineSegment {
    std::string id;
    std::string from_bus;
    std::string to_bus;
    PhaseSet phases;
    // Ohms, indexed by absolute phase; rows/cols of absent phases are zero.
    PhaseMatrix z_ohm{};
};

struct Regulator {
    std::string id;
    std::string from_bus;
    std::string to_bus;
    PhaseSet phases;  // one phase, or a gang over several
    double tap_ratio = 1.0;
    double tap_step = 0.00625;
    double min_ratio = 0.9;
    double max_ratio = 1.1;

    /// Integer step position k with tap_ratio = 1 + k * tap_step.
    int tap_position() const;
};

struct CapacitorBank {
    std::string id;
    std::string bus_id;
    PhaseSet phases;
    double kvar_per_phase = 0.0;
    bool on = true;
};

struct LoadPoint {
    std::string id;
    std::string bus_id;
    PhaseSet phases;
    double kw_peak = 0.0;  // total over its phases
    double pf = 1.0;
    std::string profile_id;
};

struct PvSystem {
    std::string id;
    std::string bus_id;
    PhaseSet phases;
    double p_mpp_kw = 0.0;
    double s_rating_kva = 0.0;
    double q_max_kvar = 0.0;
    std::string profile_id;
};

struct PhaseNode {
    std::string bus_id;
    Phase phase = Phase::A;
    int index = 0;

    friend bool operator==(const PhaseNode&, const PhaseNode&) = default;
};

/// Radial feeder description. Treated as an immutable value once built; the
/// vector position of a PV is its column index in sensitivity matrices.
struct NetworkModel {
    std::string name;
    std::vector<Bus> buses;
    std::vector<LineSegment> lines;
    std::vector<Regulator> regulators;
    std::vector<CapacitorBank> capacitors;
    std::vector<LoadPoint> loads;
    std::vector<PvSystem> pvs;
    std::string slack_bus;
    double slack_voltage_pu = 1.0;

    const Bus* find_bus(const std::string& id) const;
    std::optional<std::size_t> bus_position(const std::string& id) const;
};

enum class ViolationCode {
    DuplicateBusId,
    EmptyPhases,
    NonPositiveBaseKv,
    UnknownBus,
    PhaseNotAtBus,
    ImpedanceNotSymmetric,
    NonPositiveResistance,
    TapOutOfRange,
    TapNotOnStep,
    NegativeKvar,
    NegativeLoad,
    PowerFactorOutOfRange,
    RatingBelowPmpp,
    QmaxInconsistent,
    MissingSlack,
    NonRadialTopology,
    Disconnected,
    DuplicateEquipmentId,
};

const char* to_string(ViolationCode code);

struct Violation {
    ViolationCode code;
    std::string element;
    std::string message;
};

/// Every invariant breach found in the model. Empty means usable by the solver.
std::vector<Violation> validate(const NetworkModel& model);

/// Phase nodes ordered by bus id, then A < B < C.
std::vector<PhaseNode> node_index(const NetworkModel& model);

/// sqrt(S^2 - P^2). Throws std::domain_error when S < P.
double effective_q_max(double s_rating_kva, double p_kw);
double effective_q_max(const PvSystem& pv);

/// Builds a PV whose Q headroom follows from its rating.
PvSystem make_pv(std::string id, std::string bus_id, PhaseSet phases, double p_mpp_kw,
                 double s_rating_kva, std::string profile_id = {});

/// Thrown by operations that require a valid model.
class ModelError : public std::runtime_error {
public:
    explicit ModelError(std::vector<Violation> violations);
    const std::vector<Violation>& violations() const { return violations_; }

private:
    std::vector<Violation> violations_;
};

void require_valid(const NetworkModel& model);

}  // namespace pvhc
