#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pvhc/coordinator.hpp"
#include "pvhc/inverter_modes.hpp"
#include "pvhc/profiles.hpp"

namespace pvhc {

enum class ControlMode { Upf, VoltVar, Coordinated, Zoned };

const char* to_string(ControlMode m);
/// Accepts "UPF", "VV", "Coordinated", "Zoned".
ControlMode control_mode_from_string(const std::string& s);

enum class PlacementKind { All, Near, Far };

const char* to_string(PlacementKind k);
PlacementKind placement_kind_from_string(const std::string& s);

struct PlacementSite {
    std::string bus_id;
    Phase phase = Phase::A;

    friend bool operator==(const PlacementSite&, const PlacementSite&) = default;
};

/// Candidate sites are the buses of single-phase loads, one per (bus, phase),
/// filtered by zone and put in seeded random order.
struct PlacementSet {
    PlacementKind kind = PlacementKind::All;
    std::uint64_t seed = 0;
    std::vector<PlacementSite> candidates;
    double unit_kw = 10.0;
    double unit_pf_sizing = 0.9;  // kVA rating = unit_kw / unit_pf_sizing
};

PlacementSet make_placement(const NetworkModel& model, PlacementKind kind, std::uint64_t seed,
                            double unit_kw = 10.0, double unit_pf_sizing = 0.9);

/// Appends `units` PV units "hc_<k>" in candidate order, wrapping around.
NetworkModel with_units(const NetworkModel& model, const PlacementSet& placement, int units);

double existing_pv_kw(const NetworkModel& model);
/// Sum of load kw_peak.
double peak_load_kw(const NetworkModel& model);
double hc_percent(double hc_kw, double peak_load_kw);

struct BaselineSettings {
    std::vector<double> taps;  // per regulator
    std::vector<bool> caps;    // per capacitor
    int violations = 0;        // residual over 24 hourly flows
    double excursion = 0.0;    // sum of p.u. distances outside the band

    friend bool operator==(const BaselineSettings&, const BaselineSettings&) = default;
};

NetworkModel apply_baseline(const NetworkModel& model, const BaselineSettings& settings);

/// Evaluates one setting over the 24 hourly flows without added PV.
BaselineSettings score_baseline(const NetworkModel& model, const std::vector<Profile>& profiles,
                                std::uint64_t assignment_seed, std::vector<double> taps, std::vector<bool> caps,
                                VoltageBand band, const SolverOptions& solver = {});

/// Steepest descent over single tap steps and capacitor toggles, starting at
/// unit taps with capacitors off. Moves only on strict lexicographic improvement
/// of (violations, excursion); earlier neighbours win ties, and tap-down
/// precedes tap-up.
BaselineSettings tune_baseline(const NetworkModel& model, const std::vector<Profile>& profiles,
                               std::uint64_t assignment_seed, VoltageBand band, const SolverOptions& solver = {});

struct MonthSetup {
    int month = 8;
    std::vector<Profile> profiles;
    BaselineSettings baseline;
};

struct HcOptions {
    VoltageLimits limits;
    VoltVarCurve curve;
    EquilibriumOptions equilibrium;
    DispatchOptions dispatch;
    std::uint64_t assignment_seed = 0;
    int max_units = 200;
    std::optional<double> peak_load_kw;  // defaults to peak_load_kw(model)
};

struct PointResult {
    int month = 0;
    int hour = 0;
    int violations = 0;       // at the trigger band after control
    double max_v = 0.0;
    double total_q = 0.0;     // sum |Q| over PVs, kVAr
    bool acceptable = false;  // no violation remains
    std::string status;
    VoltageSolution solution;
    InjectionState injection;
};

/// Runs one instant under a control mode. Starts from Q = 0 on every PV.
PointResult evaluate_point(const PowerFlow& flow, const InjectionState& inj, ControlMode mode,
                           const HcOptions& opts);

struct Limiting {
    int month = 0;
    int hour = 0;
    std::string node;  // "<bus>.<phase>"
    double v_pu = 0.0;
    std::string cause;
};

struct HcReport {
    ControlMode mode = ControlMode::Upf;
    PlacementKind placement = PlacementKind::All;
    int units_added = 0;             // last level without violation
    double added_kw = 0.0;
    double first_violation_kw = 0.0; // level that failed; equals added_kw when exhausted
    double existing_pv_kw = 0.0;
    double hc_kw = 0.0;
    double peak_load_kw = 0.0;
    double hc_percent = 0.0;
    bool exhausted = false;          // max_units reached without violation
    Limiting limiting;
};

struct SweepRow {
    double level_kw = 0.0;
    ControlMode mode = ControlMode::Upf;
    int month = 0;
    int hour = 0;
    int violations = 0;
    double max_v = 0.0;
    double total_q = 0.0;
};

struct HcSweepResult {
    HcReport report;
    std::vector<SweepRow> rows;
};

/// Adds one unit at a time and evaluates every (month, hour) until some point
/// stays in violation. Each month uses its own frozen baseline settings.
HcSweepResult hc_sweep(const NetworkModel& model, const PlacementSet& placement, ControlMode mode,
                       const std::vector<MonthSetup>& months, const std::vector<int>& hours, const HcOptions& opts);

struct WorstCaseRow {
    int month = 0;
    int hour = 0;
    std::array<int, 3> per_phase{0, 0, 0};
    int secondary = 0;  // violating nodes on buses below 1 kV
    int pv_nodes = 0;   // violating nodes hosting a PV
    int total = 0;
    double max_v = 0.0;
};

/// Per month, the hour with the most violations (earliest on ties). Months
/// without any violation are omitted.
std::vector<WorstCaseRow> worst_case_table(const NetworkModel& model, ControlMode mode,
                                           const std::vector<MonthSetup>& months, const std::vector<int>& hours,
                                           const HcOptions& opts);

}  // namespace pvhc
