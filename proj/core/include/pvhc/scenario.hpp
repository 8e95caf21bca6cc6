#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pvhc/hosting_capacity.hpp"

namespace pvhc {

struct ProfileSource {
    std::string file;  // empty: generated from the scenario seed per month
    Resolution resolution = Resolution::Hourly;
    int load_count = 5;
    int pv_count = 6;
};

struct PlacementParams {
    PlacementKind kind = PlacementKind::All;
    std::optional<std::uint64_t> seed;  // defaults to the scenario seed
    int units = 0;                      // units added for single-instant commands
    double unit_kw = 10.0;
    double unit_pf_sizing = 0.9;
};

/// Fixed regulator taps and capacitor states by id; absent means tune per month.
struct FixedBaseline {
    std::map<std::string, double> taps;
    std::map<std::string, bool> capacitors;
};

struct Scenario {
    std::string feeder;  // relative paths resolve against base_dir
    std::filesystem::path base_dir;
    std::uint64_t seed = 0;
    int month = 8;
    int hour = 12;
    std::optional<int> minute;  // minute of day; overrides hour when set
    ControlMode mode = ControlMode::Coordinated;
    ProfileSource profiles;
    PlacementParams placement;
    VoltageLimits limits;
    VoltVarCurve volt_var_curve;
    SolverOptions solver;
    int max_iterations = 3;
    double delta_q = 1.0;
    Objective objective = Objective::L1;
    bool use_actual_p = false;
    std::vector<int> grid_months{5, 6, 7, 8, 9, 10};
    std::vector<int> grid_hours{7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17};
    int max_units = 200;
    std::optional<double> peak_load_kw;
    std::optional<FixedBaseline> baseline;

    std::filesystem::path feeder_path() const;
    int minute_of_day() const { return minute ? *minute : hour * 60; }
};

/// Structural problems throw ParseError; semantic ones ValidationError.
Scenario parse_scenario(const nlohmann::json& doc, const std::filesystem::path& base_dir,
                        const std::string& context = "scenario");
/// Parses, then validates against the referenced feeder and profiles.
Scenario load_scenario(const std::filesystem::path& path);

/// Every field written, keys sorted; dump(2) plus a newline is the canonical file form.
nlohmann::json scenario_to_json(const Scenario& s);
std::string canonical_text(const Scenario& s);

/// Collects every semantic failure: ranges, limits, curve, feeder validity,
/// baseline ids, and profile references for each grid month.
void validate_scenario(const Scenario& s);

std::vector<Profile> month_profiles(const Scenario& s, int month);
std::uint64_t assignment_seed(const Scenario& s);
PlacementSet placement_for(const Scenario& s, const NetworkModel& model);
HcOptions hc_options(const Scenario& s);

/// Baseline for one month: the fixed settings, or tune_baseline on the model without added PV.
BaselineSettings baseline_for(const Scenario& s, const NetworkModel& model, const std::vector<Profile>& profiles);
std::vector<MonthSetup> month_setups(const Scenario& s, const NetworkModel& model);

/// Everything needed for a single-instant command.
struct Instance {
    NetworkModel model;  // baseline applied, placement units added
    std::vector<Profile> profiles;
    ProfileAssignment assignment;
    BaselineSettings baseline;
    PlacementSet placement;
    InjectionState injection;
};

Instance resolve_instance(const Scenario& s);

}  // namespace pvhc
