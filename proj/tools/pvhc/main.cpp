// pvhc: hosting-capacity and coordinated reactive dispatch runs from the command line.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "pvhc/coordinator.hpp"
#include "pvhc/errors.hpp"
#include "pvhc/feeder_io.hpp"
#include "pvhc/hosting_capacity.hpp"
#include "pvhc/reports.hpp"
#include "pvhc/scenario.hpp"
#include "pvhc/sensitivity.hpp"

namespace fs = std::filesystem;
using namespace pvhc;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitValidation = 2;
constexpr int kExitUnmitigated = 3;

struct Globals {
    std::optional<std::uint64_t> seed;
    std::string out_dir = ".";
    std::optional<int> max_iterations;
    std::string limits;
    bool json_errors = false;
};

// Thrown by commands to exit with a message and a code.
struct Exit {
    int code;
    std::string kind;
    std::vector<std::string> messages;
};

void write_file(const Globals& g, const std::string& name, const std::string& content) {
    const fs::path dir(g.out_dir);
    fs::create_directories(dir);
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
    out << content;
}

VoltageLimits parse_limits(const std::string& text) {
    std::vector<double> v;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        try {
            std::size_t used = 0;
            v.push_back(std::stod(cell, &used));
            if (used != cell.size()) throw std::invalid_argument(cell);
        } catch (const std::exception&) {
            throw Exit{kExitValidation, "validation", {"--limits: '" + cell + "' is not a number"}};
        }
    }
    if (v.size() != 4) {
        throw Exit{kExitValidation, "validation", {"--limits expects v_th_min,v_th_max,v_pu_min,v_pu_max"}};
    }
    return {v[0], v[1], v[2], v[3]};
}

Scenario scenario_from(const Globals& g, const std::string& path) {
    Scenario s = parse_scenario(read_json_file(path), fs::path(path).parent_path(), path);
    if (g.seed) s.seed = *g.seed;
    if (g.max_iterations) s.max_iterations = *g.max_iterations;
    if (!g.limits.empty()) s.limits = parse_limits(g.limits);
    validate_scenario(s);
    return s;
}

DispatchOptions dispatch_options(const Scenario& s) { return hc_options(s).dispatch; }

void print_solution_summary(const char* label, const VoltageSolution& sol, VoltageBand band) {
    const ViolationCount vc = count_violations(sol, band);
    std::printf("%s: %s in %d iterations, max %.6f p.u., min %.6f p.u., %d over, %d under\n", label,
                sol.converged ? "converged" : "diverged", sol.iterations, sol.max_v(), sol.min_v(), vc.over, vc.under);
}

int cmd_validate(const Globals&, const std::string& feeder) {
    const NetworkModel model = load_feeder(feeder);
    const auto violations = validate(model);
    if (!violations.empty()) {
        Exit e{kExitValidation, "validation", {}};
        for (const auto& v : violations) e.messages.push_back(std::string(to_string(v.code)) + " " + v.element + ": " + v.message);
        throw e;
    }
    std::printf("ok: %s, %zu buses, %zu phase nodes, %zu PVs\n", model.name.c_str(), model.buses.size(),
                node_index(model).size(), model.pvs.size());
    return kExitOk;
}

int cmd_solve(const Globals& g, const std::string& path) {
    const Scenario s = scenario_from(g, path);
    const Instance inst = resolve_instance(s);
    const PowerFlow flow(inst.model);
    const VoltageSolution sol = flow.solve(inst.injection, s.solver);
    write_file(g, "voltages.csv", voltages_csv(flow, sol));
    print_solution_summary("power flow", sol, s.limits.trigger());
    return sol.converged ? kExitOk : kExitUnmitigated;
}

int cmd_baseline(const Globals& g, const std::string& feeder, const std::string& profiles_path) {
    const NetworkModel model = load_feeder(feeder);
    require_valid(model);
    const auto profiles = load_profiles(profiles_path);
    VoltageLimits limits;
    if (!g.limits.empty()) limits = parse_limits(g.limits);
    const BaselineSettings b = tune_baseline(model, profiles, derive_seed(g.seed.value_or(0), 1), limits.trigger());
    write_file(g, "baseline.json", baseline_json(model, b).dump(2) + "\n");
    std::printf("baseline: %d residual violations over 24 hours\n", b.violations);
    return kExitOk;
}

int cmd_sensitivity(const Globals& g, const std::string& path) {
    const Scenario s = scenario_from(g, path);
    const Instance inst = resolve_instance(s);
    const PowerFlow flow(inst.model);
    SensitivityOptions opts;
    const SensitivityMatrix sm = build_sensitivity(flow, inst.injection, s.delta_q, opts);
    write_file(g, "sensitivity.csv", sensitivity_csv(flow, sm));
    std::printf("sensitivity: %zu nodes x %zu PVs\n", sm.node_count(), sm.pv_count());
    return kExitOk;
}

int cmd_coordinate(const Globals& g, const std::string& path) {
    const Scenario s = scenario_from(g, path);
    const Instance inst = resolve_instance(s);
    const PowerFlow flow(inst.model);
    const DispatchResult r = dispatch(flow, inst.injection, s.limits, dispatch_options(s));
    write_file(g, "trace.csv", trace_csv(r.final_state));
    write_file(g, "dispatch.csv", dispatch_csv(inst.model, r, s.use_actual_p));
    write_file(g, "voltages.csv", voltages_csv(flow, r.final_solution));
    std::printf("coordinate: %s after %d iterations", to_string(r.status), r.final_state.iteration);
    if (!r.message.empty()) std::printf(" (%s)", r.message.c_str());
    std::printf("\n");
    return r.status == DispatchStatus::Mitigated ? kExitOk : kExitUnmitigated;
}

int cmd_zoned(const Globals& g, const std::string& path) {
    const Scenario s = scenario_from(g, path);
    const Instance inst = resolve_instance(s);
    const PowerFlow flow(inst.model);
    const DispatchOptions opts = dispatch_options(s);
    const ZonedResult z = dispatch_zoned(flow, inst.injection, s.limits, opts);
    const DispatchResult full = dispatch(flow, inst.injection, s.limits, opts);
    for (Phase p : kAllPhases) {
        const auto& r = z.phases[static_cast<std::size_t>(p)];
        write_file(g, std::string("zoned_trace_") + phase_char(p) + ".csv", trace_csv(r.final_state));
        std::printf("phase %c: %s after %d iterations\n", phase_char(p), to_string(r.status), r.final_state.iteration);
    }
    write_file(g, "zoned_divergence.csv", zoned_divergence_csv(inst.model, z, full));
    write_file(g, "voltages.csv", voltages_csv(flow, z.validation));
    print_solution_summary("validation", z.validation, s.limits.trigger());
    std::printf("full dispatch: %s\n", to_string(full.status));
    return z.validation.converged && z.residual.total() == 0 ? kExitOk : kExitUnmitigated;
}

int cmd_hc_sweep(const Globals& g, const std::string& path, const std::vector<std::string>& mode_names) {
    const Scenario s = scenario_from(g, path);
    std::vector<ControlMode> modes;
    try {
        for (const auto& m : mode_names) modes.push_back(control_mode_from_string(m));
    } catch (const std::invalid_argument& e) {
        throw Exit{kExitValidation, "validation", {e.what()}};
    }
    if (modes.empty()) modes.push_back(s.mode);

    const NetworkModel model = load_feeder(s.feeder_path());
    require_valid(model);
    const std::vector<MonthSetup> months = month_setups(s, model);
    const PlacementSet placement = placement_for(s, model);
    const HcOptions opts = hc_options(s);

    std::vector<SweepRow> rows;
    nlohmann::json reports = nlohmann::json::array();
    for (ControlMode mode : modes) {
        HcSweepResult r = hc_sweep(model, placement, mode, months, s.grid_hours, opts);
        rows.insert(rows.end(), r.rows.begin(), r.rows.end());
        reports.push_back(hc_report_json(r.report));
        std::printf("%s: +%g kW, hc %.1f kW, %.2f%% of peak\n", to_string(mode), r.report.added_kw, r.report.hc_kw,
                    r.report.hc_percent);
        if (!r.report.exhausted) {
            const int failing_units = static_cast<int>(r.report.first_violation_kw / placement.unit_kw + 0.5);
            const auto table = worst_case_table(with_units(model, placement, failing_units), mode, months,
                                                s.grid_hours, opts);
            write_file(g, std::string("worst_case_") + to_string(mode) + ".csv", worst_case_csv(table));
        }
    }
    write_file(g, "hc_sweep.csv", hc_sweep_csv(rows));
    write_file(g, "hc_report.json", nlohmann::json{{"reports", reports}}.dump(2) + "\n");
    return kExitOk;
}

int cmd_profiles(const Globals& g, int month, const std::string& resolution) {
    Resolution res = Resolution::Hourly;
    if (resolution == "minutely") {
        res = Resolution::Minutely;
    } else if (resolution != "hourly") {
        throw Exit{kExitValidation, "validation", {"--resolution must be hourly or minutely"}};
    }
    if (month < 1 || month > 12) throw Exit{kExitValidation, "validation", {"--month must be in 1..12"}};
    const auto profiles = generate_profiles(month_seed(g.seed.value_or(0), month), 5, 6, res);
    write_file(g, "profiles.json", profiles_to_json(profiles).dump(2) + "\n");
    std::printf("profiles: %zu written\n", profiles.size());
    return kExitOk;
}

void report_error(const Globals& g, const Exit& e) {
    for (const auto& m : e.messages) std::cerr << "error: " << m << "\n";
    if (g.json_errors) {
        std::cerr << nlohmann::json{{"error", e.kind}, {"exit_code", e.code}, {"messages", e.messages}}.dump() << "\n";
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"PV hosting capacity and coordinated inverter reactive power dispatch"};
    app.require_subcommand(1);
    Globals g;
    std::uint64_t seed = 0;
    int max_iterations = 0;
    app.add_option("--seed", seed, "Override the scenario seed");
    app.add_option("--out-dir", g.out_dir, "Directory for output files")->capture_default_str();
    app.add_option("--max-iterations", max_iterations, "Override the dispatch iteration limit")
        ->check(CLI::NonNegativeNumber);
    app.add_option("--limits", g.limits, "v_th_min,v_th_max,v_pu_min,v_pu_max");
    app.add_flag("--json-errors", g.json_errors, "Also print errors as JSON on stderr");

    std::string feeder, scenario, profiles_path, resolution = "hourly";
    int month = 8;
    std::vector<std::string> modes;

    auto* validate_cmd = app.add_subcommand("validate", "Check a feeder file");
    validate_cmd->add_option("feeder", feeder)->required();
    auto* solve_cmd = app.add_subcommand("solve", "One power flow; writes voltages.csv");
    solve_cmd->add_option("scenario", scenario)->required();
    auto* baseline_cmd = app.add_subcommand("baseline", "Tune regulator taps and capacitors; writes baseline.json");
    baseline_cmd->add_option("feeder", feeder)->required();
    baseline_cmd->add_option("month-profiles", profiles_path)->required();
    auto* sens_cmd = app.add_subcommand("sensitivity", "Voltage/reactive power sensitivity; writes sensitivity.csv");
    sens_cmd->add_option("scenario", scenario)->required();
    auto* coord_cmd = app.add_subcommand("coordinate", "Coordinated dispatch; writes trace.csv and dispatch.csv");
    coord_cmd->add_option("scenario", scenario)->required();
    auto* zoned_cmd = app.add_subcommand("zoned", "Per-phase dispatch with a validation flow");
    zoned_cmd->add_option("scenario", scenario)->required();
    auto* hc_cmd = app.add_subcommand("hc-sweep", "Hosting capacity sweep; writes hc_sweep.csv and hc_report.json");
    hc_cmd->add_option("scenario", scenario)->required();
    hc_cmd->add_option("--mode", modes, "UPF, VV, Coordinated or Zoned (repeatable)");
    auto* prof_cmd = app.add_subcommand("profiles", "Generate one month's profiles; writes profiles.json");
    prof_cmd->add_option("--month", month)->capture_default_str();
    prof_cmd->add_option("--resolution", resolution)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }
    if (app.count("--seed") > 0) g.seed = seed;
    if (app.count("--max-iterations") > 0) g.max_iterations = max_iterations;

    try {
        if (*validate_cmd) return cmd_validate(g, feeder);
        if (*solve_cmd) return cmd_solve(g, scenario);
        if (*baseline_cmd) return cmd_baseline(g, feeder, profiles_path);
        if (*sens_cmd) return cmd_sensitivity(g, scenario);
        if (*coord_cmd) return cmd_coordinate(g, scenario);
        if (*zoned_cmd) return cmd_zoned(g, scenario);
        if (*hc_cmd) return cmd_hc_sweep(g, scenario, modes);
        if (*prof_cmd) return cmd_profiles(g, month, resolution);
    } catch (const Exit& e) {
        report_error(g, e);
        return e.code;
    } catch (const ValidationError& e) {
        report_error(g, {kExitValidation, "validation", e.failures()});
        return kExitValidation;
    } catch (const ParseError& e) {
        report_error(g, {kExitValidation, "parse", {e.what()}});
        return kExitValidation;
    } catch (const ModelError& e) {
        Exit x{kExitValidation, "validation", {}};
        for (const auto& v : e.violations()) x.messages.push_back(v.element + ": " + v.message);
        report_error(g, x);
        return kExitValidation;
    } catch (const std::exception& e) {
        report_error(g, {kExitFailure, "runtime", {e.what()}});
        return kExitFailure;
    }
    return kExitFailure;
}
