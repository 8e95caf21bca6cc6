#include "pvhc/scenario.hpp"

#include <algorithm>
#include <set>

#include "json_access.hpp"
#include "pvhc/feeder_io.hpp"

namespace pvhc {

using nlohmann::json;

namespace {

void expect_keys(const json& node, const std::string& path, std::initializer_list<const char*> allowed) {
    for (const auto& [key, value] : node.items()) {
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
            throw ParseError(path + "." + key, "unknown key");
        }
    }
}

std::uint64_t unsigned_field(const JsonReader& r, const char* key) {
    const json& v = r.raw(key);
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<long long>() >= 0) return static_cast<std::uint64_t>(v.get<long long>());
    throw ParseError(r.path(key), "expected a non-negative integer");
}

int int_field(const JsonReader& r, const char* key, int fallback) {
    return static_cast<int>(r.integer_or(key, fallback));
}

const char* objective_name(Objective o) { return o == Objective::L1 ? "L1" : "literal"; }

}  // namespace

std::filesystem::path Scenario::feeder_path() const {
    const std::filesystem::path p(feeder);
    return p.is_absolute() ? p : base_dir / p;
}

Scenario parse_scenario(const json& doc, const std::filesystem::path& base_dir, const std::string& context) {
    JsonReader r(doc, context);
    expect_keys(doc, context,
                {"feeder", "seed", "month", "hour", "minute", "mode", "profiles", "placement", "limits",
                 "volt_var_curve", "solver", "coordinator", "grid", "hc", "baseline"});
    Scenario s;
    s.base_dir = base_dir;
    s.feeder = r.string("feeder");
    s.seed = unsigned_field(r, "seed");
    s.month = int_field(r, "month", s.month);
    s.hour = int_field(r, "hour", s.hour);
    if (r.has("minute")) s.minute = static_cast<int>(r.integer("minute"));
    if (r.has("mode")) {
        try {
            s.mode = control_mode_from_string(r.string("mode"));
        } catch (const std::invalid_argument& e) {
            throw ParseError(r.path("mode"), e.what());
        }
    }

    if (r.has("profiles")) {
        const JsonReader p = r.object("profiles");
        expect_keys(r.raw("profiles"), p.path(), {"file", "resolution", "load_count", "pv_count"});
        s.profiles.file = p.string_or("file", "");
        const std::string res = p.string_or("resolution", "hourly");
        if (res == "hourly") {
            s.profiles.resolution = Resolution::Hourly;
        } else if (res == "minutely") {
            s.profiles.resolution = Resolution::Minutely;
        } else {
            throw ParseError(p.path("resolution"), "expected \"hourly\" or \"minutely\"");
        }
        s.profiles.load_count = int_field(p, "load_count", s.profiles.load_count);
        s.profiles.pv_count = int_field(p, "pv_count", s.profiles.pv_count);
    }

    if (r.has("placement")) {
        const JsonReader p = r.object("placement");
        expect_keys(r.raw("placement"), p.path(), {"kind", "seed", "units", "unit_kw", "unit_pf_sizing"});
        if (p.has("kind")) {
            try {
                s.placement.kind = placement_kind_from_string(p.string("kind"));
            } catch (const std::invalid_argument& e) {
                throw ParseError(p.path("kind"), e.what());
            }
        }
        if (p.has("seed")) s.placement.seed = unsigned_field(p, "seed");
        s.placement.units = int_field(p, "units", s.placement.units);
        s.placement.unit_kw = p.number_or("unit_kw", s.placement.unit_kw);
        s.placement.unit_pf_sizing = p.number_or("unit_pf_sizing", s.placement.unit_pf_sizing);
    }

    if (r.has("limits")) {
        const JsonReader l = r.object("limits");
        expect_keys(r.raw("limits"), l.path(), {"v_th_min", "v_th_max", "v_pu_min", "v_pu_max"});
        s.limits.v_th_min = l.number_or("v_th_min", s.limits.v_th_min);
        s.limits.v_th_max = l.number_or("v_th_max", s.limits.v_th_max);
        s.limits.v_pu_min = l.number_or("v_pu_min", s.limits.v_pu_min);
        s.limits.v_pu_max = l.number_or("v_pu_max", s.limits.v_pu_max);
    }

    if (r.has("volt_var_curve")) {
        const JsonReader c = r.object("volt_var_curve");
        expect_keys(r.raw("volt_var_curve"), c.path(), {"v1", "v2", "v3", "v4", "q1", "q4"});
        VoltVarCurve& k = s.volt_var_curve;
        k.v1 = c.number_or("v1", k.v1);
        k.v2 = c.number_or("v2", k.v2);
        k.v3 = c.number_or("v3", k.v3);
        k.v4 = c.number_or("v4", k.v4);
        k.q1 = c.number_or("q1", k.q1);
        k.q4 = c.number_or("q4", k.q4);
    }

    if (r.has("solver")) {
        const JsonReader c = r.object("solver");
        expect_keys(r.raw("solver"), c.path(), {"tolerance", "max_iter"});
        s.solver.tolerance = c.number_or("tolerance", s.solver.tolerance);
        s.solver.max_iter = int_field(c, "max_iter", s.solver.max_iter);
    }

    if (r.has("coordinator")) {
        const JsonReader c = r.object("coordinator");
        expect_keys(r.raw("coordinator"), c.path(), {"max_iterations", "delta_q", "objective", "use_actual_p"});
        s.max_iterations = int_field(c, "max_iterations", s.max_iterations);
        s.delta_q = c.number_or("delta_q", s.delta_q);
        const std::string obj = c.string_or("objective", objective_name(s.objective));
        if (obj == "L1") {
            s.objective = Objective::L1;
        } else if (obj == "literal") {
            s.objective = Objective::Literal;
        } else {
            throw ParseError(c.path("objective"), "expected \"L1\" or \"literal\"");
        }
        s.use_actual_p = c.boolean_or("use_actual_p", s.use_actual_p);
    }

    if (r.has("grid")) {
        const JsonReader g = r.object("grid");
        expect_keys(r.raw("grid"), g.path(), {"months", "hours"});
        if (g.has("months")) s.grid_months = g.integers("months");
        if (g.has("hours")) s.grid_hours = g.integers("hours");
    }

    if (r.has("hc")) {
        const JsonReader h = r.object("hc");
        expect_keys(r.raw("hc"), h.path(), {"max_units", "peak_load_kw"});
        s.max_units = int_field(h, "max_units", s.max_units);
        if (h.has("peak_load_kw")) s.peak_load_kw = h.number("peak_load_kw");
    }

    if (r.has("baseline")) {
        const json& b = r.raw("baseline");
        if (b.is_string()) {
            if (b.get<std::string>() != "tune") throw ParseError(r.path("baseline"), "expected \"tune\" or an object");
        } else {
            const JsonReader br = r.object("baseline");
            expect_keys(b, br.path(), {"taps", "capacitors"});
            FixedBaseline fixed;
            if (br.has("taps")) {
                const json& t = br.raw("taps");
                if (!t.is_object()) throw ParseError(br.path("taps"), "expected an object of regulator id to ratio");
                for (const auto& [id, v] : t.items()) {
                    if (!v.is_number()) throw ParseError(br.path("taps") + "." + id, "expected a number");
                    fixed.taps[id] = v.get<double>();
                }
            }
            if (br.has("capacitors")) {
                const json& c = br.raw("capacitors");
                if (!c.is_object()) throw ParseError(br.path("capacitors"), "expected an object of capacitor id to bool");
                for (const auto& [id, v] : c.items()) {
                    if (!v.is_boolean()) throw ParseError(br.path("capacitors") + "." + id, "expected true or false");
                    fixed.capacitors[id] = v.get<bool>();
                }
            }
            s.baseline = std::move(fixed);
        }
    }
    return s;
}

json scenario_to_json(const Scenario& s) {
    json j;
    j["feeder"] = s.feeder;
    j["seed"] = s.seed;
    j["month"] = s.month;
    j["hour"] = s.hour;
    if (s.minute) j["minute"] = *s.minute;
    j["mode"] = to_string(s.mode);
    j["profiles"] = {{"file", s.profiles.file},
                     {"resolution", s.profiles.resolution == Resolution::Hourly ? "hourly" : "minutely"},
                     {"load_count", s.profiles.load_count},
                     {"pv_count", s.profiles.pv_count}};
    json placement = {{"kind", to_string(s.placement.kind)},
                      {"units", s.placement.units},
                      {"unit_kw", s.placement.unit_kw},
                      {"unit_pf_sizing", s.placement.unit_pf_sizing}};
    if (s.placement.seed) placement["seed"] = *s.placement.seed;
    j["placement"] = placement;
    j["limits"] = {{"v_th_min", s.limits.v_th_min},
                   {"v_th_max", s.limits.v_th_max},
                   {"v_pu_min", s.limits.v_pu_min},
                   {"v_pu_max", s.limits.v_pu_max}};
    const VoltVarCurve& c = s.volt_var_curve;
    j["volt_var_curve"] = {{"v1", c.v1}, {"v2", c.v2}, {"v3", c.v3}, {"v4", c.v4}, {"q1", c.q1}, {"q4", c.q4}};
    j["solver"] = {{"tolerance", s.solver.tolerance}, {"max_iter", s.solver.max_iter}};
    j["coordinator"] = {{"max_iterations", s.max_iterations},
                        {"delta_q", s.delta_q},
                        {"objective", objective_name(s.objective)},
                        {"use_actual_p", s.use_actual_p}};
    j["grid"] = {{"months", s.grid_months}, {"hours", s.grid_hours}};
    json hc = {{"max_units", s.max_units}};
    if (s.peak_load_kw) hc["peak_load_kw"] = *s.peak_load_kw;
    j["hc"] = hc;
    if (s.baseline) {
        j["baseline"] = {{"taps", s.baseline->taps}, {"capacitors", s.baseline->capacitors}};
    } else {
        j["baseline"] = "tune";
    }
    return j;
}

std::string canonical_text(const Scenario& s) { return scenario_to_json(s).dump(2) + "\n"; }

std::vector<Profile> month_profiles(const Scenario& s, int month) {
    if (!s.profiles.file.empty()) {
        const std::filesystem::path p(s.profiles.file);
        return load_profiles(p.is_absolute() ? p : s.base_dir / p);
    }
    return generate_profiles(month_seed(s.seed, month), s.profiles.load_count, s.profiles.pv_count,
                             s.profiles.resolution);
}

std::uint64_t assignment_seed(const Scenario& s) { return derive_seed(s.seed, 1); }

PlacementSet placement_for(const Scenario& s, const NetworkModel& model) {
    return make_placement(model, s.placement.kind, s.placement.seed.value_or(s.seed), s.placement.unit_kw,
                          s.placement.unit_pf_sizing);
}

HcOptions hc_options(const Scenario& s) {
    HcOptions o;
    o.limits = s.limits;
    o.curve = s.volt_var_curve;
    o.equilibrium.solver = s.solver;
    o.equilibrium.use_actual_p = s.use_actual_p;
    o.dispatch.max_iterations = s.max_iterations;
    o.dispatch.delta_q = s.delta_q;
    o.dispatch.objective = s.objective;
    o.dispatch.use_actual_p = s.use_actual_p;
    o.dispatch.solver = s.solver;
    o.assignment_seed = assignment_seed(s);
    o.max_units = s.max_units;
    o.peak_load_kw = s.peak_load_kw;
    return o;
}

void validate_scenario(const Scenario& s) {
    std::vector<std::string> failures;
    auto fail = [&](std::string m) { failures.push_back(std::move(m)); };

    if (s.month < 1 || s.month > 12) fail("month must be in 1..12");
    if (s.hour < 0 || s.hour > 23) fail("hour must be in 0..23");
    if (s.minute && (*s.minute < 0 || *s.minute > 1439)) fail("minute must be in 0..1439");
    if (s.minute && s.profiles.resolution == Resolution::Hourly && *s.minute % 60 != 0) {
        fail("minute " + std::to_string(*s.minute) + " needs minutely profiles");
    }
    try {
        s.limits.check();
    } catch (const std::invalid_argument& e) {
        fail(std::string("limits: ") + e.what());
    }
    try {
        s.volt_var_curve.check();
    } catch (const std::invalid_argument& e) {
        fail(std::string("volt_var_curve: ") + e.what());
    }
    if (!(s.solver.tolerance > 0.0) || s.solver.max_iter < 1) fail("solver: tolerance and max_iter must be positive");
    if (s.max_iterations < 0) fail("coordinator.max_iterations must be non-negative");
    if (!(s.delta_q > 0.0)) fail("coordinator.delta_q must be positive");
    if (s.profiles.load_count < 1 || s.profiles.pv_count < 1) fail("profiles: counts must be at least 1");
    if (s.placement.units < 0) fail("placement.units must be non-negative");
    if (!(s.placement.unit_kw > 0.0)) fail("placement.unit_kw must be positive");
    if (!(s.placement.unit_pf_sizing > 0.0 && s.placement.unit_pf_sizing <= 1.0)) {
        fail("placement.unit_pf_sizing must be in (0, 1]");
    }
    if (s.grid_months.empty() || s.grid_hours.empty()) fail("grid: months and hours must be non-empty");
    for (int m : s.grid_months) {
        if (m < 1 || m > 12) fail("grid month " + std::to_string(m) + " out of range");
    }
    for (int h : s.grid_hours) {
        if (h < 0 || h > 23) fail("grid hour " + std::to_string(h) + " out of range");
    }
    if (s.max_units < 0) fail("hc.max_units must be non-negative");
    if (s.peak_load_kw && !(*s.peak_load_kw > 0.0)) fail("hc.peak_load_kw must be positive");

    std::optional<NetworkModel> model;
    try {
        model = load_feeder(s.feeder_path());
        for (const auto& v : validate(*model)) fail("feeder: " + v.element + ": " + v.message);
    } catch (const ParseError& e) {
        fail(std::string("feeder: ") + e.what());
    }

    if (model && s.baseline) {
        for (const auto& [id, tap] : s.baseline->taps) {
            const auto it = std::find_if(model->regulators.begin(), model->regulators.end(),
                                         [&](const Regulator& r) { return r.id == id; });
            if (it == model->regulators.end()) fail("baseline: unknown regulator '" + id + "'");
        }
        for (const auto& [id, on] : s.baseline->capacitors) {
            const auto it = std::find_if(model->capacitors.begin(), model->capacitors.end(),
                                         [&](const CapacitorBank& c) { return c.id == id; });
            if (it == model->capacitors.end()) fail("baseline: unknown capacitor '" + id + "'");
        }
    }

    if (model && failures.empty()) {
        std::set<int> months(s.grid_months.begin(), s.grid_months.end());
        months.insert(s.month);
        for (int m : months) {
            try {
                const auto profiles = month_profiles(s, m);
                for (const auto& p : profiles) {
                    if (p.resolution != s.profiles.resolution) fail("profile '" + p.id + "' has the wrong resolution");
                }
                assign_profiles(*model, profiles, assignment_seed(s));
            } catch (const ValidationError& e) {
                for (const auto& f : e.failures()) fail("month " + std::to_string(m) + ": " + f);
            } catch (const ParseError& e) {
                fail(std::string("profiles: ") + e.what());
                break;
            }
            if (!s.profiles.file.empty()) break;  // one file serves every month
        }
    }
    if (!failures.empty()) throw ValidationError(std::move(failures));
}

Scenario load_scenario(const std::filesystem::path& path) {
    Scenario s = parse_scenario(read_json_file(path), path.parent_path(), path.string());
    validate_scenario(s);
    return s;
}

BaselineSettings baseline_for(const Scenario& s, const NetworkModel& model, const std::vector<Profile>& profiles) {
    const VoltageBand band = s.limits.trigger();
    if (!s.baseline) return tune_baseline(model, profiles, assignment_seed(s), band, s.solver);
    std::vector<double> taps;
    for (const auto& r : model.regulators) {
        const auto it = s.baseline->taps.find(r.id);
        taps.push_back(it == s.baseline->taps.end() ? r.tap_ratio : it->second);
    }
    std::vector<bool> caps;
    for (const auto& c : model.capacitors) {
        const auto it = s.baseline->capacitors.find(c.id);
        caps.push_back(it == s.baseline->capacitors.end() ? c.on : it->second);
    }
    return score_baseline(model, profiles, assignment_seed(s), std::move(taps), std::move(caps), band, s.solver);
}

std::vector<MonthSetup> month_setups(const Scenario& s, const NetworkModel& model) {
    std::vector<MonthSetup> out;
    for (int m : s.grid_months) {
        MonthSetup setup;
        setup.month = m;
        setup.profiles = month_profiles(s, m);
        setup.baseline = baseline_for(s, model, setup.profiles);
        out.push_back(std::move(setup));
    }
    return out;
}

Instance resolve_instance(const Scenario& s) {
    const NetworkModel base = load_feeder(s.feeder_path());
    require_valid(base);
    Instance inst;
    inst.profiles = month_profiles(s, s.month);
    inst.baseline = baseline_for(s, base, inst.profiles);
    inst.placement = placement_for(s, base);
    inst.model = apply_baseline(with_units(base, inst.placement, s.placement.units), inst.baseline);
    inst.assignment = assign_profiles(inst.model, inst.profiles, assignment_seed(s));
    inst.injection = injection_at(inst.model, inst.profiles, inst.assignment, s.minute_of_day());
    return inst;
}

}  // namespace pvhc
