#include "pvhc/feeder_io.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "pvhc/errors.hpp"
#include "json_access.hpp"

namespace pvhc {

using nlohmann::json;

namespace {

PhaseMatrix parse_matrix(const json& m, PhaseSet phases, const std::string& ctx, double scale) {
    const auto order = phases.phases();
    if (!m.is_array() || m.size() != order.size()) {
        throw ParseError(ctx, "impedance matrix must be " + std::to_string(order.size()) + "x" +
                                  std::to_string(order.size()) + " over phases " + phases.str());
    }
    PhaseMatrix z{};
    for (std::size_t r = 0; r < order.size(); ++r) {
        const json& row = m[r];
        if (!row.is_array() || row.size() != order.size()) {
            throw ParseError(ctx + "[" + std::to_string(r) + "]", "row length must equal phase count");
        }
        for (std::size_t c = 0; c < order.size(); ++c) {
            const json& cell = row[c];
            if (!cell.is_array() || cell.size() != 2 || !cell[0].is_number() || !cell[1].is_number()) {
                throw ParseError(ctx + "[" + std::to_string(r) + "][" + std::to_string(c) + "]",
                                 "entry must be [r, x]");
            }
            z[static_cast<std::size_t>(order[r])][static_cast<std::size_t>(order[c])] =
                Complex(cell[0].get<double>(), cell[1].get<double>()) * scale;
        }
    }
    return z;
}

json matrix_to_json(const PhaseMatrix& z, PhaseSet phases) {
    json m = json::array();
    for (Phase r : phases.phases()) {
        json row = json::array();
        for (Phase c : phases.phases()) {
            const Complex v = z[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
            row.push_back(json::array({v.real(), v.imag()}));
        }
        m.push_back(std::move(row));
    }
    return m;
}

PhaseSet phases_field(const JsonReader& r, const char* key) {
    const std::string text = r.string(key);
    try {
        return PhaseSet::parse(text);
    } catch (const std::invalid_argument& e) {
        throw ParseError(r.path(key), e.what());
    }
}

}  // namespace

NetworkModel parse_feeder(const json& doc, const std::string& context) {
    JsonReader root(doc, context);
    NetworkModel m;
    m.name = root.string_or("name", "");

    JsonReader slack = root.object("slack");
    m.slack_bus = slack.string("bus");
    m.slack_voltage_pu = slack.number_or("voltage_pu", 1.0);

    for (const JsonReader& b : root.array("buses")) {
        Bus bus;
        bus.id = b.string("id");
        bus.phases = phases_field(b, "phases");
        bus.base_kv = b.number("base_kv");
        const std::string zone = b.string_or("zone", "Near");
        if (zone == "Near") {
            bus.zone = Zone::Near;
        } else if (zone == "Far") {
            bus.zone = Zone::Far;
        } else {
            throw ParseError(b.path("zone"), "zone must be \"Near\" or \"Far\"");
        }
        m.buses.push_back(std::move(bus));
    }

    std::map<std::string, std::pair<PhaseSet, json>> codes;
    if (root.has("linecodes")) {
        for (const auto& [name, code] : root.raw("linecodes").items()) {
            JsonReader c(code, root.path("linecodes") + "." + name);
            codes[name] = {phases_field(c, "phases"), c.raw("z_ohm_per_km")};
        }
    }

    for (const JsonReader& l : root.array("lines")) {
        LineSegment line;
        line.id = l.string("id");
        line.from_bus = l.string("from");
        line.to_bus = l.string("to");
        line.phases = phases_field(l, "phases");
        if (l.has("z_ohm")) {
            line.z_ohm = parse_matrix(l.raw("z_ohm"), line.phases, l.path("z_ohm"), 1.0);
        } else {
            const std::string code = l.string("linecode");
            auto it = codes.find(code);
            if (it == codes.end()) throw ParseError(l.path("linecode"), "unknown linecode '" + code + "'");
            if (it->second.first != line.phases) {
                throw ParseError(l.path("linecode"), "linecode phases " + it->second.first.str() +
                                                         " differ from line phases " + line.phases.str());
            }
            line.z_ohm = parse_matrix(it->second.second, line.phases, "linecodes." + code, l.number("length_km"));
        }
        m.lines.push_back(std::move(line));
    }

    if (root.has("regulators")) {
        for (const JsonReader& r : root.array("regulators")) {
            Regulator reg;
            reg.id = r.string("id");
            reg.from_bus = r.string("from");
            reg.to_bus = r.string("to");
            reg.phases = phases_field(r, "phases");
            reg.tap_ratio = r.number_or("tap_ratio", 1.0);
            reg.tap_step = r.number_or("tap_step", 0.00625);
            if (r.has("range")) {
                const json& range = r.raw("range");
                if (!range.is_array() || range.size() != 2 || !range[0].is_number() || !range[1].is_number()) {
                    throw ParseError(r.path("range"), "range must be [min, max]");
                }
                reg.min_ratio = range[0].get<double>();
                reg.max_ratio = range[1].get<double>();
            }
            m.regulators.push_back(std::move(reg));
        }
    }

    if (root.has("capacitors")) {
        for (const JsonReader& c : root.array("capacitors")) {
            CapacitorBank cap;
            cap.id = c.string("id");
            cap.bus_id = c.string("bus");
            cap.phases = phases_field(c, "phases");
            cap.kvar_per_phase = c.number("kvar_per_phase");
            cap.on = c.boolean_or("on", true);
            m.capacitors.push_back(std::move(cap));
        }
    }

    if (root.has("loads")) {
        for (const JsonReader& l : root.array("loads")) {
            LoadPoint ld;
            ld.id = l.string("id");
            ld.bus_id = l.string("bus");
            ld.phases = phases_field(l, "phases");
            ld.kw_peak = l.number("kw_peak");
            ld.pf = l.number_or("pf", 1.0);
            ld.profile_id = l.string_or("profile", "");
            m.loads.push_back(std::move(ld));
        }
    }

    if (root.has("pvs")) {
        for (const JsonReader& p : root.array("pvs")) {
            PvSystem pv;
            pv.id = p.string("id");
            pv.bus_id = p.string("bus");
            pv.phases = phases_field(p, "phases");
            pv.p_mpp_kw = p.number("p_mpp_kw");
            pv.s_rating_kva = p.number("s_rating_kva");
            if (p.has("q_max_kvar")) {
                pv.q_max_kvar = p.number("q_max_kvar");
            } else if (pv.s_rating_kva >= pv.p_mpp_kw) {
                pv.q_max_kvar = effective_q_max(pv.s_rating_kva, pv.p_mpp_kw);
            }
            pv.profile_id = p.string_or("profile", "");
            m.pvs.push_back(std::move(pv));
        }
    }
    return m;
}

NetworkModel load_feeder(const std::filesystem::path& path) {
    return parse_feeder(read_json_file(path), path.filename().string());
}

json feeder_to_json(const NetworkModel& m) {
    json doc;
    doc["name"] = m.name;
    doc["slack"] = {{"bus", m.slack_bus}, {"voltage_pu", m.slack_voltage_pu}};
    doc["buses"] = json::array();
    for (const auto& b : m.buses) {
        doc["buses"].push_back({{"id", b.id},
                                {"phases", b.phases.str()},
                                {"base_kv", b.base_kv},
                                {"zone", b.zone == Zone::Near ? "Near" : "Far"}});
    }
    doc["lines"] = json::array();
    for (const auto& l : m.lines) {
        doc["lines"].push_back({{"id", l.id},
                                {"from", l.from_bus},
                                {"to", l.to_bus},
                                {"phases", l.phases.str()},
                                {"z_ohm", matrix_to_json(l.z_ohm, l.phases)}});
    }
    doc["regulators"] = json::array();
    for (const auto& r : m.regulators) {
        doc["regulators"].push_back({{"id", r.id},
                                     {"from", r.from_bus},
                                     {"to", r.to_bus},
                                     {"phases", r.phases.str()},
                                     {"tap_ratio", r.tap_ratio},
                                     {"tap_step", r.tap_step},
                                     {"range", {r.min_ratio, r.max_ratio}}});
    }
    doc["capacitors"] = json::array();
    for (const auto& c : m.capacitors) {
        doc["capacitors"].push_back({{"id", c.id},
                                     {"bus", c.bus_id},
                                     {"phases", c.phases.str()},
                                     {"kvar_per_phase", c.kvar_per_phase},
                                     {"on", c.on}});
    }
    doc["loads"] = json::array();
    for (const auto& l : m.loads) {
        doc["loads"].push_back({{"id", l.id},
                                {"bus", l.bus_id},
                                {"phases", l.phases.str()},
                                {"kw_peak", l.kw_peak},
                                {"pf", l.pf},
                                {"profile", l.profile_id}});
    }
    doc["pvs"] = json::array();
    for (const auto& p : m.pvs) {
        doc["pvs"].push_back({{"id", p.id},
                              {"bus", p.bus_id},
                              {"phases", p.phases.str()},
                              {"p_mpp_kw", p.p_mpp_kw},
                              {"s_rating_kva", p.s_rating_kva},
                              {"q_max_kvar", p.q_max_kvar},
                              {"profile", p.profile_id}});
    }
    return doc;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(path.string(), "cannot open file");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

json read_json_file(const std::filesystem::path& path) {
    const std::string text = read_text_file(path);
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        // nlohmann reports a byte offset; translate it to a line number.
        const auto offset = std::min<std::size_t>(e.byte, text.size());
        const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n');
        throw ParseError(path.string() + ":" + std::to_string(line), e.what());
    }
}

}  // namespace pvhc
