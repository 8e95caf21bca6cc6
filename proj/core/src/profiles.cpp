#include "pvhc/profiles.hpp"

#include <algorithm>
#include <cmath>

#include "json_access.hpp"
#include "pvhc/feeder_io.hpp"

namespace pvhc {

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

std::uint64_t Rng::below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("Rng::below needs n > 0");
    // Reject the top partial block so every residue is equally likely.
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return x % n;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t month_seed(std::uint64_t seed, int month) {
    return derive_seed(seed, 1000 + static_cast<std::uint64_t>(month));
}

std::size_t sample_count(Resolution r) { return r == Resolution::Hourly ? 24 : 1440; }

double Profile::at_minute(int minute) const {
    if (minute < 0 || minute >= 1440) throw std::out_of_range("minute of day out of range");
    if (resolution == Resolution::Hourly) return values.at(static_cast<std::size_t>(minute / 60));
    return values.at(static_cast<std::size_t>(minute));
}

namespace {

// Gaussian bump on a 24 h circle.
double bump(double t, double centre, double width) {
    double d = std::abs(t - centre);
    d = std::min(d, 24.0 - d);
    return std::exp(-0.5 * d * d / (width * width));
}

void normalize(std::vector<double>& v) {
    const double peak = *std::max_element(v.begin(), v.end());
    for (double& x : v) x = std::clamp(x / peak, 0.0, 1.0);
}

Profile load_profile(Rng& rng, int k, Resolution res) {
    const double base = rng.uniform(0.30, 0.40);
    const double a1 = rng.uniform(0.25, 0.40), c1 = rng.uniform(7.0, 8.5), w1 = rng.uniform(1.2, 2.0);
    const double a2 = rng.uniform(0.55, 0.70), c2 = rng.uniform(18.5, 20.0), w2 = rng.uniform(1.8, 2.6);
    Profile p{"load_" + std::to_string(k), ProfileKind::Load, res, {}};
    const std::size_t n = sample_count(res);
    const double step = 24.0 / static_cast<double>(n);
    for (std::size_t s = 0; s < n; ++s) {
        const double t = static_cast<double>(s) * step;
        const double shape = base + a1 * bump(t, c1, w1) + a2 * bump(t, c2, w2);
        p.values.push_back(shape * (1.0 + rng.uniform(-0.04, 0.04)));
    }
    normalize(p.values);
    return p;
}

Profile pv_profile(Rng& rng, int k, Resolution res) {
    const double centre = rng.uniform(11.6, 12.4);
    const double width = rng.uniform(2.2, 2.9);
    constexpr double half_day = 6.5;  // sunrise and sunset offsets from the centre
    const double floor = bump(centre + half_day, centre, width);
    Profile p{"pv_" + std::to_string(k), ProfileKind::Pv, res, {}};
    const std::size_t n = sample_count(res);
    const double step = 24.0 / static_cast<double>(n);
    for (std::size_t s = 0; s < n; ++s) {
        const double t = static_cast<double>(s) * step;
        const double clear = std::abs(t - centre) >= half_day ? 0.0 : (bump(t, centre, width) - floor) / (1.0 - floor);
        p.values.push_back(clear * (1.0 - rng.uniform(0.0, 0.08)));
    }
    normalize(p.values);
    return p;
}

const char* kind_name(ProfileKind k) { return k == ProfileKind::Load ? "load" : "pv"; }

}  // namespace

std::vector<Profile> generate_profiles(std::uint64_t seed, int count_load, int count_pv, Resolution resolution) {
    if (count_load < 1 || count_pv < 1) throw std::invalid_argument("profile counts must be at least 1");
    std::vector<Profile> out;
    for (int k = 0; k < count_load; ++k) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(k)));
        out.push_back(load_profile(rng, k, resolution));
    }
    for (int k = 0; k < count_pv; ++k) {
        Rng rng(derive_seed(seed, 500 + static_cast<std::uint64_t>(k)));
        out.push_back(pv_profile(rng, k, resolution));
    }
    return out;
}

ProfileAssignment assign_profiles(const NetworkModel& model, const std::vector<Profile>& profiles,
                                  std::uint64_t seed) {
    std::vector<const Profile*> load_pool, pv_pool;
    for (const auto& p : profiles) (p.kind == ProfileKind::Load ? load_pool : pv_pool).push_back(&p);

    std::vector<std::string> failures;
    auto exists = [&](const std::string& id, ProfileKind kind) {
        return std::any_of(profiles.begin(), profiles.end(),
                           [&](const Profile& p) { return p.id == id && p.kind == kind; });
    };
    auto pick = [&](const std::string& fixed, ProfileKind kind, std::uint64_t stream, const std::string& owner) {
        const auto& pool = kind == ProfileKind::Load ? load_pool : pv_pool;
        if (!fixed.empty()) {
            if (!exists(fixed, kind)) {
                failures.push_back(owner + ": unknown " + kind_name(kind) + " profile '" + fixed + "'");
            }
            return fixed;
        }
        if (pool.empty()) {
            failures.push_back(owner + ": no " + std::string(kind_name(kind)) + " profiles to assign");
            return std::string{};
        }
        Rng rng(derive_seed(seed, stream));
        return pool[static_cast<std::size_t>(rng.below(pool.size()))]->id;
    };

    ProfileAssignment a;
    for (std::size_t i = 0; i < model.loads.size(); ++i) {
        a.loads.push_back(pick(model.loads[i].profile_id, ProfileKind::Load, 2 * i, "load " + model.loads[i].id));
    }
    for (std::size_t j = 0; j < model.pvs.size(); ++j) {
        a.pvs.push_back(pick(model.pvs[j].profile_id, ProfileKind::Pv, 2 * j + 1, "pv " + model.pvs[j].id));
    }
    if (!failures.empty()) throw ValidationError(std::move(failures));
    return a;
}

InjectionState injection_at(const NetworkModel& model, const std::vector<Profile>& profiles,
                            const ProfileAssignment& assignment, int minute) {
    if (assignment.loads.size() != model.loads.size() || assignment.pvs.size() != model.pvs.size()) {
        throw std::invalid_argument("profile assignment does not match the model");
    }
    auto value = [&](const std::string& id) {
        for (const auto& p : profiles) {
            if (p.id == id) return p.at_minute(minute);
        }
        throw ValidationError({"unknown profile '" + id + "'"});
    };
    InjectionState inj = nominal_injection(model);
    for (std::size_t i = 0; i < model.loads.size(); ++i) {
        const double f = value(assignment.loads[i]);
        inj.load_kw[i] *= f;
        inj.load_kvar[i] *= f;
    }
    for (std::size_t j = 0; j < model.pvs.size(); ++j) {
        inj.pv_kw[j] = model.pvs[j].p_mpp_kw * value(assignment.pvs[j]);
        inj.pv_kvar[j] = 0.0;
    }
    return inj;
}

nlohmann::json profiles_to_json(const std::vector<Profile>& profiles) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& p : profiles) {
        arr.push_back({{"id", p.id},
                       {"kind", kind_name(p.kind)},
                       {"resolution", p.resolution == Resolution::Hourly ? "hourly" : "minutely"},
                       {"values", p.values}});
    }
    return {{"profiles", arr}};
}

std::vector<Profile> parse_profiles(const nlohmann::json& doc, const std::string& context) {
    JsonReader root(doc, context);
    std::vector<Profile> out;
    for (const auto& r : root.array("profiles")) {
        Profile p;
        p.id = r.string("id");
        const std::string kind = r.string("kind");
        if (kind == "load") {
            p.kind = ProfileKind::Load;
        } else if (kind == "pv") {
            p.kind = ProfileKind::Pv;
        } else {
            throw ParseError(r.path("kind"), "expected \"load\" or \"pv\"");
        }
        const std::string res = r.string_or("resolution", "hourly");
        if (res == "hourly") {
            p.resolution = Resolution::Hourly;
        } else if (res == "minutely") {
            p.resolution = Resolution::Minutely;
        } else {
            throw ParseError(r.path("resolution"), "expected \"hourly\" or \"minutely\"");
        }
        p.values = r.numbers("values");
        if (p.values.size() != sample_count(p.resolution)) {
            throw ParseError(r.path("values"), "expected " + std::to_string(sample_count(p.resolution)) + " values");
        }
        for (double v : p.values) {
            if (!(v >= 0.0 && v <= 1.0)) throw ParseError(r.path("values"), "values must lie in [0, 1]");
        }
        out.push_back(std::move(p));
    }
    return out;
}

std::vector<Profile> load_profiles(const std::filesystem::path& path) {
    return parse_profiles(read_json_file(path), path.string());
}

}  // namespace pvhc
