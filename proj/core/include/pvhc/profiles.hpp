#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pvhc/powerflow.hpp"

namespace pvhc {

/// Seeded generator with a fixed, portable output sequence: raw mt19937_64
/// words, uniform doubles from the top 53 bits, integers by rejection.
/// Standard distributions are avoided because their output is implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }
    /// Uniform in [0, 1).
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Uniform in [0, n); n > 0.
    std::uint64_t below(std::uint64_t n);

private:
    std::mt19937_64 engine_;
};

/// splitmix64 finalizer of (seed, stream); derives independent child seeds.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Fisher-Yates shuffle driven by Rng::below.
template <typename T>
void seeded_shuffle(std::vector<T>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::swap(v[i - 1], v[static_cast<std::size_t>(rng.below(i))]);
    }
}

enum class ProfileKind { Load, Pv };
enum class Resolution { Hourly, Minutely };

std::size_t sample_count(Resolution r);

struct Profile {
    std::string id;
    ProfileKind kind = ProfileKind::Load;
    Resolution resolution = Resolution::Hourly;
    std::vector<double> values;  // fractions in [0, 1]

    /// Value at a minute of the day (0..1439); hourly profiles hold each hour's value.
    double at_minute(int minute) const;
    double at_hour(int hour) const { return at_minute(hour * 60); }

    friend bool operator==(const Profile&, const Profile&) = default;
};

/// Load profiles "load_<k>" have morning and evening peaks; PV profiles "pv_<k>"
/// are clear-sky bells centred near noon. Every profile peaks at exactly 1.0.
std::vector<Profile> generate_profiles(std::uint64_t seed, int count_load, int count_pv,
                                       Resolution resolution = Resolution::Hourly);

/// Seed for a month's profile set.
std::uint64_t month_seed(std::uint64_t seed, int month);

/// Profile index per load and per PV. Each element draws from its own derived
/// stream, so appending PVs never changes earlier assignments.
struct ProfileAssignment {
    std::vector<std::string> loads;
    std::vector<std::string> pvs;

    friend bool operator==(const ProfileAssignment&, const ProfileAssignment&) = default;
};

/// Elements whose profile_id is set keep it; the rest are drawn uniformly.
/// Throws ValidationError naming every unresolved profile id.
ProfileAssignment assign_profiles(const NetworkModel& model, const std::vector<Profile>& profiles,
                                  std::uint64_t seed);

/// Loads and PVs scaled by their profiles at the given minute of the day;
/// PV reactive power starts at zero, capacitors as declared in the model.
InjectionState injection_at(const NetworkModel& model, const std::vector<Profile>& profiles,
                            const ProfileAssignment& assignment, int minute);

nlohmann::json profiles_to_json(const std::vector<Profile>& profiles);
std::vector<Profile> parse_profiles(const nlohmann::json& doc, const std::string& context = "profiles");
std::vector<Profile> load_profiles(const std::filesystem::path& path);

}  // namespace pvhc
