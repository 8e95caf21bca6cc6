#include <gtest/gtest.h>

#include <algorithm>
#include <map>

#include "pvhc/errors.hpp"
#include "pvhc/feeder_io.hpp"
#include "pvhc/profiles.hpp"
#include "support/test_data.hpp"

namespace pvhc {
namespace {

int argmax(const std::vector<double>& v) {
    return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

NetworkModel many_loads(int count) {
    NetworkModel m;
    m.slack_bus = "s";
    m.buses.push_back({"s", PhaseSet::single(Phase::A), 1.0, Zone::Near});
    for (int i = 0; i < count; ++i) {
        m.loads.push_back({"ld" + std::to_string(i), "s", PhaseSet::single(Phase::A), 1.0, 1.0, ""});
    }
    return m;
}

TEST(Rng, Mt19937_64ReferenceStream) {
    // The 10000th output for the default seed is fixed by the C++ standard.
    Rng rng(5489u);
    std::uint64_t x = 0;
    for (int i = 0; i < 10000; ++i) x = rng.next();
    EXPECT_EQ(x, 9981545732273789042ULL);
}

TEST(Rng, UniformAndBelowStayInRange) {
    Rng rng(3);
    std::vector<int> counts(7, 0);
    for (int i = 0; i < 70000; ++i) {
        const double u = rng.uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        ++counts[static_cast<std::size_t>(rng.below(7))];
    }
    for (int c : counts) EXPECT_NEAR(c, 10000, 500);
    EXPECT_THROW(rng.below(0), std::invalid_argument);
}

TEST(Rng, DeriveSeedSeparatesStreams) {
    EXPECT_EQ(derive_seed(1, 2), derive_seed(1, 2));
    EXPECT_NE(derive_seed(1, 2), derive_seed(1, 3));
    EXPECT_NE(derive_seed(1, 2), derive_seed(2, 2));
    EXPECT_NE(month_seed(7, 5), month_seed(7, 6));
}

TEST(Profiles, ShapeAndRange) {
    const auto ps = generate_profiles(11, 5, 6);
    ASSERT_EQ(ps.size(), 11u);
    for (const auto& p : ps) {
        ASSERT_EQ(p.values.size(), 24u);
        for (double v : p.values) {
            EXPECT_GE(v, 0.0);
            EXPECT_LE(v, 1.0);
        }
        EXPECT_EQ(*std::max_element(p.values.begin(), p.values.end()), 1.0) << p.id;
    }
    EXPECT_EQ(ps[0].id, "load_0");
    EXPECT_EQ(ps[5].id, "pv_0");
    EXPECT_EQ(ps[5].kind, ProfileKind::Pv);
}

TEST(Profiles, PvIsDarkAtNight) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        for (const auto& p : generate_profiles(seed, 1, 6)) {
            if (p.kind != ProfileKind::Pv) continue;
            EXPECT_EQ(p.at_hour(0), 0.0);
            EXPECT_EQ(p.at_hour(23), 0.0);
        }
    }
}

TEST(Profiles, PvPeaksAroundNoon) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        for (const auto& p : generate_profiles(seed, 1, 6)) {
            if (p.kind != ProfileKind::Pv) continue;
            const int h = argmax(p.values);
            EXPECT_TRUE(h >= 11 && h <= 13) << "seed " << seed << " " << p.id << " peaks at " << h;
        }
    }
}

TEST(Profiles, LoadHasMorningAndEveningPeaks) {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        for (const auto& p : generate_profiles(seed, 5, 1)) {
            if (p.kind != ProfileKind::Load) continue;
            const int evening = argmax(p.values);
            EXPECT_GE(evening, 17) << seed;
            const std::vector<double> morning(p.values.begin() + 5, p.values.begin() + 11);
            const double m = *std::max_element(morning.begin(), morning.end());
            EXPECT_GT(m, p.at_hour(3)) << seed;
            EXPECT_GT(m, p.at_hour(14)) << seed;
        }
    }
}

TEST(Profiles, DeterministicPerSeed) {
    EXPECT_EQ(generate_profiles(42, 5, 6), generate_profiles(42, 5, 6));
    EXPECT_NE(generate_profiles(42, 5, 6), generate_profiles(43, 5, 6));
    EXPECT_THROW(generate_profiles(1, 0, 1), std::invalid_argument);
}

TEST(Profiles, Minutely) {
    const auto ps = generate_profiles(8, 1, 1, Resolution::Minutely);
    ASSERT_EQ(ps[0].values.size(), 1440u);
    EXPECT_EQ(ps[1].at_minute(0), 0.0);
    EXPECT_EQ(ps[1].at_minute(725), ps[1].values[725]);
    EXPECT_THROW(ps[1].at_minute(1440), std::out_of_range);
}

TEST(Profiles, JsonRoundTrip) {
    const auto ps = generate_profiles(5, 2, 3);
    EXPECT_EQ(parse_profiles(profiles_to_json(ps)), ps);
    nlohmann::json bad = profiles_to_json(ps);
    bad["profiles"][0]["values"][3] = 1.5;
    EXPECT_THROW(parse_profiles(bad), ParseError);
    bad = profiles_to_json(ps);
    bad["profiles"][0]["values"].erase(0);
    EXPECT_THROW(parse_profiles(bad), ParseError);
}

TEST(Assignment, SingleProfileGoesEverywhere) {
    const NetworkModel m = many_loads(20);
    const auto ps = generate_profiles(1, 1, 1);
    const ProfileAssignment a = assign_profiles(m, ps, 9);
    for (const auto& id : a.loads) EXPECT_EQ(id, "load_0");
}

TEST(Assignment, DeterministicPerSeed) {
    const NetworkModel m = load_feeder(test::data_path("feeders/desk30.json"));
    const auto ps = generate_profiles(1, 5, 6);
    EXPECT_EQ(assign_profiles(m, ps, 4), assign_profiles(m, ps, 4));
    EXPECT_NE(assign_profiles(m, ps, 4).loads, assign_profiles(m, ps, 5).loads);
}

TEST(Assignment, ChiSquareUniform) {
    const NetworkModel m = many_loads(1000);
    const auto ps = generate_profiles(1, 5, 1);
    const ProfileAssignment a = assign_profiles(m, ps, 2024);
    std::map<std::string, int> counts;
    for (const auto& id : a.loads) ++counts[id];
    ASSERT_EQ(counts.size(), 5u);
    double chi2 = 0.0;
    for (const auto& [id, c] : counts) chi2 += (c - 200.0) * (c - 200.0) / 200.0;
    // Upper 1% point of chi-square with 4 degrees of freedom.
    EXPECT_LT(chi2, 13.2767);
}

TEST(Assignment, ExplicitIdsKeptAndUnknownNamed) {
    NetworkModel m = many_loads(3);
    m.loads[1].profile_id = "load_2";
    const auto ps = generate_profiles(1, 3, 1);
    EXPECT_EQ(assign_profiles(m, ps, 1).loads[1], "load_2");
    m.loads[2].profile_id = "load_9";
    try {
        assign_profiles(m, ps, 1);
        FAIL() << "expected ValidationError";
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("load_9"), std::string::npos);
    }
}

TEST(Assignment, AppendingPvsKeepsEarlierDraws) {
    NetworkModel m = load_feeder(test::data_path("feeders/desk30.json"));
    const auto ps = generate_profiles(1, 5, 6);
    const ProfileAssignment before = assign_profiles(m, ps, 77);
    m.pvs.push_back(make_pv("extra", "m1", PhaseSet::single(Phase::A), 10.0, 10.0 / 0.9));
    const ProfileAssignment after = assign_profiles(m, ps, 77);
    EXPECT_EQ(after.loads, before.loads);
    EXPECT_TRUE(std::equal(before.pvs.begin(), before.pvs.end(), after.pvs.begin()));
}

TEST(Injection, ScalesByProfile) {
    const NetworkModel m = load_feeder(test::data_path("feeders/desk30.json"));
    const auto ps = generate_profiles(3, 5, 6);
    const ProfileAssignment a = assign_profiles(m, ps, 3);
    const InjectionState inj = injection_at(m, ps, a, 12 * 60);
    const InjectionState nominal = nominal_injection(m);
    auto value = [&](const std::string& id) {
        for (const auto& p : ps) {
            if (p.id == id) return p.at_hour(12);
        }
        return -1.0;
    };
    for (std::size_t i = 0; i < m.loads.size(); ++i) {
        EXPECT_DOUBLE_EQ(inj.load_kw[i], nominal.load_kw[i] * value(a.loads[i]));
        EXPECT_DOUBLE_EQ(inj.load_kvar[i], nominal.load_kvar[i] * value(a.loads[i]));
    }
    for (std::size_t j = 0; j < m.pvs.size(); ++j) {
        EXPECT_DOUBLE_EQ(inj.pv_kw[j], m.pvs[j].p_mpp_kw * value(a.pvs[j]));
        EXPECT_EQ(inj.pv_kvar[j], 0.0);
    }
    const InjectionState night = injection_at(m, ps, a, 0);
    for (double p : night.pv_kw) EXPECT_EQ(p, 0.0);
}

}  // namespace
}  // namespace pvhc
