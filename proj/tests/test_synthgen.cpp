#include <gtest/gtest.h>

#include <filesystem>

#include "jawprint/attack.hpp"
#include "jawprint/synthgen.hpp"
#include "oracle/spectrum_oracle.hpp"

using namespace jawprint;

namespace {

std::vector<double> axis_of(const RecordingSession& s, SensorLocation loc, int axis) {
    return s.stream(loc).axis(axis);
}

UserProfile silent(UserProfile p) {
    for (auto& lp : p.locations)
        for (auto& ax : lp.axes) {
            ax.amplitude = 0.0;
            ax.drift = 0.0;
        }
    p.depth_noise = 0.0;
    return p;
}

} // namespace

TEST(Synthgen, ProfileDeterministic) {
    const auto a = generate_profile("user01", 7);
    const auto b = generate_profile("user01", 7);
    EXPECT_EQ(a.base_freq, b.base_freq);
    EXPECT_EQ(a.language, b.language);
    for (std::size_t l = 0; l < 3; ++l)
        for (std::size_t x = 0; x < 3; ++x) {
            EXPECT_EQ(a.locations[l].axes[x].amplitude, b.locations[l].axes[x].amplitude);
            EXPECT_EQ(a.locations[l].axes[x].harmonics, b.locations[l].axes[x].harmonics);
        }
    EXPECT_NE(generate_profile("user01", 8).base_freq, a.base_freq);
    EXPECT_GE(a.base_freq, 1.5);
    EXPECT_LE(a.base_freq, 4.5);
}

TEST(Synthgen, CohortFrequencyGaps) {
    for (std::uint64_t seed : {1u, 2u, 3u, 42u}) {
        const auto cohort = generate_cohort(10, seed);
        ASSERT_EQ(cohort.size(), 10u);
        for (std::size_t i = 0; i < cohort.size(); ++i)
            for (std::size_t j = i + 1; j < cohort.size(); ++j)
                EXPECT_GE(std::abs(cohort[i].base_freq - cohort[j].base_freq), 0.05);
    }
}

TEST(Synthgen, FullSessionLength) {
    const auto p = generate_profile("user01", 1);
    const auto s = generate_session(p, {900.0, Activity::Seated, 1, 5});
    ASSERT_EQ(s.streams.size(), 3u);
    for (const auto& [loc, stream] : s.streams) {
        EXPECT_EQ(stream.size(), 90000u);
        EXPECT_DOUBLE_EQ(stream.samples.back().t, 899.99);
    }
    EXPECT_THROW(generate_session(p, {0.0, Activity::Seated, 1, 5}), Error);
}

TEST(Synthgen, SessionsCorrelatedNotEqual) {
    const auto p = generate_profile("user03", 11);
    const auto s1 = generate_session(p, {120.0, Activity::Seated, 1, 1});
    const auto s2 = generate_session(p, {120.0, Activity::Seated, 2, 2});
    for (auto loc : kAllLocations)
        for (int a = 0; a < 3; ++a) {
            const auto x1 = axis_of(s1, loc, a), x2 = axis_of(s2, loc, a);
            EXPECT_NE(x1, x2);
            const auto r = oracle::pearson(oracle::averaged_power(x1, 1000), oracle::averaged_power(x2, 1000));
            EXPECT_GT(r, 0.5) << file_stem(loc) << " axis " << a;
        }
}

TEST(Synthgen, Deterministic) {
    const auto p = generate_profile("user02", 3);
    const SessionSpec spec{20.0, Activity::WalkFlat, 1, 9};
    const auto a = generate_session(p, spec), b = generate_session(p, spec);
    for (auto loc : kAllLocations) EXPECT_EQ(a.stream(loc).samples, b.stream(loc).samples);
    const auto ta = render_landmark_trace(p, spec), tb = render_landmark_trace(p, spec);
    for (std::size_t l = 0; l < 3; ++l) EXPECT_EQ(ta[l].points, tb[l].points);
}

TEST(Synthgen, WalkingAddsGaitEnergy) {
    const auto p = generate_profile("user04", 5);
    const auto seated = generate_session(p, {100.0, Activity::Seated, 1, 1});
    const auto walking = generate_session(p, {100.0, Activity::WalkFlat, 1, 1});
    const auto ps = oracle::averaged_power(axis_of(seated, SensorLocation::UpperLeftCheek, 1), 1000);
    const auto pw = oracle::averaged_power(axis_of(walking, SensorLocation::UpperLeftCheek, 1), 1000);
    auto band = [](const std::vector<double>& pw, double lo, double hi) {
        double e = 0.0;
        for (std::size_t k = 0; k < pw.size(); ++k) {
            const double f = static_cast<double>(k) * 0.1;
            if (f >= lo && f <= hi) e += pw[k];
        }
        return e;
    };
    EXPECT_GT(band(pw, 1.7, 2.2), 2.0 * band(ps, 1.7, 2.2));
}

TEST(Synthgen, SilentProfileGivesZeroAccel) {
    const auto p = silent(generate_profile("user05", 2));
    const auto traces = render_landmark_trace(p, {10.0, Activity::Seated, 1, 1});
    for (const auto& tr : traces) {
        EXPECT_EQ(tr.fps, 60.0);
        EXPECT_EQ(tr.resolution, Resolution::p1080());
        const auto a = synthesize_accel(tr);
        EXPECT_LT(a.samples.cwiseAbs().maxCoeff(), 1e-9);
    }
}

TEST(Synthgen, LandmarkRoundTripRecoversFrequency) {
    for (const char* id : {"user01", "user02", "user03"}) {
        const auto p = generate_profile(id, 19);
        const auto traces = render_landmark_trace(p, {60.0, Activity::Seated, 1, 1});
        const auto accel = synthesize_accel(traces[location_index(SensorLocation::BelowChin)]);
        std::vector<double> z(accel.size());
        for (std::size_t i = 0; i < z.size(); ++i) z[i] = accel.samples(static_cast<Eigen::Index>(i), 2);
        const auto peak = oracle::peak_frequency(oracle::averaged_power(z, 600), 60.0, 600);
        EXPECT_NEAR(peak, p.at(SensorLocation::BelowChin).axes[2].base_freq, 0.2) << id;
    }
}

TEST(Synthgen, LandmarkFileRoundTrip) {
    const auto p = generate_profile("user01", 4);
    auto traces = render_landmark_trace(p, {1.0, Activity::Seated, 1, 1});
    const auto dir = std::filesystem::temp_directory_path() / "jawprint_landmarks";
    std::filesystem::create_directories(dir);
    const auto path = (dir / "below_chin.csv").string();
    write_landmark_trace(path, traces[0]);
    const auto back = load_landmark_trace(path, SensorLocation::BelowChin);
    ASSERT_EQ(back.size(), traces[0].size());
    EXPECT_EQ(back.fps, 60.0);
    for (std::size_t i = 0; i < back.size(); ++i) {
        EXPECT_NEAR(back.points[i].x, traces[0].points[i].x, 1e-12);
        EXPECT_NEAR(back.points[i].z, traces[0].points[i].z, 1e-12);
    }
    traces[0].fps = 30;
    write_landmark_trace(path, traces[0]);
    EXPECT_THROW(load_landmark_trace(path), Error);
    std::filesystem::remove_all(dir);
}

TEST(Synthgen, CentroidsSeparateUsers) {
    CohortSpec spec;
    spec.users = 5;
    spec.duration = 60.0;
    spec.seed = 42;
    const auto ds = simulate_dataset(spec);
    const auto bank = build_window_bank(ds, Activity::Seated);
    std::vector<std::pair<std::string, int>> keys;
    std::vector<Eigen::VectorXd> rows;
    for (const auto& [key, groups] : bank.sessions)
        for (const auto& g : groups) {
            rows.push_back(plan_features(g, LocationPlan::fused()));
            keys.emplace_back(std::get<0>(key), std::get<2>(key));
        }
    Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) x.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
    x = apply_normalizer(fit_normalizer(x), x);
    std::map<std::pair<std::string, int>, std::pair<Eigen::VectorXd, int>> centroids;
    for (std::size_t i = 0; i < keys.size(); ++i) {
        auto& [sum, n] = centroids[keys[i]];
        if (n == 0) sum = Eigen::VectorXd::Zero(x.cols());
        sum += x.row(static_cast<Eigen::Index>(i)).transpose();
        ++n;
    }
    auto centroid = [&](const std::string& u, int s) {
        const auto& [sum, n] = centroids.at({u, s});
        return Eigen::VectorXd(sum / n);
    };
    for (const auto& u : ds.user_ids()) {
        const double within = (centroid(u, 1) - centroid(u, 2)).norm();
        for (const auto& v : ds.user_ids()) {
            if (v == u) continue;
            EXPECT_GT((centroid(u, 1) - centroid(v, 2)).norm(), within) << u << " vs " << v;
        }
    }
}
