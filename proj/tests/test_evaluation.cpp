#include <gtest/gtest.h>

#include <random>
#include <set>
#include <sstream>

#include "jawprint/evaluation.hpp"
#include "oracle/eer_oracle.hpp"

using namespace jawprint;

namespace {

WindowBank toy_bank(const std::vector<std::pair<std::string, std::array<std::size_t, 2>>>& users) {
    WindowBank bank;
    for (const auto& [id, counts] : users) {
        bank.languages[id] = Language::Native;
        for (int s = 1; s <= 2; ++s) {
            auto& groups = bank.sessions[{id, Activity::Seated, s}];
            for (std::size_t k = 0; k < counts[static_cast<std::size_t>(s - 1)]; ++k) {
                WindowGroup g;
                g.origin = {id, Activity::Seated, s, k};
                groups.push_back(g);
            }
        }
    }
    return bank;
}

std::set<std::string> tags(const LabeledWindows& lw, int label) {
    std::set<std::string> out;
    for (std::size_t i = 0; i < lw.windows.size(); ++i)
        if (lw.labels[i] == label) out.insert(lw.windows[i]->origin.tag());
    return out;
}

} // namespace

TEST(Eer, PerfectSeparationIsZero) {
    auto r = compute_eer({0.9, 0.8, 0.7}, {0.1, 0.2, 0.3});
    EXPECT_EQ(r.eer, 0.0);
    EXPECT_GT(r.threshold, 0.3);
    EXPECT_LE(r.threshold, 0.7);
}

TEST(Eer, IdenticalDistributionsGiveHalf) {
    EXPECT_EQ(compute_eer({0.5, 0.5}, {0.5, 0.5}).eer, 0.5);
    EXPECT_EQ(compute_eer({0.2, 0.4, 0.6}, {0.2, 0.4, 0.6}).eer, 0.5);
}

TEST(Eer, FullyInvertedIsOne) {
    EXPECT_EQ(compute_eer({0.1, 0.2}, {0.8, 0.9}).eer, 1.0);
}

TEST(Eer, MatchesDenseGridOracle) {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> g(50), i(50);
        const double shift = 0.05 * (trial % 10);
        for (auto& v : g) v = std::min(1.0, u(rng) * 0.8 + shift);
        for (auto& v : i) v = u(rng) * 0.8;
        if (trial % 7 == 0) g[3] = i[5];  // a cross-class tie
        auto ours = compute_eer(g, i);
        auto [eer, theta] = oracle::eer_dense(g, i);
        EXPECT_NEAR(ours.eer, eer, 1e-9) << trial;
        EXPECT_NEAR(ours.threshold, theta, 1e-9) << trial;
    }
}

TEST(Eer, InvariantUnderIncreasingTransform) {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n;
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> g(40), i(60);
        for (auto& v : g) v = n(rng) + 0.7;
        for (auto& v : i) v = n(rng);
        std::vector<double> tg, ti;
        for (double v : g) tg.push_back(std::exp(2.0 * v) + 3.0);
        for (double v : i) ti.push_back(std::exp(2.0 * v) + 3.0);
        // the crossing rate is fixed by the step heights, so the value is unchanged
        EXPECT_NEAR(compute_eer(g, i).eer, compute_eer(tg, ti).eer, 1e-12);
    }
}

TEST(Eer, EmptyScoresRejected) {
    try {
        compute_eer({}, {0.1});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::EmptyScores);
    }
}

TEST(Threshold, BoundaryInclusive) {
    UserThreshold t{"u", 0.3, 0.1};
    EXPECT_EQ(threshold_decision({0.3, ""}, t), Decision::Accept);
    EXPECT_EQ(threshold_decision({1.0, ""}, t), Decision::Accept);
    EXPECT_EQ(threshold_decision({0.0, ""}, t), Decision::Reject);
    EXPECT_EQ(threshold_decision({std::nextafter(0.3, 0.0), ""}, t), Decision::Reject);
}

TEST(Split, RatioSessionsAndExclusion) {
    auto bank = toy_bank({{"a", {10, 12}}, {"b", {20, 20}}, {"c", {20, 20}}, {"d", {20, 20}}});
    auto split = build_split(bank, "a", Activity::Seated);
    EXPECT_EQ(split.train.genuine(), 10u);
    EXPECT_EQ(split.train.impostors(), 15u);
    EXPECT_EQ(split.test.genuine(), 12u);
    EXPECT_EQ(split.test.impostors(), 18u);
    EXPECT_TRUE(split.exact_ratio_train);
    for (const auto* g : split.train.windows) EXPECT_EQ(g->origin.session_index, 1);
    for (const auto* g : split.test.windows) EXPECT_EQ(g->origin.session_index, 2);
    for (std::size_t i = 0; i < split.train.windows.size(); ++i)
        EXPECT_EQ(split.train.windows[i]->origin.user_id == "a", split.train.labels[i] == 1);
    EXPECT_EQ(tags(split.train, 0).size(), 15u);  // without replacement
}

TEST(Split, OddGenuineCountFloors) {
    auto bank = toy_bank({{"a", {7, 7}}, {"b", {30, 30}}});
    auto split = build_split(bank, "a", Activity::Seated);
    EXPECT_EQ(split.train.impostors(), 10u);
    EXPECT_FALSE(split.exact_ratio_train);
}

TEST(Split, TwoUsersDrawFromTheOther) {
    auto bank = toy_bank({{"a", {4, 4}}, {"b", {6, 6}}});
    auto split = build_split(bank, "a", Activity::Seated);
    for (const auto& t : tags(split.train, 0)) EXPECT_EQ(t.rfind("b/", 0), 0u);
    EXPECT_EQ(split.train.impostors(), 6u);
}

TEST(Split, DeterministicAndSeedSensitive) {
    auto bank = toy_bank({{"a", {10, 10}}, {"b", {30, 30}}, {"c", {30, 30}}});
    auto s1 = build_split(bank, "a", Activity::Seated);
    auto s2 = build_split(bank, "a", Activity::Seated);
    EXPECT_EQ(s1.train.windows, s2.train.windows);
    EXPECT_EQ(s1.test.windows, s2.test.windows);
    SplitConfig other;
    other.seed = 7;
    auto s3 = build_split(bank, "a", Activity::Seated, other);
    EXPECT_NE(s1.train.windows, s3.train.windows);
}

TEST(Split, Errors) {
    auto bank = toy_bank({{"a", {10, 10}}, {"b", {5, 5}}});
    try {
        build_split(bank, "a", Activity::Seated);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::NotEnoughImpostors);
    }
    try {
        build_split(bank, "a", Activity::WalkFlat);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::MissingSession);
    }
}

TEST(Report, BucketsAndMedianRecompute) {
    std::vector<UserResult> results;
    const double eers[] = {0.0, 0.02, 0.05, 0.07, 0.10, 0.30, 0.31, 0.5};
    for (std::size_t i = 0; i < 8; ++i) {
        UserResult r;
        r.user_id = "u" + std::to_string(i);
        r.language = i % 2 ? Language::NonNative : Language::Native;
        r.plan = "fused";
        r.kind = ClassifierKind::Lstm;
        r.eer = eers[i];
        results.push_back(r);
    }
    auto rows = summarize(results);
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[0].group, "all");
    EXPECT_EQ(rows[0].buckets, (std::array<std::size_t, 4>{2, 2, 2, 2}));
    EXPECT_DOUBLE_EQ(rows[0].median_eer, 0.5 * (0.07 + 0.10));
    double total = 0;
    for (std::size_t b = 0; b < 4; ++b) total += rows[0].bucket_percent(b);
    EXPECT_DOUBLE_EQ(total, 100.0);
    EXPECT_EQ(rows[1].users + rows[2].users, 8u);
    std::reverse(results.begin(), results.end());
    EXPECT_EQ(summarize(results)[0].median_eer, rows[0].median_eer);
    std::ostringstream csv, table;
    write_summary_csv(csv, rows);
    write_summary_table(table, rows);
    EXPECT_EQ(csv.str().substr(0, csv.str().find('\n')),
              "classifier,mode,activity,group,users,median_eer,pct_<0.05,pct_0.05-0.10,pct_0.10-0.30,pct_>0.30");
    EXPECT_NE(table.str().find("lstm  fused"), std::string::npos);
}
