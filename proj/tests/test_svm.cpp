#include <gtest/gtest.h>

#include <random>

#include "jawprint/svm.hpp"
#include "oracle/qp_oracle.hpp"

using namespace jawprint;

namespace {

struct Toy {
    Eigen::MatrixXd x;
    std::vector<int> y;
};

Toy random_set(std::mt19937_64& rng, int n, int d, double shift) {
    std::normal_distribution<double> g;
    Toy t{Eigen::MatrixXd(n, d), std::vector<int>(static_cast<std::size_t>(n))};
    for (int i = 0; i < n; ++i) {
        const int label = i < n / 2 ? 1 : 0;
        t.y[static_cast<std::size_t>(i)] = label;
        for (int c = 0; c < d; ++c) t.x(i, c) = g(rng) + (label ? shift : -shift);
    }
    return t;
}

} // namespace

TEST(Svm, SymmetricTwoPoints) {
    Eigen::MatrixXd x(2, 1);
    x << 1.0, -1.0;
    SvmConfig cfg;
    cfg.c_penalty = 1e6;
    auto model = train_svm(x, {1, 0}, cfg);
    EXPECT_NEAR(model.bias, 0.0, 1e-6);
    EXPECT_NEAR(svm_margin(model, Eigen::VectorXd::Constant(1, 1.0)), 1.0, 1e-6);
    EXPECT_NEAR(svm_margin(model, Eigen::VectorXd::Constant(1, -1.0)), -1.0, 1e-6);
}

TEST(Svm, MatchesBarrierQpOracle) {
    std::mt19937_64 rng(17);
    std::uniform_int_distribution<int> size(4, 20), dims(1, 5);
    const double cs[] = {0.05, 1.0, 20.0};
    for (int trial = 0; trial < 60; ++trial) {
        const int n = size(rng), d = dims(rng);
        auto set = random_set(rng, n, d, trial % 2 ? 1.5 : 0.4);
        SvmConfig cfg;
        cfg.c_penalty = cs[trial % 3];
        auto model = train_svm(set.x, set.y, cfg);
        auto qp = oracle::soft_margin_qp(set.x, set.y, cfg.c_penalty);
        const double obj = svm_primal_objective(model.weights, model.bias, set.x, set.y, cfg.c_penalty);
        EXPECT_NEAR(obj, qp.objective, 1e-6) << "trial " << trial;
        // the optimal bias can be a flat interval; both sides report its midpoint
        const double qp_bias = oracle::canonical_bias(set.x, set.y, qp.w);
        for (Eigen::Index i = 0; i < set.x.rows(); ++i) {
            const double ours = set.x.row(i).dot(model.weights) + model.bias;
            const double theirs = set.x.row(i).dot(qp.w) + qp_bias;
            EXPECT_EQ(ours >= 0.0, theirs >= 0.0) << "trial " << trial << " row " << i;
        }
    }
}

TEST(Svm, HingeViolationsNonIncreasingInC) {
    // Separable clusters plus one mislabeled-looking outlier close to the other class.
    Eigen::MatrixXd x(9, 2);
    x << 2, 2, 2.5, 1.5, 3, 2.2, 1.8, 2.8, -2, -2, -2.5, -1.4, -3, -2.1, -1.7, -2.9, 0.3, 0.2;
    std::vector<int> y{1, 1, 1, 1, 0, 0, 0, 0, 0};
    std::size_t previous = std::numeric_limits<std::size_t>::max();
    for (double c : {1e-3, 1e-2, 0.1, 1.0, 10.0, 100.0, 1e4}) {
        SvmConfig cfg;
        cfg.c_penalty = c;
        auto m = train_svm(x, y, cfg);
        std::size_t violations = 0;
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            const double yi = y[static_cast<std::size_t>(i)] ? 1.0 : -1.0;
            violations += static_cast<std::size_t>(yi * (x.row(i).dot(m.weights) + m.bias) < 1.0 - 1e-9);
        }
        EXPECT_LE(violations, previous) << "C=" << c;
        previous = violations;
    }
    EXPECT_EQ(previous, 0u);
}

TEST(Svm, DeterministicAndErrors) {
    std::mt19937_64 rng(3);
    auto set = random_set(rng, 30, 4, 0.5);
    auto a = train_svm(set.x, set.y);
    auto b = train_svm(set.x, set.y);
    EXPECT_EQ(a.weights, b.weights);
    EXPECT_EQ(a.bias, b.bias);
    EXPECT_EQ(a.platt_a, b.platt_a);
    try {
        train_svm(set.x, std::vector<int>(30, 1));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::SingleClass);
    }
    SvmConfig tiny;
    tiny.max_iterations = 1;
    try {
        train_svm(set.x, set.y, tiny);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::NonConvergence);
    }
    try {
        svm_score(a, Eigen::VectorXd::Zero(3));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::DimensionMismatch);
    }
}

TEST(Platt, MidpointAndMonotone) {
    SvmModel m;
    m.weights = Eigen::VectorXd::Constant(1, 1.0);
    m.bias = 0.0;
    m.platt_a = 2.0;
    m.platt_b = 0.0;
    EXPECT_EQ(svm_score(m, Eigen::VectorXd::Zero(1)).probability, 0.5);
    double last = 0.0;
    for (double v = -30.0; v <= 30.0; v += 0.25) {
        const double p = svm_score(m, Eigen::VectorXd::Constant(1, v)).probability;
        EXPECT_GE(p, last);
        EXPECT_GE(p, 0.0);
        EXPECT_LE(p, 1.0);
        last = p;
    }
    EXPECT_GT(svm_score(m, Eigen::VectorXd::Constant(1, 5.0)).probability,
              svm_score(m, Eigen::VectorXd::Constant(1, 4.0)).probability);
    EXPECT_NEAR(svm_score(m, Eigen::VectorXd::Constant(1, 40.0)).probability, 1.0, 1e-15);
}

TEST(Platt, MatchesIrlsOracle) {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<double> f;
        std::vector<int> y;
        for (int i = 0; i < 40; ++i) {
            const int label = i % 3 == 0 ? 1 : 0;
            y.push_back(label);
            f.push_back(g(rng) + (label ? 0.8 : -0.8));
        }
        const double pos = 14.0, neg = 26.0;
        std::vector<double> t;
        for (int l : y) t.push_back(l ? (pos + 1) / (pos + 2) : 1 / (neg + 2));
        auto fit = fit_platt(f, y);
        auto [oa, ob] = oracle::logistic_irls(f, t);
        for (double m = -4.0; m <= 4.0; m += 0.5)
            EXPECT_NEAR(logistic(fit.a * m + fit.b), logistic(oa * m + ob), 1e-6);
    }
}

TEST(Platt, SignInvariantUnderPositiveRescale) {
    std::mt19937_64 rng(8);
    auto set = random_set(rng, 24, 3, 0.7);
    auto model = train_svm(set.x, set.y);
    EXPECT_GT(model.platt_a, 0.0);
    std::normal_distribution<double> g;
    for (int k = 0; k < 50; ++k) {
        Eigen::VectorXd probe(3);
        for (int c = 0; c < 3; ++c) probe(c) = g(rng);
        const double margin = svm_margin(model, probe);
        for (double s : {0.01, 1.0, 100.0}) {
            const double p = logistic(model.platt_a * s * margin);
            EXPECT_EQ(p > 0.5, margin > 0.0);
        }
    }
}
