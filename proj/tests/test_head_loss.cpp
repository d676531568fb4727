#include <gtest/gtest.h>

#include "mtgcn/head_loss.hpp"
#include "test_util.hpp"

using namespace mtgcn;

TEST(EstimateWeight, SelectsHeadEntries) {
    RealTensor h(2, 2, 1);
    h(0, 0, 0) = 1.0; // h_i = [1, 0]
    h(1, 1, 0) = 1.0; // h_j = [0, 1]
    EXPECT_EQ(estimate_weight(h, {1, 0, 1, 0.0}, RegressionHead{{1, 2, 3, 4}}), 5.0);
    EXPECT_EQ(estimate_weight(h, {1, 0, 1, 0.0}, RegressionHead{{0, 0, 0, 0}}), 0.0);
}

TEST(EstimateWeight, MatchesConcatenateThenDot) {
    Rng rng(3);
    auto h = mtgcn::testing::random_tensor(rng, 5, 4, 3);
    RegressionHead head{std::vector<double>(8)};
    for (auto& v : head.r)
        v = rng.uniform(-1, 1);
    for (std::size_t t = 1; t <= 3; ++t)
        for (std::size_t i = 0; i < 5; ++i)
            for (std::size_t j = 0; j < 5; ++j) {
                std::vector<double> cat;
                for (std::size_t f = 0; f < 4; ++f)
                    cat.push_back(h(i, f, t - 1));
                for (std::size_t f = 0; f < 4; ++f)
                    cat.push_back(h(j, f, t - 1));
                double ref = 0.0;
                for (std::size_t k = 0; k < 8; ++k)
                    ref += cat[k] * head.r[k];
                EXPECT_NEAR(estimate_weight(h, {t, i, j, 0.0}, head), ref, 1e-14);
            }
}

TEST(EstimateWeight, RejectsBadInputs) {
    RealTensor h(2, 2, 2);
    EXPECT_THROW(estimate_weight(h, {1, 0, 1, 0.0}, RegressionHead{{1, 2, 3}}), DimensionError);
    EXPECT_THROW(estimate_weight(h, {3, 0, 1, 0.0}, RegressionHead{{1, 2, 3, 4}}), DomainError);
    EXPECT_THROW(estimate_weight(h, {0, 0, 1, 0.0}, RegressionHead{{1, 2, 3, 4}}), DomainError);
    EXPECT_THROW(estimate_weight(h, {1, 0, 2, 0.0}, RegressionHead{{1, 2, 3, 4}}), DomainError);
}

TEST(Loss, Examples) {
    std::vector<LinkObservation> one{{1, 0, 1, 2.0}};
    std::vector<double> p1{1.0};
    EXPECT_EQ(loss(one, p1, 0.0, 0.0), 1.0);
    std::vector<double> perfect{2.0};
    EXPECT_EQ(loss(one, perfect, 3.0, 0.0), 0.0);

    std::vector<LinkObservation> two{{1, 0, 1, 1.0}, {1, 1, 0, 0.0}};
    std::vector<double> p2{0.0, 2.0}; // residuals 1, -2
    EXPECT_EQ(loss(two, p2, 2.0, 0.5), 6.0);
    EXPECT_EQ(loss(two, p2, 2.0, 0.5, Penalty::squared_l2_norm), 7.0);
    EXPECT_THROW(loss(two, p1, 0.0, 0.0), DimensionError);
}

TEST(Loss, ZeroKappaIsCountTimesMse) {
    Rng rng(9);
    std::vector<LinkObservation> obs;
    std::vector<double> pred;
    for (int k = 0; k < 50; ++k) {
        obs.push_back({1, 0, 1, rng.uniform()});
        pred.push_back(rng.uniform());
    }
    const auto res = residuals(obs, pred);
    const double r = rmse(res);
    EXPECT_NEAR(loss(obs, pred, 10.0, 0.0), 50.0 * r * r, 1e-12);
}

TEST(Metrics, Examples) {
    std::vector<double> a{0.5, 0.5};
    EXPECT_EQ(mae(a), 0.5);
    EXPECT_EQ(rmse(a), 0.5);
    std::vector<double> b{0.0, 2.0};
    EXPECT_EQ(mae(b), 1.0);
    EXPECT_DOUBLE_EQ(rmse(b), std::sqrt(2.0));
    std::vector<double> c{0.0, 0.0, 0.0};
    EXPECT_EQ(mae(c), 0.0);
    EXPECT_EQ(rmse(c), 0.0);
    EXPECT_THROW(mae(std::vector<double>{}), DomainError);
    EXPECT_THROW(rmse(std::vector<double>{}), DomainError);
}

TEST(Metrics, RmseDominatesMae) {
    Rng rng(21);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> r(1 + rng.index(30));
        for (auto& v : r)
            v = rng.normal() * rng.uniform(0.0, 3.0);
        EXPECT_GE(rmse(r), mae(r) - 1e-15);
    }
}

TEST(Metrics, EvaluateMetricsCountsObservations) {
    std::vector<LinkObservation> obs{{1, 0, 1, 1.0}, {2, 1, 0, 0.0}};
    std::vector<double> pred{0.0, 2.0};
    auto m = evaluate_metrics(obs, pred);
    EXPECT_EQ(m.count, 2u);
    EXPECT_EQ(m.mae, 1.5);
    EXPECT_DOUBLE_EQ(m.rmse, std::sqrt(2.5));
}
