// Copyright 2026 The APFEx Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "apfex/errors.hpp"
#include "apfex/strategies.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

namespace apfex {
namespace {

StrategyState settled_state(Eigen::Index k, Eigen::Index p, Strategy active = Strategy::adaptive) {
    StrategyState s(k, p, SelectorThresholds{}, 1);
    s.active = active;
    s.dwell = 10;
    return s;
}

TEST(ImprovementRates, Examples) {
    EXPECT_NEAR(improvement_rates(Eigen::Vector2d(1.0, 2.0), Eigen::Vector2d(0.9, 2.0), 1e-8)[0], 0.1, 1e-15);
    EXPECT_DOUBLE_EQ(improvement_rates(Eigen::Vector2d(1.0, 2.0), Eigen::Vector2d(0.9, 2.0), 1e-8)[1], 0.0);
    EXPECT_DOUBLE_EQ(improvement_rates(Eigen::Vector2d(0.0, 0.0), Eigen::Vector2d(0.0, 0.0), 1e-8)[0], 0.0);
    EXPECT_LT(improvement_rates(Eigen::Vector2d(1.0, 1.0), Eigen::Vector2d(1.5, 1.0), 1e-8)[0], 0.0);
}

TEST(AwWeights, EqualRatesGiveUniform) {
    const SimplexWeights a = aw_weights(Eigen::Vector3d::Constant(0.3), 10.0);
    for (Eigen::Index k = 0; k < 3; ++k) EXPECT_NEAR(a[k], 1.0 / 3.0, 1e-15);
}

TEST(AwWeights, SlowerObjectiveGetsMoreWeight) {
    const SimplexWeights a = aw_weights(Eigen::Vector2d(0.0, std::log(3.0)), 1.0);
    EXPECT_NEAR(a[0], 0.75, 1e-15);
    EXPECT_NEAR(a[1], 0.25, 1e-15);
}

TEST(AwWeights, FloorForRatesInZeroGamma) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> rho(0.0, 0.01);
    for (int t = 0; t < 10000; ++t) {
        const int k = 2 + t % 5;
        Eigen::VectorXd r(k);
        for (int i = 0; i < k; ++i) r[i] = rho(rng);
        if (t % 7 == 0) r.setConstant(0.01);
        const SimplexWeights a = aw_weights(r, 10.0);
        for (int i = 0; i < k; ++i) EXPECT_GE(a[i], std::exp(-0.1) / k);
    }
}

TEST(AwWeights, FloorUnderBoundedRates) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> rho(-0.5, 0.01);
    for (int t = 0; t < 2000; ++t) {
        const int k = 2 + t % 5;
        Eigen::VectorXd r(k);
        for (int i = 0; i < k; ++i) r[i] = rho(rng);
        const SimplexWeights a = aw_weights(r, 10.0);
        const double spread = r.maxCoeff() - r.minCoeff();
        for (int i = 0; i < k; ++i) {
            EXPECT_GE(a[i], std::exp(-10.0 * spread) / k * (1.0 - 1e-12));
            EXPECT_GT(a[i], 0.0);
            EXPECT_LT(a[i], 1.0);
        }
    }
}

TEST(AwWeights, ExtremeRatesStayFinite) {
    const SimplexWeights a = aw_weights(Eigen::Vector2d(-1e6, 1e6), 10.0);
    EXPECT_TRUE(a.values().allFinite());
    EXPECT_NEAR(a.values().sum(), 1.0, 1e-12);
}

TEST(Stagnation, ConstantLossesDetected) {
    LossHistory h(6);
    for (int i = 0; i < 6; ++i) h.push(Eigen::Vector2d(1.0, 2.0));
    EXPECT_TRUE(detect_stagnation(h, 1e-5, 5));
}

TEST(Stagnation, OneJumpResetsTheCount) {
    LossHistory h(6);
    const double losses[] = {1.0, 1.0, 1.0, 2.0, 2.0, 2.0};
    for (double v : losses) h.push(Eigen::VectorXd::Constant(1, v));
    EXPECT_FALSE(detect_stagnation(h, 1e-5, 5));
}

TEST(Stagnation, CounterSimulation) {
    const double delta = 1e-3;
    const int window = 4;
    LossHistory h(static_cast<std::size_t>(window) + 1);
    double level = 1.0;
    h.push(Eigen::VectorXd::Constant(1, level));
    const auto step = [&](double change) {
        level -= change;
        h.push(Eigen::VectorXd::Constant(1, level));
        return detect_stagnation(h, delta, window);
    };
    for (int i = 0; i < window - 1; ++i) EXPECT_FALSE(step(delta / 2));
    EXPECT_FALSE(step(2 * delta));
    for (int i = 0; i < window - 1; ++i) EXPECT_FALSE(step(delta / 2));
    EXPECT_TRUE(step(delta / 2));
}

TEST(Stagnation, ShortHistoryIsNotStagnant) {
    LossHistory h(10);
    h.push(Eigen::Vector2d(1, 1));
    h.push(Eigen::Vector2d(1, 1));
    EXPECT_FALSE(detect_stagnation(h, 1e-5, 5));
    EXPECT_THROW((void)detect_stagnation(h, 1e-5, 0), ParameterError);
}

TEST(Dirichlet, MomentsMatchUniformDirichlet) {
    for (int k : {2, 3, 5}) {
        std::mt19937_64 rng(100 + static_cast<std::uint64_t>(k));
        const int draws = 100000;
        Eigen::VectorXd sum = Eigen::VectorXd::Zero(k), sq = Eigen::VectorXd::Zero(k);
        for (int i = 0; i < draws; ++i) {
            const Eigen::VectorXd a = sample_dirichlet(k, rng).values();
            sum += a;
            sq += a.cwiseProduct(a);
        }
        const double var_expected = (k - 1.0) / (k * k * (k + 1.0));
        for (int c = 0; c < k; ++c) {
            const double mean = sum[c] / draws;
            const double var = sq[c] / draws - mean * mean;
            EXPECT_LE(std::abs(mean - 1.0 / k), 3.0 * std::sqrt(var_expected / draws)) << "K=" << k;
            EXPECT_LE(std::abs(var - var_expected), 0.1 * var_expected) << "K=" << k;
        }
    }
}

TEST(Pss, NoSmoothingFollowsTheSample) {
    std::mt19937_64 rng(2);
    const GradientSet g = testing::random_matrix(3, 5, rng);
    StrategyState s(3, 5, SelectorThresholds{}, 7);
    const DirectionResult r = pss_direction(g, s, 1.0);
    const Eigen::VectorXd expected = -(g.transpose() * r.alpha.values()).normalized();
    EXPECT_TRUE(r.direction.isApprox(expected, 1e-14));
    EXPECT_EQ(s.d_last, r.direction);
}

TEST(Pss, FirstStepFromZeroMemoryIsRenormalizedSample) {
    std::mt19937_64 rng(3);
    const GradientSet g = testing::random_matrix(2, 4, rng);
    StrategyState s(2, 4, SelectorThresholds{}, 9);
    ASSERT_EQ(s.d_last, Eigen::VectorXd::Zero(4));
    const DirectionResult r = pss_direction(g, s, 0.5);
    EXPECT_TRUE(r.direction.isApprox(-r.combined.normalized(), 1e-14));
}

TEST(Pss, SmoothedDirectionBlendsWithMemory) {
    const GradientSet g = GradientSet::Identity(2, 2);
    StrategyState s(2, 2, SelectorThresholds{}, 5);
    s.d_last = Eigen::Vector2d(-1.0, 0.0);
    const DirectionResult r = pss_direction(g, s, 0.5);
    const Eigen::Vector2d blend = 0.5 * (-r.combined) + 0.5 * Eigen::Vector2d(-1.0, 0.0);
    EXPECT_TRUE(r.direction.isApprox(blend.normalized(), 1e-14));
    EXPECT_NEAR(r.direction.norm(), 1.0, 1e-14);
}

TEST(Pss, FallsBackWhenBlendWouldAscend) {
    GradientSet g(1, 2);
    g << 1.0, 0.0;
    StrategyState s(1, 2, SelectorThresholds{}, 5);
    s.d_last = Eigen::Vector2d(10.0, 0.0);  // uphill memory
    const DirectionResult r = pss_direction(g, s, 0.5);
    EXPECT_TRUE(r.direction.isApprox(Eigen::Vector2d(-1.0, 0.0), 1e-14));
}

TEST(Pss, SmoothingOutsideRangeRejected) {
    StrategyState s(2, 2, SelectorThresholds{}, 5);
    EXPECT_THROW((void)pss_direction(GradientSet::Identity(2, 2), s, 0.0), ParameterError);
    EXPECT_THROW((void)pss_direction(GradientSet::Identity(2, 2), s, 1.5), ParameterError);
}

TEST(Selector, InitialStrategyIsAdaptive) {
    EXPECT_EQ(StrategyState(3, 4, SelectorThresholds{}, 0).active, Strategy::adaptive);
}

TEST(Selector, AlignedGradientsChooseCone) {
    // pairwise cosine 0.9 between two unit vectors
    GradientSet g(2, 2);
    g << 1.0, 0.0, 0.9, std::sqrt(1.0 - 0.81);
    EXPECT_NEAR(min_pairwise_cosine(g), 0.9, 1e-12);
    const StrategyState s = settled_state(2, 2);
    EXPECT_EQ(select_strategy(s, g, Eigen::Vector2d(0.1, 0.1), SelectorThresholds{}), Strategy::pareto_cone);
}

TEST(Selector, StagnationOverridesAlignment) {
    GradientSet g(2, 2);
    g << 1.0, 0.0, 0.9, std::sqrt(1.0 - 0.81);
    StrategyState s = settled_state(2, 2);
    for (int i = 0; i < 6; ++i) s.history.push(Eigen::Vector2d(0.5, 0.5));
    EXPECT_EQ(select_strategy(s, g, Eigen::Vector2d::Zero(), SelectorThresholds{}), Strategy::exploration);
}

TEST(Selector, ImbalanceChoosesAdaptive) {
    GradientSet g(2, 2);
    g << 1.0, 0.0, -1.0, 0.2;  // misaligned
    const StrategyState s = settled_state(2, 2, Strategy::pareto_cone);
    EXPECT_EQ(select_strategy(s, g, Eigen::Vector2d(0.5, 0.05), SelectorThresholds{}), Strategy::adaptive);
}

TEST(Selector, SingleImprovingObjectiveSkipsRatioRule) {
    GradientSet g(2, 2);
    g << 1.0, 0.0, -1.0, 0.2;
    const StrategyState s = settled_state(2, 2, Strategy::pareto_cone);
    EXPECT_EQ(select_strategy(s, g, Eigen::Vector2d(0.5, -0.2), SelectorThresholds{}), Strategy::pareto_cone);
}

TEST(Selector, HysteresisHoldsTheCurrentStrategy) {
    GradientSet g(2, 2);
    g << 1.0, 0.0, 0.9, std::sqrt(1.0 - 0.81);
    StrategyState s(2, 2, SelectorThresholds{}, 0);
    s.enter(Strategy::adaptive);
    EXPECT_EQ(select_strategy(s, g, Eigen::Vector2d::Zero(), SelectorThresholds{}), Strategy::adaptive);
    s.enter(Strategy::adaptive);
    s.enter(Strategy::adaptive);
    EXPECT_EQ(select_strategy(s, g, Eigen::Vector2d::Zero(), SelectorThresholds{}), Strategy::pareto_cone);
}

TEST(Selector, DeterministicForSameInputs) {
    std::mt19937_64 rng(8);
    for (int t = 0; t < 50; ++t) {
        const GradientSet g = testing::random_matrix(3, 4, rng);
        const Eigen::VectorXd rho = testing::random_vector(3, rng, 0.1);
        const StrategyState s = settled_state(3, 4);
        EXPECT_EQ(select_strategy(s, g, rho, SelectorThresholds{}), select_strategy(s, g, rho, SelectorThresholds{}));
    }
}

TEST(Directions, EveryStrategyAlignsWithItsCombination) {
    std::mt19937_64 rng(21);
    StrategyState s(4, 6, SelectorThresholds{}, 3);
    for (int t = 0; t < 200; ++t) {
        const GradientSet g = testing::random_matrix(4, 6, rng);
        const PcpResult cone = pcp_direction(g, min_norm_solve(gram(g)).alpha);
        if (!cone.stationary) {
            EXPECT_GE(-cone.combined.dot(cone.direction), 0.0);
        }
        const DirectionResult aw = weighted_direction(g, aw_weights(testing::random_vector(4, rng, 0.1), 10.0), 1e-8);
        EXPECT_GE(-aw.combined.dot(aw.direction), 0.0);
        const DirectionResult pss = pss_direction(g, s, 0.5);
        EXPECT_GE(-pss.combined.dot(pss.direction), 0.0);
    }
}

TEST(Thresholds, Validation) {
    SelectorThresholds t;
    EXPECT_NO_THROW(t.validate());
    t.imbalance_ratio = 1.0;
    EXPECT_THROW(t.validate(), ParameterError);
    t = {};
    t.explore_smoothing = 0.0;
    EXPECT_THROW(t.validate(), ParameterError);
    t = {};
    t.stagnation_window = 0;
    EXPECT_THROW(t.validate(), ParameterError);
}

TEST(StrategyNames, RoundTrip) {
    for (Strategy s : {Strategy::pareto_cone, Strategy::adaptive, Strategy::exploration}) {
        EXPECT_EQ(parse_strategy(to_string(s)), s);
    }
    EXPECT_THROW((void)parse_strategy("gd"), ParameterError);
}

}  // namespace
}  // namespace apfex
