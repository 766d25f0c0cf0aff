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
#include "apfex/fairloss.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <random>

namespace apfex {
namespace {

double tanh_round(double x) { return std::tanh(5.0 * (x - 0.5)) / 2.0 + 0.5; }

GroupTable two_groups(int first, int second) {
    SensitiveAttributes a;
    a.codes.resize(first + second, 1);
    for (int i = 0; i < first + second; ++i) a.codes(i, 0) = i < first ? 0 : 1;
    a.cardinalities = {2};
    return build_intersection(a);
}

TEST(SoftRound, Values) {
    EXPECT_DOUBLE_EQ(soft_round(0.5, 0.5), 0.5);
    EXPECT_NEAR(soft_round(0.7, 0.5), std::tanh(1.0) / 2.0 + 0.5, 1e-15);
    EXPECT_NEAR(soft_round(0.7, 0.5), 0.880797, 1e-6);
    EXPECT_NEAR(soft_round(1e6, 0.5), 1.0, 1e-15);
    EXPECT_NEAR(soft_round(-1e6, 0.5), 0.0, 1e-15);
}

TEST(Ccr, BoundariesAndInterior) {
    EXPECT_DOUBLE_EQ(ccr(0.4, 0.5, 0.1), 0.0);
    EXPECT_DOUBLE_EQ(ccr(0.6, 0.5, 0.1), 1.0);
    EXPECT_DOUBLE_EQ(ccr(0.5, 0.5, 0.1), 0.5);
    EXPECT_NEAR(ccr(0.55, 0.5, 0.1), 0.75, 1e-12);
    EXPECT_NEAR(ccr_derivative(0.55, 0.5, 0.1), 5.0, 1e-12);
    EXPECT_DOUBLE_EQ(ccr_derivative(0.2, 0.5, 0.1), 0.0);
    EXPECT_DOUBLE_EQ(ccr_derivative(0.9, 0.5, 0.1), 0.0);
}

TEST(Ccr, KinkDerivativeIsMidpointSubgradient) {
    EXPECT_NEAR(ccr_derivative(0.4, 0.5, 0.1), 2.5, 1e-12);
    EXPECT_NEAR(ccr_derivative(0.6, 0.5, 0.1), 2.5, 1e-12);
}

TEST(Ccr, NonPositiveWidthRejected) {
    EXPECT_THROW((void)ccr(0.3, 0.5, 0.0), ParameterError);
    EXPECT_THROW((void)ccr_derivative(0.3, 0.5, -1.0), ParameterError);
}

TEST(Surrogates, MonotoneAndInUnitInterval) {
    double prev_t = -1.0, prev_c = -1.0;
    for (int i = 0; i <= 4000; ++i) {
        const double x = -1.0 + i * 0.00075;
        const double t = soft_round(x, 0.5), c = ccr(x, 0.5, 0.1);
        EXPECT_GE(t, prev_t);
        EXPECT_GE(c, prev_c);
        EXPECT_GE(t, 0.0);
        EXPECT_LE(t, 1.0);
        EXPECT_GE(c, 0.0);
        EXPECT_LE(c, 1.0);
        prev_t = t;
        prev_c = c;
    }
}

TEST(Ccr, LipschitzBound) {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> x(-0.5, 1.5);
    for (double gamma : {0.2, 0.1, 0.01}) {
        for (int i = 0; i < 20000; ++i) {
            const double a = x(rng), b = x(rng);
            EXPECT_LE(std::abs(ccr(a, 0.5, gamma) - ccr(b, 0.5, gamma)), std::abs(a - b) / (2.0 * gamma) + 1e-15);
        }
    }
}

TEST(Ccr, PointwiseConvergenceIsMonotone) {
    for (double x : {0.05, 0.3, 0.45, 0.499, 0.501, 0.55, 0.7, 0.95}) {
        const double indicator = x > 0.5 ? 1.0 : 0.0;
        double prev = 2.0;
        for (double gamma : {0.2, 0.1, 0.01, 0.001, 0.0001}) {
            const double err = std::abs(ccr(x, 0.5, gamma) - indicator);
            EXPECT_LE(err, prev);
            prev = err;
        }
        EXPECT_EQ(prev, 0.0) << x;
    }
}

TEST(GroupRates, DpTwoGroupsMatchesPerScoreEvaluation) {
    Eigen::VectorXd s(4);
    s << 0.9, 0.8, 0.2, 0.4;
    const GroupRates r = dp_per_group_soft(s, two_groups(2, 2), SurrogateConfig{});
    ASSERT_EQ(r.present_count(), 2);
    EXPECT_NEAR(r.value[0], (tanh_round(0.9) + tanh_round(0.8)) / 2.0, 1e-15);
    EXPECT_NEAR(r.value[1], (tanh_round(0.2) + tanh_round(0.4)) / 2.0, 1e-15);
    EXPECT_NEAR(r.value[0], 0.967294, 1e-6);
    EXPECT_NEAR(r.value[1], 0.158184, 1e-6);
}

TEST(GroupRates, AllScoresAtThresholdGiveHalf) {
    const Eigen::VectorXd s = Eigen::VectorXd::Constant(6, 0.5);
    for (double v : dp_per_group_soft(s, two_groups(3, 3), SurrogateConfig{}).value) EXPECT_DOUBLE_EQ(v, 0.5);
}

TEST(GroupRates, EmptyGroupIsAbsentNotZero) {
    SensitiveAttributes a;
    a.codes.resize(4, 1);
    a.codes << 0, 0, 2, 2;
    a.cardinalities = {3};
    const GroupRates r = dp_per_group_soft(Eigen::VectorXd::Constant(4, 0.7), build_intersection(a), SurrogateConfig{});
    EXPECT_EQ(r.present, (std::vector<bool>{true, false, true}));
    EXPECT_EQ(r.present_values().size(), 2u);
}

TEST(GroupRates, SingleNonEmptyGroupIsDegenerate) {
    EXPECT_THROW((void)dp_per_group_soft(Eigen::VectorXd::Constant(3, 0.7), two_groups(3, 0), SurrogateConfig{}),
                 DegenerateGroupingError);
}

TEST(GroupRates, TprHandComputation) {
    Eigen::VectorXd s(6);
    s << 0.9, 0.3, 0.6, 0.2, 0.7, 0.55;
    const std::vector<int> y{1, 1, -1, 1, -1, 1};
    const GroupRates r = tpr_per_group_soft(s, y, two_groups(3, 3), SurrogateConfig{}, 1e-6);
    EXPECT_NEAR(r.value[0], 0.550608080725973, 1e-12);
    EXPECT_NEAR(r.value[1], 0.334942434718493, 1e-12);
    EXPECT_NEAR(r.denominator[0], 2.0 + 1e-6, 1e-15);
}

TEST(GroupRates, TprSaturatesAtCountOverCountPlusEps) {
    const Eigen::VectorXd s = Eigen::VectorXd::Constant(5, 50.0);
    const std::vector<int> y{1, 1, 1, 1, 1};
    const GroupRates r = tpr_per_group_soft(s, y, two_groups(2, 3), SurrogateConfig{}, 1e-6);
    EXPECT_NEAR(r.value[0], 2.0 / (2.0 + 1e-6), 1e-12);
    EXPECT_NEAR(r.value[1], 3.0 / (3.0 + 1e-6), 1e-12);
}

TEST(GroupRates, TprGroupWithoutPositivesIsAbsent) {
    const std::vector<int> y{1, -1, 1, -1, -1, -1};
    SensitiveAttributes a;
    a.codes.resize(6, 1);
    a.codes << 0, 0, 1, 1, 2, 2;
    a.cardinalities = {3};
    const GroupRates r = tpr_per_group_soft(Eigen::VectorXd::Constant(6, 0.6), y, build_intersection(a),
                                            SurrogateConfig{}, 1e-6);
    EXPECT_EQ(r.present, (std::vector<bool>{true, true, false}));
}

TEST(Pairwise, ConstantRates) {
    const std::vector<double> m{0.3, 0.3, 0.3};
    EXPECT_DOUBLE_EQ(pairwise_fairness(m, 1e-6, false), 0.0);
    EXPECT_NEAR(pairwise_fairness(m, 1e-6, true), std::sqrt(1e-6), 1e-15);
}

TEST(Pairwise, ThreeRatesEnumerated) {
    const std::vector<double> m{0.2, 0.5, 0.8};
    EXPECT_NEAR(pairwise_fairness(m, 1e-6, false), (0.3 + 0.6 + 0.3) / 3.0, 1e-15);
    const std::vector<double> extreme{0.0, 1.0};
    EXPECT_DOUBLE_EQ(pairwise_fairness(extreme, 1e-6, false), 1.0);
}

TEST(Pairwise, FewerThanTwoRatesIsDegenerate) {
    const std::vector<double> one{0.4};
    EXPECT_THROW((void)pairwise_fairness(one, 1e-6, false), DegenerateGroupingError);
}

TEST(Pairwise, PermutationInvariantAndZeroOnlyWhenEqual) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> m(5);
        for (auto& v : m) v = u(rng);
        const double base = pairwise_fairness(m, 1e-6, false);
        EXPECT_GT(base, 0.0);
        std::shuffle(m.begin(), m.end(), rng);
        EXPECT_NEAR(pairwise_fairness(m, 1e-6, false), base, 1e-15);
    }
}

TEST(Pairwise, GradientMatchesDifferences) {
    const std::vector<double> m{0.1, 0.45, 0.8, 0.3};
    for (bool smooth : {false, true}) {
        const auto g = pairwise_fairness_grad(m, 1e-6, smooth);
        for (std::size_t i = 0; i < m.size(); ++i) {
            auto up = m, down = m;
            up[i] += 1e-6;
            down[i] -= 1e-6;
            const double central =
                (pairwise_fairness(up, 1e-6, smooth) - pairwise_fairness(down, 1e-6, smooth)) / 2e-6;
            EXPECT_NEAR(g[i], central, 1e-7);
        }
    }
}

TEST(CombinedLoss, Arithmetic) {
    EXPECT_DOUBLE_EQ(combined_loss(2.0, 0.3, 0.0), 0.3);
    EXPECT_NEAR(combined_loss(2.0, 0.3, 0.1), 0.5, 1e-15);
    EXPECT_NEAR(combined_loss(2.0, 0.0, 0.1), 0.2, 1e-15);
    EXPECT_THROW((void)combined_loss(1.0, 1.0, -0.1), ParameterError);
    // linear in each argument
    EXPECT_NEAR(combined_loss(3.0, 0.7, 0.1) - combined_loss(1.0, 0.7, 0.1), 0.2, 1e-15);
}

TEST(MulticlassDp, SingleSample) {
    Eigen::MatrixXd p(1, 2);
    p << 0.7, 0.3;
    const ClassGroupRates r = multiclass_dp(p, Eigen::MatrixXd::Ones(1, 1));
    EXPECT_NEAR(r.dp(0, 0), 0.7, 1e-15);
    EXPECT_NEAR(r.dp(1, 0), 0.3, 1e-15);
}

TEST(MulticlassDp, UniformProbabilities) {
    const Eigen::MatrixXd p = Eigen::MatrixXd::Constant(5, 4, 0.25);
    Eigen::MatrixXd h(5, 2);
    h << 1, 0, 0.3, 0.7, 0, 1, 0.5, 0.5, 1, 0;
    const ClassGroupRates r = multiclass_dp(p, h);
    EXPECT_TRUE(r.dp.isApproxToConstant(0.25, 1e-14));
}

TEST(MulticlassDp, SoftGroupsByBruteForce) {
    Eigen::MatrixXd p(4, 2);
    p << 0.7, 0.3, 0.2, 0.8, 0.5, 0.5, 0.9, 0.1;
    Eigen::MatrixXd h(4, 2);
    h << 1, 0, 0.75, 0.25, 0, 1, 0.5, 0.5;
    const ClassGroupRates r = multiclass_dp(p, h);
    EXPECT_NEAR(r.dp(0, 0), 0.5777777777777778, 1e-14);
    EXPECT_NEAR(r.dp(0, 1), 0.5714285714285714, 1e-14);
    EXPECT_NEAR(r.dp(1, 0), 0.4222222222222223, 1e-14);
    EXPECT_NEAR(r.dp(1, 1), 0.42857142857142855, 1e-14);
}

TEST(MulticlassDp, ZeroMassGroupFlagged) {
    Eigen::MatrixXd h(2, 3);
    h << 1, 0, 0, 0, 1, 0;
    const ClassGroupRates r = multiclass_dp(Eigen::MatrixXd::Constant(2, 2, 0.5), h);
    EXPECT_EQ(r.present, (std::vector<bool>{true, true, false}));
    EXPECT_EQ(r.present_dp().cols(), 2);
}

TEST(MulticlassFairLoss, IdenticalColumnsGiveSqrtEps) {
    const Eigen::MatrixXd dp = Eigen::MatrixXd::Constant(3, 4, 0.2);
    EXPECT_NEAR(multiclass_fair_loss(dp, 1e-6), 1e-3, 1e-15);
}

TEST(MulticlassFairLoss, TwoGroupsOneClass) {
    Eigen::MatrixXd dp(1, 2);
    dp << 0.2, 0.8;
    EXPECT_NEAR(multiclass_fair_loss(dp, 1e-6), std::sqrt(0.36 + 1e-6), 1e-15);
    EXPECT_NEAR(multiclass_fair_loss(dp, 1e-6), 0.60000083, 1e-8);
}

TEST(MulticlassFairLoss, PairEnumeration) {
    Eigen::MatrixXd dp(2, 3);
    dp << 0.1, 0.4, 0.7, 0.9, 0.6, 0.3;
    EXPECT_NEAR(multiclass_fair_loss(dp, 1e-6), 0.400001388885610, 1e-14);
    EXPECT_THROW((void)multiclass_fair_loss(Eigen::MatrixXd::Ones(2, 1), 1e-6), DegenerateGroupingError);
}

// -- gradient fidelity of every trainable objective --------------------------

struct LossCase {
    const char* label;
    std::function<std::unique_ptr<Loss>()> make;
    int classes;
};

std::vector<LossCase> loss_cases() {
    const auto group_loss = [](FairMetric metric, FairForm form, SurrogateKind kind, bool smooth, double beta) {
        return [=] {
            FairLossConfig c;
            c.metric = metric;
            c.form = form;
            c.surrogate.kind = kind;
            c.smooth = smooth;
            c.beta = beta;
            return std::unique_ptr<Loss>(std::make_unique<GroupFairnessLoss>(c, std::vector<int>{}));
        };
    };
    return {
        {"task", [] { return std::unique_ptr<Loss>(std::make_unique<CrossEntropyLoss>()); }, 2},
        {"dp_composite", group_loss(FairMetric::dp, FairForm::composite, SurrogateKind::tanh_soft_round, false, 0.05), 2},
        {"tpr_composite", group_loss(FairMetric::tpr, FairForm::composite, SurrogateKind::tanh_soft_round, false, 0.0), 2},
        {"dp_pairwise_tanh", group_loss(FairMetric::dp, FairForm::generalized, SurrogateKind::tanh_soft_round, true, 0.0), 2},
        {"tpr_pairwise_ccr", group_loss(FairMetric::tpr, FairForm::generalized, SurrogateKind::ccr, false, 0.0), 2},
        {"dp_pairwise_ccr", group_loss(FairMetric::dp, FairForm::generalized, SurrogateKind::ccr, true, 0.0), 2},
        {"multiclass_ccr", [] {
             return std::unique_ptr<Loss>(std::make_unique<MulticlassFairnessLoss>(MulticlassFairnessLoss::Config{},
                                                                                   std::vector<int>{}));
         }, 3},
    };
}

TEST(GradientFidelity, EveryLossAtTwentyRandomPoints) {
    for (const auto& c : loss_cases()) {
        const ModelSpec m{ModelKind::logistic, 3, 0, c.classes};
        const Dataset d = c.classes == 2 ? testing::random_binary_dataset(40, 3, 21)
                                         : testing::random_multiclass_dataset(40, 3, c.classes, 21);
        const auto loss = c.make();
        std::mt19937_64 rng(99);
        double worst = 0.0;
        for (int point = 0; point < 20; ++point) {
            const ParamVector theta = testing::random_vector(m.param_count(), rng, 0.6);
            const auto rep = finite_diff_check(m, theta, *loss, d, 1e-5);
            EXPECT_GT(rep.checked, 0) << c.label;
            worst = std::max(worst, rep.max_rel_error);
        }
        EXPECT_LE(worst, 1e-5) << c.label;
    }
}

TEST(GroupFairnessLoss, TooFewUsableGroupsIsDegenerate) {
    Dataset d = testing::random_binary_dataset(12, 2, 3);
    d.attrs.codes.setZero();
    const GroupFairnessLoss loss(FairLossConfig{}, {});
    const PredictionBatch p = forward({ModelKind::logistic, 2, 0, 2}, ParamVector::Zero(3), d.features);
    EXPECT_THROW((void)loss.evaluate(p, d, nullptr), DegenerateGroupingError);
}

TEST(GroupFairnessLoss, GeneralizedValueIsLambdaTaskPlusPairwise) {
    const Dataset d = testing::random_binary_dataset(30, 3, 8);
    const ModelSpec m{ModelKind::logistic, 3, 0, 2};
    std::mt19937_64 rng(4);
    const PredictionBatch p = forward(m, testing::random_vector(4, rng), d.features);

    FairLossConfig cfg;
    const double value = GroupFairnessLoss(cfg, {}).evaluate(p, d, nullptr);
    const GroupRates rates = dp_per_group_soft(p.column(0), build_intersection(d.attrs), cfg.surrogate);
    const auto present = rates.present_values();
    const double task = CrossEntropyLoss{}.evaluate(p, d, nullptr);
    EXPECT_NEAR(value, combined_loss(task, pairwise_fairness(present, 1e-6, false), 0.1), 1e-14);
}

TEST(GroupFairnessLoss, AttributeSelectionRestrictsGroups) {
    const Dataset d = testing::random_binary_dataset(30, 3, 8);
    const ModelSpec m{ModelKind::logistic, 3, 0, 2};
    std::mt19937_64 rng(6);
    const PredictionBatch p = forward(m, testing::random_vector(4, rng), d.features);
    FairLossConfig cfg;
    cfg.include_task = false;
    const double first_only = GroupFairnessLoss(cfg, {0}).evaluate(p, d, nullptr);
    const std::vector<int> sel{0};
    const GroupRates r = dp_per_group_soft(p.column(0), build_intersection(d.attrs.select(sel)), cfg.surrogate);
    EXPECT_NEAR(first_only, std::abs(r.value[0] - r.value[1]), 1e-14);
}

}  // namespace
}  // namespace apfex
