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
#include "apfex/groups.hpp"

#include <gtest/gtest.h>

#include <numeric>
#include <random>

namespace apfex {
namespace {

SensitiveAttributes attrs_from(std::initializer_list<std::initializer_list<int>> rows, std::vector<int> card) {
    SensitiveAttributes a;
    a.codes.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(card.size()));
    Eigen::Index i = 0;
    for (const auto& r : rows) {
        Eigen::Index j = 0;
        for (int c : r) a.codes(i, j++) = c;
        ++i;
    }
    a.cardinalities = std::move(card);
    return a;
}

TEST(Intersection, TwoByTwoMixedRadix) {
    const GroupTable t = build_intersection(attrs_from({{0, 0}, {1, 0}, {1, 1}, {0, 1}}, {2, 2}));
    EXPECT_EQ(t.group_count(), 4);
    EXPECT_EQ(t.group_id(), (std::vector<int>{0, 2, 3, 1}));
    const int code[] = {1, 0};
    EXPECT_EQ(t.encode(code), 2);
}

TEST(Intersection, TwoByThreeHasSixGroups) {
    const GroupTable t = build_intersection(attrs_from({{1, 2}, {0, 1}}, {2, 3}));
    EXPECT_EQ(t.group_count(), 6);
    EXPECT_EQ(t.group_id(), (std::vector<int>{5, 1}));
}

TEST(Intersection, SingleAttributeGroupsAreLevels) {
    const GroupTable t = build_intersection(attrs_from({{0}, {1}, {1}}, {2}));
    EXPECT_EQ(t.group_count(), 2);
    EXPECT_EQ(t.group_id(), (std::vector<int>{0, 1, 1}));
    EXPECT_EQ(t.sizes(), (std::vector<std::size_t>{1, 2}));
}

TEST(Intersection, EmptyGroupsAreKept) {
    const GroupTable t = build_intersection(attrs_from({{0, 0}, {0, 0}, {1, 1}}, {2, 2}));
    EXPECT_EQ(t.group_count(), 4);
    EXPECT_TRUE(t.empty(1));
    EXPECT_TRUE(t.empty(2));
    EXPECT_EQ(t.non_empty_count(), 2);
}

TEST(Intersection, OutOfRangeCodeNamesSampleAndAttribute) {
    try {
        (void)build_intersection(attrs_from({{0, 0}, {0, 2}}, {2, 2}));
        FAIL() << "expected ValidationError";
    } catch (const ValidationError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("sample 1"), std::string::npos) << msg;
        EXPECT_NE(msg.find("attribute 1"), std::string::npos) << msg;
    }
}

TEST(Intersection, LabelsUseAttributeNames) {
    const GroupTable t = build_intersection(attrs_from({{1, 0}}, {2, 2}));
    EXPECT_EQ(t.label(2, {"sex", "race"}), "sex=1,race=0");
}

TEST(Intersection, EncodeDecodeRoundTrip) {
    SensitiveAttributes a = attrs_from({{0, 0, 0}}, {3, 2, 4});
    const GroupTable t = build_intersection(a);
    for (int x = 0; x < 3; ++x)
        for (int y = 0; y < 2; ++y)
            for (int z = 0; z < 4; ++z) {
                const std::vector<int> codes{x, y, z};
                EXPECT_EQ(t.decode(t.encode(codes)), codes);
            }
}

TEST(Intersection, MasksPartitionSamples) {
    std::mt19937_64 rng(3);
    SensitiveAttributes a;
    a.codes.resize(200, 3);
    a.cardinalities = {2, 3, 2};
    for (Eigen::Index i = 0; i < 200; ++i)
        for (Eigen::Index j = 0; j < 3; ++j)
            a.codes(i, j) = std::uniform_int_distribution<int>(0, a.cardinalities[static_cast<std::size_t>(j)] - 1)(rng);
    const GroupTable t = build_intersection(a);
    std::vector<int> cover(200, 0);
    for (int g = 0; g < t.group_count(); ++g) {
        const auto m = t.mask(g);
        for (std::size_t i = 0; i < m.size(); ++i) cover[i] += m[i] ? 1 : 0;
    }
    for (int c : cover) EXPECT_EQ(c, 1);
    EXPECT_EQ(std::accumulate(t.sizes().begin(), t.sizes().end(), std::size_t{0}), 200u);
}

TEST(SoftMembership, HardScoresStayHard) {
    Eigen::VectorXd u(3);
    u << 1.0, 0.0, 1.0;
    const Eigen::VectorXd h = soft_membership(u, 0.5, 0.1);
    EXPECT_EQ(h, u);
}

TEST(SoftMembership, BandMidpointAndInterior) {
    Eigen::VectorXd u(2);
    u << 0.5, 0.55;
    const Eigen::VectorXd h = soft_membership(u, 0.5, 0.1);
    EXPECT_DOUBLE_EQ(h[0], 0.5);
    EXPECT_NEAR(h[1], 0.75, 1e-12);
}

TEST(SoftMembership, NonPositiveWidthRejected) {
    Eigen::VectorXd u(1);
    u << 0.3;
    EXPECT_THROW((void)soft_membership(u, 0.5, 0.0), ParameterError);
    EXPECT_THROW((void)soft_membership(u, 0.5, -0.1), ParameterError);
}

TEST(SoftMembership, ConvergesToIndicatorAsWidthShrinks) {
    Eigen::VectorXd u(4);
    u << 0.2, 0.45, 0.52, 0.9;
    for (double gamma : {0.3, 0.1, 0.04, 0.01}) {
        const Eigen::VectorXd h = soft_membership(u, 0.5, gamma);
        for (Eigen::Index i = 0; i < u.size(); ++i) {
            const double hard = u[i] > 0.5 ? 1.0 : 0.0;
            if (std::abs(u[i] - 0.5) >= gamma) {
                EXPECT_EQ(h[i], hard);
            }
        }
    }
}

}  // namespace
}  // namespace apfex
