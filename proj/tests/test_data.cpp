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

#include "apfex/data.hpp"
#include "apfex/errors.hpp"
#include "apfex/fair_problem.hpp"
#include "apfex/fairloss.hpp"
#include "apfex/metrics.hpp"
#include "apfex/moo_core.hpp"
#include "apfex/optimizer.hpp"
#include "apfex/synthetic.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

namespace apfex {
namespace {

const char* kToySchema = R"(name: toy
columns:
  - {name: x, kind: numeric}
  - {name: color, kind: categorical}
  - {name: sex, kind: sensitive}
  - {name: y, kind: label, positive: "yes"}
)";

std::string toy_rows(int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> x(3.0, 2.0);
    const char* colors[] = {"red", "green", "blue"};
    std::ostringstream out;
    out << "x,color,sex,y\n";
    for (int i = 0; i < n; ++i) {
        out << x(rng) << ',' << colors[i % 3] << ',' << (i % 2 ? "M" : "F") << ',' << (i % 4 < 2 ? "yes" : "no")
            << '\n';
    }
    return out.str();
}

std::string error_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.what();
    }
    return {};
}

TEST(Schema, ParsesColumnsAndKinds) {
    const Schema s = parse_schema(kToySchema);
    EXPECT_EQ(s.name, "toy");
    ASSERT_EQ(s.columns.size(), 4u);
    EXPECT_EQ(s.columns[1].kind, ColumnKind::categorical);
    EXPECT_EQ(s.label().name, "y");
    EXPECT_EQ(s.sensitive().size(), 1u);
}

TEST(Schema, ErrorsNameTheLine) {
    const std::string msg = error_of([] {
        (void)parse_schema("name: bad\ncolumns:\n  - {name: a, kind: numeric}\n  - {name: b, kind: wobbly}\n", "bad.yaml");
    });
    EXPECT_NE(msg.find("bad.yaml:4"), std::string::npos) << msg;
    EXPECT_NE(msg.find("wobbly"), std::string::npos) << msg;
}

TEST(Schema, RequiresOneLabelAndASensitiveColumn) {
    EXPECT_THROW((void)parse_schema("name: s\ncolumns:\n  - {name: a, kind: sensitive}\n"), SchemaError);
    EXPECT_THROW((void)parse_schema("name: s\ncolumns:\n  - {name: y, kind: label, positive: '1'}\n"), SchemaError);
}

TEST(Schema, CommittedSchemasLoad) {
    for (const char* name : {"german", "adult", "compas", "heart"}) {
        const Schema s = load_schema(std::string(APFEX_TEST_DATA_DIR) + "/schemas/" + name + ".yaml");
        EXPECT_EQ(s.name, name);
        EXPECT_GE(s.sensitive().size(), 2u) << name;
    }
}

TEST(LoadTable, WellFormedRows) {
    const Schema s = parse_schema(kToySchema);
    const RawTable t = parse_table("x,color,sex,y\n1,red,M,yes\n2,blue,F,no\n3,red,F,yes\n", s);
    EXPECT_EQ(t.size(), 3u);
    EXPECT_EQ(t.dropped_missing, 0u);
    EXPECT_EQ(t.line_numbers, (std::vector<std::size_t>{2, 3, 4}));
}

TEST(LoadTable, MissingLabelColumnIsSchemaError) {
    const Schema s = parse_schema(kToySchema);
    const std::string msg = error_of([&] { (void)parse_table("x,color,sex\n1,red,M\n", s); });
    EXPECT_NE(msg.find("'y'"), std::string::npos) << msg;
}

TEST(LoadTable, EmptyNumericCellDropsTheRow) {
    const Schema s = parse_schema(kToySchema);
    const RawTable t = parse_table("x,color,sex,y\n1,red,M,yes\n,blue,F,no\n3,red,F,yes\n", s);
    EXPECT_EQ(t.size(), 2u);
    EXPECT_EQ(t.dropped_missing, 1u);
}

TEST(LoadTable, UnparseableCellNamesTheLine) {
    const Schema s = parse_schema(kToySchema);
    const std::string msg = error_of([&] { (void)parse_table("x,color,sex,y\n1,red,M,yes\nabc,blue,F,no\n", s, "t.csv"); });
    EXPECT_NE(msg.find("t.csv:3"), std::string::npos) << msg;
}

TEST(LoadTable, BundledGermanCredit) {
    const Schema s = load_schema(std::string(APFEX_TEST_DATA_DIR) + "/schemas/german.yaml");
    const RawTable t = load_table(std::string(APFEX_TEST_DATA_DIR) + "/german.csv", s);
    EXPECT_EQ(t.size(), 1000u);
    const EncodedTable e = encode(t, s);
    EXPECT_EQ(e.data.attrs.names, (std::vector<std::string>{"sex", "age"}));
    EXPECT_EQ(e.data.attrs.cardinalities, (std::vector<int>{2, 2}));
    EXPECT_EQ(std::count(e.data.labels.begin(), e.data.labels.end(), 1), 700);
}

TEST(Encode, NumericOneHotSensitiveAndLabels) {
    const Schema s = parse_schema(kToySchema);
    const RawTable t = parse_table("x,color,sex,y\n1,red,M,yes\n2,blue,F,no\n3,green,F,yes\n", s);
    const EncodedTable e = encode(t, s);
    EXPECT_EQ(e.data.feature_dim(), 1 + 3);
    EXPECT_EQ(e.numeric_columns.size(), 1u);
    EXPECT_EQ(e.data.labels, (std::vector<int>{1, -1, 1}));
    EXPECT_EQ(e.data.attrs.cardinalities, std::vector<int>{2});
    EXPECT_EQ(e.data.attrs.codes(0, 0), 1);  // "M" sorts after "F"
    EXPECT_EQ(e.data.attrs.codes(1, 0), 0);
    for (Eigen::Index i = 0; i < 3; ++i) {
        double onehot = 0.0;
        for (Eigen::Index j = 0; j < e.data.feature_dim(); ++j)
            if (j != e.numeric_columns[0]) onehot += e.data.features(i, j);
        EXPECT_DOUBLE_EQ(onehot, 1.0);
    }
}

TEST(Standardizer, CentresAndScales) {
    Eigen::MatrixXd f(3, 1);
    f << 1, 2, 3;
    const Standardizer s = Standardizer::fit(f, {0});
    s.apply(f);
    EXPECT_NEAR(f.mean(), 0.0, 1e-12);
    EXPECT_NEAR(f.squaredNorm() / 3.0, 1.0, 1e-12);
}

TEST(Standardizer, ConstantColumnWarnsAndIsLeftAlone) {
    Eigen::MatrixXd f = Eigen::MatrixXd::Constant(4, 1, 7.0);
    std::vector<std::string> warnings;
    const Standardizer s = Standardizer::fit(f, {0}, &warnings);
    s.apply(f);
    EXPECT_EQ(warnings.size(), 1u);
    EXPECT_EQ(f, Eigen::MatrixXd::Constant(4, 1, 7.0));
}

TEST(Preprocess, TrainStatisticsOnly) {
    const Schema s = parse_schema(kToySchema);
    const RawTable t = parse_table(toy_rows(60, 3), s);
    const PreparedData p = preprocess(t, s, SplitSpec{.seed = 4});
    const EncodedTable e = encode(t, s);
    const Eigen::Index col = e.numeric_columns[0];

    Eigen::VectorXd train_raw(static_cast<Eigen::Index>(p.indices.train.size()));
    for (std::size_t i = 0; i < p.indices.train.size(); ++i)
        train_raw[static_cast<Eigen::Index>(i)] = e.data.features(static_cast<Eigen::Index>(p.indices.train[i]), col);
    const double mu = train_raw.mean();
    const double sd = std::sqrt((train_raw.array() - mu).square().mean());
    EXPECT_NEAR(p.standardizer.mean[0], mu, 1e-12);
    EXPECT_NEAR(p.standardizer.scale[0], sd, 1e-12);
    EXPECT_NEAR(p.train.features.col(col).mean(), 0.0, 1e-12);

    for (std::size_t i = 0; i < p.indices.val.size(); ++i) {
        const double raw = e.data.features(static_cast<Eigen::Index>(p.indices.val[i]), col);
        EXPECT_NEAR(p.val.features(static_cast<Eigen::Index>(i), col), (raw - mu) / sd, 1e-12);
    }
}

TEST(Split, SeventyFifteenFifteen) {
    const SplitIndices s = split_indices(100, SplitSpec{});
    EXPECT_EQ(s.train.size(), 70u);
    EXPECT_EQ(s.val.size(), 15u);
    EXPECT_EQ(s.test.size(), 15u);
    std::set<std::size_t> all(s.train.begin(), s.train.end());
    all.insert(s.val.begin(), s.val.end());
    all.insert(s.test.begin(), s.test.end());
    EXPECT_EQ(all.size(), 100u);
}

TEST(Split, RemainderGoesToTest) {
    const SplitIndices s = split_indices(33, SplitSpec{});
    EXPECT_EQ(s.train.size(), 23u);
    EXPECT_EQ(s.val.size(), 4u);
    EXPECT_EQ(s.test.size(), 6u);
}

TEST(Split, SeedDeterminesShuffle) {
    const SplitIndices a = split_indices(100, SplitSpec{.seed = 1});
    const SplitIndices b = split_indices(100, SplitSpec{.seed = 1});
    const SplitIndices c = split_indices(100, SplitSpec{.seed = 2});
    EXPECT_EQ(a.train, b.train);
    EXPECT_EQ(a.test, b.test);
    EXPECT_NE(std::set<std::size_t>(a.train.begin(), a.train.end()),
              std::set<std::size_t>(c.train.begin(), c.train.end()));
}

TEST(Split, TooFewSamples) {
    EXPECT_THROW((void)split_indices(9, SplitSpec{}), ValidationError);
    SplitSpec bad;
    bad.val = 0.3;
    EXPECT_THROW((void)split_indices(100, bad), ParameterError);
}

TEST(Subsample, SeededAndOrderPreserving) {
    const Schema s = parse_schema(kToySchema);
    const RawTable t = parse_table(toy_rows(50, 1), s);
    const RawTable a = subsample(t, 20, 7);
    EXPECT_EQ(a.size(), 20u);
    EXPECT_TRUE(std::is_sorted(a.line_numbers.begin(), a.line_numbers.end()));
    EXPECT_EQ(a.line_numbers, subsample(t, 20, 7).line_numbers);
    EXPECT_EQ(subsample(t, 100, 7).size(), 50u);
}

// Intersectional DDP of an unconstrained logistic fit. A 600-row test split
// leaves about 0.08 of max-min noise across four groups, so the fit is scored
// on a large fresh draw from the same generator.
double baseline_ddp(double bias, std::uint64_t seed) {
    const Dataset d = synth_biased(4000, seed, bias);
    const PreparedData p = prepare_splits(EncodedTable{d, {0, 1, 2, 3}}, SplitSpec{.seed = seed});
    std::vector<std::unique_ptr<Loss>> losses;
    losses.push_back(std::make_unique<CrossEntropyLoss>());
    const ModelSpec model{ModelKind::logistic, static_cast<int>(p.train.feature_dim()), 0, 2};
    const FairnessProblem problem(model, p.train, std::move(losses));
    TrainConfig cfg;
    cfg.iterations = 1500;
    cfg.learning_rate = 0.05;
    const TrainResult r = train(problem, init_params(model, seed), cfg);
    Dataset fresh = synth_biased(50000, seed + 1000, bias);
    p.standardizer.apply(fresh.features);
    const auto preds = hard_predictions(forward(model, r.params, fresh.features).values.col(0));
    return intersectional_disparity(preds, fresh.labels, fresh.attrs, RateKind::dp);
}

TEST(SynthBiased, NoBiasGivesSmallDisparity) {
    EXPECT_LE(baseline_ddp(0.0, 1), 0.05);
}

TEST(SynthBiased, HalfBiasGivesLargeDisparity) {
    EXPECT_GE(baseline_ddp(0.5, 1), 0.15);
}

TEST(SynthBiased, GroupCountsBalanced) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Dataset d = synth_biased(800, seed, 0.5);
        const GroupTable g = build_intersection(d.attrs);
        ASSERT_EQ(g.group_count(), 4);
        for (std::size_t size : g.sizes()) EXPECT_GE(size, 100u) << "seed " << seed;
    }
}

TEST(SynthBiased, PureFunctionOfArguments) {
    const Dataset a = synth_biased(200, 9, 0.3);
    const Dataset b = synth_biased(200, 9, 0.3);
    EXPECT_EQ(a.features, b.features);
    EXPECT_EQ(a.labels, b.labels);
    EXPECT_EQ(a.attrs.codes, b.attrs.codes);
    EXPECT_NE(a.features, synth_biased(200, 10, 0.3).features);
}

TEST(SynthBiased, ArgumentsChecked) {
    EXPECT_THROW((void)synth_biased(99, 1, 0.5), ParameterError);
    EXPECT_THROW((void)synth_biased(200, 1, 1.5), ParameterError);
}

TEST(SynthPl, GradientsAreExact) {
    const QuadraticProblem p = synth_pl_biobjective();
    std::mt19937_64 rng(2);
    std::normal_distribution<double> n(0.0, 2.0);
    for (int t = 0; t < 20; ++t) {
        const Eigen::Vector2d x(n(rng), n(rng));
        const Evaluation e = p.evaluate(x);
        for (int k = 0; k < 2; ++k) {
            const Eigen::VectorXd c = p.centers()[static_cast<std::size_t>(k)];
            EXPECT_EQ(e.grads.row(k).transpose(), x - c);
            EXPECT_DOUBLE_EQ(e.losses[k], 0.5 * (x - c).squaredNorm());
        }
    }
}

TEST(SynthPl, StationaryOnlyOnTheSegment) {
    const QuadraticProblem p = synth_pl_biobjective();
    EXPECT_NEAR(stationarity_measure(p.evaluate(Eigen::Vector2d(0.0, 0.0)).grads).omega, 0.0, 1e-12);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int t = 0; t < 100; ++t) {
        Eigen::Vector2d x(u(rng), u(rng));
        if (std::abs(x[1]) < 1e-3) x[1] = 0.5;
        EXPECT_GT(stationarity_measure(p.evaluate(x).grads).omega, 0.0);
    }
}

}  // namespace
}  // namespace apfex
