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

#pragma once

#include "apfex/dataset.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <random>

namespace apfex::testing {

/// Small random binary task with two binary sensitive attributes. Every
/// product group gets samples and positives.
inline Dataset random_binary_dataset(Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Dataset data;
    data.features.resize(n, d);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < d; ++j) data.features(i, j) = normal(rng);
    data.labels.resize(static_cast<std::size_t>(n));
    data.attrs.codes.resize(n, 2);
    data.attrs.cardinalities = {2, 2};
    data.attrs.names = {"a", "b"};
    for (Eigen::Index i = 0; i < n; ++i) {
        data.attrs.codes(i, 0) = static_cast<int>(i % 2);
        data.attrs.codes(i, 1) = static_cast<int>((i / 2) % 2);
        // the first 8 rows cover every (group, label) cell
        const bool positive = i < 8 ? (i / 4) == 0 : normal(rng) > 0.0;
        data.labels[static_cast<std::size_t>(i)] = positive ? 1 : -1;
    }
    return data;
}

/// Multi-class variant: labels are class indices.
inline Dataset random_multiclass_dataset(Eigen::Index n, Eigen::Index d, int classes, std::uint64_t seed) {
    Dataset data = random_binary_dataset(n, d, seed);
    std::mt19937_64 rng(seed + 1);
    std::uniform_int_distribution<int> pick(0, classes - 1);
    for (auto& y : data.labels) y = pick(rng);
    data.num_classes = classes;
    return data;
}

inline Eigen::VectorXd random_vector(Eigen::Index n, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> normal(0.0, scale);
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = normal(rng);
    return v;
}

inline Eigen::MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> normal(0.0, scale);
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) m(i, j) = normal(rng);
    return m;
}

}  // namespace apfex::testing
