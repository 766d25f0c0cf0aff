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

#include "apfex/groups.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace apfex {

/// Preprocessed samples: features, labels and sensitive attributes.
///
/// Binary tasks store labels as -1/+1 and keep num_classes == 2; multi-class
/// tasks store class indices in [0, num_classes).
struct Dataset {
    Eigen::MatrixXd features;  // n x d
    std::vector<int> labels;
    int num_classes = 2;
    SensitiveAttributes attrs;
    std::vector<std::string> feature_names;

    Eigen::Index size() const { return features.rows(); }
    Eigen::Index feature_dim() const { return features.cols(); }
    bool binary() const { return num_classes == 2; }

    void validate() const;
    Dataset subset(std::span<const std::size_t> rows) const;
};

}  // namespace apfex
