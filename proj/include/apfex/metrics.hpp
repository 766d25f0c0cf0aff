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

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace apfex {

inline constexpr double kDecisionThreshold = 0.5;

enum class RateKind { dp, tpr };

/// +1 where score >= threshold, else -1.
std::vector<int> hard_predictions(const Eigen::Ref<const Eigen::VectorXd>& scores,
                                  double threshold = kDecisionThreshold);

double accuracy(std::span<const int> preds, std::span<const int> labels);

/// Share of positive predictions in the group; nullopt for an empty group.
std::optional<double> dp_rate(std::span<const int> preds, const std::vector<bool>& mask);

/// True positives over actual positives in the group; nullopt without positives.
std::optional<double> tpr_rate(std::span<const int> preds, std::span<const int> labels, const std::vector<bool>& mask);

/// Largest |r_i - r_j| over present rates.
double max_disparity(std::span<const std::optional<double>> rates);

/// One rate per group of `groups`.
std::vector<std::optional<double>> group_rates(std::span<const int> preds, std::span<const int> labels,
                                               const GroupTable& groups, RateKind kind);

/// For each attribute, the disparity over its own levels.
std::vector<double> per_attribute_disparity(std::span<const int> preds, std::span<const int> labels,
                                            const SensitiveAttributes& attrs, RateKind kind);

/// Disparity over the Cartesian-product groups of all attributes in `attrs`.
double intersectional_disparity(std::span<const int> preds, std::span<const int> labels,
                                const SensitiveAttributes& attrs, RateKind kind);

enum class MetricMode { per_attribute, intersectional };

std::string to_string(MetricMode m);

struct EvalReport {
    MetricMode mode = MetricMode::intersectional;
    double accuracy = 0.0;
    double ddp = 0.0;  // max over the evaluated attributes in per-attribute mode
    double deo = 0.0;
    std::vector<std::pair<std::string, double>> attribute_ddp;  // per-attribute mode only
    std::vector<std::pair<std::string, double>> attribute_deo;
    std::vector<std::pair<std::string, double>> per_group_dp;
    std::vector<std::pair<std::string, double>> per_group_tpr;
    std::vector<std::pair<std::string, std::string>> excluded_groups;  // group -> reason

    /// Flat key/value rows, in a fixed order.
    std::vector<std::pair<std::string, std::string>> records() const;
};

/// Hard-threshold report. Per-attribute mode treats each attribute on its own;
/// intersectional mode uses the product of all attributes in `attrs`.
EvalReport evaluate_predictions(std::span<const int> preds, std::span<const int> labels,
                                const SensitiveAttributes& attrs, MetricMode mode);

}  // namespace apfex
