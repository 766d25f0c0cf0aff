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

#include <Eigen/Core>

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace apfex {

/// Per-sample categorical codes for m sensitive attributes.
struct SensitiveAttributes {
    Eigen::MatrixXi codes;           // n x m
    std::vector<int> cardinalities;  // m
    std::vector<std::string> names;  // m, may be empty

    Eigen::Index sample_count() const { return codes.rows(); }
    Eigen::Index attribute_count() const { return codes.cols(); }

    /// Throws ValidationError naming the first offending sample and attribute.
    void validate() const;

    /// Keeps only the listed attribute columns, in the given order.
    SensitiveAttributes select(std::span<const int> attributes) const;

    /// Keeps only the listed rows.
    SensitiveAttributes subset(std::span<const std::size_t> rows) const;
};

/// Cartesian-product grouping with mixed-radix ids; attribute 0 is the most
/// significant digit. Empty cells are kept with size 0.
class GroupTable {
public:
    GroupTable() = default;

    int group_count() const { return static_cast<int>(sizes_.size()); }
    Eigen::Index sample_count() const { return static_cast<Eigen::Index>(group_id_.size()); }

    const std::vector<int>& group_id() const { return group_id_; }
    const std::vector<std::size_t>& sizes() const { return sizes_; }
    const std::vector<std::size_t>& members(int g) const { return members_.at(static_cast<std::size_t>(g)); }
    const std::vector<int>& cardinalities() const { return cardinalities_; }

    std::vector<bool> mask(int g) const;
    bool empty(int g) const { return sizes_.at(static_cast<std::size_t>(g)) == 0; }
    int non_empty_count() const;

    /// Mixed-radix id of a code tuple.
    int encode(std::span<const int> codes) const;
    /// Inverse of encode.
    std::vector<int> decode(int id) const;

    /// Human-readable label such as "sex=1,race=0".
    std::string label(int g, const std::vector<std::string>& names = {}) const;

    friend GroupTable build_intersection(const SensitiveAttributes& attrs);

private:
    std::vector<int> cardinalities_;
    std::vector<int> group_id_;
    std::vector<std::size_t> sizes_;
    std::vector<std::vector<std::size_t>> members_;
};

GroupTable build_intersection(const SensitiveAttributes& attrs);

/// CCR-relaxed membership weight h = ccr(u; tau, gamma) per sample.
Eigen::VectorXd soft_membership(const Eigen::Ref<const Eigen::VectorXd>& scores, double tau, double gamma);

}  // namespace apfex
