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

#include "apfex/groups.hpp"

#include "apfex/errors.hpp"
#include "apfex/fairloss.hpp"

#include <sstream>

namespace apfex {

void SensitiveAttributes::validate() const {
    if (codes.cols() < 1) {
        throw ValidationError("at least one sensitive attribute is required");
    }
    if (static_cast<Eigen::Index>(cardinalities.size()) != codes.cols()) {
        throw ShapeError("cardinalities length", codes.cols(), static_cast<std::ptrdiff_t>(cardinalities.size()));
    }
    for (Eigen::Index j = 0; j < codes.cols(); ++j) {
        if (cardinalities[j] < 1) {
            throw ValidationError("attribute " + std::to_string(j) + " has cardinality < 1");
        }
    }
    for (Eigen::Index i = 0; i < codes.rows(); ++i) {
        for (Eigen::Index j = 0; j < codes.cols(); ++j) {
            const int c = codes(i, j);
            if (c < 0 || c >= cardinalities[j]) {
                std::ostringstream os;
                os << "sample " << i << ", attribute " << j;
                if (static_cast<Eigen::Index>(names.size()) > j) os << " (" << names[j] << ")";
                os << ": code " << c << " outside [0, " << cardinalities[j] << ")";
                throw ValidationError(os.str());
            }
        }
    }
}

SensitiveAttributes SensitiveAttributes::select(std::span<const int> attributes) const {
    SensitiveAttributes out;
    out.codes.resize(codes.rows(), static_cast<Eigen::Index>(attributes.size()));
    for (std::size_t k = 0; k < attributes.size(); ++k) {
        const int j = attributes[k];
        if (j < 0 || j >= codes.cols()) {
            throw ValidationError("attribute index " + std::to_string(j) + " out of range");
        }
        out.codes.col(static_cast<Eigen::Index>(k)) = codes.col(j);
        out.cardinalities.push_back(cardinalities[static_cast<std::size_t>(j)]);
        if (static_cast<Eigen::Index>(names.size()) > j) out.names.push_back(names[static_cast<std::size_t>(j)]);
    }
    return out;
}

SensitiveAttributes SensitiveAttributes::subset(std::span<const std::size_t> rows) const {
    SensitiveAttributes out;
    out.cardinalities = cardinalities;
    out.names = names;
    out.codes.resize(static_cast<Eigen::Index>(rows.size()), codes.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        out.codes.row(static_cast<Eigen::Index>(r)) = codes.row(static_cast<Eigen::Index>(rows[r]));
    }
    return out;
}

std::vector<bool> GroupTable::mask(int g) const {
    std::vector<bool> m(group_id_.size(), false);
    for (auto i : members(g)) m[i] = true;
    return m;
}

int GroupTable::non_empty_count() const {
    int n = 0;
    for (auto s : sizes_) n += s > 0 ? 1 : 0;
    return n;
}

int GroupTable::encode(std::span<const int> codes) const {
    if (codes.size() != cardinalities_.size()) {
        throw ShapeError("code tuple length", static_cast<std::ptrdiff_t>(cardinalities_.size()),
                         static_cast<std::ptrdiff_t>(codes.size()));
    }
    int id = 0;
    for (std::size_t j = 0; j < codes.size(); ++j) {
        if (codes[j] < 0 || codes[j] >= cardinalities_[j]) {
            throw ValidationError("attribute " + std::to_string(j) + ": code " + std::to_string(codes[j]) +
                                  " out of range");
        }
        id = id * cardinalities_[j] + codes[j];
    }
    return id;
}

std::vector<int> GroupTable::decode(int id) const {
    if (id < 0 || id >= group_count()) {
        throw ValidationError("group id " + std::to_string(id) + " out of range");
    }
    std::vector<int> codes(cardinalities_.size());
    for (std::size_t j = cardinalities_.size(); j-- > 0;) {
        codes[j] = id % cardinalities_[j];
        id /= cardinalities_[j];
    }
    return codes;
}

std::string GroupTable::label(int g, const std::vector<std::string>& names) const {
    const auto codes = decode(g);
    std::ostringstream os;
    for (std::size_t j = 0; j < codes.size(); ++j) {
        if (j) os << ',';
        os << (j < names.size() ? names[j] : "a" + std::to_string(j)) << '=' << codes[j];
    }
    return os.str();
}

GroupTable build_intersection(const SensitiveAttributes& attrs) {
    attrs.validate();
    GroupTable t;
    t.cardinalities_ = attrs.cardinalities;
    int count = 1;
    for (int c : attrs.cardinalities) count *= c;
    t.sizes_.assign(static_cast<std::size_t>(count), 0);
    t.members_.assign(static_cast<std::size_t>(count), {});
    t.group_id_.resize(static_cast<std::size_t>(attrs.sample_count()));

    std::vector<int> tuple(static_cast<std::size_t>(attrs.attribute_count()));
    for (Eigen::Index i = 0; i < attrs.sample_count(); ++i) {
        for (Eigen::Index j = 0; j < attrs.attribute_count(); ++j) tuple[static_cast<std::size_t>(j)] = attrs.codes(i, j);
        const int id = t.encode(tuple);
        t.group_id_[static_cast<std::size_t>(i)] = id;
        t.sizes_[static_cast<std::size_t>(id)] += 1;
        t.members_[static_cast<std::size_t>(id)].push_back(static_cast<std::size_t>(i));
    }
    return t;
}

Eigen::VectorXd soft_membership(const Eigen::Ref<const Eigen::VectorXd>& scores, double tau, double gamma) {
    if (!(gamma > 0.0)) throw ParameterError("membership band half-width must be positive");
    Eigen::VectorXd h(scores.size());
    for (Eigen::Index i = 0; i < scores.size(); ++i) h[i] = ccr(scores[i], tau, gamma);
    return h;
}

}  // namespace apfex
