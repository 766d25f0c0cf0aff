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
#include "apfex/diffmodel.hpp"
#include "apfex/problem.hpp"

#include <memory>
#include <vector>

namespace apfex {

/// K losses on one model and one training set: a single forward pass, one
/// backward pass per objective.
class FairnessProblem final : public Problem {
public:
    FairnessProblem(ModelSpec model, Dataset train, std::vector<std::unique_ptr<Loss>> losses);

    Eigen::Index objective_count() const override { return static_cast<Eigen::Index>(losses_.size()); }
    Eigen::Index param_count() const override { return model_.param_count(); }
    std::vector<std::string> objective_names() const override;
    std::size_t sample_count() const override { return static_cast<std::size_t>(train_.size()); }

    Evaluation evaluate(const Eigen::VectorXd& theta, std::span<const std::size_t> rows = {}) const override;
    LossScales scale_estimates(const Eigen::VectorXd& theta, double eps) const override;

    /// Loss vector on an arbitrary slice (e.g. a validation split).
    Eigen::VectorXd losses_on(const Eigen::VectorXd& theta, const Dataset& data) const;

    const ModelSpec& model() const { return model_; }
    const Dataset& train_set() const { return train_; }
    const std::vector<std::unique_ptr<Loss>>& losses() const { return losses_; }

private:
    ModelSpec model_;
    Dataset train_;
    std::vector<std::unique_ptr<Loss>> losses_;
};

}  // namespace apfex
