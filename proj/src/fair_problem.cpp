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

#include "apfex/fair_problem.hpp"

#include "apfex/errors.hpp"

#include <cmath>

namespace apfex {

FairnessProblem::FairnessProblem(ModelSpec model, Dataset train, std::vector<std::unique_ptr<Loss>> losses)
    : model_(model), train_(std::move(train)), losses_(std::move(losses)) {
    model_.validate();
    train_.validate();
    if (losses_.empty()) throw ValidationError("at least one objective is required");
    if (train_.feature_dim() != model_.input_dim) {
        throw ShapeError("feature width vs model input", model_.input_dim, train_.feature_dim());
    }
    const auto names = objective_names();
    for (std::size_t i = 0; i < names.size(); ++i) {
        for (std::size_t j = i + 1; j < names.size(); ++j) {
            if (names[i] == names[j]) throw ValidationError("duplicate objective name '" + names[i] + "'");
        }
    }
}

std::vector<std::string> FairnessProblem::objective_names() const {
    std::vector<std::string> names;
    for (const auto& l : losses_) names.push_back(l->name());
    return names;
}

Evaluation FairnessProblem::evaluate(const Eigen::VectorXd& theta, std::span<const std::size_t> rows) const {
    Dataset batch_storage;
    const Dataset* batch = &train_;
    if (!rows.empty()) {
        batch_storage = train_.subset(rows);
        batch = &batch_storage;
    }

    const ForwardCache cache = forward_cached(model_, theta, batch->features);
    Evaluation out{Eigen::VectorXd(objective_count()), GradientSet(objective_count(), param_count())};
    Eigen::MatrixXd d_output;
    ParamVector d_params(param_count());
    for (std::size_t k = 0; k < losses_.size(); ++k) {
        const Loss& loss = *losses_[k];
        const auto row = static_cast<Eigen::Index>(k);
        double value = loss.evaluate(cache.output, *batch, &d_output);
        ParamVector grad = backward(model_, theta, batch->features, cache, d_output);
        value += loss.param_term(theta, &d_params);
        grad += d_params;
        out.losses[row] = value;
        out.grads.row(row) = grad.transpose();
    }
    return out;
}

LossScales FairnessProblem::scale_estimates(const Eigen::VectorXd& theta, double eps) const {
    return estimate_loss_scales(model_, theta, losses_, train_, eps);
}

Eigen::VectorXd FairnessProblem::losses_on(const Eigen::VectorXd& theta, const Dataset& data) const {
    const PredictionBatch pred = forward(model_, theta, data.features);
    Eigen::VectorXd out(objective_count());
    for (std::size_t k = 0; k < losses_.size(); ++k) {
        out[static_cast<Eigen::Index>(k)] = losses_[k]->evaluate(pred, data, nullptr) + losses_[k]->param_term(theta, nullptr);
    }
    return out;
}

}  // namespace apfex
