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

#include "apfex/moo_core.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace apfex {

/// Loss vector and gradient rows at one parameter point.
struct Evaluation {
    Eigen::VectorXd losses;  // K
    GradientSet grads;       // K x p
};

/// A K-objective differentiable problem over a flat parameter vector.
class Problem {
public:
    virtual ~Problem() = default;

    virtual Eigen::Index objective_count() const = 0;
    virtual Eigen::Index param_count() const = 0;
    virtual std::vector<std::string> objective_names() const = 0;

    /// Number of samples minibatches are drawn from; 0 for sample-free problems.
    virtual std::size_t sample_count() const { return 0; }

    /// Losses and gradients on the listed rows, or on everything when `rows` is empty.
    virtual Evaluation evaluate(const Eigen::VectorXd& theta, std::span<const std::size_t> rows = {}) const = 0;

    /// Per-objective loss ceilings over the full training set, eps included.
    virtual LossScales scale_estimates(const Eigen::VectorXd& theta, double eps) const = 0;
};

}  // namespace apfex
