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
#include "apfex/problem.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <vector>

namespace apfex {

/// Binary task with two binary sensitive attributes (a1, a2) whose product
/// group (1,1) is disadvantaged in proportion to `bias`.
///
///   a1, a2 ~ Bernoulli(1/2),  z ~ N(0,1)
///   x0 = z + N(0, 0.3^2)               merit signal, group independent
///   x1 = 1.5 (a1 - 1/2) + N(0, 0.5^2)  proxy for a1
///   x2 = 1.5 (a2 - 1/2) + N(0, 0.5^2)  proxy for a2
///   x3 = N(0,1)                        noise
///   P(y = +1) = sigmoid(2.5 + 2 z - 6 bias a1 a2)
Dataset synth_biased(std::size_t n, std::uint64_t seed, double bias);

/// Quadratic objectives L_k(x) = 1/2 |x - c_k|^2.
class QuadraticProblem final : public Problem {
public:
    explicit QuadraticProblem(std::vector<Eigen::VectorXd> centers);

    Eigen::Index objective_count() const override { return static_cast<Eigen::Index>(centers_.size()); }
    Eigen::Index param_count() const override { return centers_.front().size(); }
    std::vector<std::string> objective_names() const override;
    Evaluation evaluate(const Eigen::VectorXd& theta, std::span<const std::size_t> rows = {}) const override;
    LossScales scale_estimates(const Eigen::VectorXd& theta, double eps) const override;

    const std::vector<Eigen::VectorXd>& centers() const { return centers_; }

private:
    std::vector<Eigen::VectorXd> centers_;
};

/// Two quadratics on R^2 with minimizers (-1, 0) and (1, 0). The Pareto set is
/// the segment between them.
QuadraticProblem synth_pl_biobjective();

/// L_k(x) = 1 - exp(-|x - c_k|^2 / width). Far from every centre the
/// losses are flat, so progress stalls and the exploration strategy engages.
class PlateauProblem final : public Problem {
public:
    PlateauProblem(std::vector<Eigen::VectorXd> centers, double width);

    Eigen::Index objective_count() const override { return static_cast<Eigen::Index>(centers_.size()); }
    Eigen::Index param_count() const override { return centers_.front().size(); }
    std::vector<std::string> objective_names() const override;
    Evaluation evaluate(const Eigen::VectorXd& theta, std::span<const std::size_t> rows = {}) const override;
    LossScales scale_estimates(const Eigen::VectorXd& theta, double eps) const override;

private:
    std::vector<Eigen::VectorXd> centers_;
    double width_;
};

}  // namespace apfex
