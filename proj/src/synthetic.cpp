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

#include "apfex/synthetic.hpp"

#include "apfex/errors.hpp"

#include <cmath>
#include <random>

namespace apfex {

Dataset synth_biased(std::size_t n, std::uint64_t seed, double bias) {
    if (n < 100) throw ParameterError("synthetic data needs n >= 100");
    if (!(bias >= 0.0 && bias <= 1.0)) throw ParameterError("bias must lie in [0,1]");

    std::mt19937_64 rng(seed);
    std::bernoulli_distribution coin(0.5);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    Dataset d;
    const auto rows = static_cast<Eigen::Index>(n);
    d.features.resize(rows, 4);
    d.labels.resize(n);
    d.attrs.codes.resize(rows, 2);
    d.attrs.cardinalities = {2, 2};
    d.attrs.names = {"a1", "a2"};
    d.feature_names = {"merit", "proxy_a1", "proxy_a2", "noise"};

    for (Eigen::Index i = 0; i < rows; ++i) {
        const int a1 = coin(rng) ? 1 : 0;
        const int a2 = coin(rng) ? 1 : 0;
        const double z = normal(rng);
        d.features(i, 0) = z + 0.3 * normal(rng);
        d.features(i, 1) = 1.5 * (a1 - 0.5) + 0.5 * normal(rng);
        d.features(i, 2) = 1.5 * (a2 - 0.5) + 0.5 * normal(rng);
        d.features(i, 3) = normal(rng);
        const double logit = 2.5 + 2.0 * z - 6.0 * bias * a1 * a2;
        d.labels[static_cast<std::size_t>(i)] = unit(rng) < 1.0 / (1.0 + std::exp(-logit)) ? 1 : -1;
        d.attrs.codes(i, 0) = a1;
        d.attrs.codes(i, 1) = a2;
    }
    return d;
}

QuadraticProblem::QuadraticProblem(std::vector<Eigen::VectorXd> centers) : centers_(std::move(centers)) {
    if (centers_.empty()) throw ValidationError("at least one centre is required");
    for (const auto& c : centers_) {
        if (c.size() != centers_.front().size()) throw ShapeError("centre dimension", centers_.front().size(), c.size());
    }
}

std::vector<std::string> QuadraticProblem::objective_names() const {
    std::vector<std::string> names;
    for (std::size_t k = 0; k < centers_.size(); ++k) names.push_back("q" + std::to_string(k));
    return names;
}

Evaluation QuadraticProblem::evaluate(const Eigen::VectorXd& theta, std::span<const std::size_t>) const {
    Evaluation e{Eigen::VectorXd(objective_count()), GradientSet(objective_count(), param_count())};
    for (std::size_t k = 0; k < centers_.size(); ++k) {
        const Eigen::VectorXd r = theta - centers_[k];
        e.losses[static_cast<Eigen::Index>(k)] = 0.5 * r.squaredNorm();
        e.grads.row(static_cast<Eigen::Index>(k)) = r.transpose();
    }
    return e;
}

LossScales QuadraticProblem::scale_estimates(const Eigen::VectorXd& theta, double eps) const {
    return {evaluate(theta).losses.array() + eps, eps};
}

QuadraticProblem synth_pl_biobjective() {
    return QuadraticProblem({Eigen::Vector2d(-1.0, 0.0), Eigen::Vector2d(1.0, 0.0)});
}

PlateauProblem::PlateauProblem(std::vector<Eigen::VectorXd> centers, double width)
    : centers_(std::move(centers)), width_(width) {
    if (centers_.empty()) throw ValidationError("at least one centre is required");
    if (!(width_ > 0.0)) throw ParameterError("plateau width must be positive");
}

std::vector<std::string> PlateauProblem::objective_names() const {
    std::vector<std::string> names;
    for (std::size_t k = 0; k < centers_.size(); ++k) names.push_back("well" + std::to_string(k));
    return names;
}

Evaluation PlateauProblem::evaluate(const Eigen::VectorXd& theta, std::span<const std::size_t>) const {
    Evaluation e{Eigen::VectorXd(objective_count()), GradientSet(objective_count(), param_count())};
    for (std::size_t k = 0; k < centers_.size(); ++k) {
        const Eigen::VectorXd r = theta - centers_[k];
        const double well = std::exp(-r.squaredNorm() / width_);
        e.losses[static_cast<Eigen::Index>(k)] = 1.0 - well;
        e.grads.row(static_cast<Eigen::Index>(k)) = (2.0 / width_ * well * r).transpose();
    }
    return e;
}

LossScales PlateauProblem::scale_estimates(const Eigen::VectorXd& theta, double eps) const {
    return {evaluate(theta).losses.array() + eps, eps};
}

}  // namespace apfex
