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

#include <Eigen/Core>

#include <memory>
#include <span>
#include <vector>

namespace apfex {

/// K objective gradients stored as rows of a K x p matrix.
using GradientSet = Eigen::MatrixXd;

/// Throws on K == 0 or any non-finite entry.
void validate_gradients(const GradientSet& g);

/// A point of the probability simplex; the constructor enforces the invariant.
class SimplexWeights {
public:
    static constexpr double kSumTolerance = 1e-10;

    SimplexWeights() = default;
    explicit SimplexWeights(Eigen::VectorXd alpha);

    static SimplexWeights uniform(Eigen::Index k);

    const Eigen::VectorXd& values() const { return alpha_; }
    Eigen::Index size() const { return alpha_.size(); }
    double operator[](Eigen::Index k) const { return alpha_[k]; }

private:
    Eigen::VectorXd alpha_;
};

struct KktCertificate {
    SimplexWeights alpha;
    double mu = 0.0;
    Eigen::VectorXd nu;
    double stationarity_residual = 0.0;
    double complementarity_residual = 0.0;
    double dual_infeasibility = 0.0;  // max(0, -min nu)

    double objective = 0.0;   // alpha' G alpha
    double duality_gap = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Per-objective empirical loss ceilings used to put gradients on one scale.
struct LossScales {
    Eigen::VectorXd max_loss;  // each >= eps
    double eps = 1e-3;

    void validate() const;
};

/// Largest per-sample loss per objective plus eps. Objectives without a
/// per-sample decomposition use their full-set value instead.
LossScales estimate_loss_scales(const ModelSpec& model, const ParamVector& params,
                                std::span<const std::unique_ptr<Loss>> losses, const Dataset& training_set,
                                double eps);

GradientSet normalize_gradients(const GradientSet& g, const LossScales& scales);

/// G_ij = <g_i, g_j>, symmetrized.
Eigen::MatrixXd gram(const GradientSet& g);

/// argmin over the simplex of 1/2 a'Ga by away-step Frank-Wolfe with exact
/// line search, followed by a KKT solve on the detected support.
KktCertificate min_norm_solve(const Eigen::MatrixXd& G, double tol = 1e-10, int max_iter = 10000);

struct PcpResult {
    bool stationary = false;
    Eigen::VectorXd combined;   // sum_k alpha_k g_k
    Eigen::VectorXd direction;  // -combined / |combined|, empty when stationary
    double combined_norm = 0.0;
};

PcpResult pcp_direction(const GradientSet& g, const SimplexWeights& alpha, double zero_tol = 1e-8);

/// True iff <g_k, d> <= slack for every k.
bool cone_membership(const GradientSet& g, const Eigen::Ref<const Eigen::VectorXd>& d, double slack = 0.0);

struct Stationarity {
    double omega = 0.0;
    bool converged = false;
};

/// Norm of the min-norm convex combination of the gradients.
Stationarity stationarity_measure(const GradientSet& g, double tol = 1e-10, int max_iter = 10000);

}  // namespace apfex
