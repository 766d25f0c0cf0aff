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

#include "apfex/diffmodel.hpp"
#include "apfex/groups.hpp"

#include <Eigen/Core>

#include <span>
#include <string>
#include <vector>

namespace apfex {

// ---------------------------------------------------------------------------
// Indicator relaxations
// ---------------------------------------------------------------------------

/// tanh(5(x - tau))/2 + 0.5
double soft_round(double x, double tau);
double soft_round_derivative(double x, double tau);

/// Piecewise-linear relaxation of 1{x > tau}: 0 below tau-gamma, 1 above
/// tau+gamma, slope 1/(2 gamma) in between. At the two kinks the derivative is
/// the midpoint subgradient 1/(4 gamma).
double ccr(double x, double tau, double gamma);
double ccr_derivative(double x, double tau, double gamma);

enum class SurrogateKind { tanh_soft_round, ccr };

struct SurrogateConfig {
    SurrogateKind kind = SurrogateKind::tanh_soft_round;
    double tau = 0.5;
    double gamma = 0.1;  // ccr only
    double steepness = 5.0;  // tanh only; fixed by construction

    void validate() const;
    double value(double x) const;
    double derivative(double x) const;
};

// ---------------------------------------------------------------------------
// Per-group soft rates
// ---------------------------------------------------------------------------

/// Rate per group; absent groups (empty, or no positives for TPR) are flagged
/// and never read as zero.
struct GroupRates {
    std::vector<double> value;
    std::vector<bool> present;
    std::vector<double> denominator;  // n_g for DP, positives + eps for TPR

    int present_count() const;
    std::vector<double> present_values() const;
    std::vector<int> present_groups() const;
};

/// Mean soft-rounded score per group.
GroupRates dp_per_group_soft(const Eigen::Ref<const Eigen::VectorXd>& scores, const GroupTable& groups,
                             const SurrogateConfig& surrogate);

/// Sum of soft-rounded scores over positives / (positives + eps_smooth) per group.
GroupRates tpr_per_group_soft(const Eigen::Ref<const Eigen::VectorXd>& scores, std::span<const int> labels,
                              const GroupTable& groups, const SurrogateConfig& surrogate, double eps_smooth);

// ---------------------------------------------------------------------------
// Disparity aggregation
// ---------------------------------------------------------------------------

/// Mean over the C(G,2) pairs of |M_i - M_j|, or sqrt((M_i - M_j)^2 + eps_abs) when smooth.
double pairwise_fairness(std::span<const double> rates, double eps_abs, bool smooth);
std::vector<double> pairwise_fairness_grad(std::span<const double> rates, double eps_abs, bool smooth);

/// lambda * task + fairness
double combined_loss(double task_loss, double fairness_loss, double lambda);

struct ClassGroupRates {
    Eigen::MatrixXd dp;          // C x G
    Eigen::VectorXd mass;        // sum_i h_ig
    std::vector<bool> present;   // mass > 0
    Eigen::MatrixXd present_dp() const;
};

/// DP_{c,g} = sum_i p_ic h_ig / sum_i h_ig.
ClassGroupRates multiclass_dp(const Eigen::MatrixXd& probs, const Eigen::MatrixXd& memberships);

/// (1/C) (2/(G(G-1))) sum_c sum_{g1<g2} sqrt((DP_c,g1 - DP_c,g2)^2 + eps_abs)
double multiclass_fair_loss(const Eigen::MatrixXd& dp, double eps_abs);
Eigen::MatrixXd multiclass_fair_loss_grad(const Eigen::MatrixXd& dp, double eps_abs);

// ---------------------------------------------------------------------------
// Trainable objectives
// ---------------------------------------------------------------------------

enum class FairMetric { dp, tpr };

/// composite: |.| pairwise + lambda*task + beta*||scores||^2  (DPLoss / TPRLoss)
/// generalized: lambda*task + pairwise disparity              (fairness-constrained loss)
enum class FairForm { composite, generalized };

struct FairLossConfig {
    FairMetric metric = FairMetric::dp;
    FairForm form = FairForm::generalized;
    double lambda = 0.1;
    double beta = 0.0;          // composite DP only
    double eps_smooth = 1e-6;
    double eps_abs = 1e-6;
    bool smooth = false;        // sqrt(x^2 + eps_abs) in place of |x|
    bool include_task = true;   // add lambda * task to the objective
    SurrogateConfig surrogate;

    void validate() const;
};

std::string to_string(FairMetric m);

/// Pairwise group-disparity objective on a binary model. `attributes` selects
/// the sensitive columns whose Cartesian product defines the groups; empty
/// means all of them.
class GroupFairnessLoss final : public Loss {
public:
    GroupFairnessLoss(FairLossConfig config, std::vector<int> attributes, std::string name = {});

    std::string name() const override { return name_; }
    double evaluate(const PredictionBatch& pred, const Dataset& data, Eigen::MatrixXd* d_output) const override;
    Eigen::VectorXd kink_offsets(const PredictionBatch& pred, const Dataset& data) const override;

    const FairLossConfig& config() const { return config_; }
    const std::vector<int>& attributes() const { return attributes_; }

private:
    GroupTable groups_for(const Dataset& data) const;

    FairLossConfig config_;
    std::vector<int> attributes_;
    std::string name_;
};

/// Multi-class demographic-parity objective with CCR group weights computed
/// from one-hot group membership scores.
class MulticlassFairnessLoss final : public Loss {
public:
    struct Config {
        double lambda = 0.1;
        double eps_abs = 1e-6;
        double membership_tau = 0.5;
        double membership_gamma = 0.1;
        bool include_task = true;
    };

    MulticlassFairnessLoss(Config config, std::vector<int> attributes, std::string name = {});

    std::string name() const override { return name_; }
    double evaluate(const PredictionBatch& pred, const Dataset& data, Eigen::MatrixXd* d_output) const override;

private:
    Config config_;
    std::vector<int> attributes_;
    std::string name_;
};

}  // namespace apfex
