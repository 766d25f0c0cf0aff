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

#include "apfex/fairloss.hpp"

#include "apfex/errors.hpp"

#include <cmath>
#include <utility>

namespace apfex {

namespace {

constexpr double kSoftRoundSteepness = 5.0;

void require_groups(std::size_t usable, const char* what) {
    if (usable < 2) {
        throw DegenerateGroupingError(std::string(what) + ": " + std::to_string(usable) +
                                      " usable group(s), need at least 2");
    }
}

double abs_like(double x, double eps_abs, bool smooth) { return smooth ? std::sqrt(x * x + eps_abs) : std::abs(x); }

double abs_like_derivative(double x, double eps_abs, bool smooth) {
    if (smooth) return x / std::sqrt(x * x + eps_abs);
    return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
}

Eigen::VectorXd positive_scores(const PredictionBatch& pred, const std::string& who) {
    if (!pred.binary()) throw ShapeError(who + " expects a binary score column, columns", 1, pred.values.cols());
    return pred.values.col(0);
}

}  // namespace

double soft_round(double x, double tau) { return std::tanh(kSoftRoundSteepness * (x - tau)) / 2.0 + 0.5; }

double soft_round_derivative(double x, double tau) {
    const double t = std::tanh(kSoftRoundSteepness * (x - tau));
    return kSoftRoundSteepness * (1.0 - t * t) / 2.0;
}

double ccr(double x, double tau, double gamma) {
    if (!(gamma > 0.0)) throw ParameterError("ccr band half-width must be positive, got " + std::to_string(gamma));
    if (x <= tau - gamma) return 0.0;
    if (x >= tau + gamma) return 1.0;
    return (x - tau + gamma) / (2.0 * gamma);
}

double ccr_derivative(double x, double tau, double gamma) {
    if (!(gamma > 0.0)) throw ParameterError("ccr band half-width must be positive, got " + std::to_string(gamma));
    const double lo = tau - gamma;
    const double hi = tau + gamma;
    if (x == lo || x == hi) return 1.0 / (4.0 * gamma);
    if (x < lo || x > hi) return 0.0;
    return 1.0 / (2.0 * gamma);
}

void SurrogateConfig::validate() const {
    if (!(tau > 0.0 && tau < 1.0)) throw ParameterError("surrogate threshold must lie in (0,1)");
    if (kind == SurrogateKind::ccr && !(gamma > 0.0)) throw ParameterError("ccr band half-width must be positive");
}

double SurrogateConfig::value(double x) const {
    return kind == SurrogateKind::ccr ? ccr(x, tau, gamma) : soft_round(x, tau);
}

double SurrogateConfig::derivative(double x) const {
    return kind == SurrogateKind::ccr ? ccr_derivative(x, tau, gamma) : soft_round_derivative(x, tau);
}

int GroupRates::present_count() const {
    int n = 0;
    for (bool p : present) n += p ? 1 : 0;
    return n;
}

std::vector<double> GroupRates::present_values() const {
    std::vector<double> out;
    for (std::size_t g = 0; g < value.size(); ++g) {
        if (present[g]) out.push_back(value[g]);
    }
    return out;
}

std::vector<int> GroupRates::present_groups() const {
    std::vector<int> out;
    for (std::size_t g = 0; g < present.size(); ++g) {
        if (present[g]) out.push_back(static_cast<int>(g));
    }
    return out;
}

GroupRates dp_per_group_soft(const Eigen::Ref<const Eigen::VectorXd>& scores, const GroupTable& groups,
                             const SurrogateConfig& surrogate) {
    surrogate.validate();
    if (scores.size() != groups.sample_count()) throw ShapeError("scores vs group table", groups.sample_count(), scores.size());
    const auto G = static_cast<std::size_t>(groups.group_count());
    GroupRates r{std::vector<double>(G, 0.0), std::vector<bool>(G, false), std::vector<double>(G, 0.0)};
    for (std::size_t g = 0; g < G; ++g) {
        const auto& members = groups.members(static_cast<int>(g));
        if (members.empty()) continue;
        double sum = 0.0;
        for (auto i : members) sum += surrogate.value(scores[static_cast<Eigen::Index>(i)]);
        r.denominator[g] = static_cast<double>(members.size());
        r.value[g] = sum / r.denominator[g];
        r.present[g] = true;
    }
    require_groups(static_cast<std::size_t>(r.present_count()), "demographic parity");
    return r;
}

GroupRates tpr_per_group_soft(const Eigen::Ref<const Eigen::VectorXd>& scores, std::span<const int> labels,
                              const GroupTable& groups, const SurrogateConfig& surrogate, double eps_smooth) {
    surrogate.validate();
    if (!(eps_smooth > 0.0)) throw ParameterError("denominator guard must be positive");
    if (scores.size() != groups.sample_count()) throw ShapeError("scores vs group table", groups.sample_count(), scores.size());
    if (static_cast<Eigen::Index>(labels.size()) != scores.size()) {
        throw ShapeError("labels vs scores", scores.size(), static_cast<std::ptrdiff_t>(labels.size()));
    }
    const auto G = static_cast<std::size_t>(groups.group_count());
    GroupRates r{std::vector<double>(G, 0.0), std::vector<bool>(G, false), std::vector<double>(G, 0.0)};
    for (std::size_t g = 0; g < G; ++g) {
        double sum = 0.0;
        int positives = 0;
        for (auto i : groups.members(static_cast<int>(g))) {
            if (labels[i] != 1) continue;
            ++positives;
            sum += surrogate.value(scores[static_cast<Eigen::Index>(i)]);
        }
        if (positives == 0) continue;
        r.denominator[g] = positives + eps_smooth;
        r.value[g] = sum / r.denominator[g];
        r.present[g] = true;
    }
    require_groups(static_cast<std::size_t>(r.present_count()), "true positive rate parity");
    return r;
}

double pairwise_fairness(std::span<const double> rates, double eps_abs, bool smooth) {
    require_groups(rates.size(), "pairwise fairness");
    double total = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < rates.size(); ++i) {
        for (std::size_t j = i + 1; j < rates.size(); ++j, ++pairs) total += abs_like(rates[i] - rates[j], eps_abs, smooth);
    }
    return total / static_cast<double>(pairs);
}

std::vector<double> pairwise_fairness_grad(std::span<const double> rates, double eps_abs, bool smooth) {
    require_groups(rates.size(), "pairwise fairness");
    const double pairs = static_cast<double>(rates.size() * (rates.size() - 1) / 2);
    std::vector<double> grad(rates.size(), 0.0);
    for (std::size_t i = 0; i < rates.size(); ++i) {
        for (std::size_t j = i + 1; j < rates.size(); ++j) {
            const double d = abs_like_derivative(rates[i] - rates[j], eps_abs, smooth) / pairs;
            grad[i] += d;
            grad[j] -= d;
        }
    }
    return grad;
}

double combined_loss(double task_loss, double fairness_loss, double lambda) {
    if (lambda < 0.0) throw ParameterError("trade-off weight must be non-negative");
    return lambda * task_loss + fairness_loss;
}

Eigen::MatrixXd ClassGroupRates::present_dp() const {
    std::vector<Eigen::Index> cols;
    for (std::size_t g = 0; g < present.size(); ++g) {
        if (present[g]) cols.push_back(static_cast<Eigen::Index>(g));
    }
    Eigen::MatrixXd out(dp.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = dp.col(cols[k]);
    return out;
}

ClassGroupRates multiclass_dp(const Eigen::MatrixXd& probs, const Eigen::MatrixXd& memberships) {
    if (probs.rows() != memberships.rows()) throw ShapeError("membership rows", probs.rows(), memberships.rows());
    ClassGroupRates r;
    r.mass = memberships.colwise().sum().transpose();
    r.dp = Eigen::MatrixXd::Zero(probs.cols(), memberships.cols());
    r.present.assign(static_cast<std::size_t>(memberships.cols()), false);
    const Eigen::MatrixXd weighted = probs.transpose() * memberships;  // C x G
    for (Eigen::Index g = 0; g < memberships.cols(); ++g) {
        if (!(r.mass[g] > 0.0)) continue;
        r.dp.col(g) = weighted.col(g) / r.mass[g];
        r.present[static_cast<std::size_t>(g)] = true;
    }
    return r;
}

double multiclass_fair_loss(const Eigen::MatrixXd& dp, double eps_abs) {
    require_groups(static_cast<std::size_t>(dp.cols()), "multi-class parity");
    const Eigen::Index C = dp.rows();
    const Eigen::Index G = dp.cols();
    double total = 0.0;
    for (Eigen::Index c = 0; c < C; ++c) {
        for (Eigen::Index a = 0; a < G; ++a) {
            for (Eigen::Index b = a + 1; b < G; ++b) total += abs_like(dp(c, a) - dp(c, b), eps_abs, true);
        }
    }
    return total * 2.0 / (static_cast<double>(C) * static_cast<double>(G * (G - 1)));
}

Eigen::MatrixXd multiclass_fair_loss_grad(const Eigen::MatrixXd& dp, double eps_abs) {
    require_groups(static_cast<std::size_t>(dp.cols()), "multi-class parity");
    const Eigen::Index C = dp.rows();
    const Eigen::Index G = dp.cols();
    const double scale = 2.0 / (static_cast<double>(C) * static_cast<double>(G * (G - 1)));
    Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(C, G);
    for (Eigen::Index c = 0; c < C; ++c) {
        for (Eigen::Index a = 0; a < G; ++a) {
            for (Eigen::Index b = a + 1; b < G; ++b) {
                const double d = scale * abs_like_derivative(dp(c, a) - dp(c, b), eps_abs, true);
                grad(c, a) += d;
                grad(c, b) -= d;
            }
        }
    }
    return grad;
}

void FairLossConfig::validate() const {
    if (lambda < 0.0) throw ParameterError("trade-off weight must be non-negative");
    if (beta < 0.0) throw ParameterError("score penalty weight must be non-negative");
    if (!(eps_smooth > 0.0)) throw ParameterError("denominator guard must be positive");
    if (!(eps_abs > 0.0)) throw ParameterError("absolute-value smoothing must be positive");
    surrogate.validate();
}

std::string to_string(FairMetric m) { return m == FairMetric::dp ? "dp" : "tpr"; }

GroupFairnessLoss::GroupFairnessLoss(FairLossConfig config, std::vector<int> attributes, std::string name)
    : config_(std::move(config)), attributes_(std::move(attributes)), name_(std::move(name)) {
    config_.validate();
    if (name_.empty()) name_ = "fair_" + to_string(config_.metric);
}

GroupTable GroupFairnessLoss::groups_for(const Dataset& data) const {
    if (attributes_.empty()) return build_intersection(data.attrs);
    return build_intersection(data.attrs.select(attributes_));
}

double GroupFairnessLoss::evaluate(const PredictionBatch& pred, const Dataset& data, Eigen::MatrixXd* d_output) const {
    const Eigen::VectorXd scores = positive_scores(pred, name_);
    const GroupTable groups = groups_for(data);
    const GroupRates rates = config_.metric == FairMetric::dp
                                 ? dp_per_group_soft(scores, groups, config_.surrogate)
                                 : tpr_per_group_soft(scores, data.labels, groups, config_.surrogate, config_.eps_smooth);

    const auto present = rates.present_groups();
    const auto values = rates.present_values();
    double value = pairwise_fairness(values, config_.eps_abs, config_.smooth);

    Eigen::VectorXd d_scores;
    if (d_output) {
        d_scores = Eigen::VectorXd::Zero(scores.size());
        const auto d_rates = pairwise_fairness_grad(values, config_.eps_abs, config_.smooth);
        for (std::size_t k = 0; k < present.size(); ++k) {
            const int g = present[k];
            const double w = d_rates[k] / rates.denominator[static_cast<std::size_t>(g)];
            for (auto i : groups.members(g)) {
                if (config_.metric == FairMetric::tpr && data.labels[i] != 1) continue;
                const auto ii = static_cast<Eigen::Index>(i);
                d_scores[ii] += w * config_.surrogate.derivative(scores[ii]);
            }
        }
    }

    if (config_.include_task && config_.lambda > 0.0) {
        Eigen::MatrixXd d_task;
        const double task = CrossEntropyLoss{}.evaluate(pred, data, d_output ? &d_task : nullptr);
        value = combined_loss(task, value, config_.lambda);
        if (d_output) d_scores += config_.lambda * d_task.col(0);
    }

    if (config_.form == FairForm::composite && config_.metric == FairMetric::dp && config_.beta > 0.0) {
        value += config_.beta * scores.squaredNorm();
        if (d_output) d_scores += 2.0 * config_.beta * scores;
    }

    if (d_output) *d_output = d_scores;
    return value;
}

Eigen::VectorXd GroupFairnessLoss::kink_offsets(const PredictionBatch& pred, const Dataset& data) const {
    const Eigen::VectorXd scores = positive_scores(pred, name_);
    std::vector<double> offsets;
    if (config_.surrogate.kind == SurrogateKind::ccr) {
        for (Eigen::Index i = 0; i < scores.size(); ++i) {
            offsets.push_back(scores[i] - (config_.surrogate.tau - config_.surrogate.gamma));
            offsets.push_back(scores[i] - (config_.surrogate.tau + config_.surrogate.gamma));
        }
    }
    if (!config_.smooth) {
        // |M_i - M_j| is itself non-differentiable where two group rates meet.
        const GroupTable groups = groups_for(data);
        const GroupRates rates = config_.metric == FairMetric::dp
                                     ? dp_per_group_soft(scores, groups, config_.surrogate)
                                     : tpr_per_group_soft(scores, data.labels, groups, config_.surrogate, config_.eps_smooth);
        const auto values = rates.present_values();
        for (std::size_t a = 0; a < values.size(); ++a) {
            for (std::size_t b = a + 1; b < values.size(); ++b) offsets.push_back(values[a] - values[b]);
        }
    }
    return Eigen::Map<const Eigen::VectorXd>(offsets.data(), static_cast<Eigen::Index>(offsets.size()));
}

MulticlassFairnessLoss::MulticlassFairnessLoss(Config config, std::vector<int> attributes, std::string name)
    : config_(config), attributes_(std::move(attributes)), name_(std::move(name)) {
    if (config_.lambda < 0.0) throw ParameterError("trade-off weight must be non-negative");
    if (!(config_.eps_abs > 0.0)) throw ParameterError("absolute-value smoothing must be positive");
    if (!(config_.membership_gamma > 0.0)) throw ParameterError("membership band half-width must be positive");
    if (name_.empty()) name_ = "fair_multiclass";
}

double MulticlassFairnessLoss::evaluate(const PredictionBatch& pred, const Dataset& data,
                                        Eigen::MatrixXd* d_output) const {
    const GroupTable groups =
        attributes_.empty() ? build_intersection(data.attrs) : build_intersection(data.attrs.select(attributes_));

    // Binary heads are lifted to two columns (1 - s, s).
    Eigen::MatrixXd probs;
    if (pred.binary()) {
        probs.resize(pred.size(), 2);
        probs.col(0) = 1.0 - pred.values.col(0).array();
        probs.col(1) = pred.values.col(0);
    } else {
        probs = pred.values;
    }

    Eigen::MatrixXd h(pred.size(), groups.group_count());
    for (int g = 0; g < groups.group_count(); ++g) {
        Eigen::VectorXd onehot = Eigen::VectorXd::Zero(pred.size());
        for (auto i : groups.members(g)) onehot[static_cast<Eigen::Index>(i)] = 1.0;
        h.col(g) = soft_membership(onehot, config_.membership_tau, config_.membership_gamma);
    }

    const ClassGroupRates rates = multiclass_dp(probs, h);
    const Eigen::MatrixXd dp = rates.present_dp();
    double value = multiclass_fair_loss(dp, config_.eps_abs);

    if (d_output) {
        const Eigen::MatrixXd d_dp_present = multiclass_fair_loss_grad(dp, config_.eps_abs);
        Eigen::MatrixXd d_dp = Eigen::MatrixXd::Zero(rates.dp.rows(), rates.dp.cols());
        Eigen::Index k = 0;
        for (Eigen::Index g = 0; g < rates.dp.cols(); ++g) {
            if (!rates.present[static_cast<std::size_t>(g)]) continue;
            d_dp.col(g) = d_dp_present.col(k++) / rates.mass[g];
        }
        const Eigen::MatrixXd d_probs = h * d_dp.transpose();  // n x C
        if (pred.binary()) {
            *d_output = d_probs.col(1) - d_probs.col(0);
        } else {
            *d_output = d_probs;
        }
    }

    if (config_.include_task && config_.lambda > 0.0) {
        Eigen::MatrixXd d_task;
        const double task = CrossEntropyLoss{}.evaluate(pred, data, d_output ? &d_task : nullptr);
        value = combined_loss(task, value, config_.lambda);
        if (d_output) *d_output += config_.lambda * d_task;
    }
    return value;
}

}  // namespace apfex
