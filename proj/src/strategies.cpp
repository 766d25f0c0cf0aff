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

#include "apfex/strategies.hpp"

#include "apfex/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace apfex {

std::string to_string(Strategy s) {
    switch (s) {
    case Strategy::pareto_cone: return "pcp";
    case Strategy::adaptive: return "aw";
    case Strategy::exploration: return "pss";
    }
    return "?";
}

Strategy parse_strategy(const std::string& s) {
    if (s == "pcp") return Strategy::pareto_cone;
    if (s == "aw") return Strategy::adaptive;
    if (s == "pss") return Strategy::exploration;
    throw ParameterError("unknown strategy '" + s + "'");
}

void SelectorThresholds::validate() const {
    if (!(align_eps > 0.0)) throw ParameterError("alignment threshold must be positive");
    if (!(imbalance_ratio > 1.0)) throw ParameterError("imbalance ratio must exceed 1");
    if (!(stagnation_tol > 0.0)) throw ParameterError("stagnation tolerance must be positive");
    if (stagnation_window < 1) throw ParameterError("stagnation window must be at least 1");
    if (!(adapt_rate > 0.0)) throw ParameterError("adaptation rate must be positive");
    if (!(explore_smoothing > 0.0 && explore_smoothing <= 1.0)) {
        throw ParameterError("exploration smoothing must lie in (0,1]");
    }
    if (min_dwell < 1) throw ParameterError("minimum dwell must be at least 1");
    if (!(rate_eps > 0.0)) throw ParameterError("rate guard must be positive");
}

Eigen::VectorXd improvement_rates(const Eigen::VectorXd& prev, const Eigen::VectorXd& cur, double eps) {
    if (!(eps > 0.0)) throw ParameterError("rate guard must be positive");
    if (prev.size() != cur.size()) throw ShapeError("loss vector length", prev.size(), cur.size());
    Eigen::VectorXd rho(prev.size());
    for (Eigen::Index k = 0; k < prev.size(); ++k) rho[k] = (prev[k] - cur[k]) / std::max(prev[k], eps);
    return rho;
}

SimplexWeights aw_weights(const Eigen::VectorXd& rates, double adapt_rate) {
    if (!(adapt_rate > 0.0)) throw ParameterError("adaptation rate must be positive");
    if (rates.size() < 1) throw ShapeError("rate vector length", 1, rates.size());
    const Eigen::ArrayXd logits = -adapt_rate * rates.array();
    const Eigen::ArrayXd w = (logits - logits.maxCoeff()).exp();
    Eigen::VectorXd alpha = (w / w.sum()).matrix();
    alpha /= alpha.sum();
    return SimplexWeights(alpha);
}

void LossHistory::push(Eigen::VectorXd losses) {
    items_.push_back(std::move(losses));
    while (items_.size() > capacity_) items_.pop_front();
}

int LossHistory::trailing_stalled(double tol) const {
    int n = 0;
    for (std::size_t i = items_.size(); i-- > 1;) {
        if ((items_[i] - items_[i - 1]).norm() < tol) {
            ++n;
        } else {
            break;
        }
    }
    return n;
}

bool detect_stagnation(const LossHistory& history, double tol, int window) {
    if (window < 1) throw ParameterError("stagnation window must be at least 1");
    return history.trailing_stalled(tol) >= window;
}

SimplexWeights sample_dirichlet(Eigen::Index k, std::mt19937_64& rng) {
    if (k < 1) throw ShapeError("Dirichlet dimension", 1, k);
    std::gamma_distribution<double> unit_gamma(1.0, 1.0);
    Eigen::VectorXd a(k);
    double total = 0.0;
    do {
        for (Eigen::Index i = 0; i < k; ++i) a[i] = unit_gamma(rng);
        total = a.sum();
    } while (!(total > 0.0));
    a /= total;
    a /= a.sum();
    return SimplexWeights(a);
}

StrategyState::StrategyState(Eigen::Index objectives, Eigen::Index params, const SelectorThresholds& thresholds,
                             std::uint64_t seed)
    : history(static_cast<std::size_t>(thresholds.stagnation_window) + 1),
      alpha_prev(SimplexWeights::uniform(objectives)),
      d_last(Eigen::VectorXd::Zero(params)),
      rng(seed) {}

void StrategyState::enter(Strategy s) {
    if (s == active) {
        ++dwell;
    } else {
        active = s;
        dwell = 1;
    }
}

DirectionResult weighted_direction(const GradientSet& g, const SimplexWeights& alpha, double zero_tol) {
    const PcpResult p = pcp_direction(g, alpha, zero_tol);
    DirectionResult r{p.stationary ? Eigen::VectorXd::Zero(g.cols()) : p.direction, alpha, p.combined};
    return r;
}

DirectionResult pss_direction(const GradientSet& g, StrategyState& state, double smoothing, double zero_tol) {
    if (!(smoothing > 0.0 && smoothing <= 1.0)) throw ParameterError("exploration smoothing must lie in (0,1]");
    if (state.d_last.size() != g.cols()) state.d_last = Eigen::VectorXd::Zero(g.cols());

    const SimplexWeights alpha = sample_dirichlet(g.rows(), state.rng);
    const Eigen::VectorXd combined = g.transpose() * alpha.values();
    const Eigen::VectorXd fresh = -combined;

    Eigen::VectorXd d = smoothing * fresh + (1.0 - smoothing) * state.d_last;
    double norm = d.norm();
    if (norm <= zero_tol || combined.dot(d) > 0.0) {
        d = fresh;
        norm = d.norm();
    }
    if (norm <= zero_tol) {
        d.setZero();
    } else {
        d /= norm;
    }
    state.d_last = d;
    return {d, alpha, combined};
}

double min_pairwise_cosine(const GradientSet& g) {
    const Eigen::VectorXd norms = g.rowwise().norm();
    double best = 1.0;
    for (Eigen::Index i = 0; i < g.rows(); ++i) {
        for (Eigen::Index j = i + 1; j < g.rows(); ++j) {
            if (norms[i] <= 0.0 || norms[j] <= 0.0) continue;
            best = std::min(best, g.row(i).dot(g.row(j)) / (norms[i] * norms[j]));
        }
    }
    return best;
}

Strategy select_strategy(const StrategyState& state, const GradientSet& g, const Eigen::VectorXd& rates,
                         const SelectorThresholds& thresholds) {
    if (state.dwell < thresholds.min_dwell) return state.active;

    if (detect_stagnation(state.history, thresholds.stagnation_tol, thresholds.stagnation_window)) {
        return Strategy::exploration;
    }
    if (min_pairwise_cosine(g) > thresholds.align_eps) return Strategy::pareto_cone;

    double hi = -std::numeric_limits<double>::infinity();
    double lo = std::numeric_limits<double>::infinity();
    int positive = 0;
    for (Eigen::Index k = 0; k < rates.size(); ++k) {
        if (rates[k] <= 0.0) continue;
        ++positive;
        hi = std::max(hi, rates[k]);
        lo = std::min(lo, rates[k]);
    }
    if (positive >= 2 && hi / std::max(lo, thresholds.rate_eps) > thresholds.imbalance_ratio) {
        return Strategy::adaptive;
    }
    return state.active;
}

}  // namespace apfex
