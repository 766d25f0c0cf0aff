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

#include <cstdint>
#include <deque>
#include <random>
#include <string>

namespace apfex {

enum class Strategy { pareto_cone, adaptive, exploration };

std::string to_string(Strategy s);
Strategy parse_strategy(const std::string& s);

struct SelectorThresholds {
    double align_eps = 0.2;          // min pairwise cosine for the cone strategy
    double imbalance_ratio = 2.0;    // max/min positive improvement rate
    double stagnation_tol = 1e-5;    // per-step loss change considered stalled
    int stagnation_window = 5;       // consecutive stalled steps
    double adapt_rate = 10.0;        // temperature of the reweighting
    double explore_smoothing = 0.5;  // weight of the fresh sample in PSS
    int min_dwell = 3;               // iterations before the selector may switch
    double rate_eps = 1e-8;          // guard in rate denominators

    void validate() const;
};

/// rho_k = (prev_k - cur_k) / max(prev_k, eps); negative when an objective worsens.
Eigen::VectorXd improvement_rates(const Eigen::VectorXd& prev, const Eigen::VectorXd& cur, double eps);

/// alpha_k proportional to exp(-adapt_rate * rho_k).
SimplexWeights aw_weights(const Eigen::VectorXd& rates, double adapt_rate);

/// Fixed-capacity window of recent loss vectors, oldest first.
class LossHistory {
public:
    explicit LossHistory(std::size_t capacity = 6) : capacity_(capacity) {}

    void push(Eigen::VectorXd losses);
    void clear() { items_.clear(); }
    std::size_t size() const { return items_.size(); }
    std::size_t capacity() const { return capacity_; }
    const Eigen::VectorXd& back() const { return items_.back(); }
    const Eigen::VectorXd& at(std::size_t i) const { return items_.at(i); }

    /// Number of most recent consecutive steps whose change is below tol.
    int trailing_stalled(double tol) const;

private:
    std::size_t capacity_;
    std::deque<Eigen::VectorXd> items_;
};

/// True iff each of the last `window` steps changed the loss vector by less than tol.
bool detect_stagnation(const LossHistory& history, double tol, int window);

/// One draw from Dirichlet(1, ..., 1).
SimplexWeights sample_dirichlet(Eigen::Index k, std::mt19937_64& rng);

struct StrategyState {
    Strategy active = Strategy::adaptive;
    LossHistory history;
    SimplexWeights alpha_prev;
    Eigen::VectorXd d_last;  // last exploration direction; zero until the first one
    int stagnation_count = 0;
    int dwell = 0;           // iterations spent in `active`
    std::mt19937_64 rng;

    StrategyState(Eigen::Index objectives, Eigen::Index params, const SelectorThresholds& thresholds,
                  std::uint64_t seed);

    /// Records the selector's choice for this iteration.
    void enter(Strategy s);
};

struct DirectionResult {
    Eigen::VectorXd direction;  // unit length, or zero when no descent is available
    SimplexWeights alpha;
    Eigen::VectorXd combined;   // sum_k alpha_k g_k
};

/// Unit-norm -sum_k alpha_k g_k, or zero when that combination vanishes.
DirectionResult weighted_direction(const GradientSet& g, const SimplexWeights& alpha, double zero_tol);

/// Dirichlet-sampled descent direction blended with the previous exploration
/// direction. Falls back to the fresh sample if the blend would not descend
/// along its own combination. Updates state.d_last and advances state.rng.
DirectionResult pss_direction(const GradientSet& g, StrategyState& state, double smoothing, double zero_tol = 1e-8);

/// Smallest cosine over gradient pairs with non-zero norm; 1 when no pair qualifies.
double min_pairwise_cosine(const GradientSet& g);

/// Priority: stagnation, then alignment, then imbalance, else keep the current
/// strategy. No switch happens while state.dwell < min_dwell.
Strategy select_strategy(const StrategyState& state, const GradientSet& g, const Eigen::VectorXd& rates,
                         const SelectorThresholds& thresholds);

}  // namespace apfex
