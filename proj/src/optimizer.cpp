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

#include "apfex/optimizer.hpp"

#include "apfex/errors.hpp"

#include "json.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>

namespace apfex {

namespace {

using Clock = std::chrono::steady_clock;

void check_finite(const Evaluation& e, const std::vector<std::string>& names, int t) {
    for (Eigen::Index k = 0; k < e.losses.size(); ++k) {
        const std::string who = "objective " + std::to_string(k) +
                                (static_cast<std::size_t>(k) < names.size() ? " (" + names[k] + ")" : "");
        if (!std::isfinite(e.losses[k])) throw NumericError(who, "loss at iteration " + std::to_string(t));
        if (!e.grads.row(k).allFinite()) throw NumericError(who, "gradient at iteration " + std::to_string(t));
    }
}

// Row order for one pass over the samples.
class BatchPlan {
public:
    BatchPlan(std::size_t samples, std::size_t batch, std::uint64_t seed)
        : samples_(samples), batch_(batch), rng_(seed ^ 0x9e3779b97f4a7c15ULL) {}

    bool full() const { return batch_ == 0 || batch_ >= samples_; }

    /// Rows for the next step; sets `epoch_start` when a new pass begins.
    std::span<const std::size_t> next(bool& epoch_start) {
        epoch_start = false;
        if (full()) {
            epoch_start = true;
            return {};
        }
        if (cursor_ >= order_.size()) {
            order_.resize(samples_);
            std::iota(order_.begin(), order_.end(), std::size_t{0});
            std::shuffle(order_.begin(), order_.end(), rng_);
            cursor_ = 0;
            epoch_start = true;
        }
        const std::size_t len = std::min(batch_, order_.size() - cursor_);
        std::span<const std::size_t> rows(order_.data() + cursor_, len);
        cursor_ += len;
        return rows;
    }

private:
    std::size_t samples_;
    std::size_t batch_;
    std::mt19937_64 rng_;
    std::vector<std::size_t> order_;
    std::size_t cursor_ = 0;
};

}  // namespace

void ConstraintBox::validate(Eigen::Index params) const {
    if (lower.size() != params) throw ShapeError("lower bound length", params, lower.size());
    if (upper.size() != params) throw ShapeError("upper bound length", params, upper.size());
    for (Eigen::Index j = 0; j < params; ++j) {
        if (!(lower[j] <= upper[j])) throw ParameterError("bound " + std::to_string(j) + " has lower > upper");
    }
}

Eigen::VectorXd apply_constraints(const Eigen::VectorXd& direction, const Eigen::VectorXd& params,
                                  const std::optional<ConstraintBox>& box, double step) {
    if (!box) return direction;
    box->validate(params.size());
    if (direction.size() != params.size()) throw ShapeError("direction length", params.size(), direction.size());
    Eigen::VectorXd d = direction;
    for (Eigen::Index j = 0; j < d.size(); ++j) {
        const double next = params[j] + step * d[j];
        const bool pushes_up = d[j] > 0.0 && (next > box->upper[j] || params[j] >= box->upper[j]);
        const bool pushes_down = d[j] < 0.0 && (next < box->lower[j] || params[j] <= box->lower[j]);
        if (pushes_up || pushes_down) d[j] = 0.0;
    }
    return d;
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw ParameterError("learning rate must be positive");
    if (iterations < 0) throw ParameterError("iteration count must be non-negative");
    thresholds.validate();
    if (!(min_norm_tol > 0.0)) throw ParameterError("min-norm tolerance must be positive");
    if (min_norm_max_iter < 1) throw ParameterError("min-norm iteration cap must be positive");
    if (!(zero_tol > 0.0)) throw ParameterError("stationarity threshold must be positive");
    if (omega_every < 1) throw ParameterError("omega sampling interval must be positive");
    if (!(scale_eps > 0.0)) throw ParameterError("loss scale guard must be positive");
    if (scale_refresh < 1) throw ParameterError("scale refresh interval must be positive");
    if (archive_capacity < 1) throw ParameterError("archive capacity must be positive");
    if (validate_every < 1) throw ParameterError("validation interval must be positive");
}

bool dominates(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return (a.array() <= b.array()).all() && (a.array() < b.array()).any();
}

bool ParetoArchive::insert(const Eigen::VectorXd& losses, std::size_t snapshot_id, Eigen::VectorXd params) {
    if (!losses.allFinite()) throw NumericError("Pareto archive", "non-finite loss vector");
    for (const auto& e : entries_) {
        if (dominates(e.losses, losses) || e.losses == losses) return false;
    }
    std::erase_if(entries_, [&](const ArchiveEntry& e) { return dominates(losses, e.losses); });
    entries_.push_back({losses, snapshot_id, std::move(params)});
    while (entries_.size() > capacity_) evict_crowded();
    return true;
}

void ParetoArchive::evict_crowded() {
    std::size_t victim = 0;
    double closest = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        double nearest = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < entries_.size(); ++j) {
            if (i != j) nearest = std::min(nearest, (entries_[i].losses - entries_[j].losses).norm());
        }
        if (nearest < closest) {
            closest = nearest;
            victim = i;
        }
    }
    entries_.erase(entries_.begin() + static_cast<std::ptrdiff_t>(victim));
}

bool archive_insert(ParetoArchive& archive, const Eigen::VectorXd& losses, std::size_t snapshot_id) {
    return archive.insert(losses, snapshot_id);
}

std::string to_string(Termination t) {
    return t == Termination::completed ? "completed" : "pareto_stationary";
}

TrainResult train(const Problem& problem, const Eigen::VectorXd& init, const TrainConfig& config) {
    config.validate();
    const Eigen::Index K = problem.objective_count();
    const Eigen::Index P = problem.param_count();
    if (K < 1) throw ShapeError("objective count", 1, K);
    if (init.size() != P) throw ShapeError("initial parameter length", P, init.size());
    if (config.box) config.box->validate(P);

    const auto names = problem.objective_names();
    TrainResult result{init, init, 0, 0.0, {names, {}}, ParetoArchive(config.archive_capacity),
                       Termination::completed};
    Eigen::VectorXd theta = init;

    if (config.validation) result.best_validation = config.validation(theta);

    StrategyState state(K, P, config.thresholds, config.seed);
    BatchPlan plan(problem.sample_count(), config.batch_size, config.seed);
    LossScales scales;
    int since_refresh = 0;

    for (int t = 0; t < config.iterations; ++t) {
        const auto start = Clock::now();
        bool epoch_start = false;
        const auto rows = plan.next(epoch_start);

        const Evaluation eval = problem.evaluate(theta, rows);
        check_finite(eval, names, t);

        const bool refresh = plan.full() ? (t == 0 || since_refresh >= config.scale_refresh) : epoch_start;
        if (refresh) {
            scales = problem.scale_estimates(theta, config.scale_eps);
            since_refresh = 0;
        }
        ++since_refresh;
        const GradientSet g = normalize_gradients(eval.grads, scales);

        if (plan.full()) {
            result.archive.insert(eval.losses, static_cast<std::size_t>(t), theta);
        } else if (epoch_start) {
            const Evaluation whole = problem.evaluate(theta);
            check_finite(whole, names, t);
            result.archive.insert(whole.losses, static_cast<std::size_t>(t), theta);
        }

        const Eigen::VectorXd rates =
            state.history.size() >= 1 ? improvement_rates(state.history.back(), eval.losses, config.thresholds.rate_eps)
                                      : Eigen::VectorXd::Zero(K);
        state.history.push(eval.losses);
        state.stagnation_count = state.history.trailing_stalled(config.thresholds.stagnation_tol);

        const Strategy chosen = config.fixed_strategy ? *config.fixed_strategy
                                                      : select_strategy(state, g, rates, config.thresholds);
        state.enter(chosen);

        TraceRecord rec;
        rec.t = t;
        rec.losses = eval.losses;
        rec.strategy = chosen;

        DirectionResult dir;
        bool stationary = false;
        switch (chosen) {
        case Strategy::pareto_cone: {
            const KktCertificate cert = min_norm_solve(gram(g), config.min_norm_tol, config.min_norm_max_iter);
            rec.minnorm_converged = cert.converged;
            dir = weighted_direction(g, cert.alpha, config.zero_tol);
            stationary = dir.combined.norm() <= config.zero_tol;
            break;
        }
        case Strategy::adaptive:
            dir = weighted_direction(g, aw_weights(rates, config.thresholds.adapt_rate), config.zero_tol);
            break;
        case Strategy::exploration:
            dir = pss_direction(g, state, config.thresholds.explore_smoothing, config.zero_tol);
            break;
        }
        state.alpha_prev = dir.alpha;
        rec.alpha = dir.alpha.values();
        rec.combined_norm = dir.combined.norm();

        if (t % config.omega_every == 0) {
            rec.omega = stationarity_measure(eval.grads, config.min_norm_tol, config.min_norm_max_iter).omega;
        }

        const Eigen::VectorXd d = apply_constraints(dir.direction, theta, config.box, config.learning_rate);
        const Eigen::VectorXd step = config.learning_rate * d;
        theta += step;
        rec.step_norm = step.norm();
        rec.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
        if (config.on_record) config.on_record(rec);
        result.trace.records.push_back(std::move(rec));

        if (config.validation && ((t + 1) % config.validate_every == 0 || t + 1 == config.iterations)) {
            const double score = config.validation(theta);
            if (score < result.best_validation) {
                result.best_validation = score;
                result.best_params = theta;
                result.best_iteration = t + 1;
            }
        }

        if (stationary && !config.stationary_escape) {
            result.termination = Termination::pareto_stationary;
            break;
        }
    }

    result.params = theta;
    if (!config.validation) {
        result.best_params = theta;
        result.best_iteration = static_cast<int>(result.trace.size());
    }
    return result;
}

double convergence_diagnostic(const TrainTrace& trace) {
    std::vector<double> xs;
    std::vector<double> ys;
    double running = std::numeric_limits<double>::infinity();
    for (const auto& r : trace.records) {
        if (!r.omega) continue;
        running = std::min(running, *r.omega);
        xs.push_back(std::log(static_cast<double>(r.t) + 1.0));
        ys.push_back(std::log(std::max(running, std::numeric_limits<double>::min())));
    }
    if (xs.size() < 2) {
        throw DiagnosticError("convergence slope needs at least 2 omega samples, got " + std::to_string(xs.size()));
    }
    const double n = static_cast<double>(xs.size());
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    if (!(sxx > 0.0)) throw DiagnosticError("omega samples share a single iteration index");
    return sxy / sxx;
}

std::string trace_record_json(const TraceRecord& r, const std::vector<std::string>& names, bool include_wall_time) {
    nlohmann::ordered_json j;
    j["t"] = r.t;
    nlohmann::ordered_json losses = nlohmann::ordered_json::object();
    for (Eigen::Index k = 0; k < r.losses.size(); ++k) {
        const auto kk = static_cast<std::size_t>(k);
        losses[kk < names.size() ? names[kk] : "L" + std::to_string(k)] = r.losses[k];
    }
    j["losses"] = std::move(losses);
    j["alpha"] = std::vector<double>(r.alpha.data(), r.alpha.data() + r.alpha.size());
    j["strategy"] = to_string(r.strategy);
    j["combined_norm"] = r.combined_norm;
    j["omega"] = r.omega ? nlohmann::ordered_json(*r.omega) : nlohmann::ordered_json(nullptr);
    j["minnorm_converged"] = r.minnorm_converged;
    j["step_norm"] = r.step_norm;
    if (include_wall_time) j["wall_ms"] = r.wall_ms;
    return j.dump();
}

void write_trace_jsonl(std::ostream& out, const TrainTrace& trace, bool include_wall_time) {
    for (const auto& r : trace.records) out << trace_record_json(r, trace.objective_names, include_wall_time) << '\n';
}

TrainTrace read_trace_jsonl(std::istream& in, std::vector<std::string>* warnings) {
    TrainTrace trace;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            const auto j = nlohmann::ordered_json::parse(line);
            TraceRecord r;
            r.t = j.at("t").get<int>();
            const auto& losses = j.at("losses");
            if (!losses.is_object()) throw ValidationError("'losses' must be an object");
            std::vector<std::string> names;
            std::vector<double> values;
            for (const auto& [name, v] : losses.items()) {
                names.push_back(name);
                values.push_back(v.get<double>());
            }
            if (trace.records.empty()) {
                trace.objective_names = names;
            } else if (names != trace.objective_names) {
                throw ValidationError("objective names differ from earlier records");
            }
            const auto alpha = j.at("alpha").get<std::vector<double>>();
            r.losses = Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
            r.alpha = Eigen::Map<const Eigen::VectorXd>(alpha.data(), static_cast<Eigen::Index>(alpha.size()));
            r.strategy = parse_strategy(j.at("strategy").get<std::string>());
            r.combined_norm = j.at("combined_norm").get<double>();
            if (!j.at("omega").is_null()) r.omega = j.at("omega").get<double>();
            r.minnorm_converged = j.at("minnorm_converged").get<bool>();
            r.step_norm = j.at("step_norm").get<double>();
            if (j.contains("wall_ms")) r.wall_ms = j.at("wall_ms").get<double>();
            trace.records.push_back(std::move(r));
        } catch (const std::exception& e) {
            const std::string msg = "trace line " + std::to_string(lineno) + ": " + e.what();
            if (!warnings) throw ValidationError(msg);
            warnings->push_back(msg + "; export truncated after " + std::to_string(trace.records.size()) + " record(s)");
            break;
        }
    }
    return trace;
}

}  // namespace apfex
