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

#include "apfex/problem.hpp"
#include "apfex/strategies.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace apfex {

/// Per-parameter bounds lower <= theta <= upper.
struct ConstraintBox {
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;

    void validate(Eigen::Index params) const;
};

/// Zeroes every component of `direction` that would carry its parameter out of
/// the box on a step of length `step`. Identity without a box.
Eigen::VectorXd apply_constraints(const Eigen::VectorXd& direction, const Eigen::VectorXd& params,
                                  const std::optional<ConstraintBox>& box, double step);

struct TraceRecord {
    int t = 0;
    Eigen::VectorXd losses;
    Eigen::VectorXd alpha;
    Strategy strategy = Strategy::adaptive;
    double combined_norm = 0.0;
    std::optional<double> omega;
    bool minnorm_converged = true;
    double step_norm = 0.0;
    double wall_ms = 0.0;
};

struct TrainConfig {
    double learning_rate = 0.05;
    int iterations = 1000;
    std::size_t batch_size = 0;  // 0 = full batch
    std::uint64_t seed = 0;
    SelectorThresholds thresholds;
    std::optional<Strategy> fixed_strategy;  // bypasses the selector

    double min_norm_tol = 1e-10;
    int min_norm_max_iter = 10000;
    double zero_tol = 1e-8;
    bool stationary_escape = true;  // keep iterating after a zero cone step

    int omega_every = 25;
    double scale_eps = 1e-3;
    int scale_refresh = 100;  // full batch only; minibatch refreshes per epoch

    std::optional<ConstraintBox> box;
    std::size_t archive_capacity = 64;

    /// Lower is better. Called every validate_every iterations and after the last one.
    std::function<double(const Eigen::VectorXd&)> validation;
    int validate_every = 5;

    /// Called with each finished trace record, e.g. to stream it to disk.
    std::function<void(const TraceRecord&)> on_record;

    void validate() const;
};

struct TrainTrace {
    std::vector<std::string> objective_names;
    std::vector<TraceRecord> records;

    std::size_t size() const { return records.size(); }
};

struct ArchiveEntry {
    Eigen::VectorXd losses;
    std::size_t snapshot_id = 0;
    Eigen::VectorXd params;
};

/// True iff a is no worse than b everywhere and strictly better somewhere.
bool dominates(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// Mutually non-dominated loss vectors with parameter snapshots. Over
/// capacity, the member with the nearest neighbour in loss space is evicted.
class ParetoArchive {
public:
    explicit ParetoArchive(std::size_t capacity = 64) : capacity_(capacity) {}

    /// Returns true if the point was kept.
    bool insert(const Eigen::VectorXd& losses, std::size_t snapshot_id, Eigen::VectorXd params = {});

    const std::vector<ArchiveEntry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }
    std::size_t capacity() const { return capacity_; }

private:
    void evict_crowded();

    std::size_t capacity_;
    std::vector<ArchiveEntry> entries_;
};

bool archive_insert(ParetoArchive& archive, const Eigen::VectorXd& losses, std::size_t snapshot_id);

enum class Termination { completed, pareto_stationary };

std::string to_string(Termination t);

struct TrainResult {
    Eigen::VectorXd params;
    Eigen::VectorXd best_params;  // best validation score, or final params without a validator
    int best_iteration = -1;
    double best_validation = 0.0;
    TrainTrace trace;
    ParetoArchive archive;
    Termination termination = Termination::completed;
};

/// The adaptive multi-strategy descent loop. Throws NumericError naming the
/// iteration and objective when a loss or gradient goes non-finite.
TrainResult train(const Problem& problem, const Eigen::VectorXd& init, const TrainConfig& config);

/// Least-squares slope of log(running-min omega) against log(t + 1).
double convergence_diagnostic(const TrainTrace& trace);

/// One JSON object per line; losses are keyed by objective name. Wall time is
/// omitted unless requested so exports of the same run are byte-identical.
std::string trace_record_json(const TraceRecord& record, const std::vector<std::string>& objective_names,
                              bool include_wall_time = false);
void write_trace_jsonl(std::ostream& out, const TrainTrace& trace, bool include_wall_time = false);

/// Throws ValidationError on a malformed line. With `warnings`, reading stops
/// at the first malformed line instead and the problem is reported there.
TrainTrace read_trace_jsonl(std::istream& in, std::vector<std::string>* warnings = nullptr);

}  // namespace apfex
