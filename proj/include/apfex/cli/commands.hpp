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

#include "apfex/cli/config.hpp"
#include "apfex/cli/io.hpp"
#include "apfex/metrics.hpp"
#include "apfex/optimizer.hpp"

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace apfex::cli {

enum ExitCode : int {
    exit_ok = 0,
    exit_failure = 1,
    exit_config = 2,
    exit_missing_data = 3,
    exit_numeric = 4,
    exit_snapshot = 5,
};

/// Loads (or generates) the dataset and splits it with `seed`. `files` receives
/// the resolved paths for on-disk datasets.
PreparedData load_run_data(const DatasetRef& ref, SplitSpec split, std::uint64_t seed,
                           const std::filesystem::path& base_dir, ResolvedDataset* files = nullptr);

/// Attribute indices a mode looks at; ConfigError if the data has too few.
std::vector<int> mode_attributes(RunMode mode, const SensitiveAttributes& attrs);

/// Task loss first, then the fairness objectives of the mode: composite
/// per-attribute losses for attr1/attr2/multi, generalized losses over the
/// product groups for intersectional.
std::vector<std::unique_ptr<Loss>> build_objectives(const RunConfig& cfg, const SensitiveAttributes& attrs);

/// Hard-threshold metrics of a model on one split, grouped as the mode says.
EvalReport score_split(const ModelSpec& model, const ParamVector& params, const Dataset& data, RunMode mode);

struct RunOutcome {
    ModelSpec model;
    PreparedData data;
    ResolvedDataset files;
    TrainResult result;
    EvalReport report;  // test split, checkpointed parameters
};

/// One seeded training run. The checkpoint is the iterate with the lowest
/// summed fairness objectives on the validation split (task loss if there are
/// no fairness objectives). `objective_names` is filled before training
/// starts, so a caller streaming records can label them even if it aborts.
RunOutcome run_once(const RunConfig& cfg, std::uint64_t seed,
                    std::function<void(const TraceRecord&)> on_record = {},
                    std::vector<std::string>* objective_names = nullptr);

std::string report_csv(const EvalReport& report);
std::string archive_csv(const ParetoArchive& archive, const std::vector<std::string>& objective_names);

/// Mean and sample standard deviation of Acc, DDP and DEO.
std::string aggregate_csv(const std::vector<EvalReport>& reports);

int cmd_run(const RunConfig& cfg, std::ostream& log);
int cmd_eval(const std::filesystem::path& snapshot, const std::filesystem::path& out_dir,
             std::optional<RunMode> mode, std::optional<std::filesystem::path> table, std::ostream& log);
int cmd_trace_export(const std::filesystem::path& trace, const std::filesystem::path& out_dir, std::ostream& log);
int cmd_datasets_fetch(const std::vector<std::string>& only, bool force, std::ostream& log);

}  // namespace apfex::cli
