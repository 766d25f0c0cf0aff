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

#include "apfex/data.hpp"
#include "apfex/diffmodel.hpp"
#include "apfex/errors.hpp"
#include "apfex/fairloss.hpp"
#include "apfex/optimizer.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace apfex::cli {

/// Malformed or inconsistent run configuration. `line` is 1-based, 0 if unknown.
class ConfigError : public Error {
public:
    ConfigError(const std::string& origin, int line, const std::string& message)
        : Error(origin + (line > 0 ? ":" + std::to_string(line) : std::string()) + ": " + message), line_(line) {}

    int line() const noexcept { return line_; }

private:
    int line_;
};

/// Which sensitive attributes the objectives and metrics look at.
///   attr1 / attr2   first / second attribute alone
///   multi           each attribute separately
///   intersectional  the product groups of all attributes
enum class RunMode { attr1, attr2, multi, intersectional };

std::string to_string(RunMode m);
RunMode parse_run_mode(const std::string& s);

struct DatasetRef {
    std::string name;    // "synthetic" selects the built-in generator
    std::string path;    // explicit table; otherwise <name>.csv in the data directories
    std::string schema;  // explicit schema; otherwise schemas/<name>.yaml
    std::size_t subsample = 0;  // 0 keeps every row
    std::size_t synthetic_n = 4000;
    double synthetic_bias = 0.5;

    bool synthetic() const { return name == "synthetic"; }
};

struct RunConfig {
    DatasetRef dataset;
    SplitSpec split;  // seed is replaced per run
    ModelKind model_kind = ModelKind::logistic;
    int hidden = 16;
    RunMode mode = RunMode::intersectional;
    std::vector<FairMetric> fairness{FairMetric::dp, FairMetric::tpr};  // empty: task only
    FairLossConfig loss;  // metric and form are set per objective
    TrainConfig train;
    int repeat = 1;
    std::uint64_t seed = 0;
    std::filesystem::path output = "runs/out";
    std::filesystem::path base_dir = ".";  // relative paths resolve against this

    void validate() const;
};

/// Strict parser: unknown keys, wrong types and out-of-range values are
/// ConfigErrors carrying the line of the offending node.
RunConfig parse_run_config(const std::string& text, const std::string& origin = "<config>");
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace apfex::cli
