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
#include "apfex/data.hpp"
#include "apfex/diffmodel.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace apfex::cli {

/// The referenced table, schema or trace is not on disk.
class MissingInputError : public Error {
public:
    using Error::Error;
};

/// Writes to a sibling temporary file and renames it into place, so the
/// target is either complete or absent.
void write_atomic(const std::filesystem::path& path, const std::string& content);

std::string read_file(const std::filesystem::path& path);

/// Minimal RFC 4180 quoting for one cell.
std::string csv_cell(const std::string& s);
std::string csv_row(const std::vector<std::string>& cells);

/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

/// Directories searched for named datasets: $APFEX_DATA_DIR, ~/.cache/apfex,
/// then the repository's data/ directory. Missing entries are skipped.
std::vector<std::filesystem::path> data_search_path();

/// Cache directory the fetch script writes to.
std::filesystem::path data_cache_dir();

struct ResolvedDataset {
    std::filesystem::path table;
    std::filesystem::path schema;
};

/// Locates the table and schema of a non-synthetic dataset reference.
/// Throws MissingInputError listing the places that were tried.
ResolvedDataset resolve_dataset(const DatasetRef& ref, const std::filesystem::path& base_dir);

/// Everything eval needs to rebuild the test split and score it.
struct ModelSnapshot {
    ModelSpec model;
    ParamVector params;
    std::vector<std::string> feature_names;
    Standardizer standardizer;
    DatasetRef dataset;
    std::filesystem::path table;   // resolved paths at training time
    std::filesystem::path schema;
    SplitSpec split;
    RunMode mode = RunMode::intersectional;
    std::uint64_t seed = 0;
    int best_iteration = -1;
};

std::string snapshot_json(const ModelSnapshot& s);
/// Throws SnapshotError on anything unreadable or inconsistent.
ModelSnapshot parse_snapshot(const std::string& text);
ModelSnapshot load_snapshot(const std::filesystem::path& path);

}  // namespace apfex::cli
