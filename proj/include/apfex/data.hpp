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

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace apfex {

enum class ColumnKind { numeric, categorical, sensitive, label, ignore };

std::string to_string(ColumnKind k);
ColumnKind parse_column_kind(const std::string& s);

/// How a column of the source table is turned into model inputs.
struct ColumnSpec {
    std::string name;
    ColumnKind kind = ColumnKind::ignore;

    // sensitive: explicit value -> code map (unlisted values take `fallback`),
    // or a numeric cut (code 1 iff value >= cut), or sorted distinct values.
    std::string attribute;  // display name; defaults to `name`
    std::map<std::string, int> levels;
    std::optional<int> fallback;
    std::optional<double> cut;
    bool also_feature = false;  // keep the raw column as a numeric/categorical feature too

    // label: binary `positive` values map to +1; `classes` gives multi-class order.
    std::vector<std::string> positive;
    std::vector<std::string> classes;
};

struct Schema {
    std::string name;
    char delimiter = ',';
    std::vector<std::string> missing_tokens{"", "?", "NA"};
    std::vector<ColumnSpec> columns;

    const ColumnSpec& label() const;
    std::vector<const ColumnSpec*> sensitive() const;
    void validate() const;
};

/// Parses a schema file; errors carry the file name and line.
Schema load_schema(const std::filesystem::path& path);
Schema parse_schema(const std::string& text, const std::string& origin = "<schema>");

/// Cells of the schema's columns, in schema order, one row per kept record.
struct RawTable {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line_numbers;  // 1-based source line of each kept row
    std::size_t dropped_missing = 0;

    std::size_t size() const { return rows.size(); }
};

/// Reads a delimited text file with a header row. Rows with a missing value in
/// any schema column are dropped and counted; an unparseable numeric cell is a
/// SchemaError naming the line.
RawTable load_table(const std::filesystem::path& path, const Schema& schema);
RawTable parse_table(const std::string& text, const Schema& schema, const std::string& origin = "<table>");

/// Seeded random subset of at most `rows` records, order preserved.
RawTable subsample(const RawTable& table, std::size_t rows, std::uint64_t seed);

/// Per-column affine map fitted on one split and applied to all.
struct Standardizer {
    std::vector<Eigen::Index> columns;  // feature columns that are standardized
    Eigen::VectorXd mean;
    Eigen::VectorXd scale;

    static Standardizer fit(const Eigen::MatrixXd& features, const std::vector<Eigen::Index>& numeric_columns,
                            std::vector<std::string>* warnings = nullptr);
    void apply(Eigen::MatrixXd& features) const;
};

/// Unstandardized encoding: one-hot categoricals, coded sensitive attributes, +-1 labels.
struct EncodedTable {
    Dataset data;
    std::vector<Eigen::Index> numeric_columns;
};

EncodedTable encode(const RawTable& raw, const Schema& schema);

struct SplitSpec {
    double train = 0.70;
    double val = 0.15;
    double test = 0.15;
    std::uint64_t seed = 0;

    void validate() const;
};

struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> val;
    std::vector<std::size_t> test;
};

/// Seeded shuffle cut into floor(train*n) / floor(val*n) / remainder.
SplitIndices split_indices(std::size_t n, const SplitSpec& spec);

struct PreparedData {
    Dataset train;
    Dataset val;
    Dataset test;
    Standardizer standardizer;
    SplitIndices indices;
    std::vector<std::string> warnings;
};

/// encode + split + standardize with train statistics only.
PreparedData preprocess(const RawTable& raw, const Schema& schema, const SplitSpec& spec);

/// Same pipeline for an already encoded dataset.
PreparedData prepare_splits(const EncodedTable& encoded, const SplitSpec& spec);

}  // namespace apfex
