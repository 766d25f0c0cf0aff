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

#include "apfex/data.hpp"

#include "apfex/errors.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

namespace apfex {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::optional<double> parse_double(const std::string& s) {
    double v = 0.0;
    const auto* first = s.data();
    const auto* last = s.data() + s.size();
    if (first != last && *first == '+') ++first;
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc{} || res.ptr != last || !std::isfinite(v)) return std::nullopt;
    return v;
}

// Splits one record; double quotes group delimiters and "" escapes a quote.
std::vector<std::string> split_record(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::string cell;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cell += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cell += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == delim) {
            out.push_back(trim(cell));
            cell.clear();
        } else {
            cell += c;
        }
    }
    out.push_back(trim(cell));
    return out;
}

std::string yaml_where(const std::string& origin, const YAML::Mark& mark) {
    return origin + ":" + std::to_string(mark.line + 1);
}

template <typename T>
T yaml_get(const YAML::Node& node, const std::string& origin, const std::string& field) {
    try {
        return node.as<T>();
    } catch (const YAML::Exception&) {
        throw SchemaError(yaml_where(origin, node.Mark()) + ": field '" + field + "' has the wrong type");
    }
}

bool is_feature(const ColumnSpec& c) {
    return c.kind == ColumnKind::numeric || c.kind == ColumnKind::categorical ||
           (c.kind == ColumnKind::sensitive && c.also_feature);
}

bool numeric_feature(const ColumnSpec& c) {
    return c.kind == ColumnKind::numeric || (c.kind == ColumnKind::sensitive && c.also_feature && c.cut);
}

}  // namespace

std::string to_string(ColumnKind k) {
    switch (k) {
    case ColumnKind::numeric: return "numeric";
    case ColumnKind::categorical: return "categorical";
    case ColumnKind::sensitive: return "sensitive";
    case ColumnKind::label: return "label";
    case ColumnKind::ignore: return "ignore";
    }
    return "?";
}

ColumnKind parse_column_kind(const std::string& s) {
    for (auto k : {ColumnKind::numeric, ColumnKind::categorical, ColumnKind::sensitive, ColumnKind::label,
                   ColumnKind::ignore}) {
        if (to_string(k) == s) return k;
    }
    throw SchemaError("unknown column kind '" + s + "'");
}

const ColumnSpec& Schema::label() const {
    for (const auto& c : columns) {
        if (c.kind == ColumnKind::label) return c;
    }
    throw SchemaError("schema '" + name + "' has no label column");
}

std::vector<const ColumnSpec*> Schema::sensitive() const {
    std::vector<const ColumnSpec*> out;
    for (const auto& c : columns) {
        if (c.kind == ColumnKind::sensitive) out.push_back(&c);
    }
    return out;
}

void Schema::validate() const {
    int labels = 0;
    std::set<std::string> seen;
    for (const auto& c : columns) {
        if (c.name.empty()) throw SchemaError("schema '" + name + "': column without a name");
        if (!seen.insert(c.name).second) throw SchemaError("schema '" + name + "': duplicate column '" + c.name + "'");
        if (c.kind == ColumnKind::label) {
            ++labels;
            if (c.positive.empty() == c.classes.empty()) {
                throw SchemaError("label column '" + c.name + "' needs exactly one of 'positive' or 'classes'");
            }
            if (!c.classes.empty() && c.classes.size() < 2) {
                throw SchemaError("label column '" + c.name + "' lists fewer than 2 classes");
            }
        }
        if (c.kind == ColumnKind::sensitive) {
            if (c.cut && !c.levels.empty()) {
                throw SchemaError("sensitive column '" + c.name + "' sets both 'cut' and 'levels'");
            }
            for (const auto& [value, code] : c.levels) {
                if (code < 0) throw SchemaError("sensitive column '" + c.name + "': negative code for '" + value + "'");
            }
            if (c.fallback && *c.fallback < 0) throw SchemaError("sensitive column '" + c.name + "': negative fallback");
        }
    }
    if (labels != 1) throw SchemaError("schema '" + name + "' needs exactly one label column, found " + std::to_string(labels));
    if (sensitive().empty()) throw SchemaError("schema '" + name + "' declares no sensitive column");
}

Schema parse_schema(const std::string& text, const std::string& origin) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw SchemaError(yaml_where(origin, e.mark) + ": " + e.msg);
    }
    if (!root.IsMap()) throw SchemaError(origin + ": top level must be a mapping");

    Schema s;
    if (root["name"]) s.name = yaml_get<std::string>(root["name"], origin, "name");
    if (root["delimiter"]) {
        const auto d = yaml_get<std::string>(root["delimiter"], origin, "delimiter");
        if (d.size() != 1) throw SchemaError(yaml_where(origin, root["delimiter"].Mark()) + ": delimiter must be one character");
        s.delimiter = d[0];
    }
    if (root["missing"]) s.missing_tokens = yaml_get<std::vector<std::string>>(root["missing"], origin, "missing");

    const YAML::Node cols = root["columns"];
    if (!cols || !cols.IsSequence()) throw SchemaError(origin + ": 'columns' must be a list");
    for (const auto& node : cols) {
        if (!node.IsMap()) throw SchemaError(yaml_where(origin, node.Mark()) + ": column entry must be a mapping");
        ColumnSpec c;
        if (!node["name"]) throw SchemaError(yaml_where(origin, node.Mark()) + ": column without 'name'");
        if (!node["kind"]) throw SchemaError(yaml_where(origin, node.Mark()) + ": column without 'kind'");
        c.name = yaml_get<std::string>(node["name"], origin, "name");
        try {
            c.kind = parse_column_kind(yaml_get<std::string>(node["kind"], origin, "kind"));
        } catch (const SchemaError& e) {
            throw SchemaError(yaml_where(origin, node["kind"].Mark()) + ": " + e.what());
        }
        c.attribute = node["attribute"] ? yaml_get<std::string>(node["attribute"], origin, "attribute") : c.name;
        if (node["levels"]) c.levels = yaml_get<std::map<std::string, int>>(node["levels"], origin, "levels");
        if (node["fallback"]) c.fallback = yaml_get<int>(node["fallback"], origin, "fallback");
        if (node["cut"]) c.cut = yaml_get<double>(node["cut"], origin, "cut");
        if (node["also_feature"]) c.also_feature = yaml_get<bool>(node["also_feature"], origin, "also_feature");
        if (node["positive"]) {
            const auto& p = node["positive"];
            c.positive = p.IsSequence() ? yaml_get<std::vector<std::string>>(p, origin, "positive")
                                        : std::vector<std::string>{yaml_get<std::string>(p, origin, "positive")};
        }
        if (node["classes"]) c.classes = yaml_get<std::vector<std::string>>(node["classes"], origin, "classes");
        s.columns.push_back(std::move(c));
    }
    s.validate();
    return s;
}

Schema load_schema(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open schema file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_schema(buf.str(), path.string());
}

RawTable parse_table(const std::string& text, const Schema& schema, const std::string& origin) {
    schema.validate();
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;

    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++lineno;
        if (!trim(line).empty()) {
            header = split_record(line, schema.delimiter);
            break;
        }
    }
    if (header.empty()) throw SchemaError(origin + ": missing header row");

    RawTable t;
    std::vector<std::size_t> source;
    std::vector<const ColumnSpec*> used;
    for (const auto& c : schema.columns) {
        if (c.kind == ColumnKind::ignore) continue;
        const auto it = std::find(header.begin(), header.end(), c.name);
        if (it == header.end()) throw SchemaError(origin + ": column '" + c.name + "' missing from header");
        source.push_back(static_cast<std::size_t>(it - header.begin()));
        used.push_back(&c);
        t.columns.push_back(c.name);
    }

    auto missing = [&](const std::string& cell) {
        return std::find(schema.missing_tokens.begin(), schema.missing_tokens.end(), cell) != schema.missing_tokens.end();
    };

    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const auto cells = split_record(line, schema.delimiter);
        if (cells.size() != header.size()) {
            throw SchemaError(origin + ":" + std::to_string(lineno) + ": expected " + std::to_string(header.size()) +
                              " fields, found " + std::to_string(cells.size()));
        }
        std::vector<std::string> row;
        bool drop = false;
        for (std::size_t k = 0; k < source.size(); ++k) {
            const std::string& cell = cells[source[k]];
            if (missing(cell)) {
                drop = true;
                break;
            }
            const ColumnSpec& c = *used[k];
            if ((c.kind == ColumnKind::numeric || (c.kind == ColumnKind::sensitive && c.cut)) && !parse_double(cell)) {
                throw SchemaError(origin + ":" + std::to_string(lineno) + ": column '" + c.name +
                                  "': cannot parse '" + cell + "' as a number");
            }
            row.push_back(cell);
        }
        if (drop) {
            ++t.dropped_missing;
            continue;
        }
        t.rows.push_back(std::move(row));
        t.line_numbers.push_back(lineno);
    }
    return t;
}

RawTable load_table(const std::filesystem::path& path, const Schema& schema) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open data file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_table(buf.str(), schema, path.string());
}

RawTable subsample(const RawTable& table, std::size_t rows, std::uint64_t seed) {
    if (rows >= table.size()) return table;
    std::vector<std::size_t> idx(table.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(rows);
    std::sort(idx.begin(), idx.end());
    RawTable out;
    out.columns = table.columns;
    out.dropped_missing = table.dropped_missing;
    for (auto i : idx) {
        out.rows.push_back(table.rows[i]);
        out.line_numbers.push_back(table.line_numbers[i]);
    }
    return out;
}

Standardizer Standardizer::fit(const Eigen::MatrixXd& features, const std::vector<Eigen::Index>& numeric_columns,
                               std::vector<std::string>* warnings) {
    if (features.rows() < 1) throw ValidationError("cannot fit standardization on zero rows");
    Standardizer s;
    s.columns = numeric_columns;
    s.mean.resize(static_cast<Eigen::Index>(numeric_columns.size()));
    s.scale.resize(static_cast<Eigen::Index>(numeric_columns.size()));
    for (std::size_t k = 0; k < numeric_columns.size(); ++k) {
        const auto col = features.col(numeric_columns[k]);
        const double mu = col.mean();
        const double sd = std::sqrt((col.array() - mu).square().mean());
        const auto kk = static_cast<Eigen::Index>(k);
        if (sd < 1e-12) {
            s.mean[kk] = 0.0;
            s.scale[kk] = 1.0;
            if (warnings) warnings->push_back("feature column " + std::to_string(numeric_columns[k]) +
                                              " is constant on the training split; left unscaled");
        } else {
            s.mean[kk] = mu;
            s.scale[kk] = sd;
        }
    }
    return s;
}

void Standardizer::apply(Eigen::MatrixXd& features) const {
    for (std::size_t k = 0; k < columns.size(); ++k) {
        const auto kk = static_cast<Eigen::Index>(k);
        if (columns[k] >= features.cols()) throw ShapeError("standardized column", features.cols(), columns[k] + 1);
        features.col(columns[k]) = (features.col(columns[k]).array() - mean[kk]) / scale[kk];
    }
}

EncodedTable encode(const RawTable& raw, const Schema& schema) {
    schema.validate();
    const std::size_t n = raw.size();

    auto column_index = [&](const std::string& name) {
        const auto it = std::find(raw.columns.begin(), raw.columns.end(), name);
        if (it == raw.columns.end()) throw SchemaError("column '" + name + "' absent from the loaded table");
        return static_cast<std::size_t>(it - raw.columns.begin());
    };
    auto cell = [&](std::size_t row, std::size_t col) -> const std::string& { return raw.rows[row][col]; };

    EncodedTable out;
    Dataset& d = out.data;
    std::vector<Eigen::VectorXd> feature_cols;

    for (const auto& c : schema.columns) {
        if (!is_feature(c)) continue;
        const std::size_t col = column_index(c.name);
        if (numeric_feature(c)) {
            Eigen::VectorXd v(static_cast<Eigen::Index>(n));
            for (std::size_t i = 0; i < n; ++i) v[static_cast<Eigen::Index>(i)] = *parse_double(cell(i, col));
            out.numeric_columns.push_back(static_cast<Eigen::Index>(feature_cols.size()));
            feature_cols.push_back(std::move(v));
            d.feature_names.push_back(c.name);
        } else {
            std::set<std::string> levels;
            for (std::size_t i = 0; i < n; ++i) levels.insert(cell(i, col));
            for (const auto& level : levels) {
                Eigen::VectorXd v(static_cast<Eigen::Index>(n));
                for (std::size_t i = 0; i < n; ++i) v[static_cast<Eigen::Index>(i)] = cell(i, col) == level ? 1.0 : 0.0;
                feature_cols.push_back(std::move(v));
                d.feature_names.push_back(c.name + "=" + level);
            }
        }
    }
    d.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(feature_cols.size()));
    for (std::size_t j = 0; j < feature_cols.size(); ++j) d.features.col(static_cast<Eigen::Index>(j)) = feature_cols[j];

    const auto sens = schema.sensitive();
    d.attrs.codes.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(sens.size()));
    for (std::size_t j = 0; j < sens.size(); ++j) {
        const ColumnSpec& c = *sens[j];
        const std::size_t col = column_index(c.name);
        const auto jj = static_cast<Eigen::Index>(j);
        int cardinality = 0;
        if (c.cut) {
            for (std::size_t i = 0; i < n; ++i) d.attrs.codes(static_cast<Eigen::Index>(i), jj) = *parse_double(cell(i, col)) >= *c.cut ? 1 : 0;
            cardinality = 2;
        } else if (!c.levels.empty()) {
            for (const auto& [value, code] : c.levels) cardinality = std::max(cardinality, code + 1);
            if (c.fallback) cardinality = std::max(cardinality, *c.fallback + 1);
            for (std::size_t i = 0; i < n; ++i) {
                const auto it = c.levels.find(cell(i, col));
                if (it == c.levels.end() && !c.fallback) {
                    throw SchemaError("line " + std::to_string(raw.line_numbers[i]) + ": sensitive column '" + c.name +
                                      "' has unmapped value '" + cell(i, col) + "'");
                }
                d.attrs.codes(static_cast<Eigen::Index>(i), jj) = it != c.levels.end() ? it->second : *c.fallback;
            }
        } else {
            std::set<std::string> values;
            for (std::size_t i = 0; i < n; ++i) values.insert(cell(i, col));
            const std::vector<std::string> ordered(values.begin(), values.end());
            cardinality = static_cast<int>(ordered.size());
            for (std::size_t i = 0; i < n; ++i) {
                const auto it = std::lower_bound(ordered.begin(), ordered.end(), cell(i, col));
                d.attrs.codes(static_cast<Eigen::Index>(i), jj) = static_cast<int>(it - ordered.begin());
            }
        }
        d.attrs.cardinalities.push_back(std::max(cardinality, 1));
        d.attrs.names.push_back(c.attribute);
    }

    const ColumnSpec& lab = schema.label();
    const std::size_t lcol = column_index(lab.name);
    d.labels.resize(n);
    if (!lab.classes.empty()) {
        d.num_classes = static_cast<int>(lab.classes.size());
        for (std::size_t i = 0; i < n; ++i) {
            const auto it = std::find(lab.classes.begin(), lab.classes.end(), cell(i, lcol));
            if (it == lab.classes.end()) {
                throw SchemaError("line " + std::to_string(raw.line_numbers[i]) + ": label '" + cell(i, lcol) +
                                  "' is not a declared class");
            }
            d.labels[i] = static_cast<int>(it - lab.classes.begin());
        }
        if (d.num_classes == 2) {
            for (auto& y : d.labels) y = y == 1 ? 1 : -1;
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            const bool pos = std::find(lab.positive.begin(), lab.positive.end(), cell(i, lcol)) != lab.positive.end();
            d.labels[i] = pos ? 1 : -1;
        }
    }
    return out;
}

void SplitSpec::validate() const {
    if (train <= 0.0 || val < 0.0 || test < 0.0) throw ParameterError("split fractions must be non-negative, train positive");
    if (std::abs(train + val + test - 1.0) > 1e-9) throw ParameterError("split fractions must sum to 1");
}

SplitIndices split_indices(std::size_t n, const SplitSpec& spec) {
    spec.validate();
    if (n < 10) throw ValidationError("need at least 10 samples to split, got " + std::to_string(n));
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::mt19937_64 rng(spec.seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto n_train = static_cast<std::size_t>(std::floor(spec.train * static_cast<double>(n) + 1e-9));
    const auto n_val = static_cast<std::size_t>(std::floor(spec.val * static_cast<double>(n) + 1e-9));
    SplitIndices s;
    s.train.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    s.val.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train),
                 idx.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
    s.test.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), idx.end());
    return s;
}

PreparedData prepare_splits(const EncodedTable& encoded, const SplitSpec& spec) {
    PreparedData p;
    p.indices = split_indices(static_cast<std::size_t>(encoded.data.size()), spec);
    p.train = encoded.data.subset(p.indices.train);
    p.val = encoded.data.subset(p.indices.val);
    p.test = encoded.data.subset(p.indices.test);
    p.standardizer = Standardizer::fit(p.train.features, encoded.numeric_columns, &p.warnings);
    p.standardizer.apply(p.train.features);
    p.standardizer.apply(p.val.features);
    p.standardizer.apply(p.test.features);
    return p;
}

PreparedData preprocess(const RawTable& raw, const Schema& schema, const SplitSpec& spec) {
    PreparedData p = prepare_splits(encode(raw, schema), spec);
    if (raw.dropped_missing > 0) {
        p.warnings.push_back(std::to_string(raw.dropped_missing) + " row(s) dropped for missing values");
    }
    return p;
}

void Dataset::validate() const {
    const Eigen::Index n = features.rows();
    if (static_cast<Eigen::Index>(labels.size()) != n) throw ShapeError("label count", n, static_cast<std::ptrdiff_t>(labels.size()));
    if (attrs.sample_count() != n) throw ShapeError("sensitive attribute rows", n, attrs.sample_count());
    if (!features.allFinite()) throw ValidationError("features contain non-finite values");
    if (num_classes < 2) throw ValidationError("need at least 2 classes");
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const int y = labels[i];
        const bool ok = binary() ? (y == 1 || y == -1) : (y >= 0 && y < num_classes);
        if (!ok) throw ValidationError("sample " + std::to_string(i) + ": invalid label " + std::to_string(y));
    }
    attrs.validate();
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
    Dataset out;
    out.num_classes = num_classes;
    out.feature_names = feature_names;
    out.features.resize(static_cast<Eigen::Index>(rows.size()), features.cols());
    out.labels.resize(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r] >= static_cast<std::size_t>(features.rows())) {
            throw ShapeError("row index bound", features.rows(), static_cast<std::ptrdiff_t>(rows[r]));
        }
        out.features.row(static_cast<Eigen::Index>(r)) = features.row(static_cast<Eigen::Index>(rows[r]));
        out.labels[r] = labels[rows[r]];
    }
    out.attrs = attrs.subset(rows);
    return out;
}

}  // namespace apfex
