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

#include "apfex/cli/io.hpp"

#include "json.hpp"

#include <unistd.h>

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <system_error>

namespace apfex::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

void write_atomic(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot open " + tmp.string() + " for writing");
        out << content;
        out.flush();
        if (!out) {
            out.close();
            std::error_code ec;
            fs::remove(tmp, ec);
            throw Error("write to " + tmp.string() + " failed");
        }
    }
    fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingInputError("cannot read " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string csv_cell(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

std::string csv_row(const std::vector<std::string>& cells) {
    std::string out;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out += ',';
        out += csv_cell(cells[i]);
    }
    return out + '\n';
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::vector<fs::path> data_search_path() {
    std::vector<fs::path> dirs;
    if (const char* env = std::getenv("APFEX_DATA_DIR"); env && *env) dirs.emplace_back(env);
    if (const char* home = std::getenv("HOME"); home && *home) dirs.push_back(fs::path(home) / ".cache" / "apfex");
    dirs.emplace_back(APFEX_REPO_DATA_DIR);
    return dirs;
}

fs::path data_cache_dir() {
    if (const char* env = std::getenv("APFEX_DATA_DIR"); env && *env) return env;
    if (const char* home = std::getenv("HOME"); home && *home) return fs::path(home) / ".cache" / "apfex";
    return fs::path(APFEX_REPO_DATA_DIR);
}

namespace {

fs::path anchored(const std::string& p, const fs::path& base) {
    const fs::path path(p);
    if (path.is_absolute() || fs::exists(path)) return path;
    return base / path;
}

fs::path search(const fs::path& relative, std::vector<std::string>& tried) {
    for (const auto& dir : data_search_path()) {
        const fs::path candidate = dir / relative;
        if (fs::exists(candidate)) return candidate;
        tried.push_back(candidate.string());
    }
    return {};
}

std::string joined(const std::vector<std::string>& items) {
    std::string out;
    for (const auto& s : items) out += (out.empty() ? "" : ", ") + s;
    return out;
}

}  // namespace

ResolvedDataset resolve_dataset(const DatasetRef& ref, const fs::path& base_dir) {
    ResolvedDataset r;
    std::vector<std::string> tried;
    if (!ref.path.empty()) {
        r.table = anchored(ref.path, base_dir);
        if (!fs::exists(r.table)) throw MissingInputError("dataset table not found: " + r.table.string());
    } else {
        r.table = search(ref.name + ".csv", tried);
        if (r.table.empty()) {
            throw MissingInputError("dataset '" + ref.name + "' not found (tried " + joined(tried) +
                                    "); run `apfex datasets fetch` or set APFEX_DATA_DIR");
        }
    }
    tried.clear();
    if (!ref.schema.empty()) {
        r.schema = anchored(ref.schema, base_dir);
        if (!fs::exists(r.schema)) throw MissingInputError("schema not found: " + r.schema.string());
    } else {
        r.schema = search(fs::path("schemas") / (ref.name + ".yaml"), tried);
        if (r.schema.empty()) throw MissingInputError("schema for '" + ref.name + "' not found (tried " + joined(tried) + ")");
    }
    return r;
}

std::string snapshot_json(const ModelSnapshot& s) {
    json j;
    j["format"] = "apfex-model/1";
    j["model"] = {{"kind", to_string(s.model.kind)},
                  {"input_dim", s.model.input_dim},
                  {"hidden_dim", s.model.hidden_dim},
                  {"output_classes", s.model.output_classes}};
    j["params"] = std::vector<double>(s.params.data(), s.params.data() + s.params.size());
    j["feature_names"] = s.feature_names;
    std::vector<long> cols(s.standardizer.columns.begin(), s.standardizer.columns.end());
    j["standardizer"] = {
        {"columns", cols},
        {"mean", std::vector<double>(s.standardizer.mean.data(), s.standardizer.mean.data() + s.standardizer.mean.size())},
        {"scale",
         std::vector<double>(s.standardizer.scale.data(), s.standardizer.scale.data() + s.standardizer.scale.size())}};
    j["dataset"] = {{"name", s.dataset.name},
                    {"path", s.dataset.path},
                    {"schema", s.dataset.schema},
                    {"subsample", s.dataset.subsample},
                    {"synthetic_n", s.dataset.synthetic_n},
                    {"synthetic_bias", s.dataset.synthetic_bias},
                    {"table", s.table.string()},
                    {"schema_file", s.schema.string()}};
    j["split"] = {{"train", s.split.train}, {"val", s.split.val}, {"test", s.split.test}, {"seed", s.split.seed}};
    j["mode"] = to_string(s.mode);
    j["seed"] = s.seed;
    j["best_iteration"] = s.best_iteration;
    return j.dump(2) + "\n";
}

ModelSnapshot parse_snapshot(const std::string& text) {
    ModelSnapshot s;
    try {
        const json j = json::parse(text);
        if (j.at("format").get<std::string>() != "apfex-model/1") throw SnapshotError("unsupported snapshot format");
        const json& m = j.at("model");
        s.model.kind = parse_model_kind(m.at("kind").get<std::string>());
        s.model.input_dim = m.at("input_dim").get<int>();
        s.model.hidden_dim = m.at("hidden_dim").get<int>();
        s.model.output_classes = m.at("output_classes").get<int>();
        s.model.validate();

        const auto params = j.at("params").get<std::vector<double>>();
        if (static_cast<Eigen::Index>(params.size()) != s.model.param_count()) {
            throw SnapshotError("snapshot has " + std::to_string(params.size()) + " parameters, model spec needs " +
                                std::to_string(s.model.param_count()));
        }
        s.params = Eigen::Map<const Eigen::VectorXd>(params.data(), static_cast<Eigen::Index>(params.size()));
        s.feature_names = j.at("feature_names").get<std::vector<std::string>>();

        const json& st = j.at("standardizer");
        for (long c : st.at("columns").get<std::vector<long>>()) s.standardizer.columns.push_back(c);
        const auto mean = st.at("mean").get<std::vector<double>>();
        const auto scale = st.at("scale").get<std::vector<double>>();
        if (mean.size() != s.standardizer.columns.size() || scale.size() != mean.size()) {
            throw SnapshotError("standardizer arrays disagree in length");
        }
        s.standardizer.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(mean.size()));
        s.standardizer.scale = Eigen::Map<const Eigen::VectorXd>(scale.data(), static_cast<Eigen::Index>(scale.size()));

        const json& d = j.at("dataset");
        s.dataset.name = d.at("name").get<std::string>();
        s.dataset.path = d.at("path").get<std::string>();
        s.dataset.schema = d.at("schema").get<std::string>();
        s.dataset.subsample = d.at("subsample").get<std::size_t>();
        s.dataset.synthetic_n = d.at("synthetic_n").get<std::size_t>();
        s.dataset.synthetic_bias = d.at("synthetic_bias").get<double>();
        s.table = d.at("table").get<std::string>();
        s.schema = d.at("schema_file").get<std::string>();

        const json& sp = j.at("split");
        s.split.train = sp.at("train").get<double>();
        s.split.val = sp.at("val").get<double>();
        s.split.test = sp.at("test").get<double>();
        s.split.seed = sp.at("seed").get<std::uint64_t>();
        s.mode = parse_run_mode(j.at("mode").get<std::string>());
        s.seed = j.at("seed").get<std::uint64_t>();
        s.best_iteration = j.at("best_iteration").get<int>();
    } catch (const json::exception& e) {
        throw SnapshotError(std::string("malformed snapshot: ") + e.what());
    } catch (const SnapshotError&) {
        throw;
    } catch (const Error& e) {
        throw SnapshotError(std::string("invalid snapshot: ") + e.what());
    }
    return s;
}

ModelSnapshot load_snapshot(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SnapshotError("cannot read snapshot " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_snapshot(buf.str());
}

}  // namespace apfex::cli
