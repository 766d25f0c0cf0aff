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

#include "apfex/cli/commands.hpp"

#include "CLI11.hpp"

#include <iostream>

namespace {

using namespace apfex;
using namespace apfex::cli;

const std::vector<std::string> kModes{"attr1", "attr2", "multi", "intersectional"};

/// Maps library errors to the documented exit codes.
template <class F>
int guarded(F&& body) {
    try {
        return body();
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_config;
    } catch (const MissingInputError& e) {
        std::cerr << "missing input: " << e.what() << "\n";
        return exit_missing_data;
    } catch (const SchemaError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return exit_missing_data;
    } catch (const SnapshotError& e) {
        std::cerr << "snapshot error: " << e.what() << "\n";
        return exit_snapshot;
    } catch (const NumericError& e) {
        std::cerr << "numeric abort: " << e.what() << "\n";
        return exit_numeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_failure;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Adaptive multi-objective fair training"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    std::string mode;
    std::optional<int> repeat;
    auto* run = app.add_subcommand("run", "train repeat_count seeded runs from a config file");
    run->add_option("--config", config_path, "run configuration (YAML)")->required();
    run->add_option("--seed", seed, "base seed; run r uses seed + r");
    run->add_option("--out", out_dir, "output directory");
    run->add_option("--mode", mode, "attribute mode")->check(CLI::IsMember(kModes));
    run->add_option("--repeat", repeat, "number of seeded runs")->check(CLI::PositiveNumber);

    std::string snapshot;
    std::string eval_out = ".";
    std::string eval_mode;
    std::string eval_data;
    auto* eval = app.add_subcommand("eval", "score a saved model on its test split");
    eval->add_option("--model", snapshot, "model.json written by run")->required();
    eval->add_option("--out", eval_out, "directory for the report");
    eval->add_option("--mode", eval_mode, "attribute mode (default: the run's)")->check(CLI::IsMember(kModes));
    eval->add_option("--data", eval_data, "table to use instead of the recorded one");

    std::string trace_path;
    std::string export_out = ".";
    auto* tex = app.add_subcommand("trace-export", "turn a trace into plot-ready series");
    tex->add_option("--trace", trace_path, "trace.jsonl")->required();
    tex->add_option("--out", export_out, "output directory");

    auto* datasets = app.add_subcommand("datasets", "dataset cache management");
    datasets->require_subcommand(1);
    std::vector<std::string> only;
    bool force = false;
    auto* fetch = datasets->add_subcommand("fetch", "download and convert the benchmark tables");
    fetch->add_option("--only", only, "subset of datasets")->check(CLI::IsMember({"adult", "compas", "german", "heart"}));
    fetch->add_flag("--force", force, "refetch files already cached");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : exit_config;
    }

    if (*run) {
        return guarded([&] {
            RunConfig cfg = load_run_config(config_path);
            if (seed) cfg.seed = *seed;
            if (!out_dir.empty()) cfg.output = out_dir;
            if (!mode.empty()) cfg.mode = parse_run_mode(mode);
            if (repeat) cfg.repeat = *repeat;
            return cmd_run(cfg, std::cout);
        });
    }
    if (*eval) {
        return guarded([&] {
            std::optional<RunMode> m;
            if (!eval_mode.empty()) m = parse_run_mode(eval_mode);
            std::optional<std::filesystem::path> table;
            if (!eval_data.empty()) table = eval_data;
            return cmd_eval(snapshot, eval_out, m, table, std::cout);
        });
    }
    if (*tex) return guarded([&] { return cmd_trace_export(trace_path, export_out, std::cout); });
    if (*fetch) return guarded([&] { return cmd_datasets_fetch(only, force, std::cout); });
    return exit_failure;
}
