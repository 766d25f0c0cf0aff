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

#include "apfex/fair_problem.hpp"
#include "apfex/synthetic.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>

namespace apfex::cli {

namespace fs = std::filesystem;

PreparedData load_run_data(const DatasetRef& ref, SplitSpec split, std::uint64_t seed, const fs::path& base_dir,
                           ResolvedDataset* files) {
    split.seed = seed;
    if (ref.synthetic()) {
        const Dataset d = synth_biased(ref.synthetic_n, seed, ref.synthetic_bias);
        return prepare_splits(EncodedTable{d, {0, 1, 2, 3}}, split);
    }
    const ResolvedDataset where = resolve_dataset(ref, base_dir);
    if (files) *files = where;
    const Schema schema = load_schema(where.schema);
    RawTable raw = load_table(where.table, schema);
    if (ref.subsample > 0) raw = subsample(raw, ref.subsample, seed);
    return preprocess(raw, schema, split);
}

std::vector<int> mode_attributes(RunMode mode, const SensitiveAttributes& attrs) {
    const int count = static_cast<int>(attrs.cardinalities.size());
    const auto need = [&](int n) {
        if (count < n) {
            throw ConfigError("mode", 0, "mode " + to_string(mode) + " needs " + std::to_string(n) +
                                             " sensitive attributes, dataset has " + std::to_string(count));
        }
    };
    switch (mode) {
        case RunMode::attr1: need(1); return {0};
        case RunMode::attr2: need(2); return {1};
        case RunMode::multi:
        case RunMode::intersectional: {
            need(mode == RunMode::multi ? 1 : 2);
            std::vector<int> all(static_cast<std::size_t>(count));
            for (int a = 0; a < count; ++a) all[static_cast<std::size_t>(a)] = a;
            return all;
        }
    }
    return {};
}

std::vector<std::unique_ptr<Loss>> build_objectives(const RunConfig& cfg, const SensitiveAttributes& attrs) {
    const std::vector<int> used = mode_attributes(cfg.mode, attrs);
    std::vector<std::unique_ptr<Loss>> losses;
    losses.push_back(std::make_unique<CrossEntropyLoss>());
    for (FairMetric metric : cfg.fairness) {
        FairLossConfig fc = cfg.loss;
        fc.metric = metric;
        const std::string base = "fair_" + to_string(metric);
        if (cfg.mode == RunMode::intersectional) {
            fc.form = FairForm::generalized;
            losses.push_back(std::make_unique<GroupFairnessLoss>(fc, used, base));
        } else if (cfg.mode == RunMode::multi) {
            fc.form = FairForm::composite;
            for (int a : used) {
                losses.push_back(std::make_unique<GroupFairnessLoss>(
                    fc, std::vector<int>{a}, base + "[" + attrs.names[static_cast<std::size_t>(a)] + "]"));
            }
        } else {
            fc.form = FairForm::composite;
            losses.push_back(std::make_unique<GroupFairnessLoss>(fc, used, base));
        }
    }
    return losses;
}

EvalReport score_split(const ModelSpec& model, const ParamVector& params, const Dataset& data, RunMode mode) {
    const std::vector<int> used = mode_attributes(mode, data.attrs);
    const PredictionBatch pred = forward(model, params, data.features);
    const std::vector<int> hard = hard_predictions(pred.column(0));
    const MetricMode metric = mode == RunMode::intersectional ? MetricMode::intersectional : MetricMode::per_attribute;
    return evaluate_predictions(hard, data.labels, data.attrs.select(used), metric);
}

RunOutcome run_once(const RunConfig& cfg, std::uint64_t seed, std::function<void(const TraceRecord&)> on_record,
                    std::vector<std::string>* objective_names) {
    RunOutcome out;
    out.data = load_run_data(cfg.dataset, cfg.split, seed, cfg.base_dir, &out.files);
    if (!out.data.train.binary()) throw ConfigError("dataset", 0, "run supports binary labels only");

    out.model.kind = cfg.model_kind;
    out.model.input_dim = static_cast<int>(out.data.train.feature_dim());
    out.model.hidden_dim = cfg.model_kind == ModelKind::mlp ? cfg.hidden : 0;
    out.model.output_classes = 2;

    FairnessProblem problem(out.model, out.data.train, build_objectives(cfg, out.data.train.attrs));
    if (objective_names) *objective_names = problem.objective_names();
    TrainConfig tc = cfg.train;
    tc.seed = seed;
    tc.on_record = std::move(on_record);
    const Dataset& val = out.data.val;
    tc.validation = [&problem, &val](const Eigen::VectorXd& theta) {
        const Eigen::VectorXd l = problem.losses_on(theta, val);
        return l.size() > 1 ? l.tail(l.size() - 1).sum() : l[0];
    };
    out.result = train(problem, init_params(out.model, seed), tc);
    out.report = score_split(out.model, out.result.best_params, out.data.test, cfg.mode);
    return out;
}

std::string report_csv(const EvalReport& report) {
    std::string s = "key,value\n";
    for (const auto& [k, v] : report.records()) s += csv_row({k, v});
    return s;
}

std::string archive_csv(const ParetoArchive& archive, const std::vector<std::string>& objective_names) {
    std::vector<std::string> header{"iteration"};
    header.insert(header.end(), objective_names.begin(), objective_names.end());
    std::string s = csv_row(header);
    for (const auto& e : archive.entries()) {
        std::vector<std::string> row{std::to_string(e.snapshot_id)};
        for (Eigen::Index k = 0; k < e.losses.size(); ++k) row.push_back(format_double(e.losses[k]));
        s += csv_row(row);
    }
    return s;
}

std::string aggregate_csv(const std::vector<EvalReport>& reports) {
    const auto stats = [&](auto field) {
        const double n = static_cast<double>(reports.size());
        double mean = 0.0;
        for (const auto& r : reports) mean += field(r);
        mean /= n;
        double ss = 0.0;
        for (const auto& r : reports) ss += (field(r) - mean) * (field(r) - mean);
        const double sd = reports.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
        return std::pair{mean, sd};
    };
    std::string s = "metric,mean,std,runs\n";
    const auto row = [&](const std::string& name, auto field) {
        const auto [m, sd] = stats(field);
        s += csv_row({name, format_double(m), format_double(sd), std::to_string(reports.size())});
    };
    row("Acc", [](const EvalReport& r) { return r.accuracy; });
    row("DDP", [](const EvalReport& r) { return r.ddp; });
    row("DEO", [](const EvalReport& r) { return r.deo; });
    return s;
}

namespace {

std::string trace_text(const std::vector<TraceRecord>& records, const std::vector<std::string>& names) {
    std::string s;
    for (const auto& r : records) s += trace_record_json(r, names) + "\n";
    return s;
}

ModelSnapshot make_snapshot(const RunConfig& cfg, const RunOutcome& o, std::uint64_t seed) {
    ModelSnapshot s;
    s.model = o.model;
    s.params = o.result.best_params;
    s.feature_names = o.data.train.feature_names;
    s.standardizer = o.data.standardizer;
    s.dataset = cfg.dataset;
    s.table = o.files.table.empty() ? fs::path() : fs::absolute(o.files.table);
    s.schema = o.files.schema.empty() ? fs::path() : fs::absolute(o.files.schema);
    s.split = cfg.split;
    s.split.seed = seed;
    s.mode = cfg.mode;
    s.seed = seed;
    s.best_iteration = o.result.best_iteration;
    return s;
}

}  // namespace

int cmd_run(const RunConfig& cfg, std::ostream& log) {
    const fs::path out = cfg.output.is_absolute() ? cfg.output : fs::current_path() / cfg.output;
    std::vector<EvalReport> reports;
    std::string runs = "run,seed,Acc,DDP,DEO,best_iteration,termination\n";

    for (int r = 0; r < cfg.repeat; ++r) {
        const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(r);
        const fs::path dir = out / ("run_" + std::to_string(r));
        std::vector<TraceRecord> streamed;
        std::vector<std::string> names;
        RunOutcome o;
        try {
            o = run_once(cfg, seed, [&streamed](const TraceRecord& rec) { streamed.push_back(rec); }, &names);
        } catch (const NumericError& e) {
            if (!streamed.empty()) {
                const fs::path trace = dir / "trace.jsonl";
                write_atomic(trace, trace_text(streamed, names));
                log << "run " << r << ": " << e.what() << "\n  partial trace: " << trace.string() << "\n";
            } else {
                log << "run " << r << ": " << e.what() << "\n";
            }
            return exit_numeric;
        }
        for (const auto& w : o.data.warnings) log << "run " << r << ": warning: " << w << "\n";

        const auto& names_done = o.result.trace.objective_names;
        std::ostringstream trace;
        write_trace_jsonl(trace, o.result.trace);
        write_atomic(dir / "trace.jsonl", trace.str());
        write_atomic(dir / "report.csv", report_csv(o.report));
        write_atomic(dir / "archive.csv", archive_csv(o.result.archive, names_done));
        write_atomic(dir / "model.json", snapshot_json(make_snapshot(cfg, o, seed)));

        runs += csv_row({std::to_string(r), std::to_string(seed), format_double(o.report.accuracy),
                         format_double(o.report.ddp), format_double(o.report.deo),
                         std::to_string(o.result.best_iteration), to_string(o.result.termination)});
        log << "run " << r << " (seed " << seed << "): Acc " << o.report.accuracy << "  DDP " << o.report.ddp
            << "  DEO " << o.report.deo << "\n";
        reports.push_back(std::move(o.report));
    }

    write_atomic(out / "runs.csv", runs);
    write_atomic(out / "aggregate.csv", aggregate_csv(reports));
    log << "wrote " << (out / "aggregate.csv").string() << "\n";
    return exit_ok;
}

int cmd_eval(const fs::path& snapshot, const fs::path& out_dir, std::optional<RunMode> mode,
             std::optional<fs::path> table, std::ostream& log) {
    const ModelSnapshot s = load_snapshot(snapshot);
    PreparedData data;
    if (s.dataset.synthetic()) {
        data = load_run_data(s.dataset, s.split, s.split.seed, ".");
    } else {
        DatasetRef ref = s.dataset;
        ref.path = table ? table->string() : s.table.string();
        ref.schema = s.schema.string();
        data = load_run_data(ref, s.split, s.split.seed, ".");
    }

    if (data.train.feature_names != s.feature_names) {
        throw SnapshotError("feature columns of the data do not match the snapshot");
    }
    if (data.test.feature_dim() != s.model.input_dim) {
        throw SnapshotError("model input width does not match the data");
    }
    const RunMode m = mode.value_or(s.mode);
    const EvalReport report = score_split(s.model, s.params, data.test, m);
    const fs::path target = out_dir / ("report_" + to_string(m) + ".csv");
    write_atomic(target, report_csv(report));
    log << "Acc " << report.accuracy << "  DDP " << report.ddp << "  DEO " << report.deo << "\n"
        << "wrote " << target.string() << "\n";
    return exit_ok;
}

int cmd_trace_export(const fs::path& trace_path, const fs::path& out_dir, std::ostream& log) {
    std::ifstream in(trace_path);
    if (!in) throw MissingInputError("cannot read trace " + trace_path.string());
    std::vector<std::string> warnings;
    const TrainTrace trace = read_trace_jsonl(in, &warnings);
    const auto& names = trace.objective_names;

    std::vector<std::string> loss_header{"t"};
    std::vector<std::string> alpha_header{"t"};
    for (const auto& n : names) {
        loss_header.push_back(n);
        alpha_header.push_back("alpha_" + n);
    }
    std::string norms = "t,combined_norm,omega\n";
    std::string losses = csv_row(loss_header);
    std::string alphas = csv_row(alpha_header);
    std::string events = "t,from,to\n";

    const TraceRecord* prev = nullptr;
    for (const auto& r : trace.records) {
        const std::string t = std::to_string(r.t);
        norms += csv_row({t, format_double(r.combined_norm), r.omega ? format_double(*r.omega) : std::string()});
        std::vector<std::string> lrow{t};
        std::vector<std::string> arow{t};
        for (Eigen::Index k = 0; k < r.losses.size(); ++k) lrow.push_back(format_double(r.losses[k]));
        for (Eigen::Index k = 0; k < r.alpha.size(); ++k) arow.push_back(format_double(r.alpha[k]));
        losses += csv_row(lrow);
        alphas += csv_row(arow);
        if (prev && prev->strategy != r.strategy) events += csv_row({t, to_string(prev->strategy), to_string(r.strategy)});
        prev = &r;
    }

    write_atomic(out_dir / "combined_norm.csv", norms);
    write_atomic(out_dir / "losses.csv", losses);
    write_atomic(out_dir / "alpha.csv", alphas);
    write_atomic(out_dir / "strategy_events.csv", events);
    if (!warnings.empty()) {
        std::string w = "message\n";
        for (const auto& msg : warnings) {
            w += csv_row({msg});
            log << "warning: " << msg << "\n";
        }
        write_atomic(out_dir / "warnings.csv", w);
    }
    log << "exported " << trace.size() << " iterations to " << out_dir.string() << "\n";
    return exit_ok;
}

int cmd_datasets_fetch(const std::vector<std::string>& only, bool force, std::ostream& log) {
    const auto quote = [](const std::string& s) {
        std::string q = "'";
        for (char c : s) q += c == '\'' ? std::string("'\\''") : std::string(1, c);
        return q + "'";
    };
    std::string cmd = "python3 " + quote(APFEX_FETCH_SCRIPT) + " --cache " + quote(data_cache_dir().string());
    if (!only.empty()) {
        cmd += " --only";
        for (const auto& n : only) cmd += " " + quote(n);
    }
    if (force) cmd += " --force";
    log << "fetching into " << data_cache_dir().string() << "\n";
    const int status = std::system(cmd.c_str());
    return status == 0 ? exit_ok : exit_missing_data;
}

}  // namespace apfex::cli
