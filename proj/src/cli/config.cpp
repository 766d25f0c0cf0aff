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

#include "apfex/cli/config.hpp"

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <set>
#include <sstream>
#include <utility>

namespace apfex::cli {

std::string to_string(RunMode m) {
    switch (m) {
        case RunMode::attr1: return "attr1";
        case RunMode::attr2: return "attr2";
        case RunMode::multi: return "multi";
        case RunMode::intersectional: return "intersectional";
    }
    return "?";
}

RunMode parse_run_mode(const std::string& s) {
    if (s == "attr1") return RunMode::attr1;
    if (s == "attr2") return RunMode::attr2;
    if (s == "multi") return RunMode::multi;
    if (s == "intersectional") return RunMode::intersectional;
    throw ParameterError("unknown mode '" + s + "' (expected attr1, attr2, multi or intersectional)");
}

void RunConfig::validate() const {
    if (dataset.name.empty() && dataset.path.empty()) throw ValidationError("dataset needs a name or a path");
    if (!dataset.synthetic() && dataset.path.empty() && dataset.schema.empty() && dataset.name.empty()) {
        throw ValidationError("dataset needs a schema");
    }
    split.validate();
    if (model_kind == ModelKind::mlp && hidden < 1) throw ParameterError("model.hidden must be >= 1");
    loss.validate();
    train.validate();
    if (repeat < 1) throw ParameterError("repeat must be >= 1");
    if (output.empty()) throw ParameterError("output directory is empty");
}

namespace {

/// Reads one mapping and rejects keys nobody asked for.
class Section {
public:
    Section(const YAML::Node& node, std::string path, const std::string& origin)
        : node_(node), path_(std::move(path)), origin_(origin) {
        if (present() && !node_.IsMap()) fail(node_, "'" + path_ + "' must be a mapping");
    }

    ~Section() noexcept(false) {
        if (std::uncaught_exceptions() > 0 || !present()) return;
        for (const auto& kv : node_) {
            const auto key = kv.first.as<std::string>();
            if (!seen_.contains(key)) fail(kv.first, "unknown key '" + qualified(key) + "'");
        }
    }

    Section(const Section&) = delete;
    Section& operator=(const Section&) = delete;

    YAML::Node child(const std::string& key) {
        seen_.insert(key);
        return present() ? std::as_const(node_)[key] : YAML::Node();
    }

    template <class T>
    void get(const std::string& key, T& out) {
        const YAML::Node n = child(key);
        if (!n || n.IsNull()) return;
        try {
            out = n.as<T>();
        } catch (const YAML::Exception&) {
            fail(n, "'" + qualified(key) + "' has the wrong type");
        }
    }

    /// Parses a string field through `parse`, turning its errors into ConfigErrors.
    template <class T, class F>
    void get_parsed(const std::string& key, T& out, F parse) {
        const YAML::Node n = child(key);
        if (!n || n.IsNull()) return;
        std::string raw;
        get(key, raw);
        try {
            out = parse(raw);
        } catch (const Error& e) {
            fail(n, e.what());
        }
    }

    [[noreturn]] void fail(const YAML::Node& at, const std::string& message) const {
        throw ConfigError(origin_, at.Mark().line + 1, message);
    }

    std::string qualified(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

private:
    // An absent or empty section reads as all defaults.
    bool present() const { return node_ && !node_.IsNull(); }

    YAML::Node node_;
    std::string path_;
    const std::string& origin_;
    std::set<std::string> seen_;
};

FairMetric parse_metric(const std::string& s) {
    if (s == "dp") return FairMetric::dp;
    if (s == "tpr") return FairMetric::tpr;
    throw ParameterError("unknown fairness objective '" + s + "' (expected dp or tpr)");
}

SurrogateKind parse_surrogate(const std::string& s) {
    if (s == "tanh") return SurrogateKind::tanh_soft_round;
    if (s == "ccr") return SurrogateKind::ccr;
    throw ParameterError("unknown surrogate '" + s + "' (expected tanh or ccr)");
}

std::optional<Strategy> parse_strategy_choice(const std::string& s) {
    if (s == "auto") return std::nullopt;
    return parse_strategy(s);
}

void read_dataset(Section& top, RunConfig& cfg, const std::string& origin) {
    const YAML::Node node = top.child("dataset");
    if (!node) throw ConfigError(origin, 0, "missing required key 'dataset'");
    Section s(node, "dataset", origin);
    s.get("name", cfg.dataset.name);
    s.get("path", cfg.dataset.path);
    s.get("schema", cfg.dataset.schema);
    s.get("subsample", cfg.dataset.subsample);
    const YAML::Node syn = s.child("synthetic");
    if (syn) {
        Section g(syn, "dataset.synthetic", origin);
        g.get("n", cfg.dataset.synthetic_n);
        g.get("bias", cfg.dataset.synthetic_bias);
    }
    if (cfg.dataset.name.empty() && cfg.dataset.path.empty()) s.fail(node, "dataset needs 'name' or 'path'");
    if (!cfg.dataset.synthetic() && cfg.dataset.name.empty() && cfg.dataset.schema.empty()) {
        s.fail(node, "dataset given by path needs 'schema'");
    }
}

void read_train(Section& top, RunConfig& cfg, const std::string& origin) {
    Section s(top.child("train"), "train", origin);
    TrainConfig& t = cfg.train;
    s.get("learning_rate", t.learning_rate);
    s.get("iterations", t.iterations);
    s.get("batch_size", t.batch_size);
    s.get_parsed("strategy", t.fixed_strategy, parse_strategy_choice);
    s.get("min_norm_tol", t.min_norm_tol);
    s.get("min_norm_max_iter", t.min_norm_max_iter);
    s.get("zero_tol", t.zero_tol);
    s.get("stationary_escape", t.stationary_escape);
    s.get("omega_every", t.omega_every);
    s.get("scale_eps", t.scale_eps);
    s.get("scale_refresh", t.scale_refresh);
    s.get("validate_every", t.validate_every);
    s.get("archive_capacity", t.archive_capacity);

    Section sel(s.child("selector"), "train.selector", origin);
    SelectorThresholds& th = t.thresholds;
    sel.get("align_eps", th.align_eps);
    sel.get("imbalance_ratio", th.imbalance_ratio);
    sel.get("stagnation_tol", th.stagnation_tol);
    sel.get("stagnation_window", th.stagnation_window);
    sel.get("adapt_rate", th.adapt_rate);
    sel.get("explore_smoothing", th.explore_smoothing);
    sel.get("min_dwell", th.min_dwell);
}

void read_fairness(Section& top, RunConfig& cfg, const std::string& origin) {
    Section s(top.child("fairness"), "fairness", origin);
    FairLossConfig& f = cfg.loss;
    s.get("lambda", f.lambda);
    s.get("beta", f.beta);
    s.get("smooth", f.smooth);
    s.get("eps_abs", f.eps_abs);
    s.get("eps_smooth", f.eps_smooth);
    s.get("include_task", f.include_task);
    s.get_parsed("surrogate", f.surrogate.kind, parse_surrogate);
    s.get("tau", f.surrogate.tau);
    s.get("gamma", f.surrogate.gamma);
}

}  // namespace

RunConfig parse_run_config(const std::string& text, const std::string& origin) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ConfigError(origin, e.mark.line + 1, e.msg);
    }
    if (!root.IsMap()) throw ConfigError(origin, root ? root.Mark().line + 1 : 0, "config must be a mapping");

    RunConfig cfg;
    {
        Section top(root, "", origin);
        read_dataset(top, cfg, origin);
        {
            Section s(top.child("split"), "split", origin);
            s.get("train", cfg.split.train);
            s.get("val", cfg.split.val);
            s.get("test", cfg.split.test);
        }
        {
            Section s(top.child("model"), "model", origin);
            s.get_parsed("kind", cfg.model_kind, parse_model_kind);
            s.get("hidden", cfg.hidden);
        }
        top.get_parsed("mode", cfg.mode, parse_run_mode);
        if (const YAML::Node obj = top.child("objectives")) {
            if (!obj.IsSequence()) top.fail(obj, "'objectives' must be a list");
            cfg.fairness.clear();
            std::set<FairMetric> seen;
            for (const auto& item : obj) {
                try {
                    const FairMetric m = parse_metric(item.as<std::string>());
                    if (!seen.insert(m).second) top.fail(item, "objective listed twice");
                    cfg.fairness.push_back(m);
                } catch (const YAML::Exception&) {
                    top.fail(item, "objective must be a string");
                } catch (const ParameterError& e) {
                    top.fail(item, e.what());
                }
            }
        }
        read_fairness(top, cfg, origin);
        read_train(top, cfg, origin);
        top.get("repeat", cfg.repeat);
        top.get("seed", cfg.seed);
        std::string out;
        top.get("output", out);
        if (!out.empty()) cfg.output = out;
    }

    try {
        cfg.validate();
    } catch (const Error& e) {
        throw ConfigError(origin, 0, e.what());
    }
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path.string(), 0, "cannot read config file");
    std::stringstream buf;
    buf << in.rdbuf();
    RunConfig cfg = parse_run_config(buf.str(), path.string());
    cfg.base_dir = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
    return cfg;
}

}  // namespace apfex::cli
