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

#include "apfex/metrics.hpp"

#include "apfex/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

namespace apfex {

namespace {

std::string format_number(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void check_lengths(std::span<const int> preds, std::span<const int> labels) {
    if (preds.size() != labels.size()) {
        throw ShapeError("predictions vs labels", static_cast<std::ptrdiff_t>(labels.size()),
                         static_cast<std::ptrdiff_t>(preds.size()));
    }
}

std::string attribute_name(const SensitiveAttributes& attrs, Eigen::Index j) {
    return static_cast<Eigen::Index>(attrs.names.size()) > j ? attrs.names[static_cast<std::size_t>(j)]
                                                             : "a" + std::to_string(j);
}

}  // namespace

std::vector<int> hard_predictions(const Eigen::Ref<const Eigen::VectorXd>& scores, double threshold) {
    std::vector<int> out(static_cast<std::size_t>(scores.size()));
    for (Eigen::Index i = 0; i < scores.size(); ++i) out[static_cast<std::size_t>(i)] = scores[i] >= threshold ? 1 : -1;
    return out;
}

double accuracy(std::span<const int> preds, std::span<const int> labels) {
    check_lengths(preds, labels);
    if (preds.empty()) throw ValidationError("accuracy of an empty prediction set");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) correct += preds[i] == labels[i] ? 1 : 0;
    return static_cast<double>(correct) / static_cast<double>(preds.size());
}

std::optional<double> dp_rate(std::span<const int> preds, const std::vector<bool>& mask) {
    if (mask.size() != preds.size()) {
        throw ShapeError("group mask length", static_cast<std::ptrdiff_t>(preds.size()),
                         static_cast<std::ptrdiff_t>(mask.size()));
    }
    std::size_t members = 0;
    std::size_t positive = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        if (!mask[i]) continue;
        ++members;
        positive += preds[i] == 1 ? 1 : 0;
    }
    if (members == 0) return std::nullopt;
    return static_cast<double>(positive) / static_cast<double>(members);
}

std::optional<double> tpr_rate(std::span<const int> preds, std::span<const int> labels, const std::vector<bool>& mask) {
    check_lengths(preds, labels);
    if (mask.size() != preds.size()) {
        throw ShapeError("group mask length", static_cast<std::ptrdiff_t>(preds.size()),
                         static_cast<std::ptrdiff_t>(mask.size()));
    }
    std::size_t actual = 0;
    std::size_t caught = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        if (!mask[i] || labels[i] != 1) continue;
        ++actual;
        caught += preds[i] == 1 ? 1 : 0;
    }
    if (actual == 0) return std::nullopt;
    return static_cast<double>(caught) / static_cast<double>(actual);
}

double max_disparity(std::span<const std::optional<double>> rates) {
    double lo = 0.0;
    double hi = 0.0;
    int present = 0;
    for (const auto& r : rates) {
        if (!r) continue;
        lo = present == 0 ? *r : std::min(lo, *r);
        hi = present == 0 ? *r : std::max(hi, *r);
        ++present;
    }
    if (present < 2) {
        throw DegenerateGroupingError("disparity needs at least 2 groups with a defined rate, got " +
                                      std::to_string(present));
    }
    return hi - lo;
}

std::vector<std::optional<double>> group_rates(std::span<const int> preds, std::span<const int> labels,
                                               const GroupTable& groups, RateKind kind) {
    check_lengths(preds, labels);
    if (groups.sample_count() != static_cast<Eigen::Index>(preds.size())) {
        throw ShapeError("group table samples", static_cast<std::ptrdiff_t>(preds.size()), groups.sample_count());
    }
    std::vector<std::optional<double>> rates;
    for (int g = 0; g < groups.group_count(); ++g) {
        const auto mask = groups.mask(g);
        rates.push_back(kind == RateKind::dp ? dp_rate(preds, mask) : tpr_rate(preds, labels, mask));
    }
    return rates;
}

std::vector<double> per_attribute_disparity(std::span<const int> preds, std::span<const int> labels,
                                            const SensitiveAttributes& attrs, RateKind kind) {
    if (attrs.attribute_count() < 1) throw ValidationError("at least one sensitive attribute is required");
    std::vector<double> out;
    for (Eigen::Index j = 0; j < attrs.attribute_count(); ++j) {
        const int col = static_cast<int>(j);
        const GroupTable groups = build_intersection(attrs.select(std::span<const int>(&col, 1)));
        out.push_back(max_disparity(group_rates(preds, labels, groups, kind)));
    }
    return out;
}

double intersectional_disparity(std::span<const int> preds, std::span<const int> labels,
                                const SensitiveAttributes& attrs, RateKind kind) {
    return max_disparity(group_rates(preds, labels, build_intersection(attrs), kind));
}

std::string to_string(MetricMode m) { return m == MetricMode::intersectional ? "intersectional" : "per_attribute"; }

std::vector<std::pair<std::string, std::string>> EvalReport::records() const {
    std::vector<std::pair<std::string, std::string>> r;
    r.emplace_back("mode", to_string(mode));
    r.emplace_back("Acc", format_number(accuracy));
    r.emplace_back("DDP", format_number(ddp));
    r.emplace_back("DEO", format_number(deo));
    for (const auto& [k, v] : attribute_ddp) r.emplace_back("DDP[" + k + "]", format_number(v));
    for (const auto& [k, v] : attribute_deo) r.emplace_back("DEO[" + k + "]", format_number(v));
    for (const auto& [k, v] : per_group_dp) r.emplace_back("dp[" + k + "]", format_number(v));
    for (const auto& [k, v] : per_group_tpr) r.emplace_back("tpr[" + k + "]", format_number(v));
    for (const auto& [k, v] : excluded_groups) r.emplace_back("excluded[" + k + "]", v);
    return r;
}

EvalReport evaluate_predictions(std::span<const int> preds, std::span<const int> labels,
                                const SensitiveAttributes& attrs, MetricMode mode) {
    EvalReport rep;
    rep.mode = mode;
    rep.accuracy = accuracy(preds, labels);

    auto collect = [&](const SensitiveAttributes& view, const std::string& prefix) {
        const GroupTable groups = build_intersection(view);
        const auto dp = group_rates(preds, labels, groups, RateKind::dp);
        const auto tpr = group_rates(preds, labels, groups, RateKind::tpr);
        for (int g = 0; g < groups.group_count(); ++g) {
            const std::string label = prefix + groups.label(g, view.names);
            if (dp[static_cast<std::size_t>(g)]) {
                rep.per_group_dp.emplace_back(label, *dp[static_cast<std::size_t>(g)]);
            } else {
                rep.excluded_groups.emplace_back(label, "empty");
            }
            if (tpr[static_cast<std::size_t>(g)]) {
                rep.per_group_tpr.emplace_back(label, *tpr[static_cast<std::size_t>(g)]);
            } else if (dp[static_cast<std::size_t>(g)]) {
                rep.excluded_groups.emplace_back(label, "no positives");
            }
        }
        return std::pair{max_disparity(dp), max_disparity(tpr)};
    };

    if (mode == MetricMode::intersectional) {
        std::tie(rep.ddp, rep.deo) = collect(attrs, "");
        return rep;
    }
    for (Eigen::Index j = 0; j < attrs.attribute_count(); ++j) {
        const int col = static_cast<int>(j);
        const auto [ddp, deo] = collect(attrs.select(std::span<const int>(&col, 1)), "");
        const std::string name = attribute_name(attrs, j);
        rep.attribute_ddp.emplace_back(name, ddp);
        rep.attribute_deo.emplace_back(name, deo);
        rep.ddp = std::max(rep.ddp, ddp);
        rep.deo = std::max(rep.deo, deo);
    }
    return rep;
}

}  // namespace apfex
