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

#include <cstdint>
#include <optional>
#include <string>

namespace apfex {

using ParamVector = Eigen::VectorXd;

enum class ModelKind { logistic, mlp };

std::string to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& s);

/// Architecture of a differentiable classifier.
///
/// Parameter layout (row-major blocks, concatenated):
///   logistic: W[out x d], b[out]
///   mlp:      W1[h x d], b1[h], W2[out x h], b2[out]   (tanh hidden layer)
/// where out = 1 for binary (sigmoid head) and out = C for C > 2 (softmax head).
struct ModelSpec {
    ModelKind kind = ModelKind::logistic;
    int input_dim = 1;
    int hidden_dim = 0;
    int output_classes = 2;

    void validate() const;
    bool multiclass() const { return output_classes > 2; }
    int output_units() const { return multiclass() ? output_classes : 1; }
    Eigen::Index param_count() const;
};

/// Binary: one column of scores in (0,1). Multi-class: C columns, rows on the simplex.
struct PredictionBatch {
    Eigen::MatrixXd values;

    bool binary() const { return values.cols() == 1; }
    Eigen::Index size() const { return values.rows(); }
    /// Positive-class score (binary) or per-class probability column c.
    Eigen::VectorXd column(Eigen::Index c = 0) const { return values.col(c); }
};

/// Activations kept for the backward pass.
struct ForwardCache {
    Eigen::MatrixXd hidden;  // n x h (mlp only), tanh outputs
    PredictionBatch output;
};

/// Lower and upper clamp applied to scores before any log term.
inline constexpr double kScoreClamp = 1e-7;

PredictionBatch forward(const ModelSpec& model, const ParamVector& params, const Eigen::MatrixXd& features);
ForwardCache forward_cached(const ModelSpec& model, const ParamVector& params, const Eigen::MatrixXd& features);

/// Chain rule from d(loss)/d(outputs) to d(loss)/d(params).
ParamVector backward(const ModelSpec& model, const ParamVector& params, const Eigen::MatrixXd& features,
                     const ForwardCache& cache, const Eigen::MatrixXd& d_output);

/// Uniform on [-1/sqrt(fan_in), 1/sqrt(fan_in)] per layer, biases included.
ParamVector init_params(const ModelSpec& model, std::uint64_t seed);

/// A scalar objective over model outputs (and optionally the raw parameters).
class Loss {
public:
    virtual ~Loss() = default;

    virtual std::string name() const = 0;

    /// Loss value; when d_output is non-null it is resized to pred.values and filled.
    virtual double evaluate(const PredictionBatch& pred, const Dataset& data, Eigen::MatrixXd* d_output) const = 0;

    /// Parameter-only term added to evaluate(); zero by default.
    virtual double param_term(const ParamVector& params, ParamVector* grad) const {
        (void)params;
        if (grad) grad->setZero();
        return 0.0;
    }

    /// Per-sample losses when the objective decomposes over samples.
    virtual std::optional<Eigen::VectorXd> sample_losses(const PredictionBatch& pred, const Dataset& data) const {
        (void)pred;
        (void)data;
        return std::nullopt;
    }

    /// Signed offsets of every surrogate input from its non-differentiable
    /// points; empty for smooth losses. Used to exclude kink-crossing
    /// coordinates from finite-difference checks.
    virtual Eigen::VectorXd kink_offsets(const PredictionBatch& pred, const Dataset& data) const {
        (void)pred;
        (void)data;
        return {};
    }
};

struct LossGradient {
    double value = 0.0;
    ParamVector grad;
};

/// Exact gradient of loss(forward(params)) + loss.param_term(params).
LossGradient grad_loss(const ModelSpec& model, const ParamVector& params, const Loss& loss, const Dataset& batch);

struct FiniteDiffReport {
    double max_rel_error = 0.0;
    Eigen::Index checked = 0;
    Eigen::Index excluded = 0;  // coordinates whose stencil straddles a kink
};

/// max_j |analytic_j - central_j| / max(|analytic_j|, 1e-12) over checked coordinates.
FiniteDiffReport finite_diff_check(const ModelSpec& model, const ParamVector& params, const Loss& loss,
                                   const Dataset& batch, double step, double kink_tol = 1e-6);

/// Mean binary or categorical cross-entropy with clamped scores.
class CrossEntropyLoss final : public Loss {
public:
    std::string name() const override { return "task"; }
    double evaluate(const PredictionBatch& pred, const Dataset& data, Eigen::MatrixXd* d_output) const override;
    std::optional<Eigen::VectorXd> sample_losses(const PredictionBatch& pred, const Dataset& data) const override;
};

}  // namespace apfex
