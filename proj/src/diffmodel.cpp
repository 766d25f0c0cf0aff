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

#include "apfex/diffmodel.hpp"

#include "apfex/errors.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace apfex {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstWeights = Eigen::Map<const RowMajor>;

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// Views into the flat parameter vector.
struct Layout {
    Eigen::Index w1 = 0, b1 = 0, w2 = 0, b2 = 0;  // offsets
};

Layout layout(const ModelSpec& m) {
    Layout l;
    const Eigen::Index d = m.input_dim, out = m.output_units();
    if (m.kind == ModelKind::logistic) {
        l.w1 = 0;
        l.b1 = out * d;
    } else {
        const Eigen::Index h = m.hidden_dim;
        l.w1 = 0;
        l.b1 = h * d;
        l.w2 = l.b1 + h;
        l.b2 = l.w2 + out * h;
    }
    return l;
}

void check_shapes(const ModelSpec& model, const ParamVector& params, const Eigen::MatrixXd& features) {
    model.validate();
    if (params.size() != model.param_count()) {
        throw ShapeError("parameter vector length", model.param_count(), params.size());
    }
    if (features.cols() != model.input_dim) {
        throw ShapeError("feature row width", model.input_dim, features.cols());
    }
}

// Applies the output nonlinearity row-wise in place.
void activate(Eigen::MatrixXd& z) {
    if (z.cols() == 1) {
        for (Eigen::Index i = 0; i < z.rows(); ++i) z(i, 0) = sigmoid(z(i, 0));
        return;
    }
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        const double mx = z.row(i).maxCoeff();
        z.row(i) = (z.row(i).array() - mx).exp();
        z.row(i) /= z.row(i).sum();
    }
}

// d(loss)/d(logits) given d(loss)/d(outputs).
Eigen::MatrixXd output_jacobian(const Eigen::MatrixXd& out, const Eigen::MatrixXd& d_out) {
    if (out.cols() == 1) {
        return d_out.array() * out.array() * (1.0 - out.array());
    }
    Eigen::MatrixXd dz(out.rows(), out.cols());
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
        const double inner = d_out.row(i).dot(out.row(i));
        dz.row(i) = out.row(i).array() * (d_out.row(i).array() - inner);
    }
    return dz;
}

}  // namespace

std::string to_string(ModelKind kind) { return kind == ModelKind::logistic ? "logistic" : "mlp"; }

ModelKind parse_model_kind(const std::string& s) {
    if (s == "logistic") return ModelKind::logistic;
    if (s == "mlp") return ModelKind::mlp;
    throw ParameterError("unknown model kind '" + s + "' (expected logistic or mlp)");
}

void ModelSpec::validate() const {
    if (input_dim < 1) throw ParameterError("input_dim must be >= 1");
    if (output_classes < 2) throw ParameterError("output_classes must be >= 2");
    if (kind == ModelKind::mlp && hidden_dim < 1) throw ParameterError("hidden_dim must be >= 1 for mlp");
}

Eigen::Index ModelSpec::param_count() const {
    const Eigen::Index d = input_dim, out = output_units();
    if (kind == ModelKind::logistic) return out * (d + 1);
    const Eigen::Index h = hidden_dim;
    return h * (d + 1) + out * (h + 1);
}

ForwardCache forward_cached(const ModelSpec& model, const ParamVector& params, const Eigen::MatrixXd& features) {
    check_shapes(model, params, features);
    const Layout l = layout(model);
    const Eigen::Index d = model.input_dim, out = model.output_units();
    ForwardCache cache;
    Eigen::MatrixXd z;
    if (model.kind == ModelKind::logistic) {
        ConstWeights w(params.data() + l.w1, out, d);
        z = features * w.transpose();
        z.rowwise() += params.segment(l.b1, out).transpose();
    } else {
        const Eigen::Index h = model.hidden_dim;
        ConstWeights w1(params.data() + l.w1, h, d);
        ConstWeights w2(params.data() + l.w2, out, h);
        cache.hidden = features * w1.transpose();
        cache.hidden.rowwise() += params.segment(l.b1, h).transpose();
        cache.hidden = cache.hidden.array().tanh();
        z = cache.hidden * w2.transpose();
        z.rowwise() += params.segment(l.b2, out).transpose();
    }
    activate(z);
    cache.output.values = std::move(z);
    return cache;
}

PredictionBatch forward(const ModelSpec& model, const ParamVector& params, const Eigen::MatrixXd& features) {
    return forward_cached(model, params, features).output;
}

ParamVector backward(const ModelSpec& model, const ParamVector& params, const Eigen::MatrixXd& features,
                     const ForwardCache& cache, const Eigen::MatrixXd& d_output) {
    const auto& out_v = cache.output.values;
    if (d_output.rows() != out_v.rows() || d_output.cols() != out_v.cols()) {
        throw ShapeError("output gradient rows", out_v.rows(), d_output.rows());
    }
    const Layout l = layout(model);
    const Eigen::Index d = model.input_dim, out = model.output_units();
    const Eigen::MatrixXd dz = output_jacobian(out_v, d_output);

    ParamVector grad = ParamVector::Zero(model.param_count());
    if (model.kind == ModelKind::logistic) {
        Eigen::Map<RowMajor>(grad.data() + l.w1, out, d) = dz.transpose() * features;
        grad.segment(l.b1, out) = dz.colwise().sum().transpose();
        return grad;
    }
    const Eigen::Index h = model.hidden_dim;
    ConstWeights w2(params.data() + l.w2, out, h);
    Eigen::Map<RowMajor>(grad.data() + l.w2, out, h) = dz.transpose() * cache.hidden;
    grad.segment(l.b2, out) = dz.colwise().sum().transpose();
    const Eigen::MatrixXd dh = dz * w2;
    const Eigen::MatrixXd da = dh.array() * (1.0 - cache.hidden.array().square());
    Eigen::Map<RowMajor>(grad.data() + l.w1, h, d) = da.transpose() * features;
    grad.segment(l.b1, h) = da.colwise().sum().transpose();
    return grad;
}

ParamVector init_params(const ModelSpec& model, std::uint64_t seed) {
    model.validate();
    std::mt19937_64 rng(seed);
    ParamVector p(model.param_count());
    const Layout l = layout(model);
    auto fill = [&](Eigen::Index from, Eigen::Index count, double fan_in) {
        const double r = 1.0 / std::sqrt(fan_in);
        std::uniform_real_distribution<double> u(-r, r);
        for (Eigen::Index i = 0; i < count; ++i) p[from + i] = u(rng);
    };
    const Eigen::Index d = model.input_dim, out = model.output_units();
    if (model.kind == ModelKind::logistic) {
        fill(0, out * (d + 1), static_cast<double>(d));
    } else {
        const Eigen::Index h = model.hidden_dim;
        fill(l.w1, h * (d + 1), static_cast<double>(d));
        fill(l.w2, out * (h + 1), static_cast<double>(h));
    }
    return p;
}

namespace {

double total_loss(const ModelSpec& model, const ParamVector& params, const Loss& loss, const Dataset& batch) {
    const auto pred = forward(model, params, batch.features);
    return loss.evaluate(pred, batch, nullptr) + loss.param_term(params, nullptr);
}

}  // namespace

LossGradient grad_loss(const ModelSpec& model, const ParamVector& params, const Loss& loss, const Dataset& batch) {
    const ForwardCache cache = forward_cached(model, params, batch.features);
    Eigen::MatrixXd d_out = Eigen::MatrixXd::Zero(cache.output.values.rows(), cache.output.values.cols());
    LossGradient r;
    r.value = loss.evaluate(cache.output, batch, &d_out);
    ParamVector extra = ParamVector::Zero(params.size());
    r.value += loss.param_term(params, &extra);
    if (!std::isfinite(r.value)) {
        throw NumericError(loss.name(), "loss value is " + std::to_string(r.value));
    }
    r.grad = backward(model, params, batch.features, cache, d_out) + extra;
    if (!r.grad.allFinite()) {
        throw NumericError(loss.name(), "gradient has non-finite entries");
    }
    return r;
}

FiniteDiffReport finite_diff_check(const ModelSpec& model, const ParamVector& params, const Loss& loss,
                                   const Dataset& batch, double step, double kink_tol) {
    if (!(step > 0.0)) throw ParameterError("finite-difference step must be positive");
    const LossGradient analytic = grad_loss(model, params, loss, batch);
    const Eigen::VectorXd kinks0 = loss.kink_offsets(forward(model, params, batch.features), batch);

    FiniteDiffReport rep;
    ParamVector probe = params;
    for (Eigen::Index j = 0; j < params.size(); ++j) {
        probe[j] = params[j] + step;
        const double fp = total_loss(model, probe, loss, batch);
        const Eigen::VectorXd kp = loss.kink_offsets(forward(model, probe, batch.features), batch);
        probe[j] = params[j] - step;
        const double fm = total_loss(model, probe, loss, batch);
        const Eigen::VectorXd km = loss.kink_offsets(forward(model, probe, batch.features), batch);
        probe[j] = params[j];

        bool straddles = false;
        for (Eigen::Index k = 0; k < kinks0.size() && !straddles; ++k) {
            if (kp[k] == km[k]) continue;  // coordinate does not move this input
            const bool crosses = (kp[k] > 0.0) != (km[k] > 0.0);
            const bool near = std::min({std::abs(kp[k]), std::abs(km[k]), std::abs(kinks0[k])}) <= kink_tol;
            straddles = crosses || near;
        }
        if (straddles) {
            ++rep.excluded;
            continue;
        }
        const double central = (fp - fm) / (2.0 * step);
        const double denom = std::max(std::abs(analytic.grad[j]), 1e-12);
        rep.max_rel_error = std::max(rep.max_rel_error, std::abs(analytic.grad[j] - central) / denom);
        ++rep.checked;
    }
    return rep;
}

double CrossEntropyLoss::evaluate(const PredictionBatch& pred, const Dataset& data, Eigen::MatrixXd* d_output) const {
    const Eigen::Index n = pred.size();
    if (static_cast<Eigen::Index>(data.labels.size()) != n) {
        throw ShapeError("label count", n, static_cast<std::ptrdiff_t>(data.labels.size()));
    }
    if (d_output) d_output->setZero(n, pred.values.cols());
    if (n == 0) return 0.0;
    const double lo = kScoreClamp, hi = 1.0 - kScoreClamp;
    const double inv_n = 1.0 / static_cast<double>(n);
    double total = 0.0;
    if (pred.binary()) {
        for (Eigen::Index i = 0; i < n; ++i) {
            const double s = pred.values(i, 0);
            const double sc = std::clamp(s, lo, hi);
            const bool pos = data.labels[static_cast<std::size_t>(i)] > 0;
            total -= pos ? std::log(sc) : std::log(1.0 - sc);
            if (d_output) {
                const bool clamped = s < lo || s > hi;
                (*d_output)(i, 0) = clamped ? 0.0 : (pos ? -1.0 / s : 1.0 / (1.0 - s)) * inv_n;
            }
        }
    } else {
        for (Eigen::Index i = 0; i < n; ++i) {
            const int y = data.labels[static_cast<std::size_t>(i)];
            const double p = pred.values(i, y);
            total -= std::log(std::clamp(p, lo, hi));
            if (d_output && p >= lo && p <= hi) (*d_output)(i, y) = -inv_n / p;
        }
    }
    return total * inv_n;
}

std::optional<Eigen::VectorXd> CrossEntropyLoss::sample_losses(const PredictionBatch& pred, const Dataset& data) const {
    const double lo = kScoreClamp, hi = 1.0 - kScoreClamp;
    Eigen::VectorXd out(pred.size());
    for (Eigen::Index i = 0; i < pred.size(); ++i) {
        const int y = data.labels[static_cast<std::size_t>(i)];
        if (pred.binary()) {
            const double sc = std::clamp(pred.values(i, 0), lo, hi);
            out[i] = y > 0 ? -std::log(sc) : -std::log(1.0 - sc);
        } else {
            out[i] = -std::log(std::clamp(pred.values(i, y), lo, hi));
        }
    }
    return out;
}

}  // namespace apfex
