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

#include "apfex/moo_core.hpp"

#include "apfex/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace apfex {

namespace {

void fill_certificate(const Eigen::MatrixXd& G, KktCertificate& c) {
    const Eigen::VectorXd& a = c.alpha.values();
    const Eigen::VectorXd Ga = G * a;
    c.objective = a.dot(Ga);
    c.mu = -c.objective;
    c.nu = Ga.array() + c.mu;
    c.stationarity_residual = (Ga.array() + c.mu - c.nu.array()).abs().maxCoeff();
    c.complementarity_residual = (a.array() * c.nu.array()).abs().maxCoeff();
    c.dual_infeasibility = std::max(0.0, -c.nu.minCoeff());
    c.duality_gap = c.objective - Ga.minCoeff();
}

// Solves the equality-constrained problem on the support of `alpha`. Returns
// false if the solution leaves the simplex or does not lower the objective.
bool polish_on_support(const Eigen::MatrixXd& G, Eigen::VectorXd& alpha) {
    std::vector<Eigen::Index> support;
    for (Eigen::Index k = 0; k < alpha.size(); ++k) {
        if (alpha[k] > 0.0) support.push_back(k);
    }
    const auto s = static_cast<Eigen::Index>(support.size());
    if (s < 2) return false;

    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(s + 1, s + 1);
    for (Eigen::Index i = 0; i < s; ++i) {
        for (Eigen::Index j = 0; j < s; ++j) kkt(i, j) = G(support[i], support[j]);
        kkt(i, s) = 1.0;
        kkt(s, i) = 1.0;
    }
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(s + 1);
    rhs[s] = 1.0;
    const Eigen::VectorXd sol = kkt.completeOrthogonalDecomposition().solve(rhs);

    Eigen::VectorXd candidate = Eigen::VectorXd::Zero(alpha.size());
    for (Eigen::Index i = 0; i < s; ++i) {
        if (!std::isfinite(sol[i]) || sol[i] < -1e-12) return false;
        candidate[support[i]] = std::max(0.0, sol[i]);
    }
    const double total = candidate.sum();
    if (!(total > 0.0)) return false;
    candidate /= total;

    const double before = alpha.dot(G * alpha);
    const double after = candidate.dot(G * candidate);
    if (!(after <= before + 1e-15 * std::max(1.0, std::abs(before)))) return false;
    alpha = candidate;
    return true;
}

}  // namespace

void validate_gradients(const GradientSet& g) {
    if (g.rows() < 1) throw ShapeError("objective count", 1, g.rows());
    if (!g.allFinite()) throw NumericError("gradients", "non-finite gradient entry");
}

SimplexWeights::SimplexWeights(Eigen::VectorXd alpha) : alpha_(std::move(alpha)) {
    if (alpha_.size() < 1) throw ShapeError("simplex dimension", 1, alpha_.size());
    if (!alpha_.allFinite()) throw NumericError("simplex weights", "non-finite weight");
    if (alpha_.minCoeff() < 0.0) throw ValidationError("simplex weights must be non-negative");
    if (std::abs(alpha_.sum() - 1.0) > kSumTolerance) {
        throw ValidationError("simplex weights must sum to 1, got " + std::to_string(alpha_.sum()));
    }
}

SimplexWeights SimplexWeights::uniform(Eigen::Index k) {
    return SimplexWeights(Eigen::VectorXd::Constant(k, 1.0 / static_cast<double>(k)));
}

void LossScales::validate() const {
    if (!(eps > 0.0)) throw ParameterError("loss scale guard must be positive");
    for (Eigen::Index k = 0; k < max_loss.size(); ++k) {
        if (!(max_loss[k] >= eps)) throw ParameterError("loss scale " + std::to_string(k) + " below guard");
    }
}

LossScales estimate_loss_scales(const ModelSpec& model, const ParamVector& params,
                                std::span<const std::unique_ptr<Loss>> losses, const Dataset& training_set,
                                double eps) {
    if (!(eps > 0.0)) throw ParameterError("loss scale guard must be positive");
    if (training_set.size() == 0) throw ValidationError("loss scales need a non-empty training set");
    const PredictionBatch pred = forward(model, params, training_set.features);
    LossScales scales{Eigen::VectorXd(static_cast<Eigen::Index>(losses.size())), eps};
    for (std::size_t k = 0; k < losses.size(); ++k) {
        const Loss& loss = *losses[k];
        double peak;
        if (auto per_sample = loss.sample_losses(pred, training_set)) {
            if (!per_sample->allFinite()) throw NumericError(loss.name(), "non-finite sample loss");
            peak = per_sample->maxCoeff();
        } else {
            peak = loss.evaluate(pred, training_set, nullptr) + loss.param_term(params, nullptr);
            if (!std::isfinite(peak)) throw NumericError(loss.name(), "non-finite loss value");
        }
        scales.max_loss[static_cast<Eigen::Index>(k)] = std::max(peak, 0.0) + eps;
    }
    return scales;
}

GradientSet normalize_gradients(const GradientSet& g, const LossScales& scales) {
    scales.validate();
    if (scales.max_loss.size() != g.rows()) throw ShapeError("loss scale count", g.rows(), scales.max_loss.size());
    return scales.max_loss.cwiseInverse().asDiagonal() * g;
}

Eigen::MatrixXd gram(const GradientSet& g) {
    Eigen::MatrixXd G = g * g.transpose();
    return 0.5 * (G + G.transpose());
}

KktCertificate min_norm_solve(const Eigen::MatrixXd& G_in, double tol, int max_iter) {
    if (G_in.rows() != G_in.cols()) throw ShapeError("Gram matrix columns", G_in.rows(), G_in.cols());
    if (G_in.rows() < 1) throw ShapeError("Gram matrix size", 1, G_in.rows());
    if (!(tol > 0.0)) throw ParameterError("min-norm tolerance must be positive");
    if (!G_in.allFinite()) throw NumericError("min-norm solver", "non-finite Gram matrix");
    const Eigen::MatrixXd G = 0.5 * (G_in + G_in.transpose());
    const Eigen::Index K = G.rows();

    KktCertificate cert;
    Eigen::VectorXd a = Eigen::VectorXd::Constant(K, 1.0 / static_cast<double>(K));
    if (K == 1) {
        cert.alpha = SimplexWeights(a);
        cert.converged = true;
        fill_certificate(G, cert);
        return cert;
    }

    int it = 0;
    bool converged = false;
    for (; it < max_iter; ++it) {
        const Eigen::VectorXd grad = G * a;
        const double aGa = a.dot(grad);

        Eigen::Index fw = 0;
        grad.minCoeff(&fw);
        const double fw_gap = aGa - grad[fw];
        if (fw_gap <= tol) {
            converged = true;
            break;
        }

        Eigen::Index away = -1;
        for (Eigen::Index k = 0; k < K; ++k) {
            if (a[k] > 0.0 && (away < 0 || grad[k] > grad[away])) away = k;
        }
        const double away_gap = grad[away] - aGa;

        Eigen::VectorXd d;
        double step_max;
        if (fw_gap >= away_gap || a[away] >= 1.0) {
            d = -a;
            d[fw] += 1.0;
            step_max = 1.0;
        } else {
            d = a;
            d[away] -= 1.0;
            step_max = a[away] / (1.0 - a[away]);
        }
        const double slope = grad.dot(d);
        const double curvature = d.dot(G * d);
        double step = curvature > 0.0 ? std::clamp(-slope / curvature, 0.0, step_max) : step_max;
        if (step <= 0.0) {
            converged = true;
            break;
        }
        a += step * d;
        a = a.cwiseMax(0.0);
        a /= a.sum();
    }

    if (polish_on_support(G, a)) {
        // The polished point is optimal on its support; re-check the gap.
        const Eigen::VectorXd grad = G * a;
        converged = converged || (a.dot(grad) - grad.minCoeff() <= tol);
    }
    a /= a.sum();
    cert.alpha = SimplexWeights(a);
    cert.iterations = it;
    cert.converged = converged;
    fill_certificate(G, cert);
    return cert;
}

PcpResult pcp_direction(const GradientSet& g, const SimplexWeights& alpha, double zero_tol) {
    if (alpha.size() != g.rows()) throw ShapeError("simplex weights vs objectives", g.rows(), alpha.size());
    PcpResult r;
    r.combined = g.transpose() * alpha.values();
    r.combined_norm = r.combined.norm();
    if (r.combined_norm <= zero_tol) {
        r.stationary = true;
        return r;
    }
    r.direction = -r.combined / r.combined_norm;
    return r;
}

bool cone_membership(const GradientSet& g, const Eigen::Ref<const Eigen::VectorXd>& d, double slack) {
    if (d.size() != g.cols()) throw ShapeError("direction length", g.cols(), d.size());
    return ((g * d).array() <= slack).all();
}

Stationarity stationarity_measure(const GradientSet& g, double tol, int max_iter) {
    validate_gradients(g);
    const KktCertificate c = min_norm_solve(gram(g), tol, max_iter);
    const Eigen::VectorXd combined = g.transpose() * c.alpha.values();
    return {combined.norm(), c.converged};
}

}  // namespace apfex
