// Copyright 2026 The orthospinn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "orthospinn/gp_head.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <fmt/format.h>

namespace orthospinn {

GpHead GpHead::create(int d_hidden, int features, double gamma, std::mt19937_64 &rng) {
    if (d_hidden < 1 || features < 1 || gamma <= 0.0) {
        throw std::invalid_argument("GpHead: invalid dimensions or kernel scale");
    }
    GpHead head;
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    head.W_L.resize(features, d_hidden);
    for (Eigen::Index k = 0; k < head.W_L.size(); ++k) {
        head.W_L.data()[k] = normal(rng);
    }
    head.b_L.resize(features);
    for (auto &b : head.b_L) {
        b = phase(rng);
    }
    head.gamma = gamma;
    head.beta = Eigen::VectorXd::Zero(features);
    return head;
}

Eigen::VectorXd rff_features(const Eigen::VectorXd &h, const GpHead &head) {
    if (h.size() != head.hidden_dim()) {
        throw std::invalid_argument(fmt::format("rff_features: expected {} inputs, got {}", head.hidden_dim(), h.size()));
    }
    const double amp = std::sqrt(2.0 / head.features());
    return amp * (std::sqrt(2.0 * head.gamma) * (head.W_L * h) + head.b_L).array().cos().matrix();
}

Eigen::MatrixXd rff_feature_table(const Eigen::MatrixXd &H, const GpHead &head) {
    if (H.rows() != head.hidden_dim()) {
        throw std::invalid_argument("rff_feature_table: hidden dimension mismatch");
    }
    const double amp = std::sqrt(2.0 / head.features());
    Eigen::MatrixXd Z = std::sqrt(2.0 * head.gamma) * (head.W_L * H);
    Z.colwise() += head.b_L;
    return (amp * Z.array().cos()).matrix().transpose();
}

Eigen::MatrixXd gp_posterior(const Eigen::MatrixXd &Phi, double tau, PosteriorSolver solver) {
    if (tau <= 0.0) {
        throw std::invalid_argument("gp_posterior: ridge must be positive");
    }
    const auto N = Phi.rows();
    const auto D = Phi.cols();
    if (solver == PosteriorSolver::automatic) {
        solver = N < D ? PosteriorSolver::kernel : PosteriorSolver::feature;
    }
    Eigen::MatrixXd Sigma;
    if (solver == PosteriorSolver::kernel) {
        Sigma = Eigen::MatrixXd::Identity(D, D);
        if (N > 0) {
            Eigen::MatrixXd gram = Phi * Phi.transpose();
            gram.diagonal().array() += tau;
            const Eigen::LLT<Eigen::MatrixXd> llt(gram);
            if (llt.info() != Eigen::Success) {
                throw std::runtime_error("gp_posterior: ridge Gram matrix is not positive definite");
            }
            Sigma.noalias() -= Phi.transpose() * llt.solve(Phi);
        }
    } else {
        Eigen::MatrixXd precision = Phi.transpose() * Phi / tau;
        precision.diagonal().array() += 1.0;
        const Eigen::LLT<Eigen::MatrixXd> llt(precision);
        if (llt.info() != Eigen::Success) {
            throw std::runtime_error("gp_posterior: precision matrix is not positive definite");
        }
        Sigma = llt.solve(Eigen::MatrixXd::Identity(D, D));
    }
    return 0.5 * (Sigma + Sigma.transpose());
}

GpPrediction gp_predict(const Eigen::VectorXd &h, const GpHead &head) {
    if (!head.Sigma) {
        throw std::logic_error("gp_predict: posterior covariance has not been computed");
    }
    const Eigen::VectorXd phi = rff_features(h, head);
    const double sigma2 = phi.dot(*head.Sigma * phi);
    return {phi.dot(head.beta), std::max(0.0, sigma2)};
}

JetBatch gp_forward_jets(const GpHead &head, const JetBatch &hidden, GpJetCache *cache) {
    if (hidden.dim() != head.hidden_dim()) {
        throw std::invalid_argument("gp_forward_jets: hidden dimension mismatch");
    }
    JetBatch pre(head.features(), hidden.points(), hidden.dirs());
    pre.data().noalias() = std::sqrt(2.0 * head.gamma) * (head.W_L * hidden.data());
    pre.value().colwise() += head.b_L;
    JetBatch features = jet_map(pre, cos_derivs);
    features.data() *= std::sqrt(2.0 / head.features());
    JetBatch out(1, hidden.points(), hidden.dirs());
    out.data().noalias() = head.beta.transpose() * features.data();
    if (cache != nullptr) {
        cache->pre = std::move(pre);
        cache->features = std::move(features);
    }
    return out;
}

JetBatch gp_backward_jets(const GpHead &head, const JetBatch &g_out, const GpJetCache &cache,
                          std::span<double> grad_beta) {
    if (grad_beta.size() != static_cast<std::size_t>(head.features())) {
        throw std::invalid_argument("gp_backward_jets: gradient slice has the wrong size");
    }
    Eigen::Map<Eigen::VectorXd> gb(grad_beta.data(), head.features());
    gb.noalias() += cache.features.data() * g_out.data().transpose();
    JetBatch g_features(head.features(), g_out.points(), g_out.dirs());
    g_features.data().noalias() = head.beta * g_out.data();
    g_features.data() *= std::sqrt(2.0 / head.features());
    const JetBatch g_pre = jet_map_adjoint(cache.pre, g_features, cos_derivs);
    JetBatch g_hidden(head.hidden_dim(), g_out.points(), g_out.dirs());
    g_hidden.data().noalias() = std::sqrt(2.0 * head.gamma) * (head.W_L.transpose() * g_pre.data());
    return g_hidden;
}

}  // namespace orthospinn
