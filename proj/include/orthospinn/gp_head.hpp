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

// Random-Fourier-feature Gaussian-process output head.

#pragma once

#include "orthospinn/jets.hpp"

#include <Eigen/Dense>

#include <optional>
#include <random>
#include <span>

namespace orthospinn {

struct GpHead {
    Eigen::MatrixXd W_L;  // D_L x d_hidden, standard normal, frozen
    Eigen::VectorXd b_L;  // uniform on [0, 2 pi), frozen
    double gamma = 0.05;
    Eigen::VectorXd beta;  // learnable output weights
    std::optional<Eigen::MatrixXd> Sigma;

    static GpHead create(int d_hidden, int features, double gamma, std::mt19937_64 &rng);

    int features() const { return static_cast<int>(W_L.rows()); }
    int hidden_dim() const { return static_cast<int>(W_L.cols()); }
};

/// sqrt(2/D) cos(sqrt(2 gamma) W_L h + b_L).
Eigen::VectorXd rff_features(const Eigen::VectorXd &h, const GpHead &head);

/// Feature table with one row per column of H (d_hidden x N) -> N x D_L.
Eigen::MatrixXd rff_feature_table(const Eigen::MatrixXd &H, const GpHead &head);

enum class PosteriorSolver {
    automatic,  // kernel form when N < D_L, else feature form
    kernel,     // I - Phi^T (Phi Phi^T + tau I)^{-1} Phi
    feature,    // (I + Phi^T Phi / tau)^{-1}
};

/// Posterior covariance of the output weights.
Eigen::MatrixXd gp_posterior(const Eigen::MatrixXd &Phi, double tau, PosteriorSolver solver = PosteriorSolver::automatic);

struct GpPrediction {
    double mu;
    double sigma2;
};

/// Throws std::logic_error if the posterior has not been computed.
GpPrediction gp_predict(const Eigen::VectorXd &h, const GpHead &head);

struct GpJetCache {
    JetBatch pre;       // sqrt(2 gamma) W_L h + b_L
    JetBatch features;  // sqrt(2/D) cos(pre)
};

/// Mean output on jets: one row.
JetBatch gp_forward_jets(const GpHead &head, const JetBatch &hidden, GpJetCache *cache);

/// Accumulates d/d beta into `grad_beta` and returns the hidden adjoint.
JetBatch gp_backward_jets(const GpHead &head, const JetBatch &g_out, const GpJetCache &cache,
                          std::span<double> grad_beta);

}  // namespace orthospinn
