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

// Physics-informed loss, Adam, and the training loop.

#pragma once

#include "orthospinn/pde_suite.hpp"
#include "orthospinn/spinn_model.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <vector>

namespace orthospinn {

struct LossWeights {
    double residual = 1.0;
    double ic = 10.0;
    double bc = 10.0;
    double data = 10.0;
};

/// Per-axis collocation lists plus the constraint sets built on them.
struct TrainingSet {
    std::vector<Eigen::VectorXd> colloc;
    std::vector<Constraint> constraints;

    /// Residual grid points plus constraint points.
    Eigen::Index point_count() const;
};

/// `per_axis` uniform random points on every axis of the problem domain.
TrainingSet sample_training_set(const PdeProblem &problem, Eigen::Index per_axis, Eigen::Index constraint_axis_cap,
                                std::mt19937_64 &rng);

struct LossBreakdown {
    double total = 0.0;
    double residual = 0.0;
    double ic = 0.0;
    double bc = 0.0;
    double data = 0.0;
    double penalty = 0.0;
};

struct LossOptions {
    LossWeights weights;
    /// Use the factorized mean square for linear residuals when available.
    bool factorized_residual = true;
    /// Coefficient c of the penalty c |beta_gp|^2 on GP output weights.
    double output_penalty = 0.0;
    DropoutContext dropout;
};

struct LossEvaluation {
    LossBreakdown parts;
    Eigen::VectorXd grad;     // model parameters, pack order
    double grad_param = 0.0;  // learnable physical parameter
};

/// Weighted loss and its gradient. `param` is the physical parameter value.
LossEvaluation assemble_loss(const SpinnModel &model, const PdeProblem &problem, const TrainingSet &set, double param,
                             const LossOptions &options);

/// Mean over the grid of (sum_t c_t d^{o_t} u / dx_{a_t}^{o_t})^2 for a
/// product-sum model without materializing the grid: the residual is itself
/// a CP tensor, so its squared norm is 1^T (hadamard_j G_j^T G_j) 1.
/// Accumulates `weight` times the gradient into `grad`.
double linear_residual_mean_square(const SpinnModel &model, const std::vector<Eigen::VectorXd> &axes,
                                   const std::vector<LinearTerm> &terms, double weight, std::span<double> grad);

struct AdamState {
    Eigen::VectorXd m;
    Eigen::VectorXd v;
    std::int64_t step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    static AdamState zeros(Eigen::Index size) {
        return {Eigen::VectorXd::Zero(size), Eigen::VectorXd::Zero(size), 0};
    }
};

/// Bias-corrected Adam update in place.
void adam_step(Eigen::VectorXd &params, const Eigen::VectorXd &grads, AdamState &state, double lr);

struct TrainConfig {
    double lr = 5e-3;
    int epochs = 20000;
    LossWeights weights;
    Eigen::Index collocation_total = 250;  // split evenly over axes
    int resample_every = 100;
    Eigen::Index constraint_axis_cap = 0;
    std::uint64_t seed = 0;
    int log_every = 100;
    Eigen::Index eval_points_per_axis = 101;
    bool factorized_residual = true;
    double gp_ridge = 1.0;
    bool dropout = false;  // train with dropout masks active
    /// Return the iterate with the lowest training loss seen instead of the last one.
    bool keep_best = true;
};

struct HistoryRow {
    int epoch = 0;
    LossBreakdown loss;
    double param = 0.0;
    double eval_mse = 0.0;
};

struct ParamEstimate {
    double value = 0.0;
    std::vector<double> trace;  // one entry per epoch
};

struct Evaluation {
    double mse = 0.0;
    double max_error = 0.0;
};

struct TrainResult {
    std::vector<HistoryRow> history;
    Evaluation final_eval;
    std::optional<ParamEstimate> param;
    TrainingSet last_set;
    int best_epoch = -1;  // epoch of the returned iterate when keep_best is set
};

/// Errors against the problem reference on an evenly spaced grid.
Evaluation evaluate_against_reference(const SpinnModel &model, const PdeProblem &problem, Eigen::Index per_axis,
                                      const ForwardMode &mode = {});

/// Trains in matrix mode. Throws std::runtime_error on a non-finite loss.
TrainResult train(SpinnModel &model, const PdeProblem &problem, const TrainConfig &config,
                  const std::function<void(const HistoryRow &)> &on_log = {});

}  // namespace orthospinn
