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

// Uncertainty quantification: residual orthogonal subnets concatenated into
// a trunk with a random-feature GP head, and an MC-dropout baseline.

#pragma once

#include "orthospinn/pde_suite.hpp"
#include "orthospinn/spinn_model.hpp"
#include "orthospinn/trainer.hpp"

#include <Eigen/Dense>

#include <random>
#include <string>
#include <vector>

namespace orthospinn {

/// Subnets: an orthogonal layer on the sin/cos encoding followed by residual
/// blocks (a width change inserts a plain orthogonal layer). The trunk
/// follows the same rule on the concatenated subnet outputs and feeds a GP
/// head. Requires a trunk in `arch`.
SpinnModel build_qo_uq_model(const Architecture &arch, const std::vector<Interval> &domain, int gp_features,
                             double gamma, std::mt19937_64 &rng);

/// Dense concatenation network with dropout `p_drop` on every hidden layer
/// and a final linear output.
SpinnModel build_dropout_baseline(const Architecture &arch, const std::vector<Interval> &domain, double p_drop,
                                  std::mt19937_64 &rng);

/// Pearson correlation of sigma and error; 0 if either variance < 1e-30.
double eac(const Eigen::VectorXd &sigmas, const Eigen::VectorXd &errors);

/// Hidden features of every residual and constraint point of a training set.
Eigen::MatrixXd training_features(const SpinnModel &model, const TrainingSet &set);

/// Computes and stores the posterior covariance of the GP output weights.
void fit_gp_posterior(SpinnModel &model, const TrainingSet &set, double tau,
                      PosteriorSolver solver = PosteriorSolver::automatic);

struct UqPrediction {
    Eigen::VectorXd mu;
    Eigen::VectorXd sigma;
};

/// GP mean and standard deviation at every point of a layout.
UqPrediction gp_predict_layout(const SpinnModel &model, const SampleLayout &layout);

/// Sample mean and standard deviation over `passes` stochastic forwards,
/// with every hidden dense layer's dropout rate set to `p_drop`.
/// Throws std::invalid_argument for passes < 2.
UqPrediction mc_dropout_predict(const SpinnModel &baseline, const SampleLayout &layout, int passes, double p_drop,
                                std::mt19937_64 &rng);

struct UqSlice {
    double t = 0.0;
    double mse = 0.0;
    double max_error = 0.0;
    double eac = 0.0;
};

struct UqReport {
    std::string method;
    Eigen::VectorXd x;
    std::vector<double> times;
    Eigen::MatrixXd mu;  // x by time
    Eigen::MatrixXd sigma;
    Eigen::MatrixXd reference;
    std::vector<UqSlice> slices;
};

/// Scores a prediction on the slices t = times[k] of an (x, t) problem.
UqReport score_slices(const std::string &method, const PdeProblem &problem, const Eigen::VectorXd &x,
                      const std::vector<double> &times, const UqPrediction &prediction);

}  // namespace orthospinn
