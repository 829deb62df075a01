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

// Lipschitz bounds for separable models: sampled ingredients, the general
// and orthogonal product bounds, and empirical checks.

#pragma once

#include "orthospinn/spinn_model.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

namespace orthospinn {

/// Largest singular value by power iteration on A^T A from a fixed seeded
/// start vector. Returns 0 for a zero matrix.
double spectral_norm(const Eigen::MatrixXd &A, int iters = 1000);

struct BoundIngredients {
    double M = 0.0;  // 1.05 * sampled max |phi(x)|_inf
    double L = 0.0;  // sampled max |phi(a) - phi(b)| / |a - b|
};

/// Sampled suprema over the subnet's domain. Each sample contributes its
/// value, its derivative norm, a finite-difference probe and a quotient
/// against the previous sample, so more samples never lower the estimates.
BoundIngredients estimate_bound_ingredients(const Subnet &subnet, int samples, std::mt19937_64 &rng);

/// r * (prod M_k) * sqrt(sum (L_k / M_k)^2). Throws for M_k <= 0.
double product_sum_bound(int rank, std::span<const double> M, std::span<const double> L);

/// Sup over samples of the Lipschitz constant of the input preprocessing of
/// a raw orthogonal layer, 1 / (b sqrt(d (1 - q))) with q = |h|^2 / (b^2 d),
/// given the layer inputs as columns.
double preprocess_gain(const PyramidLayer &layer, const Eigen::MatrixXd &inputs);

/// Structural Lipschitz factors of one subnet.
struct SubnetLipschitz {
    double encoder_scale = 0.0;  // slope of the affine input map
    double orthogonal_gain = 1.0;  // product over orthogonal parts, each max(1, measured gain)
    double final_norm = 1.0;     // product of dense-layer spectral norms
    double L_orthogonal() const { return encoder_scale * orthogonal_gain * final_norm; }
};

/// Orthogonal layers count as 1-Lipschitz unless the measured preprocessing
/// gain over `samples` domain points exceeds 1; a residual block counts as
/// 1 + its inner gain; dense layers contribute their spectral norms.
SubnetLipschitz subnet_lipschitz(const Subnet &subnet, int samples);

struct EmpiricalCheck {
    double max_ratio = 0.0;
    bool pass = false;
};

/// Max |u(x) - u(y)| / |x - y| over `pairs` pairs, half drawn independently
/// and half as close neighbours, against `bound`.
EmpiricalCheck empirical_lipschitz_check(const SpinnModel &model, double bound, long pairs, std::mt19937_64 &rng);

struct StackingBounds {
    double m = 0.0;
    double M = 0.0;
};

/// (min m_i, max M_i). Throws if some m_i > M_i or the lists differ in size.
StackingBounds stacking_bounds(std::span<const double> m, std::span<const double> M);

struct StackingCheck {
    double min_ratio = 0.0;
    double max_ratio = 0.0;
    bool pass = false;
};

/// Samples |S(x) - S(y)| / |x - y| for the stacking map S(x) = [g_1(x_1); ...]
/// and checks it lies in [m, M] up to 1e-12 relative.
StackingCheck stacking_check(const std::vector<std::function<Eigen::VectorXd(double)>> &maps,
                             const std::vector<Interval> &domain, const StackingBounds &bounds, long pairs,
                             std::mt19937_64 &rng);

struct LayerAudit {
    int layers = 0;
    double max_ratio = 0.0;              // |layer(h1) - layer(h2)| / |p(h1) - p(h2)|
    double max_spectral_deviation = 0.0;  // |spectral_norm(W) - 1|
};

/// Checks every orthogonal transform of a model (including residual block
/// internals) on `pairs` random input pairs per layer.
LayerAudit audit_orthogonal_layers(const SpinnModel &model, int pairs, std::mt19937_64 &rng);

struct SubnetBoundRow {
    BoundIngredients ingredients;
    SubnetLipschitz structure;
};

struct BoundReport {
    int rank = 0;
    std::vector<SubnetBoundRow> subnets;
    double sampled_bound = 0.0;
    double structural_bound = 0.0;
    double empirical_max_ratio = 0.0;
    int samples = 0;
    long pairs = 0;
    LayerAudit layers;

    bool bound_holds() const { return empirical_max_ratio <= structural_bound; }
};

/// Full report for a product-sum model.
BoundReport lipschitz_report(const SpinnModel &model, int samples, long pairs, int layer_pairs, std::uint64_t seed);

}  // namespace orthospinn
