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

// Layer kinds that appear in subnets and trunks, and a stack that runs them
// on jet batches with a reverse pass.

#pragma once

#include "orthospinn/jets.hpp"
#include "orthospinn/ortho_layer.hpp"

#include <Eigen/Dense>

#include <random>
#include <span>
#include <variant>
#include <vector>

namespace orthospinn {

/// Unconstrained affine layer, y = act(W x + b), with optional unit dropout
/// applied to the output (inverted scaling).
struct DenseLayer {
    Eigen::MatrixXd W;
    Eigen::VectorXd b;
    Activation activation = Activation::tanh;
    double dropout = 0.0;

    /// Glorot-uniform weights, zero bias.
    static DenseLayer create(int d_in, int d_out, Activation act, std::mt19937_64 &rng);

    int d_in() const { return static_cast<int>(W.cols()); }
    int d_out() const { return static_cast<int>(W.rows()); }
    std::size_t param_count() const { return static_cast<std::size_t>(W.size() + b.size()); }
    void pack(std::span<double> out) const;
    void unpack(std::span<const double> in);
};

/// x + tanh(trunc(W p(x)) + bias) with a square orthogonal inner layer.
struct ResBlock {
    PyramidLayer inner;

    static ResBlock create(int d, std::mt19937_64 &rng, double input_bound = 1.0);

    int dim() const { return inner.d_in; }
};

using Layer = std::variant<PyramidLayer, DenseLayer, ResBlock>;

int layer_d_in(const Layer &layer);
int layer_d_out(const Layer &layer);
std::size_t layer_param_count(const Layer &layer);
void pack_layer(const Layer &layer, std::span<double> out);
void unpack_layer(Layer &layer, std::span<const double> in);

std::size_t stack_param_count(const std::vector<Layer> &layers);
void pack_stack(const std::vector<Layer> &layers, std::span<double> out);
void unpack_stack(std::vector<Layer> &layers, std::span<const double> in);

/// Dropout is active only when a generator is supplied.
struct DropoutContext {
    std::mt19937_64 *rng = nullptr;
};

struct LayerCache {
    OrthoJetCache ortho;
    JetBatch input;
    JetBatch pre_activation;
    Eigen::VectorXd mask;  // empty when dropout was inactive
};

struct StackCache {
    std::vector<LayerCache> layers;
};

/// Runs every layer on a jet batch. `cache` may be null.
JetBatch stack_forward_jets(const std::vector<Layer> &layers, const JetBatch &in, StackCache *cache,
                            const DropoutContext &dropout = {});

/// Reverse pass. Accumulates parameter gradients into `grad` (laid out as
/// pack_stack) and returns the adjoint of the input.
JetBatch stack_backward_jets(const std::vector<Layer> &layers, const JetBatch &g_out, const StackCache &cache,
                             std::span<double> grad);

/// Plain vector forward; orthogonal layers honor `mode` (circuit paths).
Eigen::VectorXd stack_forward(const std::vector<Layer> &layers, const Eigen::VectorXd &in,
                              const ForwardMode &mode = {}, const DropoutContext &dropout = {});

}  // namespace orthospinn
