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

#pragma once

#include "orthospinn/jets.hpp"
#include "orthospinn/unary_sim.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace orthospinn {

enum class Activation { tanh, identity };

/// How a layer turns its input into a unit vector on the wires.
///   raw:  preprocess_input (scale by bound*sqrt(d), append the slack component)
///   unit: the input is already a unit vector (first layer, sin/cos encoding)
enum class InputKind { raw, unit };

/// Evaluation path for the orthogonal transform.
struct ForwardMode {
    enum class Kind { matrix, circuit_exact, circuit_sampled };

    Kind kind = Kind::matrix;
    std::uint64_t shots = 0;
    std::mt19937_64 *rng = nullptr;

    static ForwardMode matrix() { return {}; }
    static ForwardMode circuit_exact() { return {Kind::circuit_exact, 0, nullptr}; }
    static ForwardMode circuit_sampled(std::uint64_t shots, std::mt19937_64 &rng) {
        return {Kind::circuit_sampled, shots, &rng};
    }
};

/// Angle-parameterized orthogonal layer: y = act(trunc(W(theta) p(h)) + bias).
struct PyramidLayer {
    int wires = 0;
    int d_in = 0;
    int d_out = 0;
    InputKind input_kind = InputKind::raw;
    /// Bound on |h_i| assumed by preprocessing (1 for tanh inputs).
    double input_bound = 1.0;
    Activation activation = Activation::tanh;
    std::vector<WirePair> gates;
    Eigen::VectorXd thetas;
    Eigen::VectorXd bias;

    /// Angles uniform on [-pi/(2n), pi/(2n)], zero bias.
    static PyramidLayer create(int d_in, int d_out, InputKind kind, Activation act, std::mt19937_64 &rng,
                               double input_bound = 1.0);

    /// Length of the vector actually loaded on the wires before padding.
    int loaded_dim() const { return input_kind == InputKind::raw ? d_in + 1 : d_in; }
    std::size_t param_count() const { return static_cast<std::size_t>(thetas.size() + bias.size()); }
    void pack(std::span<double> out) const;
    void unpack(std::span<const double> in);
};

/// [h / (bound sqrt(d)), sqrt(1 - sum h^2 / (bound^2 d))]. Throws
/// std::domain_error if sum h^2 exceeds bound^2 d.
Eigen::VectorXd preprocess_input(const Eigen::VectorXd &h, double bound = 1.0);

/// [sin x, cos x].
Eigen::Vector2d first_layer_encode(double x);

/// W = G_T ... G_1; column k is the circuit run on e_k.
Eigen::MatrixXd angles_to_matrix(const PyramidLayer &layer);
Eigen::MatrixXd angles_to_matrix(int wires, const std::vector<WirePair> &gates, const Eigen::VectorXd &thetas);

struct LayerTape {
    Eigen::VectorXd input;
    Eigen::VectorXd loaded;                     // unit vector on the wires (padded)
    std::vector<std::array<double, 2>> gate_inputs;  // (a_lo, a_hi) before each gate
    Eigen::VectorXd pre_activation;
};

struct LayerOutput {
    Eigen::VectorXd output;
    LayerTape tape;
};

LayerOutput layer_forward(const PyramidLayer &layer, const Eigen::VectorXd &h, const ForwardMode &mode = {});

struct LayerGradients {
    Eigen::VectorXd input_adjoint;
    Eigen::VectorXd theta_grad;
    Eigen::VectorXd bias_grad;
};

/// Reverse sweep through the gate list, O(1) work per gate.
LayerGradients layer_backward(const PyramidLayer &layer, const LayerTape &tape, const Eigen::VectorXd &adjoint);

/// dL/dtheta from dL/dW for W = G_T ... G_1, via the conjugated sweep
/// F <- G_t^T F G_t starting at F = (dL/dW) W^T; O(n) per gate.
Eigen::VectorXd angle_gradient_from_matrix_adjoint(const std::vector<WirePair> &gates, const Eigen::VectorXd &thetas,
                                                   const Eigen::MatrixXd &W, const Eigen::MatrixXd &dW);

/// Cached quantities of a batched jet forward pass.
struct OrthoJetCache {
    JetBatch input;
    JetBatch slack_arg;  // 1 - sum h^2/(b^2 d), one row
    JetBatch loaded;     // loaded_dim rows
    JetBatch pre_activation;
    Eigen::MatrixXd W;
};

/// Batched matrix-mode forward on jets. `cache` may be null.
JetBatch ortho_forward_jets(const PyramidLayer &layer, const JetBatch &in, OrthoJetCache *cache);

/// Adjoint of ortho_forward_jets. Accumulates into `grad` (thetas then bias)
/// and returns the adjoint of the input.
JetBatch ortho_backward_jets(const PyramidLayer &layer, const JetBatch &g_out, const OrthoJetCache &cache,
                             std::span<double> grad);

/// Orthogonality defect max |W^T W - I|.
double orthogonality_defect(const Eigen::MatrixXd &W);

}  // namespace orthospinn
