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

#include "orthospinn/ortho_layer.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

namespace orthospinn {
namespace {

using testing::uniform_vector;
using testing::unit_vector;

constexpr double kPi = std::numbers::pi;

PyramidLayer random_layer(int d_in, int d_out, InputKind kind, Activation act, std::mt19937_64 &rng) {
    PyramidLayer layer = PyramidLayer::create(d_in, d_out, kind, act, rng);
    layer.thetas = uniform_vector(rng, layer.thetas.size(), -kPi, kPi);
    layer.bias = uniform_vector(rng, layer.bias.size(), -0.5, 0.5);
    return layer;
}

TEST(PreprocessInput, ZeroInputLoadsSlackOnly) {
    const Eigen::VectorXd p = preprocess_input(Eigen::Vector3d::Zero());
    ASSERT_EQ(p.size(), 4);
    EXPECT_EQ(p, Eigen::Vector4d(0, 0, 0, 1));
}

TEST(PreprocessInput, SaturatedInputHasZeroSlack) {
    const Eigen::VectorXd p = preprocess_input(Eigen::Vector3d(1.0, -1.0, 1.0));
    EXPECT_NEAR(p[3], 0.0, 1e-15);
    EXPECT_NEAR(p.norm(), 1.0, 1e-15);
}

TEST(PreprocessInput, AlwaysUnitNorm) {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 200; ++trial) {
        const Eigen::VectorXd h = uniform_vector(rng, 1 + trial % 30);
        ASSERT_NEAR(preprocess_input(h).norm(), 1.0, 1e-12);
        ASSERT_NEAR(preprocess_input(3.0 * h, 3.0).norm(), 1.0, 1e-12);
    }
}

TEST(PreprocessInput, RejectsInputBeyondBound) {
    EXPECT_THROW(preprocess_input(Eigen::Vector2d(2.0, 2.0)), std::domain_error);
}

TEST(FirstLayerEncode, KnownValues) {
    EXPECT_NEAR((first_layer_encode(0.0) - Eigen::Vector2d(0, 1)).norm(), 0.0, 1e-15);
    EXPECT_NEAR((first_layer_encode(kPi / 2) - Eigen::Vector2d(1, 0)).norm(), 0.0, 1e-15);
}

TEST(AnglesToMatrix, TwoWireRotation) {
    const double t = 0.37;
    const Eigen::MatrixXd W = angles_to_matrix(2, pyramid_gate_sequence(2), Eigen::VectorXd::Constant(1, t));
    Eigen::Matrix2d expected;
    expected << std::cos(t), std::sin(t), -std::sin(t), std::cos(t);
    EXPECT_LT((W - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(AnglesToMatrix, OrthogonalForRandomAngles) {
    std::mt19937_64 rng(6);
    for (int n = 2; n <= 64; n += 3) {
        const auto gates = pyramid_gate_sequence(n);
        const Eigen::MatrixXd W =
            angles_to_matrix(n, gates, uniform_vector(rng, static_cast<Eigen::Index>(gates.size()), -kPi, kPi));
        ASSERT_LT(orthogonality_defect(W), 1e-9) << n;
    }
}

TEST(LayerForward, IdentityLayerExample) {
    std::mt19937_64 rng(0);
    PyramidLayer layer = PyramidLayer::create(2, 2, InputKind::raw, Activation::identity, rng);
    layer.thetas.setZero();
    const Eigen::VectorXd y = layer_forward(layer, Eigen::Vector2d(0.6, 0.0)).output;
    ASSERT_EQ(y.size(), 2);
    EXPECT_NEAR(y[0], 0.6 / std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(y[1], 0.0, 1e-15);
}

TEST(LayerForward, WiresCoverInputAndOutput) {
    std::mt19937_64 rng(0);
    EXPECT_EQ(PyramidLayer::create(3, 8, InputKind::raw, Activation::tanh, rng).wires, 8);
    EXPECT_EQ(PyramidLayer::create(8, 3, InputKind::raw, Activation::tanh, rng).wires, 9);
    EXPECT_EQ(PyramidLayer::create(2, 5, InputKind::unit, Activation::tanh, rng).wires, 5);
}

TEST(LayerForward, MatrixAndExactCircuitAgree) {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 40; ++trial) {
        const PyramidLayer layer = random_layer(1 + trial % 17, 1 + (trial * 7) % 19, InputKind::raw, Activation::tanh, rng);
        const Eigen::VectorXd h = uniform_vector(rng, layer.d_in);
        const auto a = layer_forward(layer, h, ForwardMode::matrix()).output;
        const auto b = layer_forward(layer, h, ForwardMode::circuit_exact()).output;
        ASSERT_LT((a - b).cwiseAbs().maxCoeff(), 1e-9);
    }
}

TEST(LayerForward, SampledModeConvergesToMatrix) {
    std::mt19937_64 rng(13);
    const PyramidLayer layer = random_layer(4, 4, InputKind::raw, Activation::identity, rng);
    const Eigen::VectorXd h = uniform_vector(rng, 4);
    std::mt19937_64 shots_rng(1);
    const auto exact = layer_forward(layer, h).output;
    const auto sampled = layer_forward(layer, h, ForwardMode::circuit_sampled(1000000, shots_rng)).output;
    EXPECT_LT((exact - sampled).cwiseAbs().maxCoeff(), 5e-3);
}

TEST(LayerForward, LayerIsOneLipschitzForTanh) {
    std::mt19937_64 rng(14);
    const PyramidLayer layer = random_layer(6, 6, InputKind::unit, Activation::tanh, rng);
    for (int trial = 0; trial < 200; ++trial) {
        const Eigen::VectorXd a = unit_vector(rng, 6);
        const Eigen::VectorXd b = unit_vector(rng, 6);
        const double out = (layer_forward(layer, a).output - layer_forward(layer, b).output).norm();
        ASSERT_LE(out, (a - b).norm() * (1.0 + 1e-12));
    }
}

TEST(LayerBackward, ZeroAdjointGivesZeroGradients) {
    std::mt19937_64 rng(1);
    const PyramidLayer layer = random_layer(5, 4, InputKind::raw, Activation::tanh, rng);
    const auto fwd = layer_forward(layer, uniform_vector(rng, 5));
    const LayerGradients g = layer_backward(layer, fwd.tape, Eigen::VectorXd::Zero(4));
    EXPECT_EQ(g.theta_grad.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(g.bias_grad.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(g.input_adjoint.cwiseAbs().maxCoeff(), 0.0);
}

TEST(LayerBackward, TwoWireAnalytic) {
    // Unit input (cos a, sin a) through one gate gives y0 = cos(a - t), so dy0/dt = sin(a - t).
    std::mt19937_64 rng(0);
    PyramidLayer layer = PyramidLayer::create(2, 2, InputKind::unit, Activation::identity, rng);
    const double a = 0.8;
    const double t = 0.3;
    layer.thetas[0] = t;
    const auto fwd = layer_forward(layer, Eigen::Vector2d(std::cos(a), std::sin(a)));
    EXPECT_NEAR(fwd.output[0], std::cos(a - t), 1e-15);
    const auto g = layer_backward(layer, fwd.tape, Eigen::Vector2d(1.0, 0.0));
    EXPECT_NEAR(g.theta_grad[0], std::sin(a - t), 1e-14);
    EXPECT_NEAR(g.bias_grad[0], 1.0, 1e-15);
}

TEST(LayerBackward, MatchesFiniteDifferences) {
    std::mt19937_64 rng(7);
    for (const InputKind kind : {InputKind::raw, InputKind::unit}) {
        const int n = 12;
        const PyramidLayer layer = random_layer(kind == InputKind::raw ? 11 : n, n, kind, Activation::tanh, rng);
        const Eigen::VectorXd h =
            kind == InputKind::raw ? Eigen::VectorXd(uniform_vector(rng, 11)) : Eigen::VectorXd(unit_vector(rng, n));
        const Eigen::VectorXd w = uniform_vector(rng, n);
        const auto loss = [&](const PyramidLayer &l) { return w.dot(layer_forward(l, h).output); };
        const auto g = layer_backward(layer, layer_forward(layer, h).tape, w);
        const double eps = 1e-6;
        for (Eigen::Index k = 0; k < layer.thetas.size(); ++k) {
            PyramidLayer plus = layer, minus = layer;
            plus.thetas[k] += eps;
            minus.thetas[k] -= eps;
            ASSERT_NEAR(g.theta_grad[k], (loss(plus) - loss(minus)) / (2 * eps), 1e-5) << k;
        }
        for (Eigen::Index k = 0; k < layer.bias.size(); ++k) {
            PyramidLayer plus = layer, minus = layer;
            plus.bias[k] += eps;
            minus.bias[k] -= eps;
            ASSERT_NEAR(g.bias_grad[k], (loss(plus) - loss(minus)) / (2 * eps), 1e-5) << k;
        }
        if (kind == InputKind::raw) {
            for (Eigen::Index k = 0; k < h.size(); ++k) {
                Eigen::VectorXd hp = h, hm = h;
                hp[k] += eps;
                hm[k] -= eps;
                const double fd = (w.dot(layer_forward(layer, hp).output) - w.dot(layer_forward(layer, hm).output)) / (2 * eps);
                ASSERT_NEAR(g.input_adjoint[k], fd, 1e-5) << k;
            }
        }
    }
}

TEST(LayerBackward, MatrixAdjointRouteMatchesGateSweep) {
    std::mt19937_64 rng(9);
    const int n = 9;
    const auto gates = pyramid_gate_sequence(n);
    const Eigen::VectorXd thetas = uniform_vector(rng, static_cast<Eigen::Index>(gates.size()), -kPi, kPi);
    const Eigen::VectorXd x = unit_vector(rng, n);
    const Eigen::VectorXd w = uniform_vector(rng, n);
    const Eigen::MatrixXd W = angles_to_matrix(n, gates, thetas);
    // L = w^T W x, so dL/dW = w x^T.
    const Eigen::VectorXd via_matrix = angle_gradient_from_matrix_adjoint(gates, thetas, W, w * x.transpose());
    const double eps = 1e-6;
    for (Eigen::Index k = 0; k < thetas.size(); ++k) {
        Eigen::VectorXd tp = thetas, tm = thetas;
        tp[k] += eps;
        tm[k] -= eps;
        const double fd = (w.dot(angles_to_matrix(n, gates, tp) * x) - w.dot(angles_to_matrix(n, gates, tm) * x)) / (2 * eps);
        ASSERT_NEAR(via_matrix[k], fd, 1e-6) << k;
    }
}

TEST(OrthoJets, ValuesMatchPointwiseForward) {
    std::mt19937_64 rng(10);
    const PyramidLayer layer = random_layer(5, 7, InputKind::raw, Activation::tanh, rng);
    JetBatch in(5, 6, 1);
    in.set_zero();
    in.value() = Eigen::MatrixXd::Random(5, 6) * 0.9;
    const JetBatch out = ortho_forward_jets(layer, in, nullptr);
    for (Eigen::Index p = 0; p < 6; ++p) {
        const Eigen::VectorXd ref = layer_forward(layer, in.value().col(p)).output;
        ASSERT_LT((out.value().col(p) - ref).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(PyramidLayer, PackUnpackRoundTrip) {
    std::mt19937_64 rng(2);
    const PyramidLayer layer = random_layer(4, 6, InputKind::raw, Activation::tanh, rng);
    std::vector<double> buf(layer.param_count());
    layer.pack(buf);
    PyramidLayer copy = PyramidLayer::create(4, 6, InputKind::raw, Activation::tanh, rng);
    copy.unpack(buf);
    EXPECT_EQ(copy.thetas, layer.thetas);
    EXPECT_EQ(copy.bias, layer.bias);
}

TEST(PyramidLayer, InitialAnglesAreSmall) {
    std::mt19937_64 rng(3);
    const PyramidLayer layer = PyramidLayer::create(10, 10, InputKind::raw, Activation::tanh, rng);
    EXPECT_LE(layer.thetas.cwiseAbs().maxCoeff(), kPi / (2 * layer.wires));
    EXPECT_EQ(layer.bias.cwiseAbs().maxCoeff(), 0.0);
}

}  // namespace
}  // namespace orthospinn
