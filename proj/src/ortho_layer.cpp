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

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <fmt/format.h>

namespace orthospinn {

namespace {

// Floor for the slack component argument; keeps sqrt derivatives finite when
// every input saturates.
constexpr double kSlackFloor = 1e-12;

double activate(Activation act, double z) { return act == Activation::tanh ? std::tanh(z) : z; }

double activate_slope(Activation act, double z) {
    if (act == Activation::identity) {
        return 1.0;
    }
    const double t = std::tanh(z);
    return 1.0 - t * t;
}

}  // namespace

PyramidLayer PyramidLayer::create(int d_in, int d_out, InputKind kind, Activation act, std::mt19937_64 &rng,
                                  double input_bound) {
    if (d_in < 1 || d_out < 1) {
        throw std::invalid_argument(fmt::format("PyramidLayer: invalid dimensions {} -> {}", d_in, d_out));
    }
    if (input_bound <= 0.0) {
        throw std::invalid_argument("PyramidLayer: input bound must be positive");
    }
    PyramidLayer layer;
    layer.d_in = d_in;
    layer.d_out = d_out;
    layer.input_kind = kind;
    layer.input_bound = input_bound;
    layer.activation = act;
    layer.wires = std::max({layer.loaded_dim(), d_out, 2});
    layer.gates = pyramid_gate_sequence(layer.wires);
    const double half_width = std::numbers::pi / (2.0 * layer.wires);
    std::uniform_real_distribution<double> angle(-half_width, half_width);
    layer.thetas.resize(static_cast<Eigen::Index>(layer.gates.size()));
    for (auto &t : layer.thetas) {
        t = angle(rng);
    }
    layer.bias = Eigen::VectorXd::Zero(d_out);
    return layer;
}

void PyramidLayer::pack(std::span<double> out) const {
    if (out.size() != param_count()) {
        throw std::invalid_argument("PyramidLayer::pack: size mismatch");
    }
    std::copy(thetas.begin(), thetas.end(), out.begin());
    std::copy(bias.begin(), bias.end(), out.begin() + thetas.size());
}

void PyramidLayer::unpack(std::span<const double> in) {
    if (in.size() != param_count()) {
        throw std::invalid_argument("PyramidLayer::unpack: size mismatch");
    }
    std::copy(in.begin(), in.begin() + thetas.size(), thetas.begin());
    std::copy(in.begin() + thetas.size(), in.end(), bias.begin());
}

Eigen::VectorXd preprocess_input(const Eigen::VectorXd &h, double bound) {
    const auto d = static_cast<double>(h.size());
    if (h.size() == 0) {
        throw std::invalid_argument("preprocess_input: empty input");
    }
    const double scale = 1.0 / (bound * std::sqrt(d));
    const double load = h.squaredNorm() * scale * scale;
    if (load > 1.0 + 1e-12) {
        throw std::domain_error(
            fmt::format("preprocess_input: sum of squares {} exceeds bound^2 d = {}", h.squaredNorm(), bound * bound * d));
    }
    Eigen::VectorXd p(h.size() + 1);
    p.head(h.size()) = h * scale;
    p[h.size()] = std::sqrt(std::max(0.0, 1.0 - load));
    return p;
}

Eigen::Vector2d first_layer_encode(double x) { return {std::sin(x), std::cos(x)}; }

Eigen::MatrixXd angles_to_matrix(int wires, const std::vector<WirePair> &gates, const Eigen::VectorXd &thetas) {
    Eigen::MatrixXd W = Eigen::MatrixXd::Identity(wires, wires);
    for (std::size_t t = 0; t < gates.size(); ++t) {
        const double c = std::cos(thetas[static_cast<Eigen::Index>(t)]);
        const double s = std::sin(thetas[static_cast<Eigen::Index>(t)]);
        const int i = gates[t].lo;
        const int j = gates[t].hi;
        // W <- G_t W touches rows i and j only.
        for (int k = 0; k < wires; ++k) {
            const double x = W(i, k);
            const double y = W(j, k);
            W(i, k) = c * x + s * y;
            W(j, k) = -s * x + c * y;
        }
    }
    return W;
}

Eigen::MatrixXd angles_to_matrix(const PyramidLayer &layer) {
    return angles_to_matrix(layer.wires, layer.gates, layer.thetas);
}

LayerOutput layer_forward(const PyramidLayer &layer, const Eigen::VectorXd &h, const ForwardMode &mode) {
    if (h.size() != layer.d_in) {
        throw std::invalid_argument(fmt::format("layer_forward: expected {} inputs, got {}", layer.d_in, h.size()));
    }
    LayerOutput out;
    LayerTape &tape = out.tape;
    tape.input = h;
    tape.loaded = Eigen::VectorXd::Zero(layer.wires);
    if (layer.input_kind == InputKind::raw) {
        tape.loaded.head(layer.loaded_dim()) = preprocess_input(h, layer.input_bound);
    } else {
        if (std::abs(h.norm() - 1.0) > 1e-9) {
            throw std::domain_error("layer_forward: encoded input must be a unit vector");
        }
        tape.loaded.head(layer.d_in) = h;
    }

    Eigen::VectorXd swept = tape.loaded;
    tape.gate_inputs.reserve(layer.gates.size());
    for (std::size_t t = 0; t < layer.gates.size(); ++t) {
        const auto [i, j] = layer.gates[t];
        tape.gate_inputs.push_back({swept[i], swept[j]});
        const double theta = layer.thetas[static_cast<Eigen::Index>(t)];
        rotate_pair(swept, i, j, std::cos(theta), std::sin(theta));
    }

    Eigen::VectorXd y;
    switch (mode.kind) {
        case ForwardMode::Kind::matrix:
            y = angles_to_matrix(layer) * tape.loaded;
            break;
        case ForwardMode::Kind::circuit_exact:
        case ForwardMode::Kind::circuit_sampled: {
            const UnaryState state = run_circuit(load_state(encode_angles(tape.loaded)), layer.gates, layer.thetas);
            std::optional<std::uint64_t> shots;
            if (mode.kind == ForwardMode::Kind::circuit_sampled) {
                shots = mode.shots;
            }
            y = tomography_from_state(state, shots, mode.rng).recovered;
            break;
        }
    }

    tape.pre_activation = y.head(layer.d_out) + layer.bias;
    out.output = tape.pre_activation.unaryExpr([&](double z) { return activate(layer.activation, z); });
    return out;
}

LayerGradients layer_backward(const PyramidLayer &layer, const LayerTape &tape, const Eigen::VectorXd &adjoint) {
    if (adjoint.size() != layer.d_out || tape.gate_inputs.size() != layer.gates.size() ||
        tape.pre_activation.size() != layer.d_out) {
        throw std::invalid_argument("layer_backward: tape does not match the layer");
    }
    LayerGradients g;
    g.bias_grad = adjoint.cwiseProduct(
        tape.pre_activation.unaryExpr([&](double z) { return activate_slope(layer.activation, z); }));
    g.theta_grad = Eigen::VectorXd::Zero(layer.thetas.size());

    Eigen::VectorXd delta = Eigen::VectorXd::Zero(layer.wires);
    delta.head(layer.d_out) = g.bias_grad;
    for (std::size_t t = layer.gates.size(); t-- > 0;) {
        const auto [i, j] = layer.gates[t];
        const auto [ai, aj] = tape.gate_inputs[t];
        const double theta = layer.thetas[static_cast<Eigen::Index>(t)];
        const double c = std::cos(theta);
        const double s = std::sin(theta);
        g.theta_grad[static_cast<Eigen::Index>(t)] = delta[i] * (-s * ai + c * aj) + delta[j] * (-c * ai - s * aj);
        const double di = delta[i];
        const double dj = delta[j];
        delta[i] = c * di - s * dj;
        delta[j] = s * di + c * dj;
    }

    if (layer.input_kind == InputKind::unit) {
        g.input_adjoint = delta.head(layer.d_in);
        return g;
    }
    const double d = static_cast<double>(layer.d_in);
    const double b = layer.input_bound;
    const double slack = std::max(tape.loaded[layer.d_in], std::sqrt(kSlackFloor));
    g.input_adjoint = delta.head(layer.d_in) / (b * std::sqrt(d)) -
                      tape.input * (delta[layer.d_in] / (b * b * d * slack));
    return g;
}

Eigen::VectorXd angle_gradient_from_matrix_adjoint(const std::vector<WirePair> &gates, const Eigen::VectorXd &thetas,
                                                   const Eigen::MatrixXd &W, const Eigen::MatrixXd &dW) {
    Eigen::MatrixXd F = dW * W.transpose();
    const auto n = F.rows();
    Eigen::VectorXd grad(thetas.size());
    for (std::size_t t = gates.size(); t-- > 0;) {
        const int i = gates[t].lo;
        const int j = gates[t].hi;
        grad[static_cast<Eigen::Index>(t)] = F(i, j) - F(j, i);
        const double c = std::cos(thetas[static_cast<Eigen::Index>(t)]);
        const double s = std::sin(thetas[static_cast<Eigen::Index>(t)]);
        for (Eigen::Index k = 0; k < n; ++k) {
            const double x = F(i, k);
            const double y = F(j, k);
            F(i, k) = c * x - s * y;
            F(j, k) = s * x + c * y;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
            const double x = F(k, i);
            const double y = F(k, j);
            F(k, i) = c * x - s * y;
            F(k, j) = s * x + c * y;
        }
    }
    return grad;
}

JetBatch ortho_forward_jets(const PyramidLayer &layer, const JetBatch &in, OrthoJetCache *cache) {
    if (in.dim() != layer.d_in) {
        throw std::invalid_argument(fmt::format("ortho_forward_jets: expected {} rows, got {}", layer.d_in, in.dim()));
    }
    const Eigen::Index P = in.points();
    const int dirs = in.dirs();
    const int L = layer.loaded_dim();

    JetBatch loaded(L, P, dirs);
    JetBatch slack_arg;
    if (layer.input_kind == InputKind::raw) {
        const double d = static_cast<double>(layer.d_in);
        const double b = layer.input_bound;
        const double k = 1.0 / (b * b * d);
        slack_arg = JetBatch(1, P, dirs);
        slack_arg.value() = (1.0 - k * in.value().colwise().squaredNorm().array()).matrix();
        for (int dir = 0; dir < dirs; ++dir) {
            slack_arg.d1(dir) = -2.0 * k * in.value().cwiseProduct(in.d1(dir)).colwise().sum();
            slack_arg.d2(dir) = -2.0 * k *
                                (in.d1(dir).colwise().squaredNorm() + in.value().cwiseProduct(in.d2(dir)).colwise().sum());
        }
        for (Eigen::Index p = 0; p < P; ++p) {
            double &w = slack_arg.value()(0, p);
            if (w < -1e-9) {
                throw std::domain_error("ortho_forward_jets: input exceeds the preprocessing bound");
            }
            w = std::max(w, kSlackFloor);
        }
        const JetBatch slack = jet_map(slack_arg, sqrt_derivs);
        loaded.data().topRows(layer.d_in) = in.data() / (b * std::sqrt(d));
        loaded.data().row(layer.d_in) = slack.data();
    } else {
        loaded.data() = in.data();
    }

    Eigen::MatrixXd W = angles_to_matrix(layer);
    JetBatch pre(layer.d_out, P, dirs);
    pre.data().noalias() = W.topLeftCorner(layer.d_out, L) * loaded.data();
    pre.value().colwise() += layer.bias;

    JetBatch out = layer.activation == Activation::tanh ? jet_map(pre, tanh_derivs) : pre;
    if (cache != nullptr) {
        cache->input = in;
        cache->slack_arg = std::move(slack_arg);
        cache->loaded = std::move(loaded);
        cache->pre_activation = std::move(pre);
        cache->W = std::move(W);
    }
    return out;
}

JetBatch ortho_backward_jets(const PyramidLayer &layer, const JetBatch &g_out, const OrthoJetCache &cache,
                             std::span<double> grad) {
    if (grad.size() != layer.param_count()) {
        throw std::invalid_argument("ortho_backward_jets: gradient slice has the wrong size");
    }
    const Eigen::Index P = g_out.points();
    const int dirs = g_out.dirs();
    const int L = layer.loaded_dim();
    const JetBatch g_pre =
        layer.activation == Activation::tanh ? jet_map_adjoint(cache.pre_activation, g_out, tanh_derivs) : g_out;

    const auto n_theta = static_cast<std::size_t>(layer.thetas.size());
    Eigen::Map<Eigen::VectorXd> g_bias(grad.data() + n_theta, layer.d_out);
    g_bias += g_pre.value().rowwise().sum();

    Eigen::MatrixXd dW = Eigen::MatrixXd::Zero(layer.wires, layer.wires);
    dW.topLeftCorner(layer.d_out, L).noalias() = g_pre.data() * cache.loaded.data().transpose();
    Eigen::Map<Eigen::VectorXd> g_theta(grad.data(), static_cast<Eigen::Index>(n_theta));
    g_theta += angle_gradient_from_matrix_adjoint(layer.gates, layer.thetas, cache.W, dW);

    JetBatch g_loaded(L, P, dirs);
    g_loaded.data().noalias() = cache.W.topLeftCorner(layer.d_out, L).transpose() * g_pre.data();

    if (layer.input_kind == InputKind::unit) {
        return g_loaded;
    }

    const double d = static_cast<double>(layer.d_in);
    const double b = layer.input_bound;
    const double k = 1.0 / (b * b * d);
    JetBatch g_in(layer.d_in, P, dirs);
    g_in.data() = g_loaded.data().topRows(layer.d_in) / (b * std::sqrt(d));

    JetBatch g_slack(1, P, dirs);
    g_slack.data() = g_loaded.data().row(layer.d_in);
    const JetBatch g_arg = jet_map_adjoint(cache.slack_arg, g_slack, sqrt_derivs);
    // arg = 1 - k sum h^2 (jet); its adjoint flows back with a minus sign.
    const JetBatch &h = cache.input;
    for (Eigen::Index p = 0; p < P; ++p) {
        const double gv = -g_arg.value()(0, p);
        g_in.value().col(p) += 2.0 * k * gv * h.value().col(p);
        for (int dir = 0; dir < dirs; ++dir) {
            const double g1 = -g_arg.d1(dir)(0, p);
            const double g2 = -g_arg.d2(dir)(0, p);
            g_in.value().col(p) += 2.0 * k * (g1 * h.d1(dir).col(p) + g2 * h.d2(dir).col(p));
            g_in.d1(dir).col(p) += 2.0 * k * g1 * h.value().col(p) + 4.0 * k * g2 * h.d1(dir).col(p);
            g_in.d2(dir).col(p) += 2.0 * k * g2 * h.value().col(p);
        }
    }
    return g_in;
}

double orthogonality_defect(const Eigen::MatrixXd &W) {
    return (W.transpose() * W - Eigen::MatrixXd::Identity(W.cols(), W.cols())).cwiseAbs().maxCoeff();
}

}  // namespace orthospinn
