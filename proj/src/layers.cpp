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

#include "orthospinn/layers.hpp"

#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace orthospinn {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

Eigen::VectorXd draw_mask(int size, double p, std::mt19937_64 &rng) {
    std::bernoulli_distribution keep(1.0 - p);
    Eigen::VectorXd mask(size);
    for (auto &m : mask) {
        m = keep(rng) ? 1.0 / (1.0 - p) : 0.0;
    }
    return mask;
}

}  // namespace

DenseLayer DenseLayer::create(int d_in, int d_out, Activation act, std::mt19937_64 &rng) {
    if (d_in < 1 || d_out < 1) {
        throw std::invalid_argument(fmt::format("DenseLayer: invalid dimensions {} -> {}", d_in, d_out));
    }
    DenseLayer layer;
    const double limit = std::sqrt(6.0 / (d_in + d_out));
    std::uniform_real_distribution<double> u(-limit, limit);
    layer.W.resize(d_out, d_in);
    for (Eigen::Index k = 0; k < layer.W.size(); ++k) {
        layer.W.data()[k] = u(rng);
    }
    layer.b = Eigen::VectorXd::Zero(d_out);
    layer.activation = act;
    return layer;
}

void DenseLayer::pack(std::span<double> out) const {
    if (out.size() != param_count()) {
        throw std::invalid_argument("DenseLayer::pack: size mismatch");
    }
    std::copy(W.data(), W.data() + W.size(), out.begin());
    std::copy(b.begin(), b.end(), out.begin() + W.size());
}

void DenseLayer::unpack(std::span<const double> in) {
    if (in.size() != param_count()) {
        throw std::invalid_argument("DenseLayer::unpack: size mismatch");
    }
    std::copy(in.begin(), in.begin() + W.size(), W.data());
    std::copy(in.begin() + W.size(), in.end(), b.begin());
}

ResBlock ResBlock::create(int d, std::mt19937_64 &rng, double input_bound) {
    return {PyramidLayer::create(d, d, InputKind::raw, Activation::tanh, rng, input_bound)};
}

int layer_d_in(const Layer &layer) {
    return std::visit(overloaded{[](const PyramidLayer &l) { return l.d_in; },
                                 [](const DenseLayer &l) { return l.d_in(); },
                                 [](const ResBlock &l) { return l.dim(); }},
                      layer);
}

int layer_d_out(const Layer &layer) {
    return std::visit(overloaded{[](const PyramidLayer &l) { return l.d_out; },
                                 [](const DenseLayer &l) { return l.d_out(); },
                                 [](const ResBlock &l) { return l.dim(); }},
                      layer);
}

std::size_t layer_param_count(const Layer &layer) {
    return std::visit(overloaded{[](const PyramidLayer &l) { return l.param_count(); },
                                 [](const DenseLayer &l) { return l.param_count(); },
                                 [](const ResBlock &l) { return l.inner.param_count(); }},
                      layer);
}

void pack_layer(const Layer &layer, std::span<double> out) {
    std::visit(overloaded{[&](const PyramidLayer &l) { l.pack(out); }, [&](const DenseLayer &l) { l.pack(out); },
                          [&](const ResBlock &l) { l.inner.pack(out); }},
               layer);
}

void unpack_layer(Layer &layer, std::span<const double> in) {
    std::visit(overloaded{[&](PyramidLayer &l) { l.unpack(in); }, [&](DenseLayer &l) { l.unpack(in); },
                          [&](ResBlock &l) { l.inner.unpack(in); }},
               layer);
}

std::size_t stack_param_count(const std::vector<Layer> &layers) {
    std::size_t total = 0;
    for (const auto &l : layers) {
        total += layer_param_count(l);
    }
    return total;
}

void pack_stack(const std::vector<Layer> &layers, std::span<double> out) {
    if (out.size() != stack_param_count(layers)) {
        throw std::invalid_argument("pack_stack: size mismatch");
    }
    std::size_t offset = 0;
    for (const auto &l : layers) {
        const auto n = layer_param_count(l);
        pack_layer(l, out.subspan(offset, n));
        offset += n;
    }
}

void unpack_stack(std::vector<Layer> &layers, std::span<const double> in) {
    if (in.size() != stack_param_count(layers)) {
        throw std::invalid_argument("unpack_stack: size mismatch");
    }
    std::size_t offset = 0;
    for (auto &l : layers) {
        const auto n = layer_param_count(l);
        unpack_layer(l, in.subspan(offset, n));
        offset += n;
    }
}

namespace {

JetBatch dense_forward_jets(const DenseLayer &layer, const JetBatch &in, LayerCache *cache,
                            const DropoutContext &dropout) {
    JetBatch pre(layer.d_out(), in.points(), in.dirs());
    pre.data().noalias() = layer.W * in.data();
    pre.value().colwise() += layer.b;
    JetBatch out = layer.activation == Activation::tanh ? jet_map(pre, tanh_derivs) : pre;
    Eigen::VectorXd mask;
    if (dropout.rng != nullptr && layer.dropout > 0.0) {
        mask = draw_mask(layer.d_out(), layer.dropout, *dropout.rng);
        out.data().array().colwise() *= mask.array();
    }
    if (cache != nullptr) {
        cache->input = in;
        cache->pre_activation = std::move(pre);
        cache->mask = std::move(mask);
    }
    return out;
}

JetBatch dense_backward_jets(const DenseLayer &layer, const JetBatch &g_out, const LayerCache &cache,
                             std::span<double> grad) {
    JetBatch g = g_out;
    if (cache.mask.size() > 0) {
        g.data().array().colwise() *= cache.mask.array();
    }
    const JetBatch g_pre =
        layer.activation == Activation::tanh ? jet_map_adjoint(cache.pre_activation, g, tanh_derivs) : g;
    Eigen::Map<Eigen::MatrixXd> gW(grad.data(), layer.d_out(), layer.d_in());
    Eigen::Map<Eigen::VectorXd> gb(grad.data() + layer.W.size(), layer.d_out());
    gW.noalias() += g_pre.data() * cache.input.data().transpose();
    gb += g_pre.value().rowwise().sum();
    JetBatch g_in(layer.d_in(), g_out.points(), g_out.dirs());
    g_in.data().noalias() = layer.W.transpose() * g_pre.data();
    return g_in;
}

}  // namespace

JetBatch stack_forward_jets(const std::vector<Layer> &layers, const JetBatch &in, StackCache *cache,
                            const DropoutContext &dropout) {
    if (cache != nullptr) {
        cache->layers.assign(layers.size(), LayerCache{});
    }
    JetBatch h = in;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        if (h.dim() != layer_d_in(layers[i])) {
            throw std::invalid_argument(
                fmt::format("stack_forward_jets: layer {} expects {} inputs, got {}", i, layer_d_in(layers[i]), h.dim()));
        }
        LayerCache *lc = cache != nullptr ? &cache->layers[i] : nullptr;
        h = std::visit(overloaded{[&](const PyramidLayer &l) {
                                      return ortho_forward_jets(l, h, lc != nullptr ? &lc->ortho : nullptr);
                                  },
                                  [&](const DenseLayer &l) { return dense_forward_jets(l, h, lc, dropout); },
                                  [&](const ResBlock &l) {
                                      JetBatch out = ortho_forward_jets(l.inner, h, lc != nullptr ? &lc->ortho : nullptr);
                                      out.data() += h.data();
                                      return out;
                                  }},
                       layers[i]);
    }
    return h;
}

JetBatch stack_backward_jets(const std::vector<Layer> &layers, const JetBatch &g_out, const StackCache &cache,
                             std::span<double> grad) {
    if (grad.size() != stack_param_count(layers) || cache.layers.size() != layers.size()) {
        throw std::invalid_argument("stack_backward_jets: cache or gradient does not match the stack");
    }
    std::vector<std::size_t> offsets(layers.size() + 1, 0);
    for (std::size_t i = 0; i < layers.size(); ++i) {
        offsets[i + 1] = offsets[i] + layer_param_count(layers[i]);
    }
    JetBatch g = g_out;
    for (std::size_t i = layers.size(); i-- > 0;) {
        const auto slice = grad.subspan(offsets[i], offsets[i + 1] - offsets[i]);
        const LayerCache &lc = cache.layers[i];
        g = std::visit(overloaded{[&](const PyramidLayer &l) { return ortho_backward_jets(l, g, lc.ortho, slice); },
                                  [&](const DenseLayer &l) { return dense_backward_jets(l, g, lc, slice); },
                                  [&](const ResBlock &l) {
                                      JetBatch g_in = ortho_backward_jets(l.inner, g, lc.ortho, slice);
                                      g_in.data() += g.data();
                                      return g_in;
                                  }},
                       layers[i]);
    }
    return g;
}

Eigen::VectorXd stack_forward(const std::vector<Layer> &layers, const Eigen::VectorXd &in, const ForwardMode &mode,
                              const DropoutContext &dropout) {
    Eigen::VectorXd h = in;
    for (const auto &layer : layers) {
        h = std::visit(overloaded{[&](const PyramidLayer &l) -> Eigen::VectorXd { return layer_forward(l, h, mode).output; },
                                  [&](const DenseLayer &l) -> Eigen::VectorXd {
                                      Eigen::VectorXd z = l.W * h + l.b;
                                      if (l.activation == Activation::tanh) {
                                          z = z.array().tanh().matrix();
                                      }
                                      if (dropout.rng != nullptr && l.dropout > 0.0) {
                                          z.array() *= draw_mask(l.d_out(), l.dropout, *dropout.rng).array();
                                      }
                                      return z;
                                  },
                                  [&](const ResBlock &l) -> Eigen::VectorXd {
                                      return h + layer_forward(l.inner, h, mode).output;
                                  }},
                       layer);
    }
    return h;
}

}  // namespace orthospinn
