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

#include "orthospinn/lipschitz.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <variant>

#include <fmt/format.h>

namespace orthospinn {

namespace {

constexpr std::uint64_t kPowerIterationSeed = 0x6a09e667f3bcc908ULL;

// Runs one layer on plain values (no derivative directions).
Eigen::MatrixXd layer_values(const Layer &layer, const Eigen::MatrixXd &in) {
    JetBatch batch(in.rows(), in.cols(), 0);
    batch.value() = in;
    const std::vector<Layer> one{layer};
    return stack_forward_jets(one, batch, nullptr).value();
}

Eigen::VectorXd random_unit(int d, std::mt19937_64 &rng) {
    std::normal_distribution<double> normal;
    Eigen::VectorXd v(d);
    for (auto &x : v) {
        x = normal(rng);
    }
    const double n = v.norm();
    return n > 0.0 ? Eigen::VectorXd(v / n) : Eigen::VectorXd::Unit(d, 0);
}

Eigen::VectorXd random_raw_input(const PyramidLayer &layer, std::mt19937_64 &rng) {
    std::uniform_real_distribution<double> u(-layer.input_bound, layer.input_bound);
    Eigen::VectorXd h(layer.d_in);
    for (auto &x : h) {
        x = u(rng);
    }
    return h;
}

void collect_pyramids(const std::vector<Layer> &layers, std::vector<const PyramidLayer *> &out) {
    for (const auto &l : layers) {
        if (const auto *p = std::get_if<PyramidLayer>(&l)) {
            out.push_back(p);
        } else if (const auto *r = std::get_if<ResBlock>(&l)) {
            out.push_back(&r->inner);
        }
    }
}

}  // namespace

double spectral_norm(const Eigen::MatrixXd &A, int iters) {
    if (iters < 1) {
        throw std::invalid_argument("spectral_norm: iters must be at least 1");
    }
    if (A.size() == 0 || A.cwiseAbs().maxCoeff() == 0.0) {
        return 0.0;
    }
    std::mt19937_64 rng(kPowerIterationSeed);
    Eigen::VectorXd v = random_unit(static_cast<int>(A.cols()), rng);
    double sigma = (A * v).norm();
    for (int k = 0; k < iters; ++k) {
        Eigen::VectorXd w = A.transpose() * (A * v);
        const double n = w.norm();
        if (n == 0.0) {
            // Start vector in the null space; restart from a basis direction.
            v = Eigen::VectorXd::Unit(A.cols(), k % A.cols());
            continue;
        }
        v = w / n;
        const double next = (A * v).norm();
        const bool converged = std::abs(next - sigma) <= 1e-15 * next;
        sigma = next;
        if (converged) {
            break;
        }
    }
    return sigma;
}

BoundIngredients estimate_bound_ingredients(const Subnet &subnet, int samples, std::mt19937_64 &rng) {
    if (samples < 2) {
        throw std::invalid_argument("estimate_bound_ingredients: need at least two samples");
    }
    const double lo = subnet.domain.lo;
    const double width = subnet.domain.width();
    if (!(width > 0.0)) {
        throw std::invalid_argument("estimate_bound_ingredients: degenerate domain");
    }
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double h = 1e-4 * width;
    Eigen::VectorXd xs(samples);
    Eigen::VectorXd probes(samples);
    for (int i = 0; i < samples; ++i) {
        xs[i] = lo + width * u(rng);
        probes[i] = xs[i] + h <= subnet.domain.hi ? xs[i] + h : xs[i] - h;
    }
    const JetBatch at = subnet_forward_jets(subnet, xs, true, nullptr);
    const Eigen::MatrixXd near = subnet_forward_jets(subnet, probes, false, nullptr).value();
    const Eigen::MatrixXd &phi = at.value();

    BoundIngredients out;
    out.M = 1.05 * phi.cwiseAbs().maxCoeff();
    for (int i = 0; i < samples; ++i) {
        out.L = std::max(out.L, at.d1(0).col(i).norm());
        out.L = std::max(out.L, (phi.col(i) - near.col(i)).norm() / std::abs(xs[i] - probes[i]));
        if (i > 0 && xs[i] != xs[i - 1]) {
            out.L = std::max(out.L, (phi.col(i) - phi.col(i - 1)).norm() / std::abs(xs[i] - xs[i - 1]));
        }
    }
    return out;
}

double product_sum_bound(int rank, std::span<const double> M, std::span<const double> L) {
    if (M.size() != L.size() || M.empty()) {
        throw std::invalid_argument("product_sum_bound: need one (M, L) pair per subnet");
    }
    double prod = 1.0;
    double sum = 0.0;
    for (std::size_t k = 0; k < M.size(); ++k) {
        if (!(M[k] > 0.0)) {
            throw std::invalid_argument(fmt::format("product_sum_bound: M[{}] must be positive", k));
        }
        prod *= M[k];
        sum += (L[k] / M[k]) * (L[k] / M[k]);
    }
    return rank * prod * std::sqrt(sum);
}

double preprocess_gain(const PyramidLayer &layer, const Eigen::MatrixXd &inputs) {
    if (layer.input_kind == InputKind::unit) {
        return 1.0;
    }
    const double b = layer.input_bound;
    const double d = layer.d_in;
    double gain = 0.0;
    for (Eigen::Index c = 0; c < inputs.cols(); ++c) {
        const double q = inputs.col(c).squaredNorm() / (b * b * d);
        if (q >= 1.0) {
            return std::numeric_limits<double>::infinity();
        }
        gain = std::max(gain, 1.0 / (b * std::sqrt(d * (1.0 - q))));
    }
    return gain;
}

SubnetLipschitz subnet_lipschitz(const Subnet &subnet, int samples) {
    if (samples < 2) {
        throw std::invalid_argument("subnet_lipschitz: need at least two samples");
    }
    SubnetLipschitz out;
    out.encoder_scale = subnet.input_scale();
    const Eigen::VectorXd xs = Eigen::VectorXd::LinSpaced(samples, subnet.domain.lo, subnet.domain.hi);
    Eigen::MatrixXd h = subnet_input_jets(subnet, xs, false).value();
    for (const auto &layer : subnet.layers) {
        if (const auto *p = std::get_if<PyramidLayer>(&layer)) {
            out.orthogonal_gain *= std::max(1.0, preprocess_gain(*p, h));
        } else if (const auto *r = std::get_if<ResBlock>(&layer)) {
            out.orthogonal_gain *= 1.0 + preprocess_gain(r->inner, h);
        } else if (const auto *d = std::get_if<DenseLayer>(&layer)) {
            out.final_norm *= spectral_norm(d->W);
        }
        h = layer_values(layer, h);
    }
    return out;
}

EmpiricalCheck empirical_lipschitz_check(const SpinnModel &model, double bound, long pairs, std::mt19937_64 &rng) {
    const int K = model.axes();
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> normal;
    constexpr long kChunk = 16384;
    EmpiricalCheck out;
    for (long start = 0; start < pairs; start += kChunk) {
        const long n = std::min(kChunk, pairs - start);
        std::vector<Eigen::VectorXd> xa(K, Eigen::VectorXd(n));
        std::vector<Eigen::VectorXd> ya(K, Eigen::VectorXd(n));
        for (long i = 0; i < n; ++i) {
            const bool close = (start + i) % 2 == 1;
            for (int k = 0; k < K; ++k) {
                const Interval &dom = model.subnets[k].domain;
                const double x = dom.lo + dom.width() * u(rng);
                double y = close ? x + 1e-3 * dom.width() * normal(rng) : dom.lo + dom.width() * u(rng);
                y = std::clamp(y, dom.lo, dom.hi);
                xa[k][i] = x;
                ya[k][i] = y;
            }
        }
        const Eigen::VectorXd ux = model_predict(model, SampleLayout::points(xa));
        const Eigen::VectorXd uy = model_predict(model, SampleLayout::points(ya));
        for (long i = 0; i < n; ++i) {
            double dist2 = 0.0;
            for (int k = 0; k < K; ++k) {
                dist2 += (xa[k][i] - ya[k][i]) * (xa[k][i] - ya[k][i]);
            }
            if (dist2 > 1e-24) {
                out.max_ratio = std::max(out.max_ratio, std::abs(ux[i] - uy[i]) / std::sqrt(dist2));
            }
        }
    }
    out.pass = out.max_ratio <= bound;
    return out;
}

StackingBounds stacking_bounds(std::span<const double> m, std::span<const double> M) {
    if (m.size() != M.size() || m.empty()) {
        throw std::invalid_argument("stacking_bounds: need matching non-empty constant lists");
    }
    StackingBounds out{std::numeric_limits<double>::infinity(), 0.0};
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (m[i] > M[i]) {
            throw std::invalid_argument(fmt::format("stacking_bounds: m[{}] = {} exceeds M[{}] = {}", i, m[i], i, M[i]));
        }
        out.m = std::min(out.m, m[i]);
        out.M = std::max(out.M, M[i]);
    }
    return out;
}

StackingCheck stacking_check(const std::vector<std::function<Eigen::VectorXd(double)>> &maps,
                             const std::vector<Interval> &domain, const StackingBounds &bounds, long pairs,
                             std::mt19937_64 &rng) {
    if (maps.size() != domain.size() || maps.empty()) {
        throw std::invalid_argument("stacking_check: one interval per map is required");
    }
    std::uniform_real_distribution<double> u(0.0, 1.0);
    StackingCheck out{std::numeric_limits<double>::infinity(), 0.0, false};
    for (long p = 0; p < pairs; ++p) {
        double num = 0.0;
        double den = 0.0;
        for (std::size_t i = 0; i < maps.size(); ++i) {
            const double x = domain[i].lo + domain[i].width() * u(rng);
            const double y = domain[i].lo + domain[i].width() * u(rng);
            num += (maps[i](x) - maps[i](y)).squaredNorm();
            den += (x - y) * (x - y);
        }
        if (den > 1e-24) {
            const double r = std::sqrt(num / den);
            out.min_ratio = std::min(out.min_ratio, r);
            out.max_ratio = std::max(out.max_ratio, r);
        }
    }
    out.pass = out.min_ratio >= bounds.m * (1.0 - 1e-12) && out.max_ratio <= bounds.M * (1.0 + 1e-12);
    return out;
}

LayerAudit audit_orthogonal_layers(const SpinnModel &model, int pairs, std::mt19937_64 &rng) {
    std::vector<const PyramidLayer *> layers;
    for (const auto &s : model.subnets) {
        collect_pyramids(s.layers, layers);
    }
    collect_pyramids(model.trunk, layers);

    LayerAudit out;
    out.layers = static_cast<int>(layers.size());
    for (const PyramidLayer *layer : layers) {
        out.max_spectral_deviation =
            std::max(out.max_spectral_deviation, std::abs(spectral_norm(angles_to_matrix(*layer)) - 1.0));
        const bool unit = layer->input_kind == InputKind::unit;
        for (int p = 0; p < pairs; ++p) {
            const Eigen::VectorXd h1 = unit ? random_unit(layer->d_in, rng) : random_raw_input(*layer, rng);
            const Eigen::VectorXd h2 = unit ? random_unit(layer->d_in, rng) : random_raw_input(*layer, rng);
            const Eigen::VectorXd p1 = unit ? h1 : preprocess_input(h1, layer->input_bound);
            const Eigen::VectorXd p2 = unit ? h2 : preprocess_input(h2, layer->input_bound);
            const double den = (p1 - p2).norm();
            if (den > 1e-12) {
                const double num = (layer_forward(*layer, h1).output - layer_forward(*layer, h2).output).norm();
                out.max_ratio = std::max(out.max_ratio, num / den);
            }
        }
    }
    return out;
}

BoundReport lipschitz_report(const SpinnModel &model, int samples, long pairs, int layer_pairs, std::uint64_t seed) {
    if (model.combiner != Combiner::product_sum) {
        throw std::invalid_argument("lipschitz_report: the product bounds apply to product-sum models only");
    }
    std::mt19937_64 rng(seed);
    BoundReport report;
    report.rank = model.rank();
    report.samples = samples;
    report.pairs = pairs;
    std::vector<double> M;
    std::vector<double> L;
    std::vector<double> L_orth;
    for (const auto &s : model.subnets) {
        SubnetBoundRow row{estimate_bound_ingredients(s, samples, rng), subnet_lipschitz(s, samples)};
        M.push_back(row.ingredients.M);
        L.push_back(row.ingredients.L);
        L_orth.push_back(row.structure.L_orthogonal());
        report.subnets.push_back(row);
    }
    report.sampled_bound = product_sum_bound(report.rank, M, L);
    report.structural_bound = product_sum_bound(report.rank, M, L_orth);
    report.empirical_max_ratio = empirical_lipschitz_check(model, report.structural_bound, pairs, rng).max_ratio;
    report.layers = audit_orthogonal_layers(model, layer_pairs, rng);
    return report;
}

}  // namespace orthospinn
