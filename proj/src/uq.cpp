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

#include "orthospinn/uq.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <variant>

#include <fmt/format.h>

namespace orthospinn {

namespace {

// Appends orthogonal layers for `widths` starting from `d_in` inputs bounded
// by `bound`: equal consecutive widths become residual blocks.
void append_residual_stack(std::vector<Layer> &layers, int d_in, double &bound, const std::vector<int> &widths,
                           InputKind first_kind, std::mt19937_64 &rng) {
    int prev = d_in;
    for (std::size_t i = 0; i < widths.size(); ++i) {
        if (i > 0 && widths[i] == prev) {
            layers.emplace_back(ResBlock::create(prev, rng, bound));
            bound += 1.0;
        } else {
            const InputKind kind = i == 0 ? first_kind : InputKind::raw;
            layers.emplace_back(PyramidLayer::create(prev, widths[i], kind, Activation::tanh, rng, bound));
            bound = 1.0;
        }
        prev = widths[i];
    }
}

}  // namespace

SpinnModel build_qo_uq_model(const Architecture &arch, const std::vector<Interval> &domain, int gp_features,
                             double gamma, std::mt19937_64 &rng) {
    if (arch.widths.empty() || arch.trunk.empty()) {
        throw std::invalid_argument("build_qo_uq_model: subnet widths and a trunk are required");
    }
    if (static_cast<int>(domain.size()) != arch.subnets) {
        throw std::invalid_argument("build_qo_uq_model: one domain interval per subnet is required");
    }
    SpinnModel model;
    model.combiner = Combiner::concat;
    double bound = 1.0;
    for (int k = 0; k < arch.subnets; ++k) {
        Subnet s;
        s.domain = domain[k];
        s.encoding = InputEncoding::sincos;
        bound = 1.0;
        append_residual_stack(s.layers, 2, bound, arch.widths, InputKind::unit, rng);
        model.subnets.push_back(std::move(s));
    }
    append_residual_stack(model.trunk, arch.subnets * arch.widths.back(), bound, arch.trunk, InputKind::raw, rng);
    model.gp = GpHead::create(arch.trunk.back(), gp_features, gamma, rng);
    return model;
}

SpinnModel build_dropout_baseline(const Architecture &arch, const std::vector<Interval> &domain, double p_drop,
                                  std::mt19937_64 &rng) {
    if (arch.widths.empty() || arch.trunk.empty()) {
        throw std::invalid_argument("build_dropout_baseline: subnet widths and a trunk are required");
    }
    if (static_cast<int>(domain.size()) != arch.subnets) {
        throw std::invalid_argument("build_dropout_baseline: one domain interval per subnet is required");
    }
    auto dense = [&](int d_in, int d_out, Activation act, double p) {
        DenseLayer l = DenseLayer::create(d_in, d_out, act, rng);
        l.dropout = p;
        return l;
    };
    SpinnModel model;
    model.combiner = Combiner::concat;
    for (int k = 0; k < arch.subnets; ++k) {
        Subnet s;
        s.domain = domain[k];
        s.encoding = InputEncoding::raw;
        int prev = 1;
        for (int w : arch.widths) {
            s.layers.emplace_back(dense(prev, w, Activation::tanh, p_drop));
            prev = w;
        }
        model.subnets.push_back(std::move(s));
    }
    int prev = arch.subnets * arch.widths.back();
    for (int w : arch.trunk) {
        model.trunk.emplace_back(dense(prev, w, Activation::tanh, p_drop));
        prev = w;
    }
    model.trunk.emplace_back(dense(prev, 1, Activation::identity, 0.0));
    return model;
}

double eac(const Eigen::VectorXd &sigmas, const Eigen::VectorXd &errors) {
    if (sigmas.size() != errors.size()) {
        throw std::invalid_argument("eac: length mismatch");
    }
    if (sigmas.size() < 2) {
        throw std::invalid_argument("eac: need at least two samples");
    }
    const Eigen::ArrayXd s = sigmas.array() - sigmas.mean();
    const Eigen::ArrayXd e = errors.array() - errors.mean();
    const double vs = s.square().sum();
    const double ve = e.square().sum();
    const auto n = static_cast<double>(sigmas.size());
    if (vs / n < 1e-30 || ve / n < 1e-30) {
        return 0.0;
    }
    return std::clamp((s * e).sum() / std::sqrt(vs * ve), -1.0, 1.0);
}

Eigen::MatrixXd training_features(const SpinnModel &model, const TrainingSet &set) {
    if (!model.gp) {
        throw std::invalid_argument("training_features: model has no GP head");
    }
    std::vector<Eigen::MatrixXd> blocks;
    blocks.push_back(concat_hidden(model, SampleLayout::grid(set.colloc)));
    for (const auto &c : set.constraints) {
        blocks.push_back(concat_hidden(model, c.layout));
        if (c.partner) {
            blocks.push_back(concat_hidden(model, *c.partner));
        }
    }
    Eigen::Index cols = 0;
    for (const auto &b : blocks) {
        cols += b.cols();
    }
    Eigen::MatrixXd H(model.gp->hidden_dim(), cols);
    Eigen::Index c0 = 0;
    for (const auto &b : blocks) {
        H.middleCols(c0, b.cols()) = b;
        c0 += b.cols();
    }
    return rff_feature_table(H, *model.gp);
}

void fit_gp_posterior(SpinnModel &model, const TrainingSet &set, double tau, PosteriorSolver solver) {
    const Eigen::MatrixXd Phi = training_features(model, set);
    model.gp->Sigma = gp_posterior(Phi, tau, solver);
}

UqPrediction gp_predict_layout(const SpinnModel &model, const SampleLayout &layout) {
    if (!model.gp || !model.gp->Sigma) {
        throw std::logic_error("gp_predict_layout: posterior covariance has not been computed");
    }
    const Eigen::MatrixXd Phi = rff_feature_table(concat_hidden(model, layout), *model.gp);
    UqPrediction out;
    out.mu = Phi * model.gp->beta;
    const Eigen::MatrixXd PS = Phi * *model.gp->Sigma;
    out.sigma = (PS.array() * Phi.array()).rowwise().sum().max(0.0).sqrt().matrix();
    return out;
}

UqPrediction mc_dropout_predict(const SpinnModel &baseline, const SampleLayout &layout, int passes, double p_drop,
                                std::mt19937_64 &rng) {
    if (passes < 2) {
        throw std::invalid_argument("mc_dropout_predict: need at least two passes");
    }
    if (p_drop < 0.0 || p_drop >= 1.0) {
        throw std::invalid_argument("mc_dropout_predict: dropout rate must lie in [0, 1)");
    }
    SpinnModel model = baseline;
    auto set_rate = [&](std::vector<Layer> &layers, bool skip_last) {
        for (std::size_t i = 0; i < layers.size(); ++i) {
            if (auto *d = std::get_if<DenseLayer>(&layers[i]); d != nullptr && !(skip_last && i + 1 == layers.size())) {
                d->dropout = p_drop;
            }
        }
    };
    for (auto &s : model.subnets) {
        set_rate(s.layers, false);
    }
    set_rate(model.trunk, true);

    const DropoutContext ctx{&rng};
    // Welford accumulation; the textbook sum-of-squares form cancels badly
    // when the spread is small next to the mean.
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(layout.size());
    Eigen::VectorXd m2 = Eigen::VectorXd::Zero(layout.size());
    for (int p = 0; p < passes; ++p) {
        const Eigen::VectorXd y = model_predict(model, layout, ForwardMode::matrix(), ctx);
        const Eigen::VectorXd delta = y - mean;
        mean += delta / static_cast<double>(p + 1);
        m2 += delta.cwiseProduct(y - mean);
    }
    UqPrediction out;
    out.mu = mean;
    out.sigma = (m2 / (passes - 1.0)).cwiseMax(0.0).cwiseSqrt();
    return out;
}

UqReport score_slices(const std::string &method, const PdeProblem &problem, const Eigen::VectorXd &x,
                      const std::vector<double> &times, const UqPrediction &prediction) {
    const Eigen::Index nx = x.size();
    const auto nt = static_cast<Eigen::Index>(times.size());
    if (prediction.mu.size() != nx * nt || prediction.sigma.size() != nx * nt) {
        throw std::invalid_argument("score_slices: prediction does not match the slice grid");
    }
    UqReport report;
    report.method = method;
    report.x = x;
    report.times = times;
    report.mu = Eigen::Map<const Eigen::MatrixXd>(prediction.mu.data(), nx, nt);
    report.sigma = Eigen::Map<const Eigen::MatrixXd>(prediction.sigma.data(), nx, nt);
    report.reference.resize(nx, nt);
    for (Eigen::Index k = 0; k < nt; ++k) {
        for (Eigen::Index i = 0; i < nx; ++i) {
            const double pt[2] = {x[i], times[static_cast<std::size_t>(k)]};
            report.reference(i, k) = problem.reference(pt);
        }
        const Eigen::VectorXd err = (report.mu.col(k) - report.reference.col(k)).cwiseAbs();
        report.slices.push_back({times[static_cast<std::size_t>(k)], err.squaredNorm() / static_cast<double>(nx),
                                 err.maxCoeff(), eac(report.sigma.col(k), err)});
    }
    return report;
}

}  // namespace orthospinn
