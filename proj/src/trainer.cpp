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

#include "orthospinn/trainer.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <fmt/format.h>

namespace orthospinn {

Eigen::Index TrainingSet::point_count() const {
    Eigen::Index n = 1;
    for (const auto &a : colloc) {
        n *= a.size();
    }
    for (const auto &c : constraints) {
        n += c.layout.size() * (c.partner ? 2 : 1);
    }
    return n;
}

TrainingSet sample_training_set(const PdeProblem &problem, Eigen::Index per_axis, Eigen::Index constraint_axis_cap,
                                std::mt19937_64 &rng) {
    if (per_axis < 1) {
        throw std::invalid_argument("sample_training_set: empty collocation set");
    }
    TrainingSet set;
    for (const auto &iv : problem.domain()) {
        std::uniform_real_distribution<double> u(iv.lo, iv.hi);
        Eigen::VectorXd a(per_axis);
        for (auto &x : a) {
            x = u(rng);
        }
        set.colloc.push_back(std::move(a));
    }
    set.constraints = problem.constraints(set.colloc, constraint_axis_cap);
    return set;
}

namespace {

FieldBatch sized_fields(int K) {
    FieldBatch f;
    f.du.resize(static_cast<std::size_t>(K));
    f.d2u.resize(static_cast<std::size_t>(K));
    return f;
}

double group_weight(const LossWeights &w, Constraint::Group g) {
    switch (g) {
        case Constraint::Group::ic:
            return w.ic;
        case Constraint::Group::bc:
            return w.bc;
        case Constraint::Group::data:
            return w.data;
    }
    return 0.0;
}

double &group_slot(LossBreakdown &b, Constraint::Group g) {
    switch (g) {
        case Constraint::Group::ic:
            return b.ic;
        case Constraint::Group::bc:
            return b.bc;
        case Constraint::Group::data:
            break;
    }
    return b.data;
}

int term_component(const LinearTerm &t, int axis) { return t.axis == axis ? t.order : 0; }

}  // namespace

double linear_residual_mean_square(const SpinnModel &model, const std::vector<Eigen::VectorXd> &axes,
                                   const std::vector<LinearTerm> &terms, double weight, std::span<double> grad) {
    if (model.combiner != Combiner::product_sum) {
        throw std::invalid_argument("linear_residual_mean_square: needs a product-sum model");
    }
    if (static_cast<int>(axes.size()) != model.axes() || terms.empty()) {
        throw std::invalid_argument("linear_residual_mean_square: axis or term list mismatch");
    }
    const int K = model.axes();
    const Eigen::Index r = model.rank();
    const auto T = static_cast<Eigen::Index>(terms.size());
    const Eigen::Index R = r * T;

    std::vector<StackCache> caches(static_cast<std::size_t>(K));
    std::vector<JetBatch> J;
    std::vector<Eigen::MatrixXd> G;
    std::vector<Eigen::MatrixXd> S;
    double total_points = 1.0;
    for (int j = 0; j < K; ++j) {
        bool need = false;
        for (const auto &t : terms) {
            need = need || (t.axis == j && t.order > 0);
        }
        J.push_back(subnet_forward_jets(model.subnets[j], axes[j], need, &caches[j]));
        model.subnet_forward_count += static_cast<std::uint64_t>(axes[j].size());
        const Eigen::Index N = axes[j].size();
        total_points *= static_cast<double>(N);
        Eigen::MatrixXd g(N, R);
        for (Eigen::Index t = 0; t < T; ++t) {
            const double c = j == 0 ? terms[t].coefficient : 1.0;
            g.middleCols(t * r, r) = c * J[j].comp(term_component(terms[t], j)).transpose();
        }
        S.push_back(g.transpose() * g);
        G.push_back(std::move(g));
    }
    Eigen::MatrixXd H = Eigen::MatrixXd::Ones(R, R);
    for (const auto &s : S) {
        H.array() *= s.array();
    }
    const double mean_square = H.sum() / total_points;

    std::size_t offset = 0;
    for (int j = 0; j < K; ++j) {
        const Subnet &sub = model.subnets[j];
        Eigen::MatrixXd others = Eigen::MatrixXd::Ones(R, R);
        for (int i = 0; i < K; ++i) {
            if (i != j) {
                others.array() *= S[i].array();
            }
        }
        const Eigen::MatrixXd dG = (2.0 * weight / total_points) * (G[j] * others);
        JetBatch gJ(J[j].dim(), J[j].points(), J[j].dirs());
        for (Eigen::Index t = 0; t < T; ++t) {
            const double c = j == 0 ? terms[t].coefficient : 1.0;
            gJ.comp(term_component(terms[t], j)) += c * dG.middleCols(t * r, r).transpose();
        }
        stack_backward_jets(sub.layers, gJ, caches[j], grad.subspan(offset, sub.param_count()));
        offset += sub.param_count();
    }
    return mean_square;
}

LossEvaluation assemble_loss(const SpinnModel &model, const PdeProblem &problem, const TrainingSet &set, double param,
                             const LossOptions &options) {
    const int K = model.axes();
    if (problem.axes() != K) {
        throw std::invalid_argument(
            fmt::format("assemble_loss: problem has {} axes, model has {}", problem.axes(), K));
    }
    for (const auto &a : set.colloc) {
        if (a.size() == 0) {
            throw std::invalid_argument("assemble_loss: empty collocation set");
        }
    }
    const auto &w = options.weights;
    LossEvaluation out;
    out.grad = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(model.param_count()));
    std::span<double> grad(out.grad.data(), static_cast<std::size_t>(out.grad.size()));

    const auto terms = problem.linear_terms();
    if (options.factorized_residual && !terms.empty() && model.combiner == Combiner::product_sum) {
        out.parts.residual = linear_residual_mean_square(model, set.colloc, terms, w.residual, grad);
    } else {
        ModelCache cache;
        const FieldBatch f = evaluate(model, SampleLayout::grid(set.colloc), problem.residual_request(), &cache,
                                      options.dropout);
        const Eigen::VectorXd r = problem.residual(f, param);
        const auto n = static_cast<double>(r.size());
        out.parts.residual = r.squaredNorm() / n;
        FieldBatch adj;
        double g_param = 0.0;
        problem.residual_adjoint(f, param, (2.0 * w.residual / n) * r, adj, g_param);
        out.grad_param += g_param;
        backward(model, cache, adj, grad);
    }

    for (const auto &c : set.constraints) {
        DerivRequest req = DerivRequest::none(K);
        if (c.derivative_axis >= 0) {
            req.first[c.derivative_axis] = true;
        }
        auto pick = [&](const FieldBatch &f) -> const Eigen::VectorXd & {
            return c.derivative_axis < 0 ? f.u : f.du[c.derivative_axis];
        };
        ModelCache cache;
        const FieldBatch f = evaluate(model, c.layout, req, &cache, options.dropout);
        Eigen::VectorXd diff;
        ModelCache partner_cache;
        if (c.partner) {
            diff = pick(f) - pick(evaluate(model, *c.partner, req, &partner_cache, options.dropout));
        } else {
            if (c.target.size() != f.u.size()) {
                throw std::invalid_argument(fmt::format("constraint '{}' has a mismatched target", c.name));
            }
            diff = pick(f) - c.target;
        }
        const auto n = static_cast<double>(diff.size());
        group_slot(out.parts, c.group) += diff.squaredNorm() / n;
        const Eigen::VectorXd g = (2.0 * group_weight(w, c.group) / n) * diff;
        FieldBatch adj = sized_fields(K);
        (c.derivative_axis < 0 ? adj.u : adj.du[c.derivative_axis]) = g;
        backward(model, cache, adj, grad);
        if (c.partner) {
            (c.derivative_axis < 0 ? adj.u : adj.du[c.derivative_axis]) = -g;
            backward(model, partner_cache, adj, grad);
        }
    }

    if (model.gp && options.output_penalty > 0.0) {
        const auto D = model.gp->features();
        const Eigen::Index offset = out.grad.size() - D;
        out.parts.penalty = options.output_penalty * model.gp->beta.squaredNorm();
        out.grad.segment(offset, D) += 2.0 * options.output_penalty * model.gp->beta;
    }

    out.parts.total = w.residual * out.parts.residual + w.ic * out.parts.ic + w.bc * out.parts.bc +
                      w.data * out.parts.data + out.parts.penalty;
    return out;
}

void adam_step(Eigen::VectorXd &params, const Eigen::VectorXd &grads, AdamState &state, double lr) {
    if (params.size() != grads.size() || state.m.size() != params.size() || state.v.size() != params.size()) {
        throw std::invalid_argument("adam_step: parameter, gradient and state sizes differ");
    }
    ++state.step;
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * grads;
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * grads.cwiseAbs2();
    const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    params.array() -= lr * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + state.eps);
}

Evaluation evaluate_against_reference(const SpinnModel &model, const PdeProblem &problem, Eigen::Index per_axis,
                                      const ForwardMode &mode) {
    const SampleLayout grid =
        uniform_grid(problem.domain(), std::vector<Eigen::Index>(static_cast<std::size_t>(problem.axes()), per_axis));
    const Eigen::VectorXd err = model_predict(model, grid, mode) - reference_on_grid(problem, grid);
    return {err.squaredNorm() / static_cast<double>(err.size()), err.cwiseAbs().maxCoeff()};
}

TrainResult train(SpinnModel &model, const PdeProblem &problem, const TrainConfig &config,
                  const std::function<void(const HistoryRow &)> &on_log) {
    if (config.lr <= 0.0 || config.epochs < 0 || config.collocation_total < problem.axes()) {
        throw std::invalid_argument("train: invalid learning rate, epoch count or collocation budget");
    }
    std::mt19937_64 rng(config.seed);
    std::mt19937_64 dropout_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
    const Eigen::Index per_axis = config.collocation_total / problem.axes();
    const auto learnable = problem.learnable();

    const SampleLayout eval_grid = uniform_grid(
        problem.domain(), std::vector<Eigen::Index>(static_cast<std::size_t>(problem.axes()), config.eval_points_per_axis));
    const Eigen::VectorXd eval_ref = reference_on_grid(problem, eval_grid);
    auto eval_mse = [&] {
        return (model_predict(model, eval_grid) - eval_ref).squaredNorm() / static_cast<double>(eval_ref.size());
    };

    const auto n_model = static_cast<Eigen::Index>(model.param_count());
    Eigen::VectorXd theta(n_model + (learnable ? 1 : 0));
    theta.head(n_model) = model.pack();
    if (learnable) {
        theta[n_model] = learnable->initial;
    }
    AdamState adam = AdamState::zeros(theta.size());

    LossOptions options;
    options.weights = config.weights;
    options.factorized_residual = config.factorized_residual;
    if (config.dropout) {
        options.dropout.rng = &dropout_rng;
    }

    TrainResult result;
    if (learnable) {
        result.param = ParamEstimate{};
        result.param->trace.reserve(static_cast<std::size_t>(config.epochs));
    }
    TrainingSet set = sample_training_set(problem, per_axis, config.constraint_axis_cap, rng);
    double best_total = std::numeric_limits<double>::infinity();
    Eigen::VectorXd best_theta;

    auto run_loss = [&] {
        options.output_penalty = model.gp ? config.gp_ridge / static_cast<double>(set.point_count()) : 0.0;
        const double param = learnable ? theta[n_model] : 0.0;
        LossEvaluation L = assemble_loss(model, problem, set, param, options);
        if (!std::isfinite(L.parts.total)) {
            throw std::runtime_error(fmt::format(
                "train: non-finite loss (residual {}, ic {}, bc {}, data {})", L.parts.residual, L.parts.ic,
                L.parts.bc, L.parts.data));
        }
        return L;
    };
    auto log_row = [&](int epoch, const LossBreakdown &parts) {
        HistoryRow row{epoch, parts, learnable ? theta[n_model] : 0.0, eval_mse()};
        result.history.push_back(row);
        if (on_log) {
            on_log(row);
        }
    };

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        if (epoch > 0 && config.resample_every > 0 && epoch % config.resample_every == 0) {
            set = sample_training_set(problem, per_axis, config.constraint_axis_cap, rng);
        }
        model.unpack(theta.head(n_model));
        const LossEvaluation L = run_loss();
        if (config.keep_best && L.parts.total < best_total) {
            best_total = L.parts.total;
            best_theta = theta;
            result.best_epoch = epoch;
        }
        if (learnable) {
            result.param->trace.push_back(theta[n_model]);
        }
        if (config.log_every > 0 && epoch % config.log_every == 0) {
            log_row(epoch, L.parts);
        }
        Eigen::VectorXd g(theta.size());
        g.head(n_model) = L.grad;
        if (learnable) {
            g[n_model] = L.grad_param;
        }
        adam_step(theta, g, adam, config.lr);
    }
    if (config.keep_best && best_theta.size() == theta.size()) {
        theta = best_theta;
    }
    model.unpack(theta.head(n_model));
    log_row(config.epochs, run_loss().parts);
    if (learnable) {
        result.param->value = theta[n_model];
    }
    result.final_eval = evaluate_against_reference(model, problem, config.eval_points_per_axis);
    result.last_set = std::move(set);
    return result;
}

}  // namespace orthospinn
