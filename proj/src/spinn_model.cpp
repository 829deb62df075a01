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

#include "orthospinn/spinn_model.hpp"

#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace orthospinn {

std::size_t SpinnModel::param_count() const {
    std::size_t total = 0;
    for (const auto &s : subnets) {
        total += s.param_count();
    }
    total += stack_param_count(trunk);
    if (gp) {
        total += static_cast<std::size_t>(gp->features());
    }
    return total;
}

Eigen::VectorXd SpinnModel::pack() const {
    Eigen::VectorXd out(static_cast<Eigen::Index>(param_count()));
    std::span<double> all(out.data(), static_cast<std::size_t>(out.size()));
    std::size_t offset = 0;
    for (const auto &s : subnets) {
        pack_stack(s.layers, all.subspan(offset, s.param_count()));
        offset += s.param_count();
    }
    pack_stack(trunk, all.subspan(offset, stack_param_count(trunk)));
    offset += stack_param_count(trunk);
    if (gp) {
        std::copy(gp->beta.begin(), gp->beta.end(), all.begin() + static_cast<std::ptrdiff_t>(offset));
    }
    return out;
}

void SpinnModel::unpack(const Eigen::VectorXd &params) {
    if (static_cast<std::size_t>(params.size()) != param_count()) {
        throw std::invalid_argument(
            fmt::format("SpinnModel::unpack: expected {} parameters, got {}", param_count(), params.size()));
    }
    std::span<const double> all(params.data(), static_cast<std::size_t>(params.size()));
    std::size_t offset = 0;
    for (auto &s : subnets) {
        unpack_stack(s.layers, all.subspan(offset, s.param_count()));
        offset += s.param_count();
    }
    unpack_stack(trunk, all.subspan(offset, stack_param_count(trunk)));
    offset += stack_param_count(trunk);
    if (gp) {
        std::copy(all.begin() + static_cast<std::ptrdiff_t>(offset), all.end(), gp->beta.begin());
    }
}

SpinnModel build_qo_spinn(const Architecture &arch, const std::vector<Interval> &domain, std::mt19937_64 &rng) {
    const auto &w = arch.widths;
    if (w.size() < 2) {
        throw std::invalid_argument("build_qo_spinn: need at least two widths (the postprocess layers)");
    }
    if (static_cast<int>(domain.size()) != arch.subnets) {
        throw std::invalid_argument(
            fmt::format("build_qo_spinn: {} subnets but {} domain intervals", arch.subnets, domain.size()));
    }
    SpinnModel model;
    model.combiner = Combiner::product_sum;
    for (int k = 0; k < arch.subnets; ++k) {
        Subnet s;
        s.domain = domain[k];
        s.encoding = InputEncoding::sincos;
        int prev = 2;
        for (std::size_t i = 0; i + 2 < w.size(); ++i) {
            const InputKind kind = i == 0 ? InputKind::unit : InputKind::raw;
            s.layers.emplace_back(PyramidLayer::create(prev, w[i], kind, Activation::tanh, rng));
            prev = w[i];
        }
        s.layers.emplace_back(DenseLayer::create(prev, w[w.size() - 2], Activation::tanh, rng));
        s.layers.emplace_back(DenseLayer::create(w[w.size() - 2], w.back(), Activation::identity, rng));
        model.subnets.push_back(std::move(s));
    }
    return model;
}

SampleLayout SampleLayout::grid(std::vector<Eigen::VectorXd> axes) { return {Kind::grid, std::move(axes)}; }

SampleLayout SampleLayout::points(std::vector<Eigen::VectorXd> axes) {
    for (const auto &a : axes) {
        if (a.size() != axes.front().size()) {
            throw std::invalid_argument("SampleLayout::points: coordinate lists differ in length");
        }
    }
    return {Kind::points, std::move(axes)};
}

Eigen::Index SampleLayout::size() const {
    if (axes.empty()) {
        return 0;
    }
    if (kind == Kind::points) {
        return axes.front().size();
    }
    Eigen::Index n = 1;
    for (const auto &a : axes) {
        n *= a.size();
    }
    return n;
}

std::vector<Eigen::Index> SampleLayout::shape() const {
    if (kind == Kind::points) {
        return {size()};
    }
    std::vector<Eigen::Index> s;
    for (const auto &a : axes) {
        s.push_back(a.size());
    }
    return s;
}

DerivRequest DerivRequest::none(int axes) {
    return {std::vector<bool>(static_cast<std::size_t>(axes), false),
            std::vector<bool>(static_cast<std::size_t>(axes), false)};
}

JetBatch subnet_input_jets(const Subnet &subnet, const Eigen::VectorXd &x, bool with_derivatives) {
    const double a = subnet.input_scale();
    const Eigen::ArrayXd s = a * (x.array() - subnet.domain.lo) - subnet.input_half_range;
    const int dirs = with_derivatives ? 1 : 0;
    if (subnet.encoding == InputEncoding::raw) {
        JetBatch in(1, x.size(), dirs);
        in.value() = s.matrix().transpose();
        if (with_derivatives) {
            in.d1(0).setConstant(a);
        }
        return in;
    }
    JetBatch in(2, x.size(), dirs);
    const Eigen::ArrayXd sn = s.sin();
    const Eigen::ArrayXd cs = s.cos();
    in.value().row(0) = sn.matrix().transpose();
    in.value().row(1) = cs.matrix().transpose();
    if (with_derivatives) {
        in.d1(0).row(0) = (a * cs).matrix().transpose();
        in.d1(0).row(1) = (-a * sn).matrix().transpose();
        in.d2(0).row(0) = (-a * a * sn).matrix().transpose();
        in.d2(0).row(1) = (-a * a * cs).matrix().transpose();
    }
    return in;
}

JetBatch subnet_forward_jets(const Subnet &subnet, const Eigen::VectorXd &x, bool with_derivatives,
                             StackCache *cache, const DropoutContext &dropout) {
    return stack_forward_jets(subnet.layers, subnet_input_jets(subnet, x, with_derivatives), cache, dropout);
}

std::vector<Jet2> subnet_forward_jet(const Subnet &subnet, double x) {
    const JetBatch out = subnet_forward_jets(subnet, Eigen::VectorXd::Constant(1, x), true, nullptr);
    std::vector<Jet2> jets(static_cast<std::size_t>(out.dim()));
    for (Eigen::Index i = 0; i < out.dim(); ++i) {
        jets[static_cast<std::size_t>(i)] = {out.value()(i, 0), out.d1(0)(i, 0), out.d2(0)(i, 0)};
    }
    return jets;
}

Eigen::VectorXd subnet_forward(const Subnet &subnet, double x, const ForwardMode &mode) {
    const JetBatch in = subnet_input_jets(subnet, Eigen::VectorXd::Constant(1, x), false);
    return stack_forward(subnet.layers, in.value().col(0), mode);
}

namespace {

using Kind = SampleLayout::Kind;

// Column a + Na*b is A.col(a) .* B.col(b).
Eigen::MatrixXd khatri_rao(const Eigen::MatrixXd &A, const Eigen::MatrixXd &B) {
    const auto Na = A.cols();
    Eigen::MatrixXd out(A.rows(), Na * B.cols());
    for (Eigen::Index b = 0; b < B.cols(); ++b) {
        out.middleCols(b * Na, Na) = A.array().colwise() * B.col(b).array();
    }
    return out;
}

Eigen::VectorXd cp_tensor(Kind kind, const std::vector<const Eigen::MatrixXd *> &f) {
    const std::size_t K = f.size();
    if (kind == Kind::points) {
        Eigen::ArrayXXd prod = f[0]->array();
        for (std::size_t j = 1; j < K; ++j) {
            prod *= f[j]->array();
        }
        return prod.colwise().sum().transpose();
    }
    if (K == 1) {
        return f[0]->colwise().sum().transpose();
    }
    Eigen::MatrixXd kr = *f[0];
    for (std::size_t j = 1; j + 1 < K; ++j) {
        kr = khatri_rao(kr, *f[j]);
    }
    const Eigen::MatrixXd u = kr.transpose() * *f[K - 1];
    return Eigen::Map<const Eigen::VectorXd>(u.data(), u.size());
}

// Accumulates d(sum g . tensor)/d factor into gf[j].
void cp_tensor_backward(Kind kind, const std::vector<const Eigen::MatrixXd *> &f, const Eigen::VectorXd &g,
                        const std::vector<Eigen::MatrixXd *> &gf) {
    const std::size_t K = f.size();
    if (kind == Kind::points) {
        for (std::size_t m = 0; m < K; ++m) {
            Eigen::ArrayXXd prod = Eigen::ArrayXXd::Ones(f[m]->rows(), f[m]->cols());
            for (std::size_t j = 0; j < K; ++j) {
                if (j != m) {
                    prod *= f[j]->array();
                }
            }
            gf[m]->array() += prod.rowwise() * g.transpose().array();
        }
        return;
    }
    if (K == 1) {
        gf[0]->rowwise() += g.transpose();
        return;
    }
    std::vector<Eigen::MatrixXd> kr(K - 1);
    kr[0] = *f[0];
    for (std::size_t j = 1; j + 1 < K; ++j) {
        kr[j] = khatri_rao(kr[j - 1], *f[j]);
    }
    const Eigen::Index A = kr[K - 2].cols();
    const Eigen::Map<const Eigen::MatrixXd> G(g.data(), A, f[K - 1]->cols());
    gf[K - 1]->noalias() += kr[K - 2] * G;
    Eigen::MatrixXd gkr = *f[K - 1] * G.transpose();
    for (std::size_t j = K - 2; j >= 1; --j) {
        const Eigen::MatrixXd &prev = kr[j - 1];
        const Eigen::Index Ap = prev.cols();
        Eigen::MatrixXd gprev = Eigen::MatrixXd::Zero(prev.rows(), Ap);
        for (Eigen::Index b = 0; b < f[j]->cols(); ++b) {
            const auto block = gkr.middleCols(b * Ap, Ap);
            gf[j]->col(b) += (block.array() * prev.array()).rowwise().sum().matrix();
            gprev.array() += block.array().colwise() * f[j]->col(b).array();
        }
        gkr = std::move(gprev);
    }
    *gf[0] += gkr;
}

struct CpTerm {
    int axis;       // -1 for u itself
    int component;  // 1 or 2 on `axis`
};

std::vector<CpTerm> cp_terms(const DerivRequest &request) {
    std::vector<CpTerm> terms{{-1, 0}};
    for (int j = 0; j < static_cast<int>(request.first.size()); ++j) {
        if (request.first[j]) {
            terms.push_back({j, 1});
        }
        if (request.second[j]) {
            terms.push_back({j, 2});
        }
    }
    return terms;
}

FieldBatch empty_fields(int K) {
    FieldBatch f;
    f.du.resize(static_cast<std::size_t>(K));
    f.d2u.resize(static_cast<std::size_t>(K));
    return f;
}

Eigen::VectorXd &term_slot(FieldBatch &f, const CpTerm &t) {
    if (t.axis < 0) {
        return f.u;
    }
    return t.component == 1 ? f.du[t.axis] : f.d2u[t.axis];
}

const Eigen::VectorXd &term_slot(const FieldBatch &f, const CpTerm &t) {
    if (t.axis < 0) {
        return f.u;
    }
    return t.component == 1 ? f.du[t.axis] : f.d2u[t.axis];
}

void check_request(const DerivRequest &request, int K) {
    if (static_cast<int>(request.first.size()) != K || static_cast<int>(request.second.size()) != K) {
        throw std::invalid_argument("derivative request does not match the axis count");
    }
}

// Factor tables of each axis with the derivative component swapped in.
std::vector<Eigen::MatrixXd> component_tables(const std::vector<JetBatch> &per_axis) {
    std::vector<Eigen::MatrixXd> tables;
    for (const auto &J : per_axis) {
        for (int c = 0; c < J.components(); ++c) {
            tables.emplace_back(J.comp(c));
        }
    }
    return tables;
}

std::vector<std::size_t> table_offsets(const std::vector<JetBatch> &per_axis) {
    std::vector<std::size_t> offsets{0};
    for (const auto &J : per_axis) {
        offsets.push_back(offsets.back() + static_cast<std::size_t>(J.components()));
    }
    return offsets;
}

}  // namespace

FieldBatch cp_combine(const std::vector<JetBatch> &per_axis, SampleLayout::Kind kind, const DerivRequest &request) {
    const int K = static_cast<int>(per_axis.size());
    check_request(request, K);
    for (int j = 0; j < K; ++j) {
        if (per_axis[j].dim() != per_axis[0].dim()) {
            throw std::invalid_argument("cp_combine: rank mismatch between axes");
        }
        if (request.any(j) && per_axis[j].dirs() < 1) {
            throw std::invalid_argument(fmt::format("cp_combine: axis {} carries no derivative", j));
        }
        if (kind == Kind::points && per_axis[j].points() != per_axis[0].points()) {
            throw std::invalid_argument("cp_combine: point counts differ between axes");
        }
    }
    const auto tables = component_tables(per_axis);
    const auto offsets = table_offsets(per_axis);
    FieldBatch out = empty_fields(K);
    for (const auto &t : cp_terms(request)) {
        std::vector<const Eigen::MatrixXd *> f;
        for (int j = 0; j < K; ++j) {
            f.push_back(&tables[offsets[j] + (j == t.axis ? t.component : 0)]);
        }
        term_slot(out, t) = cp_tensor(kind, f);
    }
    return out;
}

namespace {

void cp_combine_backward(const std::vector<JetBatch> &per_axis, SampleLayout::Kind kind,
                         const DerivRequest &request, const FieldBatch &adjoint, std::vector<JetBatch> &g_axis) {
    const int K = static_cast<int>(per_axis.size());
    const auto tables = component_tables(per_axis);
    const auto offsets = table_offsets(per_axis);
    std::vector<Eigen::MatrixXd> grads;
    for (const auto &t : tables) {
        grads.push_back(Eigen::MatrixXd::Zero(t.rows(), t.cols()));
    }
    for (const auto &t : cp_terms(request)) {
        const Eigen::VectorXd &g = term_slot(adjoint, t);
        if (g.size() == 0) {
            continue;
        }
        std::vector<const Eigen::MatrixXd *> f;
        std::vector<Eigen::MatrixXd *> gf;
        for (int j = 0; j < K; ++j) {
            const std::size_t idx = offsets[j] + (j == t.axis ? t.component : 0);
            f.push_back(&tables[idx]);
            gf.push_back(&grads[idx]);
        }
        cp_tensor_backward(kind, f, g, gf);
    }
    g_axis.clear();
    for (int j = 0; j < K; ++j) {
        JetBatch gj(per_axis[j].dim(), per_axis[j].points(), per_axis[j].dirs());
        for (int c = 0; c < gj.components(); ++c) {
            gj.comp(c) = grads[offsets[j] + c];
        }
        g_axis.push_back(std::move(gj));
    }
}

std::vector<std::vector<Eigen::Index>> gather_indices(const SampleLayout &layout) {
    const auto K = layout.axes.size();
    const Eigen::Index P = layout.size();
    std::vector<std::vector<Eigen::Index>> idx(K, std::vector<Eigen::Index>(static_cast<std::size_t>(P)));
    Eigen::Index stride = 1;
    for (std::size_t j = 0; j < K; ++j) {
        const Eigen::Index N = layout.axes[j].size();
        for (Eigen::Index n = 0; n < P; ++n) {
            idx[j][static_cast<std::size_t>(n)] = layout.kind == Kind::points ? n : (n / stride) % N;
        }
        stride *= N;
    }
    return idx;
}

// Concatenated trunk input. Seed direction j of the trunk is axis j.
JetBatch gather_trunk_input(const std::vector<JetBatch> &sub, const std::vector<std::vector<Eigen::Index>> &idx,
                            int dirs, Eigen::Index P) {
    Eigen::Index rows = 0;
    for (const auto &J : sub) {
        rows += J.dim();
    }
    JetBatch T(rows, P, dirs);
    Eigen::Index r0 = 0;
    for (std::size_t j = 0; j < sub.size(); ++j) {
        const JetBatch &J = sub[j];
        const auto h = J.dim();
        const bool has = J.dirs() > 0 && static_cast<int>(j) < dirs;
        for (Eigen::Index n = 0; n < P; ++n) {
            const Eigen::Index s = idx[j][static_cast<std::size_t>(n)];
            T.value().block(r0, n, h, 1) = J.value().col(s);
            if (has) {
                T.d1(static_cast<int>(j)).block(r0, n, h, 1) = J.d1(0).col(s);
                T.d2(static_cast<int>(j)).block(r0, n, h, 1) = J.d2(0).col(s);
            }
        }
        r0 += h;
    }
    return T;
}

std::size_t subnet_offset(const SpinnModel &model, std::size_t k) {
    std::size_t offset = 0;
    for (std::size_t i = 0; i < k; ++i) {
        offset += model.subnets[i].param_count();
    }
    return offset;
}

void check_layout(const SpinnModel &model, const SampleLayout &layout) {
    if (static_cast<int>(layout.axes.size()) != model.axes()) {
        throw std::invalid_argument(
            fmt::format("layout has {} axes, model has {}", layout.axes.size(), model.axes()));
    }
}

}  // namespace

FieldBatch evaluate(const SpinnModel &model, const SampleLayout &layout, const DerivRequest &request,
                    ModelCache *cache, const DropoutContext &dropout) {
    check_layout(model, layout);
    const int K = model.axes();
    check_request(request, K);

    std::vector<StackCache> sub_caches(cache != nullptr ? K : 0);
    std::vector<JetBatch> sub_out;
    for (int j = 0; j < K; ++j) {
        sub_out.push_back(subnet_forward_jets(model.subnets[j], layout.axes[j], request.any(j),
                                              cache != nullptr ? &sub_caches[j] : nullptr, dropout));
        model.subnet_forward_count += static_cast<std::uint64_t>(layout.axes[j].size());
    }

    FieldBatch out;
    if (model.combiner == Combiner::product_sum) {
        out = cp_combine(sub_out, layout.kind, request);
    } else {
        bool any = false;
        for (int j = 0; j < K; ++j) {
            any = any || request.any(j);
        }
        const int dirs = any ? K : 0;
        const Eigen::Index P = layout.size();
        auto idx = gather_indices(layout);
        const JetBatch T = gather_trunk_input(sub_out, idx, dirs, P);
        StackCache trunk_cache;
        JetBatch hidden = stack_forward_jets(model.trunk, T, cache != nullptr ? &trunk_cache : nullptr, dropout);
        GpJetCache gp_cache;
        const JetBatch y = model.gp ? gp_forward_jets(*model.gp, hidden, cache != nullptr ? &gp_cache : nullptr) : hidden;
        if (y.dim() != 1) {
            throw std::logic_error("concat model must end in a single output");
        }
        out = empty_fields(K);
        out.u = y.value().row(0).transpose();
        for (int j = 0; j < K; ++j) {
            if (request.first[j]) {
                out.du[j] = y.d1(j).row(0).transpose();
            }
            if (request.second[j]) {
                out.d2u[j] = y.d2(j).row(0).transpose();
            }
        }
        if (cache != nullptr) {
            cache->gather = std::move(idx);
            cache->trunk_cache = std::move(trunk_cache);
            cache->trunk_out = std::move(hidden);
            cache->gp_cache = std::move(gp_cache);
        }
    }
    if (cache != nullptr) {
        cache->layout = layout;
        cache->request = request;
        cache->subnet_caches = std::move(sub_caches);
        cache->subnet_out = std::move(sub_out);
    }
    return out;
}

void backward(const SpinnModel &model, const ModelCache &cache, const FieldBatch &adjoint, std::span<double> grad) {
    if (grad.size() != model.param_count()) {
        throw std::invalid_argument("backward: gradient buffer has the wrong size");
    }
    const int K = model.axes();
    std::vector<JetBatch> g_axis;
    if (model.combiner == Combiner::product_sum) {
        cp_combine_backward(cache.subnet_out, cache.layout.kind, cache.request, adjoint, g_axis);
    } else {
        const Eigen::Index P = cache.layout.size();
        const int dirs = cache.trunk_out.dirs();
        JetBatch gy(1, P, dirs);
        if (adjoint.u.size() > 0) {
            gy.value().row(0) = adjoint.u.transpose();
        }
        for (int j = 0; j < dirs; ++j) {
            if (cache.request.first[j] && adjoint.du[j].size() > 0) {
                gy.d1(j).row(0) = adjoint.du[j].transpose();
            }
            if (cache.request.second[j] && adjoint.d2u[j].size() > 0) {
                gy.d2(j).row(0) = adjoint.d2u[j].transpose();
            }
        }
        const std::size_t trunk_offset = subnet_offset(model, model.subnets.size());
        const std::size_t trunk_params = stack_param_count(model.trunk);
        JetBatch g_hidden = gy;
        if (model.gp) {
            g_hidden = gp_backward_jets(*model.gp, gy, cache.gp_cache,
                                        grad.subspan(trunk_offset + trunk_params,
                                                     static_cast<std::size_t>(model.gp->features())));
        }
        const JetBatch gT =
            stack_backward_jets(model.trunk, g_hidden, cache.trunk_cache, grad.subspan(trunk_offset, trunk_params));
        Eigen::Index r0 = 0;
        for (int j = 0; j < K; ++j) {
            const JetBatch &J = cache.subnet_out[j];
            JetBatch gj(J.dim(), J.points(), J.dirs());
            const auto h = J.dim();
            const bool has = J.dirs() > 0 && j < dirs;
            for (Eigen::Index n = 0; n < P; ++n) {
                const Eigen::Index s = cache.gather[j][static_cast<std::size_t>(n)];
                gj.value().col(s) += gT.value().block(r0, n, h, 1);
                if (has) {
                    gj.d1(0).col(s) += gT.d1(j).block(r0, n, h, 1);
                    gj.d2(0).col(s) += gT.d2(j).block(r0, n, h, 1);
                }
            }
            g_axis.push_back(std::move(gj));
            r0 += h;
        }
    }
    for (int j = 0; j < K; ++j) {
        const Subnet &s = model.subnets[j];
        stack_backward_jets(s.layers, g_axis[j], cache.subnet_caches[j],
                            grad.subspan(subnet_offset(model, j), s.param_count()));
    }
}

namespace {

// Subnet output table (dim x N) as a value-only jet batch.
JetBatch subnet_values(const SpinnModel &model, int j, const Eigen::VectorXd &x, const ForwardMode &mode,
                       const DropoutContext &dropout) {
    const Subnet &s = model.subnets[j];
    model.subnet_forward_count += static_cast<std::uint64_t>(x.size());
    if (mode.kind == ForwardMode::Kind::matrix) {
        return subnet_forward_jets(s, x, false, nullptr, dropout);
    }
    JetBatch out(s.output_dim(), x.size(), 0);
    for (Eigen::Index n = 0; n < x.size(); ++n) {
        out.value().col(n) = subnet_forward(s, x[n], mode);
    }
    return out;
}

}  // namespace

Eigen::VectorXd model_predict(const SpinnModel &model, const SampleLayout &layout, const ForwardMode &mode,
                              const DropoutContext &dropout) {
    check_layout(model, layout);
    const int K = model.axes();
    std::vector<JetBatch> sub;
    for (int j = 0; j < K; ++j) {
        sub.push_back(subnet_values(model, j, layout.axes[j], mode, dropout));
    }
    if (model.combiner == Combiner::product_sum) {
        return cp_combine(sub, layout.kind, DerivRequest::none(K)).u;
    }
    const Eigen::Index P = layout.size();
    const JetBatch T = gather_trunk_input(sub, gather_indices(layout), 0, P);
    Eigen::MatrixXd hidden;
    if (mode.kind == ForwardMode::Kind::matrix) {
        hidden = stack_forward_jets(model.trunk, T, nullptr, dropout).value();
    } else {
        hidden.resize(layer_d_out(model.trunk.back()), P);
        for (Eigen::Index n = 0; n < P; ++n) {
            hidden.col(n) = stack_forward(model.trunk, T.value().col(n), mode, dropout);
        }
    }
    if (!model.gp) {
        return hidden.row(0).transpose();
    }
    return rff_feature_table(hidden, *model.gp) * model.gp->beta;
}

Eigen::MatrixXd concat_hidden(const SpinnModel &model, const SampleLayout &layout, const DropoutContext &dropout) {
    check_layout(model, layout);
    if (model.combiner != Combiner::concat) {
        throw std::invalid_argument("concat_hidden: model does not use the concatenation combiner");
    }
    std::vector<JetBatch> sub;
    for (int j = 0; j < model.axes(); ++j) {
        sub.push_back(subnet_values(model, j, layout.axes[j], ForwardMode::matrix(), dropout));
    }
    const JetBatch T = gather_trunk_input(sub, gather_indices(layout), 0, layout.size());
    return stack_forward_jets(model.trunk, T, nullptr, dropout).value();
}

}  // namespace orthospinn
