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

// Separable model: one univariate subnet per input axis, combined either by
// a rank-r sum of products or by concatenation into a trunk.
//
// Tensors over a grid are flattened with axis 0 varying fastest.

#pragma once

#include "orthospinn/gp_head.hpp"
#include "orthospinn/jets.hpp"
#include "orthospinn/layers.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

namespace orthospinn {

struct Interval {
    double lo = 0.0;
    double hi = 1.0;

    double width() const { return hi - lo; }
    friend bool operator==(const Interval &, const Interval &) = default;
};

/// Parsed "K x [w1, ..., wn]" with an optional "+ [t1, ...]" trunk.
struct Architecture {
    int subnets = 1;
    std::vector<int> widths;
    std::vector<int> trunk;

    int rank() const { return widths.empty() ? 0 : widths.back(); }
    friend bool operator==(const Architecture &, const Architecture &) = default;
};

enum class InputEncoding {
    sincos,  // [sin s, cos s], the unit input of an orthogonal first layer
    raw,     // s itself, for dense subnets
};

/// Univariate network. The axis domain is mapped affinely onto s in [-1, 1]
/// before encoding.
struct Subnet {
    Interval domain;
    InputEncoding encoding = InputEncoding::sincos;
    std::vector<Layer> layers;
    /// The domain is mapped affinely onto [-input_half_range, input_half_range].
    double input_half_range = 1.0;

    double input_scale() const { return 2.0 * input_half_range / domain.width(); }
    int output_dim() const { return layers.empty() ? 0 : layer_d_out(layers.back()); }
    std::size_t param_count() const { return stack_param_count(layers); }
};

enum class Combiner { product_sum, concat };

struct SpinnModel {
    std::vector<Subnet> subnets;
    Combiner combiner = Combiner::product_sum;
    std::vector<Layer> trunk;  // concat only
    std::optional<GpHead> gp;  // concat only; without it the trunk ends in one output

    /// Number of univariate subnet evaluations performed so far.
    mutable std::uint64_t subnet_forward_count = 0;

    int axes() const { return static_cast<int>(subnets.size()); }
    int rank() const { return subnets.empty() ? 0 : subnets.front().output_dim(); }
    std::size_t param_count() const;
    Eigen::VectorXd pack() const;
    void unpack(const Eigen::VectorXd &params);
};

/// Orthogonal subnets: all widths but the last two are orthogonal layers
/// (the first fed by the sin/cos encoding), the last two are dense
/// postprocess layers with tanh between them and an identity output.
/// Throws std::invalid_argument for fewer than two widths.
SpinnModel build_qo_spinn(const Architecture &arch, const std::vector<Interval> &domain, std::mt19937_64 &rng);

/// Sample locations: a factorized grid (one list per axis) or scattered
/// points (all lists share one length).
struct SampleLayout {
    enum class Kind { grid, points };

    Kind kind = Kind::grid;
    std::vector<Eigen::VectorXd> axes;

    static SampleLayout grid(std::vector<Eigen::VectorXd> axes);
    static SampleLayout points(std::vector<Eigen::VectorXd> axes);

    Eigen::Index size() const;
    std::vector<Eigen::Index> shape() const;
};

/// Which derivative tensors to materialize, per axis.
struct DerivRequest {
    std::vector<bool> first;
    std::vector<bool> second;

    static DerivRequest none(int axes);
    bool any(int axis) const { return first[axis] || second[axis]; }
};

/// u and requested derivatives, flattened per the layout. Entries that were
/// not requested stay empty. Also used for adjoints.
struct FieldBatch {
    Eigen::VectorXd u;
    std::vector<Eigen::VectorXd> du;
    std::vector<Eigen::VectorXd> d2u;
};

struct ModelCache {
    SampleLayout layout;
    DerivRequest request;
    std::vector<StackCache> subnet_caches;
    std::vector<JetBatch> subnet_out;
    std::vector<std::vector<Eigen::Index>> gather;  // concat: per axis, per point
    StackCache trunk_cache;
    JetBatch trunk_out;
    GpJetCache gp_cache;
};

/// Maps x to s = 2 (x - lo)/(hi - lo) - 1 and encodes it, as a jet batch
/// with one seed direction (or none).
JetBatch subnet_input_jets(const Subnet &subnet, const Eigen::VectorXd &x, bool with_derivatives);

/// Subnet outputs on jets; rows are output components, columns points.
JetBatch subnet_forward_jets(const Subnet &subnet, const Eigen::VectorXd &x, bool with_derivatives,
                             StackCache *cache, const DropoutContext &dropout = {});

/// Single-point convenience: one Jet2 per output component.
std::vector<Jet2> subnet_forward_jet(const Subnet &subnet, double x);

/// Plain forward of one subnet at one point, honoring circuit modes.
Eigen::VectorXd subnet_forward(const Subnet &subnet, double x, const ForwardMode &mode = {});

/// Rank-r sum of products of per-axis jet tables (r x N_j each).
FieldBatch cp_combine(const std::vector<JetBatch> &per_axis, SampleLayout::Kind kind, const DerivRequest &request);

/// Evaluates u and the requested derivatives. `cache` may be null.
FieldBatch evaluate(const SpinnModel &model, const SampleLayout &layout, const DerivRequest &request,
                    ModelCache *cache, const DropoutContext &dropout = {});

/// Reverse pass for `evaluate`. `adjoint` mirrors the FieldBatch layout
/// (empty entries count as zero). Accumulates into `grad` (pack order).
void backward(const SpinnModel &model, const ModelCache &cache, const FieldBatch &adjoint, std::span<double> grad);

/// Values only. Circuit modes run every orthogonal layer through the
/// simulated circuit point by point.
Eigen::VectorXd model_predict(const SpinnModel &model, const SampleLayout &layout, const ForwardMode &mode = {},
                              const DropoutContext &dropout = {});

/// Trunk outputs (the GP head input) for a concat model, one column per point.
Eigen::MatrixXd concat_hidden(const SpinnModel &model, const SampleLayout &layout, const DropoutContext &dropout = {});

}  // namespace orthospinn
