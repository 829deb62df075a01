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

#include <Eigen/Dense>

namespace orthospinn {

/// Second-order Taylor jet of a quantity with respect to one scalar input.
/// `d2` holds the raw second derivative, not the halved Taylor coefficient.
struct Jet2 {
    double v = 0.0;
    double d1 = 0.0;
    double d2 = 0.0;

    static constexpr Jet2 constant(double value) { return {value, 0.0, 0.0}; }
    static constexpr Jet2 seed(double value) { return {value, 1.0, 0.0}; }

    friend bool operator==(const Jet2 &, const Jet2 &) = default;
};

enum class JetOp { add, sub, mul, div };

/// Throws std::domain_error for division by a jet with zero value.
Jet2 jet_binary(const Jet2 &a, const Jet2 &b, JetOp op);

Jet2 operator+(const Jet2 &a, const Jet2 &b);
Jet2 operator-(const Jet2 &a, const Jet2 &b);
Jet2 operator*(const Jet2 &a, const Jet2 &b);
Jet2 operator/(const Jet2 &a, const Jet2 &b);
Jet2 operator*(double c, const Jet2 &a);

enum class UnaryFn { tanh, sin, cos, exp, neg, scale };

/// Applies f to a jet: (f(v), f'(v) d1, f''(v) d1^2 + f'(v) d2).
/// `scale_by` is only read for UnaryFn::scale.
Jet2 jet_unary(const Jet2 &a, UnaryFn f, double scale_by = 1.0);

/// Value and first three derivatives of a scalar function at a point.
struct Derivs {
    double f;
    double f1;
    double f2;
    double f3;
};

Derivs tanh_derivs(double x);
Derivs sin_derivs(double x);
Derivs cos_derivs(double x);
Derivs sqrt_derivs(double x);

/// A batch of vector-valued jets: `dim` rows, `points` columns per component.
///
/// The jet can carry several independent seed directions (no mixed terms).
/// Component 0 is the value; component 1 + 2k is the first derivative along
/// direction k and 2 + 2k the second. Components are stored side by side so
/// one GEMM applies a linear map to every component at once.
class JetBatch {
  public:
    JetBatch() = default;
    JetBatch(Eigen::Index dim, Eigen::Index points, int dirs);

    Eigen::Index dim() const { return data_.rows(); }
    Eigen::Index points() const { return points_; }
    int dirs() const { return dirs_; }
    int components() const { return 1 + 2 * dirs_; }

    Eigen::MatrixXd &data() { return data_; }
    const Eigen::MatrixXd &data() const { return data_; }

    auto comp(int c) { return data_.middleCols(c * points_, points_); }
    auto comp(int c) const { return data_.middleCols(c * points_, points_); }
    auto value() { return comp(0); }
    auto value() const { return comp(0); }
    auto d1(int dir) { return comp(1 + 2 * dir); }
    auto d1(int dir) const { return comp(1 + 2 * dir); }
    auto d2(int dir) { return comp(2 + 2 * dir); }
    auto d2(int dir) const { return comp(2 + 2 * dir); }

    void set_zero() { data_.setZero(); }

  private:
    Eigen::MatrixXd data_;
    Eigen::Index points_ = 0;
    int dirs_ = 0;
};

/// Elementwise f applied to every entry of `in`.
template <typename DerivFn>
JetBatch jet_map(const JetBatch &in, DerivFn &&fn) {
    JetBatch out(in.dim(), in.points(), in.dirs());
    const auto rows = in.dim();
    const auto cols = in.points();
    for (Eigen::Index p = 0; p < cols; ++p) {
        for (Eigen::Index r = 0; r < rows; ++r) {
            const Derivs d = fn(in.value()(r, p));
            out.value()(r, p) = d.f;
            for (int k = 0; k < in.dirs(); ++k) {
                const double a1 = in.d1(k)(r, p);
                out.d1(k)(r, p) = d.f1 * a1;
                out.d2(k)(r, p) = d.f2 * a1 * a1 + d.f1 * in.d2(k)(r, p);
            }
        }
    }
    return out;
}

/// Reverse-mode adjoint of jet_map: given the forward input and the adjoint
/// of the output, returns the adjoint of the input.
template <typename DerivFn>
JetBatch jet_map_adjoint(const JetBatch &in, const JetBatch &g_out, DerivFn &&fn) {
    JetBatch g_in(in.dim(), in.points(), in.dirs());
    const auto rows = in.dim();
    const auto cols = in.points();
    for (Eigen::Index p = 0; p < cols; ++p) {
        for (Eigen::Index r = 0; r < rows; ++r) {
            const Derivs d = fn(in.value()(r, p));
            double gv = g_out.value()(r, p) * d.f1;
            for (int k = 0; k < in.dirs(); ++k) {
                const double a1 = in.d1(k)(r, p);
                const double a2 = in.d2(k)(r, p);
                const double g1 = g_out.d1(k)(r, p);
                const double g2 = g_out.d2(k)(r, p);
                gv += g1 * d.f2 * a1 + g2 * (d.f3 * a1 * a1 + d.f2 * a2);
                g_in.d1(k)(r, p) = g1 * d.f1 + 2.0 * g2 * d.f2 * a1;
                g_in.d2(k)(r, p) = g2 * d.f1;
            }
            g_in.value()(r, p) = gv;
        }
    }
    return g_in;
}

}  // namespace orthospinn
