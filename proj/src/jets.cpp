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

#include "orthospinn/jets.hpp"

#include <cmath>
#include <stdexcept>

namespace orthospinn {

Jet2 jet_binary(const Jet2 &a, const Jet2 &b, JetOp op) {
    switch (op) {
        case JetOp::add:
            return {a.v + b.v, a.d1 + b.d1, a.d2 + b.d2};
        case JetOp::sub:
            return {a.v - b.v, a.d1 - b.d1, a.d2 - b.d2};
        case JetOp::mul:
            return {a.v * b.v, a.v * b.d1 + a.d1 * b.v, a.v * b.d2 + 2.0 * a.d1 * b.d1 + a.d2 * b.v};
        case JetOp::div: {
            if (b.v == 0.0) {
                throw std::domain_error("jet division by a zero-valued jet");
            }
            // q = a / b, q' = (a' - q b') / b, q'' = (a'' - 2 q' b' - q b'') / b
            const double q = a.v / b.v;
            const double q1 = (a.d1 - q * b.d1) / b.v;
            const double q2 = (a.d2 - 2.0 * q1 * b.d1 - q * b.d2) / b.v;
            return {q, q1, q2};
        }
    }
    throw std::invalid_argument("unknown jet operation");
}

Jet2 operator+(const Jet2 &a, const Jet2 &b) { return jet_binary(a, b, JetOp::add); }
Jet2 operator-(const Jet2 &a, const Jet2 &b) { return jet_binary(a, b, JetOp::sub); }
Jet2 operator*(const Jet2 &a, const Jet2 &b) { return jet_binary(a, b, JetOp::mul); }
Jet2 operator/(const Jet2 &a, const Jet2 &b) { return jet_binary(a, b, JetOp::div); }
Jet2 operator*(double c, const Jet2 &a) { return {c * a.v, c * a.d1, c * a.d2}; }

namespace {

Jet2 chain(const Jet2 &a, const Derivs &d) {
    return {d.f, d.f1 * a.d1, d.f2 * a.d1 * a.d1 + d.f1 * a.d2};
}

}  // namespace

Jet2 jet_unary(const Jet2 &a, UnaryFn f, double scale_by) {
    switch (f) {
        case UnaryFn::tanh:
            return chain(a, tanh_derivs(a.v));
        case UnaryFn::sin:
            return chain(a, sin_derivs(a.v));
        case UnaryFn::cos:
            return chain(a, cos_derivs(a.v));
        case UnaryFn::exp: {
            const double e = std::exp(a.v);
            return chain(a, {e, e, e, e});
        }
        case UnaryFn::neg:
            return {-a.v, -a.d1, -a.d2};
        case UnaryFn::scale:
            return {scale_by * a.v, scale_by * a.d1, scale_by * a.d2};
    }
    throw std::invalid_argument("unknown unary function");
}

Derivs tanh_derivs(double x) {
    const double t = std::tanh(x);
    const double s = 1.0 - t * t;
    return {t, s, -2.0 * t * s, -2.0 * s * s + 4.0 * t * t * s};
}

Derivs sin_derivs(double x) {
    const double s = std::sin(x);
    const double c = std::cos(x);
    return {s, c, -s, -c};
}

Derivs cos_derivs(double x) {
    const double s = std::sin(x);
    const double c = std::cos(x);
    return {c, -s, -c, s};
}

Derivs sqrt_derivs(double x) {
    const double r = std::sqrt(x);
    return {r, 0.5 / r, -0.25 / (r * x), 0.375 / (r * x * x)};
}

JetBatch::JetBatch(Eigen::Index dim, Eigen::Index points, int dirs)
    : data_(Eigen::MatrixXd::Zero(dim, points * (1 + 2 * dirs))), points_(points), dirs_(dirs) {}

}  // namespace orthospinn
