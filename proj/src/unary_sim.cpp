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

#include "orthospinn/unary_sim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace orthospinn {

namespace {

constexpr double kUnitTolerance = 1e-9;

void require_unit(const Eigen::VectorXd &h, const char *what) {
    const double norm = h.norm();
    if (std::abs(norm - 1.0) > kUnitTolerance) {
        throw std::domain_error(fmt::format("{}: expected a unit vector, got norm {}", what, norm));
    }
}

}  // namespace

Eigen::VectorXd encode_angles(const Eigen::VectorXd &h) {
    if (h.size() == 0) {
        throw std::invalid_argument("encode_angles: empty vector");
    }
    require_unit(h, "encode_angles");
    const Eigen::Index n = h.size();
    Eigen::VectorXd angles = Eigen::VectorXd::Zero(n - 1);
    // gamma_i = atan2(|h_{i+1..}|, h_i). Unlike arccos of a ratio this keeps
    // full precision when one component dominates.
    Eigen::VectorXd tail_sq(n);
    tail_sq[n - 1] = 0.0;
    for (Eigen::Index i = n - 1; i > 0; --i) {
        tail_sq[i - 1] = tail_sq[i] + h[i] * h[i];
    }
    for (Eigen::Index i = 0; i + 2 < n; ++i) {
        angles[i] = std::atan2(std::sqrt(tail_sq[i]), h[i]);
    }
    // The last angle carries the sign of the final amplitude.
    if (n >= 2) {
        angles[n - 2] = std::atan2(h[n - 1], h[n - 2]);
    }
    return angles;
}

UnaryState apply_rbs(UnaryState state, const GateSpec &gate) {
    const int n = state.wires();
    if (gate.wire_lo < 0 || gate.wire_hi >= n || gate.wire_lo >= gate.wire_hi) {
        throw std::out_of_range(
            fmt::format("apply_rbs: invalid wires ({}, {}) for {} wires", gate.wire_lo, gate.wire_hi, n));
    }
    rotate_pair(state.amplitudes, gate.wire_lo, gate.wire_hi, std::cos(gate.theta), std::sin(gate.theta));
    return state;
}

std::vector<WirePair> pyramid_gate_sequence(int n) {
    if (n < 2) {
        throw std::invalid_argument(fmt::format("pyramid_gate_sequence: need at least 2 wires, got {}", n));
    }
    std::vector<WirePair> gates;
    gates.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
    for (int top = 1; top < n; ++top) {
        for (int lo = top - 1; lo >= 0; --lo) {
            gates.push_back({lo, lo + 1});
        }
    }
    return gates;
}

UnaryState load_state(const Eigen::VectorXd &angles) {
    const Eigen::Index n = angles.size() + 1;
    UnaryState state{Eigen::VectorXd::Zero(n)};
    state.amplitudes[0] = 1.0;
    for (Eigen::Index k = 0; k + 1 < n; ++k) {
        // Loader orientation is the transpose of apply_rbs: RBS(-gamma).
        rotate_pair(state.amplitudes, static_cast<int>(k), static_cast<int>(k + 1), std::cos(angles[k]),
                    -std::sin(angles[k]));
    }
    return state;
}

UnaryState run_circuit(UnaryState state, const std::vector<WirePair> &gates, const Eigen::VectorXd &thetas) {
    if (static_cast<Eigen::Index>(gates.size()) != thetas.size()) {
        throw std::invalid_argument("run_circuit: gate/angle count mismatch");
    }
    for (std::size_t t = 0; t < gates.size(); ++t) {
        if (gates[t].hi >= state.wires()) {
            throw std::out_of_range("run_circuit: gate outside the register");
        }
        rotate_pair(state.amplitudes, gates[t].lo, gates[t].hi, std::cos(thetas[t]), std::sin(thetas[t]));
    }
    return state;
}

namespace {

// Multinomial draw via a chain of binomials; distributionally identical to
// `shots` independent categorical samples.
Eigen::VectorXd sample_frequencies(const Eigen::VectorXd &probs, std::uint64_t shots, std::mt19937_64 &rng) {
    Eigen::VectorXd freq = Eigen::VectorXd::Zero(probs.size());
    std::uint64_t remaining = shots;
    double mass_left = probs.sum();
    for (Eigen::Index k = 0; k < probs.size() && remaining > 0; ++k) {
        std::uint64_t count = remaining;
        if (k + 1 < probs.size()) {
            const double q = mass_left > 0.0 ? std::clamp(probs[k] / mass_left, 0.0, 1.0) : 0.0;
            std::binomial_distribution<std::uint64_t> draw(remaining, q);
            count = draw(rng);
        }
        freq[k] = static_cast<double>(count) / static_cast<double>(shots);
        remaining -= count;
        mass_left -= probs[k];
    }
    return freq;
}

}  // namespace

TomographyResult tomography_from_state(const UnaryState &state, std::optional<std::uint64_t> shots,
                                       std::mt19937_64 *rng) {
    if (shots && *shots == 0) {
        throw std::invalid_argument("tomography: shots must be positive");
    }
    if (shots && rng == nullptr) {
        throw std::invalid_argument("tomography: sampled mode needs a generator");
    }
    const Eigen::Index n = state.amplitudes.size();
    const double u = 1.0 / std::sqrt(static_cast<double>(n));
    TomographyResult result;
    result.p0 = (state.amplitudes.array() + u).square() / 4.0;
    result.p1 = (state.amplitudes.array() - u).square() / 4.0;
    result.shots_used = shots;
    if (shots) {
        Eigen::VectorXd joint(2 * n);
        joint << result.p0, result.p1;
        const Eigen::VectorXd freq = sample_frequencies(joint, *shots, *rng);
        result.p0 = freq.head(n);
        result.p1 = freq.tail(n);
    }
    result.recovered.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        // Positive sign iff p0 > p1; the magnitude comes from whichever branch
        // interfered constructively, |a| = 2 sqrt(max(p0, p1)) - 1/sqrt(n).
        const bool positive = result.p0[i] > result.p1[i];
        const double magnitude = 2.0 * std::sqrt(positive ? result.p0[i] : result.p1[i]) - u;
        result.recovered[i] = positive ? magnitude : -magnitude;
    }
    return result;
}

TomographyResult tomography(const Eigen::MatrixXd &W, const Eigen::VectorXd &h, std::optional<std::uint64_t> shots,
                            std::mt19937_64 *rng) {
    if (W.rows() != W.cols() || W.cols() != h.size()) {
        throw std::invalid_argument("tomography: dimension mismatch");
    }
    const double defect = (W.transpose() * W - Eigen::MatrixXd::Identity(W.rows(), W.cols())).cwiseAbs().maxCoeff();
    if (defect > 1e-8) {
        throw std::domain_error(fmt::format("tomography: W is not orthogonal (defect {})", defect));
    }
    require_unit(h, "tomography");
    return tomography_from_state(UnaryState{W * h}, shots, rng);
}

}  // namespace orthospinn
