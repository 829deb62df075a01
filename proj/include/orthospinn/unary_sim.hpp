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

// Exact and finite-shot simulation of Hamming-weight-1 circuits built from
// RBS gates. A state on n wires lives in the n-dimensional unary subspace
// spanned by e_0..e_{n-1}, where e_i has only wire i set.

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

namespace orthospinn {

/// Amplitudes over the unary basis.
struct UnaryState {
    Eigen::VectorXd amplitudes;

    int wires() const { return static_cast<int>(amplitudes.size()); }
};

struct WirePair {
    int lo;
    int hi;

    friend bool operator==(const WirePair &, const WirePair &) = default;
};

/// RBS(theta) acting on wires (lo, hi).
struct GateSpec {
    int wire_lo;
    int wire_hi;
    double theta;
};

/// Per-index ancilla-interference probabilities and the recovered vector.
/// `shots_used` is empty for exact (infinite-shot) tomography.
struct TomographyResult {
    Eigen::VectorXd recovered;
    Eigen::VectorXd p0;
    Eigen::VectorXd p1;
    std::optional<std::uint64_t> shots_used;
};

/// Loader angles for a unit vector h of length n (n - 1 angles).
/// Throws std::domain_error if h is not unit norm within 1e-9.
Eigen::VectorXd encode_angles(const Eigen::VectorXd &h);

/// (a_lo, a_hi) <- (c a_lo + s a_hi, -s a_lo + c a_hi).
UnaryState apply_rbs(UnaryState state, const GateSpec &gate);

/// In-place rotation of two amplitudes with precomputed cos/sin.
inline void rotate_pair(Eigen::Ref<Eigen::VectorXd> a, int lo, int hi, double c, double s) {
    const double x = a[lo];
    const double y = a[hi];
    a[lo] = c * x + s * y;
    a[hi] = -s * x + c * y;
}

/// Nearest-neighbour pyramid of n(n-1)/2 gates. Throws for n < 2.
std::vector<WirePair> pyramid_gate_sequence(int n);

/// Loads |e_0> and applies the loader cascade on (0,1), (1,2), ...
/// The loader gate places +sin(gamma) on the upper wire.
UnaryState load_state(const Eigen::VectorXd &angles);

/// Runs the gate list on a state (exact).
UnaryState run_circuit(UnaryState state, const std::vector<WirePair> &gates, const Eigen::VectorXd &thetas);

/// Ancilla-assisted tomography of W h. Exact when `shots` is empty, else the
/// probabilities are empirical frequencies over `shots` joint draws.
TomographyResult tomography(const Eigen::MatrixXd &W, const Eigen::VectorXd &h, std::optional<std::uint64_t> shots,
                            std::mt19937_64 *rng);

/// Tomography of an already prepared state |y>, used by the circuit path.
TomographyResult tomography_from_state(const UnaryState &state, std::optional<std::uint64_t> shots,
                                       std::mt19937_64 *rng);

}  // namespace orthospinn
