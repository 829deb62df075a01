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

// Self-checks of the structural invariants, each returning a measured
// statistic and a pass flag against a fixed tolerance.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace orthospinn {

struct CheckResult {
    std::string name;
    bool pass = false;
    double value = 0.0;      // the measured statistic
    double tolerance = 0.0;  // what it was compared against
    std::string detail;
    double seconds = 0.0;
};

/// Random pyramids up to `max_wires`: max |W^T W - I| and the largest
/// matrix-versus-circuit forward discrepancy, both against 1e-9.
CheckResult check_orthogonality(int layers, int max_wires, std::uint64_t seed);
CheckResult check_mode_equivalence(int layers, int max_wires, std::uint64_t seed);

/// Exact tomography of W h against the product, tolerance 1e-9.
CheckResult check_tomography_exact(int trials, std::uint64_t seed);
/// Max component error of sampled tomography on `wires` wires over `seeds`
/// independent runs at `shots` shots, tolerance 5e-3.
CheckResult check_tomography_sampled(int wires, std::uint64_t shots, int seeds, std::uint64_t seed);
/// Ratio of RMS errors at shots and 100 * shots; passes inside 10 +- 30%.
CheckResult check_tomography_scaling(int wires, std::uint64_t shots, int seeds, std::uint64_t seed);

/// Angle gradients of random layers against central differences (relative 1e-4).
CheckResult check_angle_gradients(int layers, std::uint64_t seed);
/// Every parameter gradient of the full loss on tiny models of each
/// problem against central differences with step 1e-5 (relative 1e-4).
CheckResult check_loss_gradients(std::uint64_t seed);
/// Jet first / second derivatives of random subnets against finite
/// differences (1e-5 / 1e-4).
CheckResult check_jet_derivatives(int subnets, std::uint64_t seed);

/// Subnet passes for an n x n grid of a two-axis model; passes iff exactly 2n.
CheckResult check_forward_count(int n, std::uint64_t seed);

/// Remaining structural properties.
CheckResult check_loader_roundtrip(int trials, std::uint64_t seed);
CheckResult check_factorized_pointwise(std::uint64_t seed);
CheckResult check_layer_lipschitz(std::uint64_t seed);
CheckResult check_resblock_bilipschitz(std::uint64_t seed);
CheckResult check_gp_posterior(std::uint64_t seed);
CheckResult check_training_determinism(std::uint64_t seed);
CheckResult check_burgers_oracles();

/// The full suite used by the `verify` subcommand.
std::vector<CheckResult> run_invariant_suite(std::uint64_t seed);

}  // namespace orthospinn
