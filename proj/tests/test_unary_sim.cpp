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

#include "orthospinn/ortho_layer.hpp"
#include "orthospinn/unary_sim.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

namespace orthospinn {
namespace {

using testing::random_orthogonal;
using testing::unit_vector;

constexpr double kPi = std::numbers::pi;

TEST(EncodeAngles, ClosedFormCases) {
    EXPECT_NEAR(encode_angles(Eigen::Vector2d(0.0, 1.0))[0], kPi / 2, 1e-15);
    EXPECT_NEAR(encode_angles(Eigen::Vector2d(1.0, 1.0) / std::sqrt(2.0))[0], kPi / 4, 1e-15);
}

TEST(EncodeAngles, DegenerateResidualSetsRemainingAnglesToZero) {
    const Eigen::VectorXd g = encode_angles(Eigen::Vector3d(1.0, 0.0, 0.0));
    ASSERT_EQ(g.size(), 2);
    EXPECT_EQ(g[0], 0.0);
    EXPECT_EQ(g[1], 0.0);
    EXPECT_TRUE(load_state(g).amplitudes.isApprox(Eigen::Vector3d(1.0, 0.0, 0.0)));
}

TEST(EncodeAngles, RejectsNonUnitInput) {
    EXPECT_ANY_THROW(encode_angles(Eigen::Vector2d(1.0, 1.0)));
}

TEST(ApplyRbs, ZeroAngleIsIdentity) {
    UnaryState s{Eigen::Vector3d(0.6, 0.8, 0.0)};
    EXPECT_EQ(apply_rbs(s, {0, 1, 0.0}).amplitudes, s.amplitudes);
}

TEST(ApplyRbs, QuarterTurnSendsLowToMinusHigh) {
    const UnaryState out = apply_rbs(UnaryState{Eigen::Vector2d(1.0, 0.0)}, {0, 1, kPi / 2});
    EXPECT_NEAR(out.amplitudes[0], 0.0, 1e-15);
    EXPECT_NEAR(out.amplitudes[1], -1.0, 1e-15);
}

TEST(ApplyRbs, PreservesNorm) {
    std::mt19937_64 rng(3);
    UnaryState s{unit_vector(rng, 9)};
    std::uniform_real_distribution<double> angle(-kPi, kPi);
    std::uniform_int_distribution<int> wire(0, 7);
    for (int k = 0; k < 500; ++k) {
        const int lo = wire(rng);
        s = apply_rbs(s, {lo, lo + 1, angle(rng)});
        ASSERT_NEAR(s.amplitudes.squaredNorm(), 1.0, 1e-9);
    }
}

TEST(PyramidGateSequence, SmallCases) {
    EXPECT_EQ(pyramid_gate_sequence(2), (std::vector<WirePair>{{0, 1}}));
    EXPECT_EQ(pyramid_gate_sequence(4),
              (std::vector<WirePair>{{0, 1}, {1, 2}, {0, 1}, {2, 3}, {1, 2}, {0, 1}}));
    EXPECT_EQ(pyramid_gate_sequence(8).size(), 28U);
}

TEST(PyramidGateSequence, CountIsTriangular) {
    for (int n = 2; n <= 64; ++n) {
        ASSERT_EQ(pyramid_gate_sequence(n).size(), static_cast<std::size_t>(n * (n - 1) / 2)) << n;
    }
}

TEST(LoadState, TrivialCases) {
    EXPECT_EQ(load_state(Eigen::VectorXd(0)).amplitudes, Eigen::VectorXd::Ones(1));
    const Eigen::VectorXd a = load_state(Eigen::VectorXd::Constant(1, kPi / 2)).amplitudes;
    EXPECT_NEAR(a[0], 0.0, 1e-15);
    EXPECT_NEAR(a[1], 1.0, 1e-15);  // sign convention: +1
}

TEST(LoadState, RoundTripsRandomUnitVectors) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 300; ++trial) {
        const Eigen::VectorXd h = unit_vector(rng, 2 + trial % 40);
        const UnaryState s = load_state(encode_angles(h));
        ASSERT_LT((s.amplitudes - h).cwiseAbs().maxCoeff(), 1e-9);
        ASSERT_NEAR(s.amplitudes.squaredNorm(), 1.0, 1e-9);
    }
}

TEST(RunCircuit, MatchesAnglesToMatrix) {
    std::mt19937_64 rng(5);
    const int n = 7;
    const auto gates = pyramid_gate_sequence(n);
    const Eigen::VectorXd thetas = testing::uniform_vector(rng, static_cast<Eigen::Index>(gates.size()), -3, 3);
    const Eigen::VectorXd h = unit_vector(rng, n);
    const Eigen::VectorXd circuit = run_circuit(UnaryState{h}, gates, thetas).amplitudes;
    EXPECT_LT((circuit - angles_to_matrix(n, gates, thetas) * h).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Tomography, IdentityOnBasisVector) {
    const TomographyResult t = tomography(Eigen::Matrix2d::Identity(), Eigen::Vector2d(1.0, 0.0), std::nullopt, nullptr);
    const double p0 = std::pow((1.0 + 1.0 / std::sqrt(2.0)) / 2.0, 2);
    EXPECT_NEAR(t.p0[0], p0, 1e-12);
    EXPECT_NEAR(p0, 0.7286, 1e-4);
    EXPECT_NEAR(t.recovered[0], 1.0, 1e-12);
    EXPECT_NEAR(t.recovered[1], 0.0, 1e-12);
}

TEST(Tomography, NegativeComponentRecovery) {
    // Row 0 of W applied to e_0 gives -0.9 on four wires (1/sqrt(n) = 0.5).
    Eigen::Matrix4d W = Eigen::Matrix4d::Identity();
    const double s = std::sqrt(1.0 - 0.81);
    W.topLeftCorner<2, 2>() << -0.9, s, -s, -0.9;
    const TomographyResult t = tomography(W, Eigen::Vector4d(1, 0, 0, 0), std::nullopt, nullptr);
    EXPECT_NEAR(t.p0[0], 0.04, 1e-12);
    EXPECT_NEAR(t.p1[0], 0.49, 1e-12);
    EXPECT_NEAR(t.recovered[0], -0.9, 1e-12);
}

TEST(Tomography, ExactModeReproducesProductUpTo64Wires) {
    std::mt19937_64 rng(21);
    for (int n : {2, 3, 8, 17, 33, 64}) {
        const Eigen::MatrixXd W = random_orthogonal(rng, n);
        const Eigen::VectorXd h = unit_vector(rng, n);
        const TomographyResult t = tomography(W, h, std::nullopt, nullptr);
        ASSERT_LT((t.recovered - W * h).cwiseAbs().maxCoeff(), 1e-9) << n;
        ASSERT_FALSE(t.shots_used.has_value());
    }
}

TEST(Tomography, SampledModeWithinShotNoise) {
    std::mt19937_64 setup(8);
    const Eigen::MatrixXd W = random_orthogonal(setup, 8);
    const Eigen::VectorXd h = unit_vector(setup, 8);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        std::mt19937_64 rng(seed);
        const TomographyResult t = tomography(W, h, 1000000, &rng);
        ASSERT_LE((t.recovered - W * h).cwiseAbs().maxCoeff(), 5e-3) << seed;
        ASSERT_EQ(t.shots_used, 1000000U);
    }
}

TEST(Tomography, SampledModeIsSeedDeterministic) {
    std::mt19937_64 setup(2);
    const Eigen::MatrixXd W = random_orthogonal(setup, 5);
    const Eigen::VectorXd h = unit_vector(setup, 5);
    std::mt19937_64 a(99), b(99);
    EXPECT_EQ(tomography(W, h, 5000, &a).recovered, tomography(W, h, 5000, &b).recovered);
}

TEST(Tomography, RejectsBadArguments) {
    std::mt19937_64 rng(1);
    const Eigen::Vector2d h(1.0, 0.0);
    EXPECT_ANY_THROW(tomography(Eigen::Matrix2d::Identity(), h, 0, &rng));
    EXPECT_ANY_THROW(tomography(Eigen::Matrix2d::Constant(1.0), h, std::nullopt, nullptr));
}

}  // namespace
}  // namespace orthospinn
