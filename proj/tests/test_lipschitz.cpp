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

#include "orthospinn/lipschitz.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace orthospinn {
namespace {

using testing::jitter;

SpinnModel random_qo(int axes, int rank, std::uint64_t seed, double noise = 0.3) {
    std::mt19937_64 rng(seed);
    std::vector<Interval> domain;
    for (int k = 0; k < axes; ++k) {
        domain.push_back({0.0, 1.0 + k});
    }
    SpinnModel m = build_qo_spinn({axes, {6, 6, 6, rank}, {}}, domain, rng);
    jitter(m, rng, noise);
    return m;
}

Subnet linear_subnet(double slope) {
    Subnet s;
    s.domain = {0.0, 2.0};
    s.encoding = InputEncoding::raw;
    DenseLayer l;
    l.W = Eigen::MatrixXd::Constant(1, 1, slope);
    l.b = Eigen::VectorXd::Zero(1);
    l.activation = Activation::identity;
    s.layers.emplace_back(l);
    return s;
}

TEST(SpectralNorm, ClosedFormCases) {
    EXPECT_NEAR(spectral_norm(Eigen::MatrixXd::Identity(5, 5)), 1.0, 1e-12);
    EXPECT_NEAR(spectral_norm(Eigen::Vector2d(3.0, 1.0).asDiagonal().toDenseMatrix()), 3.0, 1e-12);
}

TEST(SpectralNorm, MatchesDenseEigenSolve) {
    for (int trial = 0; trial < 5; ++trial) {
        const Eigen::MatrixXd A = Eigen::MatrixXd::Random(20, 20);
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A.transpose() * A);
        EXPECT_NEAR(spectral_norm(A), std::sqrt(es.eigenvalues().maxCoeff()), 1e-6);
    }
    const Eigen::MatrixXd rect = Eigen::MatrixXd::Random(7, 3);
    EXPECT_NEAR(spectral_norm(rect), Eigen::JacobiSVD<Eigen::MatrixXd>(rect).singularValues()[0], 1e-6);
}

TEST(ProductSumBound, Arithmetic) {
    EXPECT_DOUBLE_EQ(product_sum_bound(2, std::vector<double>{1, 1}, std::vector<double>{3, 4}), 10.0);
    EXPECT_DOUBLE_EQ(product_sum_bound(3, std::vector<double>{0.7}, std::vector<double>{2.5}), 7.5);
    EXPECT_ANY_THROW(product_sum_bound(1, std::vector<double>{1, 2}, std::vector<double>{1}));
    EXPECT_ANY_THROW(product_sum_bound(1, std::vector<double>{0.0}, std::vector<double>{1}));
}

TEST(ProductSumBound, RescalingMatchesFormula) {
    const std::vector<double> M{0.8, 1.7, 2.2};
    const std::vector<double> L{3.0, 0.5, 1.1};
    const double c = 1.9;
    std::vector<double> cM = M;
    for (auto &m : cM) {
        m *= c;
    }
    // r * prod(cM) * sqrt(sum (L/(cM))^2) = c^(d-1) * bound.
    EXPECT_NEAR(product_sum_bound(4, cM, L), std::pow(c, 2) * product_sum_bound(4, M, L), 1e-12);
}

TEST(BoundIngredients, ConstantSubnet) {
    SpinnModel m = random_qo(1, 3, 1);
    auto &last = std::get<DenseLayer>(m.subnets[0].layers.back());
    last.W.setZero();
    last.b << 0.4, -2.0, 1.0;
    std::mt19937_64 rng(2);
    const BoundIngredients b = estimate_bound_ingredients(m.subnets[0], 500, rng);
    EXPECT_EQ(b.L, 0.0);
    EXPECT_NEAR(b.M, 2.0 * 1.05, 1e-15);
}

TEST(BoundIngredients, LinearSubnetSlope) {
    const Subnet s = linear_subnet(2.0);
    std::mt19937_64 rng(3);
    const BoundIngredients b = estimate_bound_ingredients(s, 200, rng);
    EXPECT_NEAR(b.L, 2.0 * s.input_scale(), 1e-8);
    EXPECT_NEAR(subnet_lipschitz(s, 50).L_orthogonal(), 2.0 * s.input_scale(), 1e-9);
}

TEST(BoundIngredients, NondecreasingInSampleCount) {
    const SpinnModel m = random_qo(1, 4, 4);
    double prev_L = 0.0;
    double prev_M = 0.0;
    for (int n : {10, 100, 1000, 5000}) {
        std::mt19937_64 rng(5);
        const BoundIngredients b = estimate_bound_ingredients(m.subnets[0], n, rng);
        EXPECT_GE(b.L, prev_L);
        EXPECT_GE(b.M, prev_M);
        prev_L = b.L;
        prev_M = b.M;
    }
}

TEST(EmpiricalCheck, ConstantModelHasZeroRatio) {
    SpinnModel m = random_qo(2, 3, 6);
    for (auto &s : m.subnets) {
        auto &last = std::get<DenseLayer>(s.layers.back());
        last.W.setZero();
        last.b.setConstant(0.5);
    }
    std::mt19937_64 rng(7);
    const EmpiricalCheck c = empirical_lipschitz_check(m, 1e-6, 2000, rng);
    EXPECT_EQ(c.max_ratio, 0.0);
    EXPECT_TRUE(c.pass);
}

TEST(LipschitzReport, RandomModelSatisfiesBound) {
    const SpinnModel m = random_qo(2, 4, 8, 0.5);
    const BoundReport r = lipschitz_report(m, 2000, 100000, 50, 9);
    EXPECT_EQ(r.rank, 4);
    EXPECT_GT(r.empirical_max_ratio, 0.0);
    EXPECT_TRUE(r.bound_holds()) << r.empirical_max_ratio << " vs " << r.structural_bound;
    EXPECT_LE(r.layers.max_ratio, 1.0 + 1e-9);
    EXPECT_LE(r.layers.max_spectral_deviation, 1e-9);
}

TEST(LipschitzReport, NeverViolatedAcrossRandomModels) {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const SpinnModel m = random_qo(2 + static_cast<int>(seed % 2), 2 + static_cast<int>(seed % 3), 100 + seed, 0.6);
        const BoundReport r = lipschitz_report(m, 500, 4000, 5, seed);
        ASSERT_TRUE(r.bound_holds()) << seed << ": " << r.empirical_max_ratio << " > " << r.structural_bound;
        ASSERT_GE(r.sampled_bound, r.empirical_max_ratio) << seed;
    }
}

TEST(StackingBounds, Examples) {
    const StackingBounds one = stacking_bounds(std::vector<double>{0.3}, std::vector<double>{1.4});
    EXPECT_EQ(one.m, 0.3);
    EXPECT_EQ(one.M, 1.4);
    const StackingBounds two = stacking_bounds(std::vector<double>{0.5, 0.9}, std::vector<double>{1, 2});
    EXPECT_EQ(two.m, 0.5);
    EXPECT_EQ(two.M, 2.0);
    EXPECT_ANY_THROW(stacking_bounds(std::vector<double>{1.5}, std::vector<double>{1.0}));
}

TEST(StackingCheck, BiLipschitzMapsStayInsideBounds) {
    // phi_i(x) = (a_i x + b_i sin x, c_i x) has |phi_i'| in [sqrt((a-b)^2 + c^2), sqrt((a+b)^2 + c^2)].
    const std::vector<std::array<double, 3>> coeffs{{1.0, 0.4, 0.3}, {2.0, 0.5, 0.0}, {0.7, 0.2, 0.6}};
    std::vector<std::function<Eigen::VectorXd(double)>> maps;
    std::vector<double> m, M;
    for (const auto &[a, b, c] : coeffs) {
        maps.emplace_back([a, b, c](double x) { return Eigen::Vector2d(a * x + b * std::sin(x), c * x); });
        m.push_back(std::hypot(a - b, c));
        M.push_back(std::hypot(a + b, c));
    }
    std::mt19937_64 rng(10);
    const StackingBounds bounds = stacking_bounds(m, M);
    const StackingCheck check = stacking_check(maps, {{-1, 1}, {0, 2}, {-3, 3}}, bounds, 10000, rng);
    EXPECT_TRUE(check.pass);
    EXPECT_GE(check.min_ratio, bounds.m - 1e-12);
    EXPECT_LE(check.max_ratio, bounds.M + 1e-12);
}

}  // namespace
}  // namespace orthospinn
