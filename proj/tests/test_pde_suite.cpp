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

#include "orthospinn/pde_suite.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <numbers>
#include <random>

namespace orthospinn {
namespace {

constexpr double kPi = std::numbers::pi;

using PointFn = std::function<double(const std::vector<double> &)>;

std::vector<std::vector<double>> layout_points(const SampleLayout &layout) {
    std::vector<std::vector<double>> pts;
    const auto K = layout.axes.size();
    if (layout.kind == SampleLayout::Kind::points) {
        for (Eigen::Index p = 0; p < layout.size(); ++p) {
            std::vector<double> x(K);
            for (std::size_t k = 0; k < K; ++k) {
                x[k] = layout.axes[k][p];
            }
            pts.push_back(x);
        }
        return pts;
    }
    std::vector<Eigen::Index> idx(K, 0);
    for (Eigen::Index p = 0; p < layout.size(); ++p) {
        std::vector<double> x(K);
        for (std::size_t k = 0; k < K; ++k) {
            x[k] = layout.axes[k][idx[k]];
        }
        pts.push_back(x);
        for (std::size_t k = 0; k < K; ++k) {  // axis 0 fastest
            if (++idx[k] < layout.axes[k].size()) {
                break;
            }
            idx[k] = 0;
        }
    }
    return pts;
}

/// Fourth-order central differences for first and second derivatives along `axis`.
std::pair<double, double> derivs(const PointFn &f, std::vector<double> x, std::size_t axis, double h) {
    const double x0 = x[axis];
    auto at = [&](double dx) {
        x[axis] = x0 + dx;
        return f(x);
    };
    const double fm2 = at(-2 * h), fm1 = at(-h), f0 = at(0), fp1 = at(h), fp2 = at(2 * h);
    return {(fm2 - 8 * fm1 + 8 * fp1 - fp2) / (12 * h), (-fm2 + 16 * fm1 - 30 * f0 + 16 * fp1 - fp2) / (12 * h * h)};
}

FieldBatch fields_from(const PointFn &f, const std::vector<std::vector<double>> &pts, double h) {
    const auto K = pts.front().size();
    const auto n = static_cast<Eigen::Index>(pts.size());
    FieldBatch out{Eigen::VectorXd(n), std::vector<Eigen::VectorXd>(K, Eigen::VectorXd(n)),
                   std::vector<Eigen::VectorXd>(K, Eigen::VectorXd(n))};
    for (Eigen::Index p = 0; p < n; ++p) {
        out.u[p] = f(pts[p]);
        for (std::size_t k = 0; k < K; ++k) {
            std::tie(out.du[k][p], out.d2u[k][p]) = derivs(f, pts[p], k, h);
        }
    }
    return out;
}

FieldBatch constant_fields(double c, int K, Eigen::Index n) {
    return {Eigen::VectorXd::Constant(n, c), std::vector<Eigen::VectorXd>(K, Eigen::VectorXd::Zero(n)),
            std::vector<Eigen::VectorXd>(K, Eigen::VectorXd::Zero(n))};
}

PointFn reference_fn(const PdeProblem &problem) {
    return [&problem](const std::vector<double> &x) { return problem.reference(x); };
}

TEST(AdReference, InitialAndBoundaryValues) {
    const std::vector<double> vel{0.4, 0.4};
    for (double a : {0.1, 0.5, 0.8}) {
        for (double b : {0.3, 0.6}) {
            const std::vector<double> x{a, b};
            EXPECT_NEAR(ad_reference(x, 0.0, vel, 0.1),
                        std::exp((0.4 * a + 0.4 * b) / 0.2) * std::sin(kPi * a) * std::sin(kPi * b), 1e-13);
            EXPECT_NEAR(ad_reference(std::vector<double>{0.0, b}, 0.4, vel, 0.1), 0.0, 1e-15);
            EXPECT_NEAR(ad_reference(std::vector<double>{a, 1.0}, 0.4, vel, 0.1), 0.0, 1e-12);
        }
    }
    EXPECT_THROW(ad_reference(std::vector<double>{0.5}, 0.0, std::vector<double>{0.4}, 0.0), std::invalid_argument);
}

TEST(AdReference, AgreesWithFiniteDifferenceSolve) {
    // Crank-Nicolson on a fine grid for k = 1, D = 0.1, vel = 0.4 up to t = 0.5.
    const int nx = 400;
    const int nt = 2000;
    const double D = 0.1;
    const double v = 0.4;
    const double dx = 1.0 / nx;
    const double dt = 0.5 / nt;
    const std::vector<double> vel{v};
    Eigen::VectorXd u(nx + 1);
    for (int i = 0; i <= nx; ++i) {
        u[i] = ad_reference(std::vector<double>{i * dx}, 0.0, vel, D);
    }
    const double a = D / (dx * dx);
    const double c = v / (2 * dx);
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(nx - 1, nx - 1);
    for (int i = 0; i < nx - 1; ++i) {
        L(i, i) = -2 * a;
        if (i > 0) L(i, i - 1) = a + c;
        if (i + 2 < nx) L(i, i + 1) = a - c;
    }
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(nx - 1, nx - 1);
    const Eigen::PartialPivLU<Eigen::MatrixXd> lhs(I - 0.5 * dt * L);
    const Eigen::MatrixXd rhs = I + 0.5 * dt * L;
    Eigen::VectorXd inner = u.segment(1, nx - 1);
    for (int n = 0; n < nt; ++n) {
        inner = lhs.solve(rhs * inner);
    }
    EXPECT_NEAR(inner[nx / 2 - 1], ad_reference(std::vector<double>{0.5}, 0.5, vel, D), 1e-3);
}

TEST(AdResidual, ReferenceAnnihilatesOperatorInEveryDimension) {
    for (int k = 1; k <= 3; ++k) {
        const AdvectionDiffusion problem(k);
        const int n = k == 3 ? 8 : 20;  // 20^k points for k <= 2; a coarser cube keeps k = 3 fast
        std::vector<Eigen::Index> counts(k + 1, n);
        const SampleLayout grid = uniform_grid(problem.domain(), counts);
        const FieldBatch f = fields_from(reference_fn(problem), layout_points(grid), 1e-3);
        EXPECT_LT(problem.residual(f, 0.0).cwiseAbs().maxCoeff(), 1e-6) << k;
    }
}

TEST(AdResidual, ZeroAndConstantFields) {
    const std::vector<double> vel{0.4, 0.4};
    EXPECT_EQ(ad_residual(constant_fields(0.0, 3, 5), vel, 0.1).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(ad_residual(constant_fields(2.5, 3, 5), vel, 0.1).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_ANY_THROW(ad_residual(constant_fields(0.0, 2, 5), vel, 0.1));
}

TEST(BesselI, KnownValues) {
    EXPECT_DOUBLE_EQ(bessel_i(0, 0.0), 1.0);
    EXPECT_DOUBLE_EQ(bessel_i(1, 0.0), 0.0);
    double brute = 0.0;
    double fact = 1.0;
    for (int k = 0; k < 30; ++k) {
        if (k > 0) fact *= k;
        brute += std::pow(0.5, 2 * k) / (fact * fact);
    }
    EXPECT_NEAR(bessel_i(0, 1.0), brute, 1e-14);
    EXPECT_NEAR(bessel_i(0, 1.0), 1.2660658777, 1e-10);
    EXPECT_NEAR(bessel_i(1, 1.0), 0.5651591040, 1e-10);
}

TEST(BesselI, NonNegativeAndGuarded) {
    for (int n = 0; n < 20; ++n) {
        for (double x = 0.0; x <= 50.0; x += 2.5) {
            ASSERT_GE(bessel_i(n, x), 0.0);
        }
    }
    EXPECT_ANY_THROW(bessel_i(-1, 1.0));
    EXPECT_ANY_THROW(bessel_i(0, 1e4));
}

TEST(BurgersReference, DecaysAndIsPeriodic) {
    for (double x = 0.0; x <= 1.0; x += 0.05) {
        EXPECT_LT(std::abs(burgers_reference(x, 10.0, 0.05)), 1e-3);
        EXPECT_NEAR(burgers_reference(x, 0.3, 0.05), burgers_reference(x + 1.0, 0.3, 0.05), 1e-10);
    }
}

TEST(BurgersReference, AgreesWithFiniteDifferenceOracle) {
    const BurgersFdOracle oracle(0.05, 1024, 4096);
    double worst = 0.0;
    for (int i = 0; i <= 40; ++i) {
        for (int j = 0; j <= 40; ++j) {
            const double x = i / 40.0;
            const double t = j / 40.0;
            worst = std::max(worst, std::abs(burgers_reference(x, t, 0.05) - oracle(x, t)));
        }
    }
    EXPECT_LT(worst, 5e-3);
}

TEST(BurgersFdOracle, InitialConditionAndConservation) {
    const BurgersFdOracle oracle(0.05, 512, 2048);
    for (double x = 0.0; x < 1.0; x += 0.0625) {
        EXPECT_NEAR(oracle(x, 0.0), std::sin(2 * kPi * x), 1e-12);
    }
    for (int n = 0; n <= oracle.nt(); n += 256) {
        ASSERT_NEAR(oracle.snapshot(n).mean(), 0.0, 1e-6) << n;
    }
}

TEST(BurgersFdOracle, SelfConvergesUnderRefinement) {
    const BurgersFdOracle coarse(0.05, 512, 2048);
    const BurgersFdOracle fine(0.05, 1024, 4096);
    double worst = 0.0;
    for (int i = 0; i <= 20; ++i) {
        for (double t : {0.25, 0.5, 1.0}) {
            worst = std::max(worst, std::abs(coarse(i / 20.0, t) - fine(i / 20.0, t)));
        }
    }
    EXPECT_LT(worst, 1e-4);
}

TEST(SineGordonKink, LimitsAndCenter) {
    EXPECT_NEAR(sinegordon_kink(-200.0, 0.0, 1.0, 1.0, 0.25).value, 0.0, 1e-12);
    EXPECT_NEAR(sinegordon_kink(200.0, 0.0, 1.0, 1.0, 0.25).value, 2 * kPi, 1e-12);
    for (double t : {0.0, 1.5, 3.0}) {
        EXPECT_NEAR(sinegordon_kink(t, t, 1.0, 1.0, 0.25).value, kPi, 1e-14);
    }
    EXPECT_ANY_THROW(sinegordon_kink(0.0, 0.0, 1.0, 1.0, 1.0));
}

TEST(SineGordonKink, TimeDerivativeMatchesFiniteDifference) {
    for (double x : {-3.0, 0.2, 2.5}) {
        const double t = 0.7;
        const double h = 1e-5;
        const double fd = (sinegordon_kink(x, t + h, 1, 1, 0.25).value - sinegordon_kink(x, t - h, 1, 1, 0.25).value) / (2 * h);
        EXPECT_NEAR(sinegordon_kink(x, t, 1, 1, 0.25).time_derivative, fd, 1e-8);
    }
}

TEST(SineGordonResidual, ConstantSolutionsAndKink) {
    EXPECT_EQ(sinegordon_residual(constant_fields(0.0, 2, 4), 1.0, 0.25).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_LT(sinegordon_residual(constant_fields(kPi, 2, 4), 1.0, 0.25).cwiseAbs().maxCoeff(), 1e-15);
    const SineGordon problem;
    const SampleLayout grid = uniform_grid(problem.domain(), {81, 21});
    const FieldBatch f = fields_from(reference_fn(problem), layout_points(grid), 1e-3);
    EXPECT_LT(problem.residual(f, 0.25).cwiseAbs().maxCoeff(), 1e-6);
    EXPECT_GT(problem.residual(f, 0.5).cwiseAbs().maxCoeff(), 1e-2);
}

TEST(Burgers, ReferenceSatisfiesOperatorAwayFromTheFront) {
    // The series is smooth; check it directly with the residual helper.
    std::vector<std::vector<double>> pts;
    for (int i = 1; i < 20; ++i) {
        for (double t : {0.2, 0.5, 0.9}) {
            pts.push_back({i / 20.0, t});
        }
    }
    const PointFn f = [](const std::vector<double> &p) { return burgers_reference(p[0], p[1], 0.05); };
    EXPECT_LT(burgers_residual(fields_from(f, pts, 1e-3), 0.05).cwiseAbs().maxCoeff(), 1e-5);
}

TEST(Problems, ConstraintsMatchReferenceSolution) {
    std::mt19937_64 rng(3);
    for (const char *name : {"advection_diffusion_1d", "advection_diffusion_2d", "burgers", "sinegordon"}) {
        const auto problem = make_problem(name);
        std::vector<Eigen::VectorXd> colloc;
        for (const Interval &d : problem->domain()) {
            colloc.push_back(Eigen::VectorXd::LinSpaced(9, d.lo, d.hi));
        }
        const PointFn ref = reference_fn(*problem);
        for (const Constraint &c : problem->constraints(colloc, 0)) {
            const auto pts = layout_points(c.layout);
            const auto pick = [&](const std::vector<double> &x) {
                return c.derivative_axis < 0 ? ref(x) : derivs(ref, x, static_cast<std::size_t>(c.derivative_axis), 1e-3).first;
            };
            const double tol = c.derivative_axis < 0 ? 1e-9 : 1e-6;
            std::vector<std::vector<double>> partner_pts;
            if (c.partner) {
                partner_pts = layout_points(*c.partner);
            }
            for (std::size_t p = 0; p < pts.size(); ++p) {
                double lhs = pick(pts[p]);
                if (c.partner) {
                    lhs -= pick(partner_pts[p]);
                }
                const double target = c.target.size() ? c.target[static_cast<Eigen::Index>(p)] : 0.0;
                ASSERT_NEAR(lhs, target, tol) << name << " / " << c.name << " at point " << p;
            }
        }
    }
}

TEST(Problems, FactoryKnowsEveryProblem) {
    EXPECT_EQ(make_problem("advection_diffusion_3d")->axes(), 4);
    EXPECT_TRUE(make_problem("sinegordon")->learnable().has_value());
    EXPECT_FALSE(make_problem("burgers")->learnable().has_value());
    EXPECT_ANY_THROW(make_problem("heat"));
}

}  // namespace
}  // namespace orthospinn
