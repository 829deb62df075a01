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

#include "orthospinn/verify.hpp"

#include "orthospinn/gp_head.hpp"
#include "orthospinn/lipschitz.hpp"
#include "orthospinn/ortho_layer.hpp"
#include "orthospinn/pde_suite.hpp"
#include "orthospinn/spinn_model.hpp"
#include "orthospinn/trainer.hpp"
#include "orthospinn/unary_sim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

namespace orthospinn {

namespace {

using Clock = std::chrono::steady_clock;

template <typename F>
CheckResult timed(F &&f) {
    const auto t0 = Clock::now();
    CheckResult r = f();
    r.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    return r;
}

double uniform(std::mt19937_64 &rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

int uniform_int(std::mt19937_64 &rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

Eigen::VectorXd uniform_vector(std::mt19937_64 &rng, Eigen::Index n, double lo, double hi) {
    Eigen::VectorXd v(n);
    for (auto &x : v) {
        x = uniform(rng, lo, hi);
    }
    return v;
}

Eigen::VectorXd unit_vector(std::mt19937_64 &rng, Eigen::Index n) {
    std::normal_distribution<double> normal;
    Eigen::VectorXd v(n);
    for (auto &x : v) {
        x = normal(rng);
    }
    return v / v.norm();
}

// A raw-input layer on exactly `wires` wires with angles spread over the
// full circle, so the transform is far from the identity.
PyramidLayer random_layer(std::mt19937_64 &rng, int wires, Activation act = Activation::tanh) {
    const int d_out = uniform_int(rng, 1, wires);
    PyramidLayer layer = PyramidLayer::create(wires - 1, d_out, InputKind::raw, act, rng);
    layer.thetas = uniform_vector(rng, layer.thetas.size(), -std::numbers::pi, std::numbers::pi);
    layer.bias = uniform_vector(rng, d_out, -0.5, 0.5);
    return layer;
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6}); }

// Randomizes every parameter of a model around its initialization.
void jitter(SpinnModel &model, std::mt19937_64 &rng, double scale) {
    Eigen::VectorXd p = model.pack();
    std::normal_distribution<double> normal(0.0, scale);
    for (auto &x : p) {
        x += normal(rng);
    }
    model.unpack(p);
}

}  // namespace

CheckResult check_orthogonality(int layers, int max_wires, std::uint64_t seed) {
    return timed([&] {
        std::mt19937_64 rng(seed);
        double worst = 0.0;
        for (int i = 0; i < layers; ++i) {
            const PyramidLayer layer = random_layer(rng, uniform_int(rng, 2, max_wires));
            worst = std::max(worst, orthogonality_defect(angles_to_matrix(layer)));
        }
        return CheckResult{"orthogonality", worst < 1e-9, worst, 1e-9,
                           fmt::format("max |W^T W - I| over {} layers up to n={}", layers, max_wires)};
    });
}

CheckResult check_mode_equivalence(int layers, int max_wires, std::uint64_t seed) {
    return timed([&] {
        std::mt19937_64 rng(seed);
        double worst = 0.0;
        for (int i = 0; i < layers; ++i) {
            const PyramidLayer layer = random_layer(rng, uniform_int(rng, 2, max_wires));
            const Eigen::VectorXd h = uniform_vector(rng, layer.d_in, -1.0, 1.0);
            const Eigen::VectorXd a = layer_forward(layer, h, ForwardMode::matrix()).output;
            const Eigen::VectorXd b = layer_forward(layer, h, ForwardMode::circuit_exact()).output;
            worst = std::max(worst, (a - b).cwiseAbs().maxCoeff());
        }
        return CheckResult{"matrix_vs_circuit", worst < 1e-9, worst, 1e-9,
                           fmt::format("max forward discrepancy over {} layers up to n={}", layers, max_wires)};
    });
}

CheckResult check_tomography_exact(int trials, std::uint64_t seed) {
    return timed([&] {
        std::mt19937_64 rng(seed);
        double worst = 0.0;
        for (int i = 0; i < trials; ++i) {
            const int n = uniform_int(rng, 2, 16);
            const auto gates = pyramid_gate_sequence(n);
            const Eigen::MatrixXd W =
                angles_to_matrix(n, gates, uniform_vector(rng, static_cast<Eigen::Index>(gates.size()), -3.0, 3.0));
            const Eigen::VectorXd h = unit_vector(rng, n);
            const TomographyResult t = tomography(W, h, std::nullopt, nullptr);
            worst = std::max(worst, (t.recovered - W * h).cwiseAbs().maxCoeff());
        }
        return CheckResult{"tomography_exact", worst < 1e-9, worst, 1e-9,
                           fmt::format("max |recovered - W h| over {} random circuits", trials)};
    });
}

namespace {

struct SampledStats {
    double max_error = 0.0;
    double rms = 0.0;  // root mean square over all components of all runs
};

SampledStats sampled_tomography(int wires, std::uint64_t shots, int seeds, std::uint64_t seed) {
    std::mt19937_64 setup(seed);
    const auto gates = pyramid_gate_sequence(wires);
    const Eigen::MatrixXd W =
        angles_to_matrix(wires, gates, uniform_vector(setup, static_cast<Eigen::Index>(gates.size()), -3.0, 3.0));
    const Eigen::VectorXd h = unit_vector(setup, wires);
    const Eigen::VectorXd y = W * h;
    SampledStats s;
    double sq = 0.0;
    for (int k = 0; k < seeds; ++k) {
        std::mt19937_64 rng(seed + 1000 + static_cast<std::uint64_t>(k));
        const Eigen::VectorXd e = tomography(W, h, shots, &rng).recovered - y;
        s.max_error = std::max(s.max_error, e.cwiseAbs().maxCoeff());
        sq += e.squaredNorm();
    }
    s.rms = std::sqrt(sq / (static_cast<double>(seeds) * wires));
    return s;
}

}  // namespace

CheckResult check_tomography_sampled(int wires, std::uint64_t shots, int seeds, std::uint64_t seed) {
    return timed([&] {
        const SampledStats s = sampled_tomography(wires, shots, seeds, seed);
        return CheckResult{"tomography_sampled", s.max_error <= 5e-3, s.max_error, 5e-3,
                           fmt::format("max component error, n={}, {} shots, {} seeds", wires, shots, seeds)};
    });
}

CheckResult check_tomography_scaling(int wires, std::uint64_t shots, int seeds, std::uint64_t seed) {
    return timed([&] {
        const SampledStats lo = sampled_tomography(wires, shots, seeds, seed);
        const SampledStats hi = sampled_tomography(wires, 100 * shots, seeds, seed);
        const double ratio = lo.rms / hi.rms;
        return CheckResult{"tomography_scaling", ratio >= 7.0 && ratio <= 13.0, ratio, 10.0,
                           fmt::format("RMS error ratio {:.3e} / {:.3e} for shots {} -> {} (accept 10 +- 30%)",
                                       lo.rms, hi.rms, shots, 100 * shots)};
    });
}

CheckResult check_angle_gradients(int layers, std::uint64_t seed) {
    return timed([&] {
        std::mt19937_64 rng(seed);
        double worst = 0.0;
        for (int i = 0; i < layers; ++i) {
            const PyramidLayer layer = random_layer(rng, uniform_int(rng, 2, 12));
            const Eigen::VectorXd h = uniform_vector(rng, layer.d_in, -1.0, 1.0);
            const Eigen::VectorXd w = uniform_vector(rng, layer.d_out, -1.0, 1.0);
            auto loss = [&](const PyramidLayer &l) { return w.dot(layer_forward(l, h).output); };
            const LayerOutput fwd = layer_forward(layer, h);
            const LayerGradients g = layer_backward(layer, fwd.tape, w);
            const double step = 1e-5;
            for (Eigen::Index t = 0; t < layer.thetas.size(); ++t) {
                PyramidLayer p = layer;
                p.thetas[t] += step;
                const double fp = loss(p);
                p.thetas[t] -= 2 * step;
                const double fm = loss(p);
                worst = std::max(worst, rel_err((fp - fm) / (2 * step), g.theta_grad[t]));
            }
        }
        return CheckResult{"angle_gradients", worst < 1e-4, worst, 1e-4,
                           fmt::format("max relative error vs central differences over {} layers", layers)};
    });
}

CheckResult check_loss_gradients(std::uint64_t seed) {
    return timed([&] {
        std::mt19937_64 rng(seed);
        double worst = 0.0;
        std::string where;
        int checked = 0;
        for (const std::string name : {"advection_diffusion_1d", "burgers", "sinegordon"}) {
            const auto problem = make_problem(name);
            const Architecture arch{problem->axes(), {4, 4, 4, 2}, {}};
            SpinnModel model = build_qo_spinn(arch, problem->domain(), rng);
            jitter(model, rng, 0.3);
            const TrainingSet set = sample_training_set(*problem, 3, 0, rng);
            const double param = problem->learnable() ? 0.7 : 0.0;
            for (const bool factorized : {false, true}) {
                LossOptions opt;
                opt.factorized_residual = factorized;
                const LossEvaluation L = assemble_loss(model, *problem, set, param, opt);
                const Eigen::VectorXd theta = model.pack();
                const double step = 1e-5;
                SpinnModel probe = model;
                for (Eigen::Index i = 0; i < theta.size(); ++i) {
                    Eigen::VectorXd t = theta;
                    t[i] += step;
                    probe.unpack(t);
                    const double fp = assemble_loss(probe, *problem, set, param, opt).parts.total;
                    t[i] -= 2 * step;
                    probe.unpack(t);
                    const double fm = assemble_loss(probe, *problem, set, param, opt).parts.total;
                    const double e = rel_err((fp - fm) / (2 * step), L.grad[i]);
                    if (e > worst) {
                        worst = e;
                        where = fmt::format("{} parameter {}", name, i);
                    }
                    ++checked;
                }
                if (problem->learnable()) {
                    const double fp = assemble_loss(model, *problem, set, param + step, opt).parts.total;
                    const double fm = assemble_loss(model, *problem, set, param - step, opt).parts.total;
                    const double e = rel_err((fp - fm) / (2 * step), L.grad_param);
                    if (e > worst) {
                        worst = e;
                        where = fmt::format("{} physical parameter", name);
                    }
                    ++checked;
                }
            }
        }
        return CheckResult{"loss_gradients", worst < 1e-4, worst, 1e-4,
                           fmt::format("max relative error over {} partials (worst: {})", checked,
                                       where.empty() ? "none" : where)};
    });
}

CheckResult check_jet_derivatives(int subnets, std::uint64_t seed) {
    return timed([&] {
        std::mt19937_64 rng(seed);
        double worst1 = 0.0;
        double worst2 = 0.0;
        for (int i = 0; i < subnets; ++i) {
            const Architecture arch{1, {6, 5, 7, 3}, {}};
            SpinnModel model = build_qo_spinn(arch, {{-1.0, 2.0}}, rng);
            jitter(model, rng, 0.3);
            const Subnet &s = model.subnets[0];
            for (int k = 0; k < 5; ++k) {
                const double x = uniform(rng, -0.9, 1.9);
                const auto jets = subnet_forward_jet(s, x);
                const double h1 = 1e-4;
                const double h2 = 1e-3;
                const Eigen::VectorXd f0 = subnet_forward(s, x);
                const Eigen::VectorXd fp1 = subnet_forward(s, x + h1);
                const Eigen::VectorXd fm1 = subnet_forward(s, x - h1);
                const Eigen::VectorXd fp2 = subnet_forward(s, x + h2);
                const Eigen::VectorXd fm2 = subnet_forward(s, x - h2);
                for (Eigen::Index j = 0; j < f0.size(); ++j) {
                    const auto &jet = jets[static_cast<std::size_t>(j)];
                    worst1 = std::max(worst1, std::abs(jet.d1 - (fp1[j] - fm1[j]) / (2 * h1)));
                    worst2 = std::max(worst2, std::abs(jet.d2 - (fp2[j] - 2 * f0[j] + fm2[j]) / (h2 * h2)));
                }
            }
        }
        const bool pass = worst1 < 1e-5 && worst2 < 1e-4;
        return CheckResult{"jet_derivatives", pass, std::max(worst1 / 1e-5, worst2 / 1e-4), 1.0,
                           fmt::format("first {:.3e} (tol 1e-5), second {:.3e} (tol 1e-4); value is the larger "
                                       "error-to-tolerance ratio",
                                       worst1, worst2)};
    });
}

CheckResult check_forward_count(int n, std::uint64_t seed) {
    return timed([&] {
        std::mt19937_64 rng(seed);
        const SpinnModel model = build_qo_spinn({2, {8, 8, 8, 4}, {}}, {{0.0, 1.0}, {0.0, 1.0}}, rng);
        const std::vector<Eigen::VectorXd> axes(2, Eigen::VectorXd::LinSpaced(n, 0.0, 1.0));
        model.subnet_forward_count = 0;
        model_predict(model, SampleLayout::grid(axes));
        const std::uint64_t plain = model.subnet_forward_count;
        model.subnet_forward_count = 0;
        DerivRequest req = DerivRequest::none(2);
        req.first = {true, true};
        req.second = {true, false};
        evaluate(model, SampleLayout::grid(axes), req, nullptr);
        const std::uint64_t with_derivs = model.subnet_forward_count;
        const auto expected = static_cast<std::uint64_t>(2 * n);
        return CheckResult{"forward_count", plain == expected && with_derivs == expected,
                           static_cast<double>(std::max(plain, with_derivs)), static_cast<double>(expected),
                           fmt::format("{}x{} grid: {} passes for values, {} with derivatives (expected {})", n, n,
                                       plain, with_derivs, expected)};
    });
}

CheckResult check_loader_roundtrip(int trials, std::uint64_t seed) {
    return timed([&] {
        std::mt19937_64 rng(seed);
        double worst = 0.0;
        for (int i = 0; i < trials; ++i) {
            const Eigen::VectorXd h = unit_vector(rng, uniform_int(rng, 2, 32));
            worst = std::max(worst, (load_state(encode_angles(h)).amplitudes - h).cwiseAbs().maxCoeff());
            const Eigen::VectorXd raw = uniform_vector(rng, uniform_int(rng, 1, 31), -1.0, 1.0);
            worst = std::max(worst, std::abs(preprocess_input(raw).norm() - 1.0));
        }
        return CheckResult{"unary_loading", worst < 1e-12, worst, 1e-12,
                           "loader reproduces unit vectors; preprocessing yields unit norm"};
    });
}

CheckResult check_factorized_pointwise(std::uint64_t seed) {
    return timed([&] {
        std::mt19937_64 rng(seed);
        SpinnModel model = build_qo_spinn({2, {6, 6, 6, 4}, {}}, {{0.0, 1.0}, {-1.0, 1.0}}, rng);
        jitter(model, rng, 0.3);
        const std::vector<Eigen::VectorXd> axes{uniform_vector(rng, 7, 0.0, 1.0), uniform_vector(rng, 5, -1.0, 1.0)};
        const Eigen::VectorXd grid = model_predict(model, SampleLayout::grid(axes));
        std::vector<Eigen::VectorXd> pts(2, Eigen::VectorXd(35));
        for (int j = 0; j < 5; ++j) {
            for (int i = 0; i < 7; ++i) {
                pts[0][i + 7 * j] = axes[0][i];
                pts[1][i + 7 * j] = axes[1][j];
            }
        }
        const Eigen::VectorXd pointwise = model_predict(model, SampleLayout::points(pts));
        const double err = (grid - pointwise).cwiseAbs().maxCoeff();
        return CheckResult{"factorized_vs_pointwise", err < 1e-12, err, 1e-12,
                           "grid evaluation against independent per-point evaluation"};
    });
}

CheckResult check_layer_lipschitz(std::uint64_t seed) {
    return timed([&] {
        std::mt19937_64 rng(seed);
        SpinnModel model = build_qo_spinn({2, {12, 10, 8, 4}, {}}, {{0.0, 1.0}, {0.0, 1.0}}, rng);
        jitter(model, rng, 0.5);
        const LayerAudit audit = audit_orthogonal_layers(model, 500, rng);
        const bool pass = audit.max_ratio <= 1.0 + 1e-9 && audit.max_spectral_deviation <= 1e-9;
        return CheckResult{"layer_lipschitz", pass, audit.max_ratio, 1.0 + 1e-9,
                           fmt::format("{} layers; max output/preprocessed-input ratio {:.6f}; max |spectral norm "
                                       "- 1| {:.3e}",
                                       audit.layers, audit.max_ratio, audit.max_spectral_deviation)};
    });
}

CheckResult check_resblock_bilipschitz(std::uint64_t seed) {
    return timed([&] {
        std::mt19937_64 rng(seed);
        double lo = std::numeric_limits<double>::infinity();
        double hi = 0.0;
        for (int b = 0; b < 20; ++b) {
            const int d = uniform_int(rng, 2, 24);
            ResBlock block = ResBlock::create(d, rng, 2.0);
            block.inner.thetas = uniform_vector(rng, block.inner.thetas.size(), -3.0, 3.0);
            block.inner.bias = uniform_vector(rng, d, -0.5, 0.5);
            const std::vector<Layer> stack{block};
            for (int p = 0; p < 200; ++p) {
                const Eigen::VectorXd x = uniform_vector(rng, d, -1.0, 1.0);
                const Eigen::VectorXd y = uniform_vector(rng, d, -1.0, 1.0);
                const double r = (stack_forward(stack, x) - stack_forward(stack, y)).norm() / (x - y).norm();
                lo = std::min(lo, r);
                hi = std::max(hi, r);
            }
        }
        const bool pass = lo >= 0.05 && hi <= 2.0;
        return CheckResult{"resblock_bilipschitz", pass, hi, 2.0,
                           fmt::format("ratios in [{:.4f}, {:.4f}], required within [0.05, 2]", lo, hi)};
    });
}

CheckResult check_gp_posterior(std::uint64_t seed) {
    return timed([&] {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> normal;
        Eigen::MatrixXd Phi(50, 32);
        for (auto &x : Phi.reshaped()) {
            x = normal(rng);
        }
        const double tau = 1.0;
        const Eigen::MatrixXd direct =
            (Eigen::MatrixXd::Identity(32, 32) + Phi.transpose() * Phi / tau).inverse();
        const Eigen::MatrixXd kernel = gp_posterior(Phi, tau, PosteriorSolver::kernel);
        const Eigen::MatrixXd feature = gp_posterior(Phi, tau, PosteriorSolver::feature);
        const double err = std::max((kernel - direct).cwiseAbs().maxCoeff(), (feature - direct).cwiseAbs().maxCoeff());
        const double min_eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(kernel).eigenvalues().minCoeff();
        const bool pass = err < 1e-8 && min_eig >= -1e-8;
        return CheckResult{"gp_posterior", pass, err, 1e-8,
                           fmt::format("Woodbury forms vs dense inverse; min eigenvalue {:.3e}", min_eig)};
    });
}

CheckResult check_training_determinism(std::uint64_t seed) {
    return timed([&] {
        const auto problem = make_problem("advection_diffusion_1d");
        TrainConfig cfg;
        cfg.epochs = 60;
        cfg.log_every = 10;
        cfg.collocation_total = 40;
        cfg.eval_points_per_axis = 11;
        cfg.seed = seed;
        auto run = [&] {
            std::mt19937_64 rng(seed);
            SpinnModel model = build_qo_spinn({2, {6, 6, 6, 4}, {}}, problem->domain(), rng);
            TrainResult r = train(model, *problem, cfg);
            double defect = 0.0;
            for (const auto &s : model.subnets) {
                for (const auto &l : s.layers) {
                    if (const auto *p = std::get_if<PyramidLayer>(&l)) {
                        defect = std::max(defect, orthogonality_defect(angles_to_matrix(*p)));
                    }
                }
            }
            return std::make_pair(r, defect);
        };
        const auto [a, da] = run();
        const auto [b, db] = run();
        bool same = a.history.size() == b.history.size();
        for (std::size_t i = 0; same && i < a.history.size(); ++i) {
            same = a.history[i].loss.total == b.history[i].loss.total && a.history[i].eval_mse == b.history[i].eval_mse;
        }
        const double defect = std::max(da, db);
        return CheckResult{"training_determinism", same && defect < 1e-9, defect, 1e-9,
                           fmt::format("bitwise-identical histories: {}; orthogonality defect after training {:.3e}",
                                       same ? "yes" : "no", defect)};
    });
}

CheckResult check_burgers_oracles() {
    return timed([&] {
        const Burgers problem;
        const BurgersFdOracle &fd = problem.oracle();
        double worst = 0.0;
        for (double t : {0.1, 0.25, 0.5, 0.75, 1.0}) {
            for (int i = 0; i <= 64; ++i) {
                const double x = i / 64.0;
                worst = std::max(worst, std::abs(fd(x, t) - burgers_reference(x, t, problem.viscosity())));
            }
        }
        return CheckResult{"burgers_oracles", worst < 5e-3, worst, 5e-3,
                           "finite-difference oracle against the Cole-Hopf series"};
    });
}

std::vector<CheckResult> run_invariant_suite(std::uint64_t seed) {
    std::vector<CheckResult> out;
    out.push_back(check_orthogonality(1000, 32, seed));
    out.push_back(check_mode_equivalence(1000, 32, seed + 1));
    out.push_back(check_loader_roundtrip(200, seed + 2));
    out.push_back(check_tomography_exact(200, seed + 3));
    out.push_back(check_tomography_sampled(8, 1000000, 20, seed + 4));
    out.push_back(check_tomography_scaling(8, 10000, 20, seed + 5));
    out.push_back(check_angle_gradients(20, seed + 6));
    out.push_back(check_loss_gradients(seed + 7));
    out.push_back(check_jet_derivatives(10, seed + 8));
    out.push_back(check_forward_count(64, seed + 9));
    out.push_back(check_factorized_pointwise(seed + 10));
    out.push_back(check_layer_lipschitz(seed + 11));
    out.push_back(check_resblock_bilipschitz(seed + 12));
    out.push_back(check_gp_posterior(seed + 13));
    out.push_back(check_training_determinism(seed + 14));
    out.push_back(check_burgers_oracles());
    return out;
}

}  // namespace orthospinn
