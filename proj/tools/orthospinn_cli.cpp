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

// orthospinn: experiment runner.
//
//   orthospinn solve     --config configs/ad1d.ini
//   orthospinn inverse   --config configs/sinegordon.ini
//   orthospinn uq        --config configs/uq_burgers.ini
//   orthospinn lipschitz --config configs/burgers.ini [--checkpoint out/model.ckpt]
//   orthospinn verify
//
// Exit status: 0 success, 1 invalid input or a failed check, 2 runtime error.

#include "orthospinn/config.hpp"
#include "orthospinn/experiments.hpp"
#include "orthospinn/pde_suite.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <malloc.h>
#include <iostream>
#include <optional>
#include <string>

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 1;
constexpr int kRuntime = 2;

struct Overrides {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::string> mode;
    std::optional<std::uint64_t> shots;
    std::optional<int> epochs;
    std::optional<std::string> checkpoint;
};

void add_common(CLI::App *cmd, Overrides &o, bool config_required) {
    auto *c = cmd->add_option("--config", o.config, "experiment config (INI)");
    if (config_required) {
        c->required();
    }
    c->check(CLI::ExistingFile);
    cmd->add_option("--seed", o.seed, "random seed");
    cmd->add_option("--out", o.out, "output directory");
    cmd->add_option("--mode", o.mode, "forward mode for evaluation")
        ->check(CLI::IsMember({"matrix", "circuit", "sampled"}));
    cmd->add_option("--shots", o.shots, "shots per tomography in sampled mode")->check(CLI::PositiveNumber);
    cmd->add_option("--epochs", o.epochs, "training epochs")->check(CLI::NonNegativeNumber);
}

orthospinn::ExperimentConfig resolve(const Overrides &o) {
    orthospinn::ExperimentConfig c = o.config.empty() ? orthospinn::parse_config("") : orthospinn::load_config(o.config);
    if (o.seed) {
        c.train.seed = *o.seed;
    }
    if (o.out) {
        c.out = *o.out;
    }
    if (o.mode) {
        c.mode = orthospinn::parse_eval_mode(*o.mode);
    }
    if (o.shots) {
        c.shots = *o.shots;
    }
    if (o.epochs) {
        c.train.epochs = *o.epochs;
    }
    // Round trip through the text form so overrides are validated like the file.
    return orthospinn::parse_config(orthospinn::format_config(c));
}

bool is_inverse(const orthospinn::ExperimentConfig &c) {
    return orthospinn::make_problem(c.problem)->learnable().has_value();
}

}  // namespace

int main(int argc, char **argv) {
    // Training allocates and frees the same large jet buffers every epoch; keep
    // them on the heap instead of round-tripping through mmap.
    mallopt(M_MMAP_THRESHOLD, 256 << 20);
    mallopt(M_TRIM_THRESHOLD, 512 << 20);
    CLI::App app{"Orthogonal separable physics-informed networks: training, uncertainty and bound analysis"};
    app.require_subcommand(1);
    Overrides o;
    auto *solve = app.add_subcommand("solve", "train a forward problem");
    auto *inverse = app.add_subcommand("inverse", "train an inverse problem and recover its coefficient");
    auto *uq = app.add_subcommand("uq", "uncertainty quantification with the GP head and an MC-dropout baseline");
    auto *verify = app.add_subcommand("verify", "run the invariant suite");
    auto *lipschitz = app.add_subcommand("lipschitz", "Lipschitz bound report for a product-sum model");
    add_common(solve, o, true);
    add_common(inverse, o, true);
    add_common(uq, o, true);
    add_common(verify, o, false);
    add_common(lipschitz, o, false);
    lipschitz->add_option("--checkpoint", o.checkpoint, "model checkpoint; trains from the config when absent")
        ->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kInvalid;
    }

    try {
        const orthospinn::ExperimentConfig config = resolve(o);
        if (solve->parsed()) {
            if (is_inverse(config)) {
                throw orthospinn::ConfigError(
                    fmt::format("{} has a learnable coefficient; use the inverse subcommand", config.problem));
            }
            orthospinn::run_solve(config, std::cout);
        } else if (inverse->parsed()) {
            if (!is_inverse(config)) {
                throw orthospinn::ConfigError(
                    fmt::format("{} has no learnable coefficient; use the solve subcommand", config.problem));
            }
            orthospinn::run_solve(config, std::cout);
        } else if (uq->parsed()) {
            const auto r = orthospinn::run_uq(config, std::cout);
            if (r.min_sigma2 < -1e-8) {
                fmt::print(stderr, "negative predictive variance {:.3e}\n", r.min_sigma2);
                return kInvalid;
            }
        } else if (verify->parsed()) {
            const auto results = orthospinn::run_verify(config, std::cout);
            const auto failed = std::count_if(results.begin(), results.end(), [](const auto &r) { return !r.pass; });
            fmt::print("{} of {} properties hold\n", results.size() - static_cast<std::size_t>(failed),
                       results.size());
            return failed == 0 ? kOk : kInvalid;
        } else if (lipschitz->parsed()) {
            const auto r = orthospinn::run_lipschitz(config, o.checkpoint, std::cout);
            const bool ok = r.bound_holds() && r.layers.max_ratio <= 1.0 + 1e-9 &&
                            r.layers.max_spectral_deviation <= 1e-9;
            fmt::print("bound {}\n", ok ? "holds" : "VIOLATED");
            return ok ? kOk : kInvalid;
        }
    } catch (const orthospinn::ConfigError &e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return kInvalid;
    } catch (const std::invalid_argument &e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return kInvalid;
    } catch (const std::exception &e) {
        fmt::print(stderr, "runtime error: {}\n", e.what());
        return kRuntime;
    }
    return kOk;
}
