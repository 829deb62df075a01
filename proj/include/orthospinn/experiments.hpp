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

// Experiment drivers behind the command-line subcommands. Each one runs
// from an ExperimentConfig, writes its artifacts under config.out and
// returns the numbers the caller needs to decide pass or fail.

#pragma once

#include "orthospinn/config.hpp"
#include "orthospinn/lipschitz.hpp"
#include "orthospinn/spinn_model.hpp"
#include "orthospinn/trainer.hpp"
#include "orthospinn/uq.hpp"
#include "orthospinn/verify.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace orthospinn {

struct SolveOutcome {
    SpinnModel model;
    TrainResult result;
    Evaluation evaluation;  // final model in the configured forward mode
};

/// Trains the configured problem and writes history.csv, field.csv,
/// error.csv, summary.csv, SVG plots and checkpoints. For problems with a
/// learnable coefficient beta_trace.csv is written as well.
SolveOutcome run_solve(const ExperimentConfig &config, std::ostream &log);

struct UqOutcome {
    UqReport qo;
    UqReport baseline;
    double min_sigma2 = 0.0;  // smallest predictive variance over every evaluated point
    double mean_sigma_inside = 0.0;
    double mean_sigma_outside = 0.0;  // t in (1, extrapolate_to]
};

/// Trains the orthogonal GP-head model and the MC-dropout baseline on
/// Burgers, then writes uq_slices.csv, uq_summary.csv, uq_scatter.csv,
/// uq_extrapolation.csv and plots.
UqOutcome run_uq(const ExperimentConfig &config, std::ostream &log);

/// Bound report for a checkpointed model, or for a freshly trained one
/// when no checkpoint is given. Writes lipschitz.csv.
BoundReport run_lipschitz(const ExperimentConfig &config, const std::optional<std::string> &checkpoint,
                          std::ostream &log);

/// Runs the invariant suite and writes verify.csv.
std::vector<CheckResult> run_verify(const ExperimentConfig &config, std::ostream &log);

/// Forward mode selected by the config; `rng` backs the sampled mode.
ForwardMode forward_mode(const ExperimentConfig &config, std::mt19937_64 &rng);

}  // namespace orthospinn
