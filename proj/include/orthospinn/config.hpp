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

// Experiment configuration: INI text with sections, and the architecture
// string grammar "K x [w1, ..., wn]" with an optional "+ [t1, ...]" trunk.

#pragma once

#include "orthospinn/spinn_model.hpp"
#include "orthospinn/trainer.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace orthospinn {

/// Malformed architecture string; `position` is the 0-based offending offset.
class ArchitectureParseError : public std::invalid_argument {
  public:
    ArchitectureParseError(const std::string &what, std::size_t position)
        : std::invalid_argument(what), position_(position) {}
    std::size_t position() const { return position_; }

  private:
    std::size_t position_;
};

class ConfigError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

Architecture parse_architecture(std::string_view s);
/// Canonical form, e.g. "2x[16, 16, 16, 20]" or "2x[35, 35] + [35, 35]".
std::string format_architecture(const Architecture &arch);

enum class EvalMode { matrix, circuit, sampled };

EvalMode parse_eval_mode(std::string_view s);
std::string_view eval_mode_name(EvalMode mode);

struct UqConfig {
    int features = 128;
    double gamma = 0.05;
    double tau = 1.0;
    std::string baseline_architecture = "2x[100, 100] + [100, 100]";
    double dropout = 0.05;
    int passes = 100;
    double baseline_lr = 5e-4;
    int baseline_epochs = 0;  // 0: same as [train] epochs
    std::vector<double> slices{0.0, 0.25, 0.5, 0.75, 1.0};
    double extrapolate_to = 1.25;  // upper time of the extrapolation band
    int slice_points = 256;
};

struct LipschitzConfig {
    int samples = 10000;
    long pairs = 100000;
    int layer_pairs = 200;
};

struct ExperimentConfig {
    std::string problem = "advection_diffusion_1d";
    Architecture architecture{2, {16, 16, 16, 20}, {}};
    TrainConfig train;
    UqConfig uq;
    LipschitzConfig lipschitz;
    std::string out = "out";
    EvalMode mode = EvalMode::matrix;
    std::uint64_t shots = 1000000;
    int checkpoint_every = 0;  // 0: only the final checkpoint
    /// Subnet inputs are mapped affinely onto [-h, h] before the sin/cos encoding.
    double input_half_range = 1.0;
};

/// Parses INI text. Unknown sections or keys, bad values and a missing
/// problem name raise ConfigError. An absent epoch count defaults to 30000
/// for problems with a learnable parameter and 20000 otherwise.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::string &path);

/// Emits every field; parse_config(format_config(c)) reproduces c exactly.
std::string format_config(const ExperimentConfig &config);

}  // namespace orthospinn
