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

// Whitespace-separated text checkpoints. Every real is written with 17
// significant digits, so save followed by load reproduces a model exactly.

#pragma once

#include "orthospinn/spinn_model.hpp"

#include <iosfwd>
#include <optional>
#include <string>

namespace orthospinn {

struct Checkpoint {
    SpinnModel model;
    std::optional<double> param;  // learnable physical parameter, if any
};

void write_checkpoint(std::ostream &out, const Checkpoint &ckpt);
/// Throws std::runtime_error on malformed input.
Checkpoint read_checkpoint(std::istream &in);

void save_checkpoint(const std::string &path, const Checkpoint &ckpt);
Checkpoint load_checkpoint(const std::string &path);

}  // namespace orthospinn
