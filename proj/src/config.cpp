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

#include "orthospinn/config.hpp"

#include "orthospinn/pde_suite.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

namespace orthospinn {

namespace {

struct Cursor {
    std::string_view s;
    std::size_t pos = 0;

    void skip_ws() {
        while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) {
            ++pos;
        }
    }
    bool at_end() {
        skip_ws();
        return pos >= s.size();
    }
    [[noreturn]] void fail(const std::string &what) const {
        throw ArchitectureParseError(
            fmt::format("architecture '{}': {} at position {}", s, what, pos), pos);
    }
    void expect(char c) {
        skip_ws();
        if (pos >= s.size() || std::tolower(static_cast<unsigned char>(s[pos])) != c) {
            fail(fmt::format("expected '{}'", c));
        }
        ++pos;
    }
    bool accept(char c) {
        skip_ws();
        if (pos < s.size() && s[pos] == c) {
            ++pos;
            return true;
        }
        return false;
    }
    int positive_int() {
        skip_ws();
        const std::size_t start = pos;
        int v = 0;
        const auto [ptr, ec] = std::from_chars(s.data() + pos, s.data() + s.size(), v);
        if (ec != std::errc() || ptr == s.data() + pos) {
            fail("expected a positive integer");
        }
        pos = static_cast<std::size_t>(ptr - s.data());
        if (v < 1) {
            pos = start;
            fail("expected a positive integer");
        }
        return v;
    }
    std::vector<int> list() {
        expect('[');
        std::vector<int> out{positive_int()};
        while (accept(',')) {
            out.push_back(positive_int());
        }
        expect(']');
        return out;
    }
};

std::string join_ints(const std::vector<int> &v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out += (i ? ", " : "") + std::to_string(v[i]);
    }
    return out;
}

std::string fmt_double(double v) { return fmt::format("{:.17g}", v); }

template <typename T>
T parse_number(const std::string &key, const std::string &text) {
    T v{};
    const char *begin = text.data();
    const char *end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || ptr != end) {
        throw ConfigError(fmt::format("config key '{}': cannot parse '{}'", key, text));
    }
    return v;
}

bool parse_bool(const std::string &key, const std::string &text) {
    if (text == "true" || text == "1" || text == "yes" || text == "on") {
        return true;
    }
    if (text == "false" || text == "0" || text == "no" || text == "off") {
        return false;
    }
    throw ConfigError(fmt::format("config key '{}': expected a boolean, got '{}'", key, text));
}

std::vector<double> parse_double_list(const std::string &key, const std::string &text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(" \t");
        const auto e = item.find_last_not_of(" \t");
        if (b == std::string::npos) {
            throw ConfigError(fmt::format("config key '{}': empty list entry", key));
        }
        out.push_back(parse_number<double>(key, item.substr(b, e - b + 1)));
    }
    return out;
}

std::string format_double_list(const std::vector<double> &v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out += (i ? ", " : "") + fmt_double(v[i]);
    }
    return out;
}

using Setter = std::function<void(ExperimentConfig &, const std::string &key, const std::string &value)>;

const std::map<std::string, std::map<std::string, Setter>> &setters() {
    static const std::map<std::string, std::map<std::string, Setter>> table = {
        {"experiment",
         {
             {"problem", [](auto &c, auto &, auto &v) { c.problem = v; }},
             {"architecture",
              [](auto &c, auto &k, auto &v) {
                  try {
                      c.architecture = parse_architecture(v);
                  } catch (const ArchitectureParseError &e) {
                      throw ConfigError(fmt::format("config key '{}': {}", k, e.what()));
                  }
              }},
             {"seed", [](auto &c, auto &k, auto &v) { c.train.seed = parse_number<std::uint64_t>(k, v); }},
             {"out", [](auto &c, auto &, auto &v) { c.out = v; }},
             {"mode",
              [](auto &c, auto &k, auto &v) {
                  try {
                      c.mode = parse_eval_mode(v);
                  } catch (const std::invalid_argument &e) {
                      throw ConfigError(fmt::format("config key '{}': {}", k, e.what()));
                  }
              }},
             {"shots", [](auto &c, auto &k, auto &v) { c.shots = parse_number<std::uint64_t>(k, v); }},
             {"checkpoint_every", [](auto &c, auto &k, auto &v) { c.checkpoint_every = parse_number<int>(k, v); }},
             {"input_half_range", [](auto &c, auto &k, auto &v) { c.input_half_range = parse_number<double>(k, v); }},
         }},
        {"train",
         {
             {"lr", [](auto &c, auto &k, auto &v) { c.train.lr = parse_number<double>(k, v); }},
             {"epochs", [](auto &c, auto &k, auto &v) { c.train.epochs = parse_number<int>(k, v); }},
             {"collocation", [](auto &c, auto &k, auto &v) { c.train.collocation_total = parse_number<long>(k, v); }},
             {"resample_every", [](auto &c, auto &k, auto &v) { c.train.resample_every = parse_number<int>(k, v); }},
             {"constraint_axis_cap",
              [](auto &c, auto &k, auto &v) { c.train.constraint_axis_cap = parse_number<long>(k, v); }},
             {"log_every", [](auto &c, auto &k, auto &v) { c.train.log_every = parse_number<int>(k, v); }},
             {"eval_points", [](auto &c, auto &k, auto &v) { c.train.eval_points_per_axis = parse_number<long>(k, v); }},
             {"weight_residual", [](auto &c, auto &k, auto &v) { c.train.weights.residual = parse_number<double>(k, v); }},
             {"weight_ic", [](auto &c, auto &k, auto &v) { c.train.weights.ic = parse_number<double>(k, v); }},
             {"weight_bc", [](auto &c, auto &k, auto &v) { c.train.weights.bc = parse_number<double>(k, v); }},
             {"weight_data", [](auto &c, auto &k, auto &v) { c.train.weights.data = parse_number<double>(k, v); }},
             {"factorized_residual",
              [](auto &c, auto &k, auto &v) { c.train.factorized_residual = parse_bool(k, v); }},
             {"keep_best", [](auto &c, auto &k, auto &v) { c.train.keep_best = parse_bool(k, v); }},
         }},
        {"uq",
         {
             {"features", [](auto &c, auto &k, auto &v) { c.uq.features = parse_number<int>(k, v); }},
             {"gamma", [](auto &c, auto &k, auto &v) { c.uq.gamma = parse_number<double>(k, v); }},
             {"tau", [](auto &c, auto &k, auto &v) { c.uq.tau = parse_number<double>(k, v); }},
             {"baseline_architecture",
              [](auto &c, auto &k, auto &v) {
                  try {
                      parse_architecture(v);
                  } catch (const ArchitectureParseError &e) {
                      throw ConfigError(fmt::format("config key '{}': {}", k, e.what()));
                  }
                  c.uq.baseline_architecture = v;
              }},
             {"dropout", [](auto &c, auto &k, auto &v) { c.uq.dropout = parse_number<double>(k, v); }},
             {"passes", [](auto &c, auto &k, auto &v) { c.uq.passes = parse_number<int>(k, v); }},
             {"baseline_lr", [](auto &c, auto &k, auto &v) { c.uq.baseline_lr = parse_number<double>(k, v); }},
             {"baseline_epochs", [](auto &c, auto &k, auto &v) { c.uq.baseline_epochs = parse_number<int>(k, v); }},
             {"slices", [](auto &c, auto &k, auto &v) { c.uq.slices = parse_double_list(k, v); }},
             {"extrapolate_to", [](auto &c, auto &k, auto &v) { c.uq.extrapolate_to = parse_number<double>(k, v); }},
             {"slice_points", [](auto &c, auto &k, auto &v) { c.uq.slice_points = parse_number<int>(k, v); }},
         }},
        {"lipschitz",
         {
             {"samples", [](auto &c, auto &k, auto &v) { c.lipschitz.samples = parse_number<int>(k, v); }},
             {"pairs", [](auto &c, auto &k, auto &v) { c.lipschitz.pairs = parse_number<long>(k, v); }},
             {"layer_pairs", [](auto &c, auto &k, auto &v) { c.lipschitz.layer_pairs = parse_number<int>(k, v); }},
         }},
    };
    return table;
}

void validate(const ExperimentConfig &c) {
    auto require = [](bool ok, const std::string &what) {
        if (!ok) {
            throw ConfigError(what);
        }
    };
    require(!c.problem.empty(), "config: [experiment] problem is required");
    require(c.train.lr > 0.0, "config: [train] lr must be positive");
    require(c.train.epochs >= 0, "config: [train] epochs must be non-negative");
    require(c.train.collocation_total > 0, "config: [train] collocation must be positive");
    require(c.train.resample_every >= 0, "config: [train] resample_every must be non-negative");
    require(c.train.constraint_axis_cap >= 0, "config: [train] constraint_axis_cap must be non-negative");
    require(c.train.log_every >= 0, "config: [train] log_every must be non-negative");
    require(c.train.eval_points_per_axis >= 2, "config: [train] eval_points must be at least 2");
    require(c.checkpoint_every >= 0, "config: [experiment] checkpoint_every must be non-negative");
    // Beyond pi the sin/cos encoding stops being injective.
    require(c.input_half_range > 0.0 && c.input_half_range < std::numbers::pi,
            "config: [experiment] input_half_range must lie in (0, pi)");
    require(c.mode != EvalMode::sampled || c.shots > 0, "config: sampled mode needs shots > 0");
    require(c.uq.features > 0 && c.uq.gamma > 0.0 && c.uq.tau > 0.0, "config: [uq] features, gamma, tau must be positive");
    require(c.uq.dropout >= 0.0 && c.uq.dropout < 1.0, "config: [uq] dropout must lie in [0, 1)");
    require(c.uq.baseline_epochs >= 0, "config: [uq] baseline_epochs must be non-negative");
    require(c.uq.passes >= 2, "config: [uq] passes must be at least 2");
    require(c.uq.slice_points >= 2, "config: [uq] slice_points must be at least 2");
    require(c.lipschitz.samples >= 2 && c.lipschitz.pairs >= 1 && c.lipschitz.layer_pairs >= 1,
            "config: [lipschitz] sample counts must be positive");
}

}  // namespace

Architecture parse_architecture(std::string_view s) {
    Cursor c{s};
    Architecture arch;
    arch.subnets = c.positive_int();
    c.expect('x');
    arch.widths = c.list();
    if (c.accept('+')) {
        arch.trunk = c.list();
    }
    if (!c.at_end()) {
        c.fail("unexpected trailing text");
    }
    return arch;
}

std::string format_architecture(const Architecture &arch) {
    std::string out = fmt::format("{}x[{}]", arch.subnets, join_ints(arch.widths));
    if (!arch.trunk.empty()) {
        out += fmt::format(" + [{}]", join_ints(arch.trunk));
    }
    return out;
}

EvalMode parse_eval_mode(std::string_view s) {
    if (s == "matrix") {
        return EvalMode::matrix;
    }
    if (s == "circuit") {
        return EvalMode::circuit;
    }
    if (s == "sampled") {
        return EvalMode::sampled;
    }
    throw std::invalid_argument(fmt::format("unknown mode '{}' (expected matrix, circuit or sampled)", s));
}

std::string_view eval_mode_name(EvalMode mode) {
    switch (mode) {
    case EvalMode::matrix:
        return "matrix";
    case EvalMode::circuit:
        return "circuit";
    case EvalMode::sampled:
        return "sampled";
    }
    return "matrix";
}

ExperimentConfig parse_config(std::string_view text) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    std::istringstream in{std::string(text)};
    try {
        pt::ini_parser::read_ini(in, tree);
    } catch (const pt::ini_parser_error &e) {
        throw ConfigError(fmt::format("config: {} (line {})", e.message(), e.line()));
    }
    ExperimentConfig c;
    bool epochs_given = false;
    const auto &table = setters();
    for (const auto &[section, body] : tree) {
        const auto sec = table.find(section);
        if (sec == table.end() || body.empty()) {
            throw ConfigError(fmt::format("config: unknown section '{}'", section));
        }
        for (const auto &[key, node] : body) {
            const auto it = sec->second.find(key);
            if (it == sec->second.end()) {
                throw ConfigError(fmt::format("config: unknown key '{}.{}'", section, key));
            }
            it->second(c, section + "." + key, node.data());
            epochs_given = epochs_given || (section == "train" && key == "epochs");
        }
    }
    if (!epochs_given) {
        try {
            c.train.epochs = make_problem(c.problem)->learnable() ? 30000 : 20000;
        } catch (const std::invalid_argument &e) {
            throw ConfigError(fmt::format("config: {}", e.what()));
        }
    }
    validate(c);
    return c;
}

ExperimentConfig load_config(const std::string &path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError(fmt::format("config: cannot open '{}'", path));
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string format_config(const ExperimentConfig &c) {
    std::string out;
    out += "[experiment]\n";
    out += fmt::format("problem = {}\n", c.problem);
    out += fmt::format("architecture = {}\n", format_architecture(c.architecture));
    out += fmt::format("seed = {}\n", c.train.seed);
    out += fmt::format("out = {}\n", c.out);
    out += fmt::format("mode = {}\n", eval_mode_name(c.mode));
    out += fmt::format("shots = {}\n", c.shots);
    out += fmt::format("checkpoint_every = {}\n", c.checkpoint_every);
    out += fmt::format("input_half_range = {:.17g}\n", c.input_half_range);
    out += "\n[train]\n";
    out += fmt::format("lr = {}\n", fmt_double(c.train.lr));
    out += fmt::format("epochs = {}\n", c.train.epochs);
    out += fmt::format("collocation = {}\n", c.train.collocation_total);
    out += fmt::format("resample_every = {}\n", c.train.resample_every);
    out += fmt::format("constraint_axis_cap = {}\n", c.train.constraint_axis_cap);
    out += fmt::format("log_every = {}\n", c.train.log_every);
    out += fmt::format("eval_points = {}\n", c.train.eval_points_per_axis);
    out += fmt::format("weight_residual = {}\n", fmt_double(c.train.weights.residual));
    out += fmt::format("weight_ic = {}\n", fmt_double(c.train.weights.ic));
    out += fmt::format("weight_bc = {}\n", fmt_double(c.train.weights.bc));
    out += fmt::format("weight_data = {}\n", fmt_double(c.train.weights.data));
    out += fmt::format("factorized_residual = {}\n", c.train.factorized_residual);
    out += fmt::format("keep_best = {}\n", c.train.keep_best);
    out += "\n[uq]\n";
    out += fmt::format("features = {}\n", c.uq.features);
    out += fmt::format("gamma = {}\n", fmt_double(c.uq.gamma));
    out += fmt::format("tau = {}\n", fmt_double(c.uq.tau));
    out += fmt::format("baseline_architecture = {}\n", c.uq.baseline_architecture);
    out += fmt::format("dropout = {}\n", fmt_double(c.uq.dropout));
    out += fmt::format("passes = {}\n", c.uq.passes);
    out += fmt::format("baseline_lr = {}\n", fmt_double(c.uq.baseline_lr));
    out += fmt::format("baseline_epochs = {}\n", c.uq.baseline_epochs);
    out += fmt::format("slices = {}\n", format_double_list(c.uq.slices));
    out += fmt::format("extrapolate_to = {}\n", fmt_double(c.uq.extrapolate_to));
    out += fmt::format("slice_points = {}\n", c.uq.slice_points);
    out += "\n[lipschitz]\n";
    out += fmt::format("samples = {}\n", c.lipschitz.samples);
    out += fmt::format("pairs = {}\n", c.lipschitz.pairs);
    out += fmt::format("layer_pairs = {}\n", c.lipschitz.layer_pairs);
    return out;
}

}  // namespace orthospinn
