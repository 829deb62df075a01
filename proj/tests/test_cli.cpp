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

// Config, architecture, CSV and checkpoint round trips, plus end-to-end
// runs of the command-line tool.

#include "orthospinn/checkpoint.hpp"
#include "orthospinn/config.hpp"
#include "orthospinn/io.hpp"
#include "orthospinn/uq.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace orthospinn {
namespace {

namespace fs = std::filesystem;

fs::path scratch_dir(const std::string &name) {
    const fs::path p = fs::temp_directory_path() / ("orthospinn_test_" + std::to_string(::getpid())) / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path &p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void write_file(const fs::path &p, const std::string &text) { std::ofstream(p) << text; }

int run_cli(const std::string &args) {
    const std::string cmd = std::string(ORTHOSPINN_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(ParseArchitecture, TableForms) {
    const Architecture a = parse_architecture("2 x [16, 16, 16, 20]");
    EXPECT_EQ(a.subnets, 2);
    EXPECT_EQ(a.widths, (std::vector<int>{16, 16, 16, 20}));
    EXPECT_EQ(a.rank(), 20);
    EXPECT_TRUE(a.trunk.empty());

    const Architecture b = parse_architecture("2x[35, 35] + [35, 35]");
    EXPECT_EQ(b.subnets, 2);
    EXPECT_EQ(b.widths, (std::vector<int>{35, 35}));
    EXPECT_EQ(b.trunk, (std::vector<int>{35, 35}));

    const Architecture c = parse_architecture("1 x [4]");
    EXPECT_EQ(c.subnets, 1);
    EXPECT_EQ(c.rank(), 4);
}

TEST(ParseArchitecture, ErrorsCarryPosition) {
    const std::vector<std::pair<std::string, std::size_t>> bad{
        {"2 y [4]", 2}, {"x [4]", 0}, {"2 x [4, ]", 8}, {"2 x [4", 6}, {"2 x [4] +", 9}, {"0 x [4]", 0}};
    for (const auto &[text, pos] : bad) {
        try {
            parse_architecture(text);
            ADD_FAILURE() << "accepted '" << text << "'";
        } catch (const ArchitectureParseError &e) {
            EXPECT_EQ(e.position(), pos) << text << ": " << e.what();
        }
    }
}

TEST(ParseArchitecture, FormatRoundTrip) {
    for (const char *s : {"2 x [16, 16, 16, 20]", "2x[35,35]+[35,35]", "3 x [8]"}) {
        const Architecture a = parse_architecture(s);
        EXPECT_EQ(parse_architecture(format_architecture(a)), a);
    }
}

TEST(Config, DefaultsAndRoundTrip) {
    const ExperimentConfig c = parse_config(R"(
[experiment]
problem = sinegordon
architecture = 2 x [16, 16, 32, 40]
seed = 7
out = somewhere
mode = sampled
shots = 12345
input_half_range = 2.5

[train]
lr = 8e-3
collocation = 250
weight_data = 20
keep_best = false

[uq]
slices = 0, 0.5, 1
baseline_epochs = 500
)");
    EXPECT_EQ(c.problem, "sinegordon");
    EXPECT_EQ(c.train.epochs, 30000);  // inverse problems default to the longer schedule
    EXPECT_EQ(c.train.seed, 7U);
    EXPECT_EQ(c.mode, EvalMode::sampled);
    EXPECT_EQ(c.shots, 12345U);
    EXPECT_DOUBLE_EQ(c.train.weights.data, 20.0);
    EXPECT_FALSE(c.train.keep_best);
    EXPECT_EQ(c.uq.slices, (std::vector<double>{0.0, 0.5, 1.0}));
    EXPECT_EQ(c.uq.baseline_epochs, 500);

    const std::string text = format_config(c);
    EXPECT_EQ(format_config(parse_config(text)), text);
    EXPECT_EQ(parse_config("[experiment]\nproblem = burgers\n").train.epochs, 20000);
}

TEST(Config, RejectsMalformedInput) {
    EXPECT_THROW(parse_config("[experiment]\nproblem = heat\n"), ConfigError);
    EXPECT_THROW(parse_config("[experiment]\nproblme = burgers\n"), ConfigError);
    EXPECT_THROW(parse_config("[exp]\nproblem = burgers\n"), ConfigError);
    EXPECT_THROW(parse_config("[experiment]\narchitecture = 2 x 16\n"), ConfigError);
    EXPECT_THROW(parse_config("[train]\nlr = fast\n"), ConfigError);
    EXPECT_THROW(parse_config("[train]\nlr = -1\n"), ConfigError);
    EXPECT_THROW(parse_config("[experiment]\ninput_half_range = 4\n"), ConfigError);
    EXPECT_THROW(parse_config("[experiment\nproblem = burgers\n"), ConfigError);
    EXPECT_THROW(load_config("/nonexistent/config.ini"), ConfigError);
}

TEST(Config, ShippedConfigsParse) {
    for (const auto &entry : fs::directory_iterator(ORTHOSPINN_CONFIG_DIR)) {
        if (entry.path().extension() == ".ini") {
            EXPECT_NO_THROW(load_config(entry.path().string())) << entry.path();
        }
    }
}

TEST(Csv, WriterReaderRoundTripWithQuoting) {
    const fs::path dir = scratch_dir("csv");
    const std::string path = (dir / "t.csv").string();
    {
        CsvWriter w(path, {"label", "a", "b"});
        w.row_text({"plain"}, {1.5, -2.0});
        w.row_text({"with, comma"}, {0.1, 1e-300});
        w.row_text({"say \"hi\""}, {3.0, 4.0});
    }
    const CsvTable t = read_csv(path);
    ASSERT_EQ(t.columns, (std::vector<std::string>{"label", "a", "b"}));
    ASSERT_EQ(t.rows.size(), 3U);
    EXPECT_EQ(t.rows[1][0], "with, comma");
    EXPECT_EQ(t.rows[2][0], "say \"hi\"");
    EXPECT_EQ(t.number(1, "a"), 0.1);
    EXPECT_EQ(t.number(1, "b"), 1e-300);
    EXPECT_ANY_THROW(t.column("missing"));
}

TEST(Checkpoint, ProductSumModelRoundTrip) {
    std::mt19937_64 rng(1);
    SpinnModel m = build_qo_spinn({2, {6, 5, 4, 3}, {}}, {{0, 1}, {-20, 20}}, rng);
    testing::jitter(m, rng, 0.2);
    m.subnets[1].input_half_range = 2.5;
    std::stringstream buf;
    write_checkpoint(buf, {m, 0.125});
    const Checkpoint back = read_checkpoint(buf);
    EXPECT_EQ(back.param, 0.125);
    EXPECT_EQ(back.model.pack(), m.pack());
    EXPECT_EQ(back.model.subnets[1].input_half_range, 2.5);
    const SampleLayout grid = SampleLayout::grid({Eigen::VectorXd::LinSpaced(4, 0, 1), Eigen::VectorXd::LinSpaced(3, -5, 5)});
    EXPECT_EQ(model_predict(back.model, grid), model_predict(m, grid));
}

TEST(Checkpoint, GpModelRoundTripKeepsPosterior) {
    const auto problem = make_problem("burgers");
    std::mt19937_64 rng(2);
    SpinnModel m = build_qo_uq_model({2, {6, 6}, {6, 6}}, problem->domain(), 16, 0.05, rng);
    fit_gp_posterior(m, sample_training_set(*problem, 6, 0, rng), 1.0);
    const fs::path dir = scratch_dir("ckpt");
    save_checkpoint((dir / "m.ckpt").string(), {m, std::nullopt});
    const Checkpoint back = load_checkpoint((dir / "m.ckpt").string());
    EXPECT_FALSE(back.param.has_value());
    ASSERT_TRUE(back.model.gp && back.model.gp->Sigma);
    EXPECT_EQ(*back.model.gp->Sigma, *m.gp->Sigma);
    const SampleLayout grid = SampleLayout::grid({Eigen::VectorXd::LinSpaced(4, 0, 1), Eigen::VectorXd::LinSpaced(3, 0, 1)});
    EXPECT_EQ(gp_predict_layout(back.model, grid).sigma, gp_predict_layout(m, grid).sigma);
}

TEST(Checkpoint, RejectsGarbage) {
    std::stringstream buf("not a checkpoint");
    EXPECT_ANY_THROW(read_checkpoint(buf));
    EXPECT_ANY_THROW(load_checkpoint("/nonexistent/m.ckpt"));
}

constexpr const char *kTinySolve = R"([experiment]
problem = advection_diffusion_1d
architecture = 2 x [6, 6, 6, 4]
seed = 5
out = %OUT%

[train]
epochs = 30
collocation = 20
log_every = 10
eval_points = 9
)";

std::string tiny_config(const fs::path &dir, const std::string &out) {
    std::string text = kTinySolve;
    text.replace(text.find("%OUT%"), 5, out);
    const fs::path p = dir / "tiny.ini";
    write_file(p, text);
    return p.string();
}

TEST(Cli, ExitCodes) {
    const fs::path dir = scratch_dir("exit");
    EXPECT_EQ(run_cli("--help"), 0);
    EXPECT_EQ(run_cli(""), 1);
    EXPECT_EQ(run_cli("train"), 1);
    EXPECT_EQ(run_cli("solve"), 1);
    EXPECT_EQ(run_cli("solve --config /nonexistent.ini"), 1);
    write_file(dir / "bad.ini", "[experiment]\narchitecture = 2 x [16,\n");
    EXPECT_EQ(run_cli("solve --config " + (dir / "bad.ini").string()), 1);
    write_file(dir / "inverse.ini", "[experiment]\nproblem = sinegordon\n");
    EXPECT_EQ(run_cli("solve --config " + (dir / "inverse.ini").string()), 1);
    EXPECT_EQ(run_cli("inverse --config " + tiny_config(dir, (dir / "o").string())), 1);
    EXPECT_EQ(run_cli("solve --mode quantum --config " + tiny_config(dir, (dir / "o").string())), 1);
}

TEST(Cli, SolveWritesDocumentedArtifacts) {
    const fs::path dir = scratch_dir("solve");
    const fs::path out = dir / "run";
    ASSERT_EQ(run_cli("solve --config " + tiny_config(dir, out.string())), 0);
    for (const char *f : {"config.ini", "history.csv", "field.csv", "error.csv", "summary.csv", "model.ckpt",
                          "loss.svg", "mse.svg", "field_pred.svg", "field_ref.svg", "field_error.svg"}) {
        EXPECT_TRUE(fs::exists(out / f)) << f;
    }
    const CsvTable history = read_csv((out / "history.csv").string());
    EXPECT_EQ(history.columns.front(), "epoch");
    ASSERT_EQ(history.rows.size(), 4U);  // every 10th epoch plus the final state
    EXPECT_EQ(history.number(3, "epoch"), 30.0);
    const CsvTable field = read_csv((out / "field.csv").string());
    EXPECT_EQ(field.columns, (std::vector<std::string>{"x", "t", "u_pred", "u_ref", "abs_err"}));
    EXPECT_EQ(field.rows.size(), 81U);
    const CsvTable summary = read_csv((out / "summary.csv").string());
    EXPECT_EQ(summary.columns, (std::vector<std::string>{"metric", "value"}));

    // The checkpoint feeds the bound report.
    EXPECT_EQ(run_cli("lipschitz --config " + (dir / "tiny.ini").string() + " --checkpoint " + (out / "model.ckpt").string() +
                      " --out " + (dir / "lip").string()),
              0);
    EXPECT_TRUE(fs::exists(dir / "lip" / "lipschitz.csv"));
}

TEST(Cli, SameSeedGivesIdenticalOutputs) {
    const fs::path dir = scratch_dir("repro");
    const std::string cfg = tiny_config(dir, (dir / "unused").string());
    ASSERT_EQ(run_cli("solve --config " + cfg + " --out " + (dir / "a").string()), 0);
    ASSERT_EQ(run_cli("solve --config " + cfg + " --out " + (dir / "b").string()), 0);
    for (const char *f : {"history.csv", "field.csv", "error.csv", "summary.csv", "model.ckpt"}) {
        EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
    }
    ASSERT_EQ(run_cli("solve --config " + cfg + " --seed 6 --out " + (dir / "c").string()), 0);
    EXPECT_NE(slurp(dir / "a" / "history.csv"), slurp(dir / "c" / "history.csv"));
}

TEST(Cli, InverseWritesCoefficientTrace) {
    const fs::path dir = scratch_dir("inverse");
    write_file(dir / "sg.ini", "[experiment]\nproblem = sinegordon\narchitecture = 2 x [6, 6, 6, 4]\nout = " +
                                   (dir / "run").string() + "\n[train]\nepochs = 20\ncollocation = 20\neval_points = 9\n");
    ASSERT_EQ(run_cli("inverse --config " + (dir / "sg.ini").string()), 0);
    const CsvTable trace = read_csv((dir / "run" / "beta_trace.csv").string());
    EXPECT_EQ(trace.columns, (std::vector<std::string>{"epoch", "beta"}));
    EXPECT_EQ(trace.rows.size(), 20U);
    const CsvTable summary = read_csv((dir / "run" / "summary.csv").string());
    bool has_beta = false;
    for (const auto &row : summary.rows) {
        has_beta = has_beta || row[0] == "beta_hat";
    }
    EXPECT_TRUE(has_beta);
}

TEST(Cli, VerifySuitePasses) {
    const fs::path dir = scratch_dir("verify");
    ASSERT_EQ(run_cli("verify --out " + dir.string()), 0);
    const CsvTable t = read_csv((dir / "verify.csv").string());
    EXPECT_EQ(t.columns, (std::vector<std::string>{"property", "pass", "value", "tolerance", "seconds", "detail"}));
    EXPECT_GE(t.rows.size(), 16U);
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        EXPECT_EQ(t.number(r, "pass"), 1.0) << t.rows[r][0];
    }
}

}  // namespace
}  // namespace orthospinn
