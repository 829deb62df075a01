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

#include "orthospinn/experiments.hpp"

#include "orthospinn/checkpoint.hpp"
#include "orthospinn/gp_head.hpp"
#include "orthospinn/io.hpp"
#include "orthospinn/pde_suite.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

namespace orthospinn {

namespace {

namespace fs = std::filesystem;

std::string in_dir(const ExperimentConfig &c, const std::string &file) { return (fs::path(c.out) / file).string(); }

void prepare_out(const ExperimentConfig &c) {
    fs::create_directories(c.out);
    std::ofstream(in_dir(c, "config.ini")) << format_config(c);
}

std::unique_ptr<PdeProblem> problem_of(const ExperimentConfig &c) {
    try {
        return make_problem(c.problem);
    } catch (const std::invalid_argument &e) {
        throw ConfigError(e.what());
    }
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<double> to_std(const Eigen::VectorXd &v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd linspace(Eigen::Index n, double lo, double hi) { return Eigen::VectorXd::LinSpaced(n, lo, hi); }

class HistoryWriter {
  public:
    HistoryWriter(const std::string &path, bool with_param) : with_param_(with_param), csv_(path, columns(with_param)) {}

    void add(const HistoryRow &r) {
        std::vector<double> v{static_cast<double>(r.epoch), r.loss.total, r.loss.residual, r.loss.ic, r.loss.bc,
                              r.loss.data};
        if (with_param_) {
            v.push_back(r.param);
        }
        v.push_back(r.eval_mse);
        csv_.row(v);
    }

  private:
    static std::vector<std::string> columns(bool with_param) {
        std::vector<std::string> c{"epoch", "loss_total", "loss_res", "loss_ic", "loss_bc", "loss_data"};
        if (with_param) {
            c.emplace_back("beta_hat");
        }
        c.emplace_back("eval_mse");
        return c;
    }

    bool with_param_;
    CsvWriter csv_;
};

void log_row(std::ostream &log, const std::string &tag, const HistoryRow &r, bool with_param,
             std::chrono::steady_clock::time_point t0) {
    fmt::print(log, "[{}] epoch {:>6}  loss {:.4e}  res {:.3e}  ic {:.3e}  bc {:.3e}  data {:.3e}", tag, r.epoch,
               r.loss.total, r.loss.residual, r.loss.ic, r.loss.bc, r.loss.data);
    if (with_param) {
        fmt::print(log, "  beta {:.5f}", r.param);
    }
    fmt::print(log, "  mse {:.4e}  ({:.1f} s)\n", r.eval_mse, seconds_since(t0));
    log.flush();
}

void write_loss_plots(const std::string &dir, const std::string &prefix, const std::vector<HistoryRow> &h,
                      bool with_data) {
    PlotSeries total{"total", {}, {}}, res{"residual", {}, {}}, ic{"ic", {}, {}}, bc{"bc", {}, {}},
        data{"data", {}, {}}, mse{"eval mse", {}, {}};
    for (const auto &r : h) {
        const auto e = static_cast<double>(r.epoch);
        auto push = [&](PlotSeries &s, double v) {
            if (v > 0.0) {
                s.x.push_back(e);
                s.y.push_back(v);
            }
        };
        push(total, r.loss.total);
        push(res, r.loss.residual);
        push(ic, r.loss.ic);
        push(bc, r.loss.bc);
        push(data, r.loss.data);
        push(mse, r.eval_mse);
    }
    std::vector<PlotSeries> losses{total, res, ic, bc};
    if (with_data) {
        losses.push_back(data);
    }
    write_line_plot_svg((fs::path(dir) / (prefix + "loss.svg")).string(), "training loss", losses, "epoch", "loss",
                        true);
    write_line_plot_svg((fs::path(dir) / (prefix + "mse.svg")).string(), "MSE against the reference", {mse}, "epoch",
                        "mse", true);
}

// field.csv, error.csv and heatmaps on a uniform grid. Three or more axes
// use a coarser grid, and the heatmaps show the final slice of the last axis.
void write_field(const ExperimentConfig &c, const PdeProblem &problem, const SpinnModel &model,
                 const ForwardMode &mode) {
    const int K = problem.axes();
    const Eigen::Index n = K <= 2 ? c.train.eval_points_per_axis : std::min<Eigen::Index>(c.train.eval_points_per_axis, 41);
    const SampleLayout grid = uniform_grid(problem.domain(), std::vector<Eigen::Index>(static_cast<std::size_t>(K), n));
    const Eigen::VectorXd pred = model_predict(model, grid, mode);
    const Eigen::VectorXd ref = reference_on_grid(problem, grid);
    const auto names = problem.axis_names();

    std::vector<std::string> cols(names.begin(), names.end());
    cols.insert(cols.end(), {"u_pred", "u_ref", "abs_err"});
    CsvWriter field(in_dir(c, "field.csv"), cols);
    // Grid points are ordered with the first axis varying fastest.
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(K), 0);
    for (Eigen::Index p = 0; p < pred.size(); ++p) {
        std::vector<double> row;
        for (int k = 0; k < K; ++k) {
            row.push_back(grid.axes[static_cast<std::size_t>(k)][idx[static_cast<std::size_t>(k)]]);
        }
        row.insert(row.end(), {pred[p], ref[p], std::abs(pred[p] - ref[p])});
        field.row(row);
        for (int k = 0; k < K && ++idx[static_cast<std::size_t>(k)] == n; ++k) {
            idx[static_cast<std::size_t>(k)] = 0;
        }
    }

    // Per-slice error along the last (time) axis.
    const Eigen::Index slice = pred.size() / n;
    CsvWriter error(in_dir(c, "error.csv"), {names.back(), "mse", "max_abs_err"});
    const Eigen::VectorXd &t = grid.axes.back();
    for (Eigen::Index j = 0; j < n; ++j) {
        const Eigen::VectorXd e = (pred.segment(j * slice, slice) - ref.segment(j * slice, slice)).cwiseAbs();
        error.row({t[j], e.squaredNorm() / static_cast<double>(slice), e.maxCoeff()});
    }

    const Eigen::Index plane = n * n;
    const Eigen::Index offset = pred.size() - plane;
    auto as_plane = [&](const Eigen::VectorXd &v) {
        return Eigen::MatrixXd(Eigen::Map<const Eigen::MatrixXd>(v.data() + offset, n, n));
    };
    const std::string x_label = names[0];
    const std::string y_label = names[K >= 2 ? 1 : 0];
    const std::string suffix = K > 2 ? fmt::format(" at {} = {:.3g}", names.back(), t[n - 1]) : "";
    write_heatmap_svg(in_dir(c, "field_pred.svg"), "prediction" + suffix, grid.axes[0], grid.axes[1], as_plane(pred),
                      x_label, y_label);
    write_heatmap_svg(in_dir(c, "field_ref.svg"), "reference" + suffix, grid.axes[0], grid.axes[1], as_plane(ref),
                      x_label, y_label);
    write_heatmap_svg(in_dir(c, "field_error.svg"), "absolute error" + suffix, grid.axes[0], grid.axes[1],
                      as_plane((pred - ref).cwiseAbs()), x_label, y_label);
}

}  // namespace

ForwardMode forward_mode(const ExperimentConfig &config, std::mt19937_64 &rng) {
    switch (config.mode) {
        case EvalMode::circuit:
            return ForwardMode::circuit_exact();
        case EvalMode::sampled:
            return ForwardMode::circuit_sampled(config.shots, rng);
        case EvalMode::matrix:
            break;
    }
    return ForwardMode::matrix();
}

SolveOutcome run_solve(const ExperimentConfig &config, std::ostream &log) {
    const auto problem = problem_of(config);
    if (config.architecture.subnets != problem->axes()) {
        throw ConfigError(fmt::format("config: {} has {} axes but the architecture has {} subnets", problem->name(),
                                      problem->axes(), config.architecture.subnets));
    }
    if (!config.architecture.trunk.empty()) {
        throw ConfigError("config: solve and inverse take a product-sum architecture without a '+' trunk");
    }
    prepare_out(config);
    const bool learnable = problem->learnable().has_value();

    std::mt19937_64 rng(config.train.seed);
    SolveOutcome out;
    out.model = build_qo_spinn(config.architecture, problem->domain(), rng);
    for (auto &s : out.model.subnets) {
        s.input_half_range = config.input_half_range;
    }
    fmt::print(log, "{}: {} with {} parameters, {} epochs at lr {}\n", problem->name(),
               format_architecture(config.architecture), out.model.param_count(), config.train.epochs, config.train.lr);

    HistoryWriter history(in_dir(config, "history.csv"), learnable);
    const auto t0 = std::chrono::steady_clock::now();
    out.result = train(out.model, *problem, config.train, [&](const HistoryRow &r) {
        history.add(r);
        log_row(log, problem->name(), r, learnable, t0);
        if (config.checkpoint_every > 0 && r.epoch > 0 && r.epoch % config.checkpoint_every == 0 &&
            r.epoch < config.train.epochs) {
            Checkpoint ck{out.model, learnable ? std::optional<double>(r.param) : std::nullopt};
            save_checkpoint(in_dir(config, fmt::format("checkpoint_{:06d}.ckpt", r.epoch)), ck);
        }
    });
    const double train_seconds = seconds_since(t0);
    const std::optional<double> param =
        out.result.param ? std::optional<double>(out.result.param->value) : std::nullopt;
    save_checkpoint(in_dir(config, "model.ckpt"), Checkpoint{out.model, param});

    std::mt19937_64 shot_rng(config.train.seed + 1);
    const ForwardMode mode = forward_mode(config, shot_rng);
    out.evaluation = config.mode == EvalMode::matrix
                         ? out.result.final_eval
                         : evaluate_against_reference(out.model, *problem, config.train.eval_points_per_axis, mode);
    write_field(config, *problem, out.model, mode);
    write_loss_plots(config.out, "", out.result.history, learnable);

    CsvWriter summary(in_dir(config, "summary.csv"), {"metric", "value"});
    summary.row_text({"mse"}, {out.evaluation.mse});
    summary.row_text({"max_abs_err"}, {out.evaluation.max_error});
    summary.row_text({"best_epoch"}, {static_cast<double>(out.result.best_epoch)});
    summary.row_text({"parameters"}, {static_cast<double>(out.model.param_count())});

    if (learnable) {
        const auto truth = problem->learnable()->truth;
        summary.row_text({"beta_hat"}, {*param});
        summary.row_text({"beta_true"}, {truth});
        summary.row_text({"beta_abs_err"}, {std::abs(*param - truth)});
        CsvWriter trace(in_dir(config, "beta_trace.csv"), {"epoch", "beta"});
        const auto &tr = out.result.param->trace;
        PlotSeries s{"estimate", {}, {}};
        for (std::size_t e = 0; e < tr.size(); ++e) {
            trace.row({static_cast<double>(e), tr[e]});
            s.x.push_back(static_cast<double>(e));
            s.y.push_back(tr[e]);
        }
        PlotSeries truth_line{"truth", {0.0, static_cast<double>(tr.size())}, {truth, truth}};
        write_line_plot_svg(in_dir(config, "beta_trace.svg"), "coefficient estimate", {s, truth_line}, "epoch",
                            "beta");
        fmt::print(log, "beta_hat {:.6f} (truth {}, error {:.3e})\n", *param, truth, std::abs(*param - truth));
    }
    fmt::print(log, "final MSE {:.4e}, max error {:.4e} ({} mode), best epoch {}, {:.1f} s\n", out.evaluation.mse,
               out.evaluation.max_error, eval_mode_name(config.mode), out.result.best_epoch, train_seconds);
    return out;
}

UqOutcome run_uq(const ExperimentConfig &config, std::ostream &log) {
    const auto problem = problem_of(config);
    if (problem->name() != "burgers") {
        throw ConfigError("config: the uq experiment runs on the burgers problem");
    }
    if (config.architecture.trunk.empty()) {
        throw ConfigError("config: the uq experiment needs a trunk, e.g. \"2x[35, 35] + [35, 35]\"");
    }
    Architecture baseline_arch;
    try {
        baseline_arch = parse_architecture(config.uq.baseline_architecture);
    } catch (const ArchitectureParseError &e) {
        throw ConfigError(fmt::format("config: [uq] baseline_architecture: {}", e.what()));
    }
    if (baseline_arch.trunk.empty()) {
        throw ConfigError("config: [uq] baseline_architecture needs a trunk");
    }
    prepare_out(config);
    const UqConfig &uq = config.uq;
    const auto domain = problem->domain();

    // Orthogonal model with the GP output head.
    std::mt19937_64 rng(config.train.seed);
    SpinnModel qo = build_qo_uq_model(config.architecture, domain, uq.features, uq.gamma, rng);
    for (auto &s : qo.subnets) {
        s.input_half_range = config.input_half_range;
    }
    TrainConfig qo_train = config.train;
    qo_train.gp_ridge = uq.tau;
    fmt::print(log, "uq: {} with {} parameters and {} random features\n", format_architecture(config.architecture),
               qo.param_count(), uq.features);
    auto t0 = std::chrono::steady_clock::now();
    HistoryWriter qo_history(in_dir(config, "uq_history.csv"), false);
    const TrainResult qo_result = train(qo, *problem, qo_train, [&](const HistoryRow &r) {
        qo_history.add(r);
        log_row(log, "qo-gp", r, false, t0);
    });
    fit_gp_posterior(qo, qo_result.last_set, uq.tau);
    const double qo_seconds = seconds_since(t0);
    save_checkpoint(in_dir(config, "uq_model.ckpt"), Checkpoint{qo, std::nullopt});
    write_loss_plots(config.out, "uq_", qo_result.history, false);

    // MC-dropout baseline.
    std::mt19937_64 base_rng(config.train.seed + 7);
    SpinnModel base = build_dropout_baseline(baseline_arch, domain, uq.dropout, base_rng);
    TrainConfig base_train = config.train;
    base_train.lr = uq.baseline_lr;
    if (uq.baseline_epochs > 0) {
        base_train.epochs = uq.baseline_epochs;
    }
    base_train.dropout = true;
    fmt::print(log, "baseline: {} with {} parameters, dropout {}\n", format_architecture(baseline_arch),
               base.param_count(), uq.dropout);
    t0 = std::chrono::steady_clock::now();
    HistoryWriter base_history(in_dir(config, "baseline_history.csv"), false);
    const TrainResult base_result = train(base, *problem, base_train, [&](const HistoryRow &r) {
        base_history.add(r);
        log_row(log, "mc-dropout", r, false, t0);
    });
    const double base_seconds = seconds_since(t0);
    save_checkpoint(in_dir(config, "baseline_model.ckpt"), Checkpoint{base, std::nullopt});
    write_loss_plots(config.out, "baseline_", base_result.history, false);

    // Slices inside the training window.
    const Eigen::VectorXd x = linspace(uq.slice_points, domain[0].lo, domain[0].hi);
    const Eigen::VectorXd times = Eigen::Map<const Eigen::VectorXd>(uq.slices.data(),
                                                                    static_cast<Eigen::Index>(uq.slices.size()));
    const SampleLayout slices = SampleLayout::grid({x, times});
    std::mt19937_64 mc_rng(config.train.seed + 11);
    UqOutcome out;
    out.qo = score_slices("QO-SPINN GP", *problem, x, uq.slices, gp_predict_layout(qo, slices));
    out.baseline = score_slices("MC dropout", *problem, x, uq.slices,
                                mc_dropout_predict(base, slices, uq.passes, uq.dropout, mc_rng));

    for (const auto *rep : {&out.qo, &out.baseline}) {
        const std::string file = rep == &out.qo ? "uq_slices.csv" : "uq_slices_baseline.csv";
        CsvWriter csv(in_dir(config, file), {"t_slice", "x", "mu", "sigma", "reference", "abs_err"});
        for (std::size_t k = 0; k < rep->times.size(); ++k) {
            const auto j = static_cast<Eigen::Index>(k);
            for (Eigen::Index i = 0; i < x.size(); ++i) {
                csv.row({rep->times[k], x[i], rep->mu(i, j), rep->sigma(i, j), rep->reference(i, j),
                         std::abs(rep->mu(i, j) - rep->reference(i, j))});
            }
            const double s = rep->times[k];
            std::vector<double> upper, lower;
            for (Eigen::Index i = 0; i < x.size(); ++i) {
                upper.push_back(rep->mu(i, j) + 2.0 * rep->sigma(i, j));
                lower.push_back(rep->mu(i, j) - 2.0 * rep->sigma(i, j));
            }
            const std::string prefix = rep == &out.qo ? "uq" : "baseline";
            write_line_plot_svg(in_dir(config, fmt::format("{}_slice_{}.svg", prefix, k)),
                                fmt::format("{} at t = {:.3g}", rep->method, s),
                                {{"reference", to_std(x), to_std(rep->reference.col(j))},
                                 {"mean", to_std(x), to_std(rep->mu.col(j))},
                                 {"mean + 2 sigma", to_std(x), upper},
                                 {"mean - 2 sigma", to_std(x), lower}},
                                "x", "u");
        }
    }
    CsvWriter summary(in_dir(config, "uq_summary.csv"), {"method", "time", "mse", "max_error", "eac"});
    for (const auto *rep : {&out.qo, &out.baseline}) {
        for (const auto &s : rep->slices) {
            summary.row_text({rep->method}, {s.t, s.mse, s.max_error, s.eac});
            fmt::print(log, "{:<12} t={:.2f}  mse {:.4e}  max {:.4e}  eac {:+.4f}\n", rep->method, s.t, s.mse,
                       s.max_error, s.eac);
        }
    }

    // Sigma against error over the whole window (the scatter data), and
    // the raw predictive variance before any clamping.
    const Eigen::Index nx = std::min<Eigen::Index>(uq.slice_points, 101);
    const Eigen::VectorXd xs = linspace(nx, domain[0].lo, domain[0].hi);
    const Eigen::VectorXd t_in = linspace(21, domain[1].lo, domain[1].hi);
    const Eigen::Index n_out = 5;
    Eigen::VectorXd t_out(n_out);
    for (Eigen::Index k = 0; k < n_out; ++k) {
        t_out[k] = domain[1].hi + (uq.extrapolate_to - domain[1].hi) * static_cast<double>(k + 1) / n_out;
    }
    auto raw_variance = [&](const SampleLayout &layout) {
        const Eigen::MatrixXd Phi = rff_feature_table(concat_hidden(qo, layout), *qo.gp);
        return Eigen::VectorXd(((Phi * *qo.gp->Sigma).array() * Phi.array()).rowwise().sum());
    };
    const SampleLayout inside = SampleLayout::grid({xs, t_in});
    const SampleLayout outside = SampleLayout::grid({xs, t_out});
    const UqPrediction p_in = gp_predict_layout(qo, inside);
    const UqPrediction p_out = gp_predict_layout(qo, outside);
    out.min_sigma2 = std::min({raw_variance(inside).minCoeff(), raw_variance(outside).minCoeff(),
                               raw_variance(slices).minCoeff()});
    out.mean_sigma_inside = p_in.sigma.mean();
    out.mean_sigma_outside = p_out.sigma.mean();

    const Eigen::VectorXd ref_in = reference_on_grid(*problem, inside);
    const UqPrediction b_in = mc_dropout_predict(base, inside, uq.passes, uq.dropout, mc_rng);
    CsvWriter scatter(in_dir(config, "uq_scatter.csv"), {"method", "x", "t", "sigma", "abs_err"});
    PlotSeries qo_pts{"QO-SPINN GP", {}, {}, true};
    PlotSeries base_pts{"MC dropout", {}, {}, true};
    for (Eigen::Index p = 0; p < ref_in.size(); ++p) {
        const double xv = xs[p % nx];
        const double tv = t_in[p / nx];
        const double e_qo = std::abs(p_in.mu[p] - ref_in[p]);
        const double e_b = std::abs(b_in.mu[p] - ref_in[p]);
        scatter.row_text({out.qo.method}, {xv, tv, p_in.sigma[p], e_qo});
        scatter.row_text({out.baseline.method}, {xv, tv, b_in.sigma[p], e_b});
        qo_pts.x.push_back(p_in.sigma[p]);
        qo_pts.y.push_back(e_qo);
        base_pts.x.push_back(b_in.sigma[p]);
        base_pts.y.push_back(e_b);
    }
    write_line_plot_svg(in_dir(config, "uq_scatter.svg"), "predictive sigma against absolute error",
                        {qo_pts, base_pts}, "sigma", "|error|");

    CsvWriter extrap(in_dir(config, "uq_extrapolation.csv"), {"t", "mean_sigma", "inside_window"});
    auto band_rows = [&](const Eigen::VectorXd &ts, const Eigen::VectorXd &sigma, double inside_flag) {
        for (Eigen::Index k = 0; k < ts.size(); ++k) {
            extrap.row({ts[k], sigma.segment(k * nx, nx).mean(), inside_flag});
        }
    };
    band_rows(t_in, p_in.sigma, 1.0);
    band_rows(t_out, p_out.sigma, 0.0);

    Eigen::VectorXd t_all(t_in.size() + t_out.size());
    t_all << t_in, t_out;
    Eigen::MatrixXd sigma_map(nx, t_all.size());
    sigma_map << Eigen::Map<const Eigen::MatrixXd>(p_in.sigma.data(), nx, t_in.size()),
        Eigen::Map<const Eigen::MatrixXd>(p_out.sigma.data(), nx, t_out.size());
    write_heatmap_svg(in_dir(config, "uq_sigma.svg"), "predictive sigma, training window and extrapolation", xs, t_all,
                      sigma_map, "x", "t");

    fmt::print(log, "training time: {:.1f} s orthogonal GP, {:.1f} s dropout baseline\n", qo_seconds, base_seconds);
    fmt::print(log, "min raw sigma^2 {:.3e}; mean sigma inside {:.4e}, beyond t = {} {:.4e}\n", out.min_sigma2,
               out.mean_sigma_inside, domain[1].hi, out.mean_sigma_outside);
    return out;
}

BoundReport run_lipschitz(const ExperimentConfig &config, const std::optional<std::string> &checkpoint,
                          std::ostream &log) {
    SpinnModel model;
    if (checkpoint) {
        prepare_out(config);
        model = load_checkpoint(*checkpoint).model;
        fmt::print(log, "loaded {}\n", *checkpoint);
    } else {
        model = run_solve(config, log).model;
    }
    if (model.combiner != Combiner::product_sum) {
        throw ConfigError("lipschitz: the bound applies to product-sum models only");
    }
    const LipschitzConfig &lc = config.lipschitz;
    const BoundReport r = lipschitz_report(model, lc.samples, lc.pairs, lc.layer_pairs, config.train.seed + 3);

    CsvWriter subnets(in_dir(config, "lipschitz.csv"), {"subnet", "M", "L_sampled", "encoder_scale",
                                                          "orthogonal_gain", "final_norm", "L_structural"});
    for (std::size_t k = 0; k < r.subnets.size(); ++k) {
        const auto &s = r.subnets[k];
        subnets.row({static_cast<double>(k), s.ingredients.M, s.ingredients.L, s.structure.encoder_scale,
                     s.structure.orthogonal_gain, s.structure.final_norm, s.structure.L_orthogonal()});
        fmt::print(log, "subnet {}: M {:.4f}, sampled L {:.4f}, structural L {:.4f} = {:.4f} x {:.4f} x {:.4f}\n", k,
                   s.ingredients.M, s.ingredients.L, s.structure.L_orthogonal(), s.structure.encoder_scale,
                   s.structure.orthogonal_gain, s.structure.final_norm);
    }
    CsvWriter summary(in_dir(config, "lipschitz_summary.csv"), {"metric", "value"});
    summary.row_text({"rank"}, {static_cast<double>(r.rank)});
    summary.row_text({"bound_sampled_L"}, {r.sampled_bound});
    summary.row_text({"bound_structural_L"}, {r.structural_bound});
    summary.row_text({"empirical_max_ratio"}, {r.empirical_max_ratio});
    summary.row_text({"pairs"}, {static_cast<double>(r.pairs)});
    summary.row_text({"orthogonal_layers"}, {static_cast<double>(r.layers.layers)});
    summary.row_text({"layer_max_ratio"}, {r.layers.max_ratio});
    summary.row_text({"max_spectral_deviation"}, {r.layers.max_spectral_deviation});
    summary.row_text({"bound_holds"}, {r.bound_holds() ? 1.0 : 0.0});
    fmt::print(log,
               "bound with sampled L {:.4e}, with structural L {:.4e}; largest of {} quotients {:.4e}; "
               "{} orthogonal layers, max ratio {:.6f}, max |spectral norm - 1| {:.3e}\n",
               r.sampled_bound, r.structural_bound, r.pairs, r.empirical_max_ratio, r.layers.layers,
               r.layers.max_ratio, r.layers.max_spectral_deviation);
    return r;
}

std::vector<CheckResult> run_verify(const ExperimentConfig &config, std::ostream &log) {
    prepare_out(config);
    const std::vector<CheckResult> results = run_invariant_suite(config.train.seed);
    CsvWriter csv(in_dir(config, "verify.csv"), {"property", "pass", "value", "tolerance", "seconds", "detail"});
    for (const auto &r : results) {
        // The detail column is free text and goes last.
        csv.row_text({r.name, r.pass ? "1" : "0", fmt::format("{:.17g}", r.value), fmt::format("{:.17g}", r.tolerance),
                      fmt::format("{:.17g}", r.seconds), r.detail},
                     {});
        fmt::print(log, "{} {:<24} {:.3e} (tol {:.1e})  {}\n", r.pass ? "PASS" : "FAIL", r.name, r.value, r.tolerance,
                   r.detail);
    }
    return results;
}

}  // namespace orthospinn
