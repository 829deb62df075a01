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

// PDE problems: residual operators, initial/boundary/data constraints and
// reference solutions. Axis order is spatial axes first, time last.

#pragma once

#include "orthospinn/spinn_model.hpp"

#include <Eigen/Dense>

#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace orthospinn {

// ---------------------------------------------------------------------------
// Closed forms and oracles.

/// exp(vel.x / 2D) prod sin(pi x_i) exp(-(k D pi^2 + |vel|^2 / 4D) t).
double ad_reference(std::span<const double> x, double t, std::span<const double> vel, double D);

/// Modified Bessel function of the first kind by its power series.
/// Throws std::domain_error for |x| > 50.
double bessel_i(int n, double x);

/// Series solution of the viscous Burgers problem with initial value
/// sin(2 pi x), truncated after `n_terms` terms.
double burgers_reference(double x, double t, double nu, int n_terms = 60);

/// Fine-grid finite-difference solution of T_t + T T_x = nu T_xx on [0,1)
/// x [0,1], periodic in x, initial value sin(2 pi x). Crank-Nicolson
/// diffusion and second-order Adams-Bashforth conservative advection.
class BurgersFdOracle {
  public:
    /// Throws std::invalid_argument when the step violates the advective
    /// stability limit and std::runtime_error if the solution blows up.
    BurgersFdOracle(double nu, int nx, int nt);

    /// Bilinear interpolation in (x mod 1, t).
    double operator()(double x, double t) const;

    int nx() const { return nx_; }
    int nt() const { return nt_; }
    /// Field at time step n (nx values on x_i = i/nx).
    Eigen::VectorXd snapshot(int n) const { return field_.col(n); }

  private:
    int nx_;
    int nt_;
    Eigen::MatrixXd field_;  // nx x (nt + 1)
};

struct KinkValue {
    double value;
    double time_derivative;
};

/// 4 arctan(exp(g (x - v t))) with g = m / sqrt(1 - beta v^2).
KinkValue sinegordon_kink(double x, double t, double m, double v, double beta);

// ---------------------------------------------------------------------------
// Residual operators on field batches.

/// T_t + vel . grad T - D lap T. The last axis is time.
Eigen::VectorXd ad_residual(const FieldBatch &f, std::span<const double> vel, double D);

/// T_t + T T_x - nu T_xx on axes (x, t).
Eigen::VectorXd burgers_residual(const FieldBatch &f, double nu);

/// beta T_tt - T_xx + m^2 sin T on axes (x, t).
Eigen::VectorXd sinegordon_residual(const FieldBatch &f, double m, double beta);

// ---------------------------------------------------------------------------
// Problems.

/// Loss term on a set of samples: mean((q - target)^2), or
/// mean((q - q_partner)^2) when a partner layout is given.
struct Constraint {
    enum class Group { ic, bc, data };

    std::string name;
    Group group = Group::ic;
    SampleLayout layout;
    int derivative_axis = -1;  // -1: the value itself; else d/dx_axis
    Eigen::VectorXd target;
    std::optional<SampleLayout> partner;
};

/// One term c * d^order u / dx_axis^order of a linear residual.
struct LinearTerm {
    double coefficient;
    int axis;   // -1 for u itself
    int order;  // 0, 1 or 2
};

struct LearnableParam {
    std::string name;
    double initial;
    double truth;
};

class PdeProblem {
  public:
    virtual ~PdeProblem() = default;

    virtual std::string name() const = 0;
    virtual std::vector<Interval> domain() const = 0;
    virtual std::vector<std::string> axis_names() const = 0;
    int axes() const { return static_cast<int>(domain().size()); }

    virtual DerivRequest residual_request() const = 0;
    /// `param` is the learnable parameter value (ignored if none).
    virtual Eigen::VectorXd residual(const FieldBatch &f, double param) const = 0;
    /// Pulls dL/dresidual back to field adjoints; adds dL/dparam.
    virtual void residual_adjoint(const FieldBatch &f, double param, const Eigen::VectorXd &g_res, FieldBatch &adj,
                                  double &g_param) const = 0;
    /// Terms of the residual when it is linear in u, else empty.
    virtual std::vector<LinearTerm> linear_terms() const { return {}; }

    /// IC/BC (and data) sets built on the given per-axis collocation lists.
    /// `axis_cap` > 0 subsamples each axis list used for constraint grids.
    virtual std::vector<Constraint> constraints(const std::vector<Eigen::VectorXd> &colloc,
                                                Eigen::Index axis_cap = 0) const = 0;

    virtual double reference(std::span<const double> point) const = 0;
    virtual std::optional<LearnableParam> learnable() const { return std::nullopt; }
};

class AdvectionDiffusion final : public PdeProblem {
  public:
    explicit AdvectionDiffusion(int spatial_dims, double velocity = 0.4, double diffusivity = 0.1);

    std::string name() const override;
    std::vector<Interval> domain() const override;
    std::vector<std::string> axis_names() const override;
    DerivRequest residual_request() const override;
    Eigen::VectorXd residual(const FieldBatch &f, double param) const override;
    void residual_adjoint(const FieldBatch &f, double param, const Eigen::VectorXd &g_res, FieldBatch &adj,
                          double &g_param) const override;
    std::vector<LinearTerm> linear_terms() const override;
    std::vector<Constraint> constraints(const std::vector<Eigen::VectorXd> &colloc,
                                        Eigen::Index axis_cap) const override;
    double reference(std::span<const double> point) const override;

    int spatial_dims() const { return k_; }
    const std::vector<double> &velocity() const { return vel_; }
    double diffusivity() const { return D_; }

  private:
    int k_;
    std::vector<double> vel_;
    double D_;
};

class Burgers final : public PdeProblem {
  public:
    /// The reference is a finite-difference oracle built on first use.
    explicit Burgers(double nu = 0.05, int oracle_nx = 1024, int oracle_nt = 4096);

    std::string name() const override { return "burgers"; }
    std::vector<Interval> domain() const override { return {{0.0, 1.0}, {0.0, 1.0}}; }
    std::vector<std::string> axis_names() const override { return {"x", "t"}; }
    DerivRequest residual_request() const override;
    Eigen::VectorXd residual(const FieldBatch &f, double param) const override;
    void residual_adjoint(const FieldBatch &f, double param, const Eigen::VectorXd &g_res, FieldBatch &adj,
                          double &g_param) const override;
    std::vector<Constraint> constraints(const std::vector<Eigen::VectorXd> &colloc,
                                        Eigen::Index axis_cap) const override;
    double reference(std::span<const double> point) const override;

    double viscosity() const { return nu_; }
    const BurgersFdOracle &oracle() const;

  private:
    double nu_;
    int oracle_nx_;
    int oracle_nt_;
    mutable std::shared_ptr<BurgersFdOracle> oracle_;
};

class SineGordon final : public PdeProblem {
  public:
    /// `data_points` noise-free samples of the kink drawn with `data_seed`.
    SineGordon(double m = 1.0, double v = 1.0, double beta_true = 0.25, double beta_initial = 1.0,
               int data_points = 200, std::uint64_t data_seed = 2024);

    std::string name() const override { return "sinegordon"; }
    std::vector<Interval> domain() const override { return {{-20.0, 20.0}, {0.0, 4.0}}; }
    std::vector<std::string> axis_names() const override { return {"x", "t"}; }
    DerivRequest residual_request() const override;
    Eigen::VectorXd residual(const FieldBatch &f, double param) const override;
    void residual_adjoint(const FieldBatch &f, double param, const Eigen::VectorXd &g_res, FieldBatch &adj,
                          double &g_param) const override;
    std::vector<Constraint> constraints(const std::vector<Eigen::VectorXd> &colloc,
                                        Eigen::Index axis_cap) const override;
    double reference(std::span<const double> point) const override;
    std::optional<LearnableParam> learnable() const override;

    const Constraint &data() const { return data_; }

  private:
    double m_;
    double v_;
    double beta_true_;
    double beta_initial_;
    Constraint data_;
};

/// "advection_diffusion_1d", "advection_diffusion_2d",
/// "advection_diffusion_3d", "burgers", "sinegordon".
std::unique_ptr<PdeProblem> make_problem(const std::string &name);

/// Reference values on a grid (axis 0 fastest).
Eigen::VectorXd reference_on_grid(const PdeProblem &problem, const SampleLayout &grid);

/// Evenly spaced points over each axis of the domain.
SampleLayout uniform_grid(const std::vector<Interval> &domain, const std::vector<Eigen::Index> &counts);

}  // namespace orthospinn
