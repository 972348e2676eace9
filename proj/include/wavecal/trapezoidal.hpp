//
// Project Wavecal - Copyright 2026 the Wavecal authors.
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <vector>

#include <Eigen/Dense>

#include "wavecal/solver.hpp"

namespace wavecal {

/// 1-D collocated reference integrator, implicit trapezoidal rule.
///
/// State Y = (v_0..v_nx, p_0..p_nx) on nodes x_i = i h. The first-derivative
/// operator pairs summation-by-parts with the trapezoid quadrature, so the
/// energy 1/2 <W Y, Y> is preserved to solver precision when sigma = 0 and
/// the source is off. Both state components are damped by the same sigma(x),
/// which makes the 1-D PML and CML models coincide, as they do in the
/// continuous setting.
///
/// The update is
///   (I - dt/2 L) Y_{n+1} = (I + dt/2 L) Y_n + dt F(t_{n+1/2}),
/// and the adjoint solve marches the transposed recurrence backwards
/// (back substitution of the stepwise constraint system).
class TrapezoidalScheme {
public:
    explicit TrapezoidalScheme(const SimulationConfig& config);

    void set_controls(const std::vector<double>& u);
    std::vector<double> controls() const { return profile_.values; }
    int control_count() const { return n_controls_; }

    struct Run {
        std::vector<Eigen::VectorXd> states;  // Y_0 .. Y_M
        std::vector<double> energy;
        std::vector<double> time;
        double dt = 0.0;
    };

    Run run(int steps) const;
    int default_steps() const { return steps_; }
    double dt() const { return dt_; }
    int nodes() const { return nodes_; }

    double energy_of(const Eigen::VectorXd& y) const;

    /// Adjoint states lambda_1..lambda_M (index 0 unused), in the sign
    /// convention of the stepwise constraint system: lambda_M solves
    /// (dc_M/dq_M)^T lambda_M = -W Y_M.
    std::vector<Eigen::VectorXd> reverse_sweep(const Run& run) const;

    /// dJ/du for J = E(Y_M): contracts 1/2 lambda_n (Y_n + Y_{n-1}) with the
    /// sigma-to-control Jacobian.
    std::vector<double> gradient(const Run& run, const std::vector<Eigen::VectorXd>& lambda) const;

    /// Objective and gradient in one sweep.
    std::pair<double, std::vector<double>> objective(const std::vector<double>& u, int steps) const;

private:
    void refactor();
    Eigen::VectorXd source_at(double t) const;

    GridSpec grid_;
    DomainLayout layout_;
    MaterialParams mat_;
    AttenuationProfile profile_;
    LayerModel layers_ = LayerModel::None;
    std::vector<SourceSpec> sources_;
    int nodes_ = 0;   // nx + 1
    int steps_ = 0;
    double dt_ = 0.0;
    int n_controls_ = 0;

    Eigen::MatrixXd L0_;        // undamped generator with clamped v rows
    Eigen::VectorXd sigma_;     // per node
    std::vector<SigmaRaster::Entry> jac_;
    Eigen::VectorXd weights_;   // energy weights (trapezoid norm x material)
    Eigen::MatrixXd m_plus_;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu_minus_;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu_minus_t_;
    std::vector<Eigen::VectorXd> source_shapes_;  // per source, spatial part
};

}  // namespace wavecal
