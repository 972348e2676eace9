//
// Project Wavecal - Copyright 2026 the Wavecal authors.
// SPDX-License-Identifier: Apache-2.0
//
#include "wavecal/trapezoidal.hpp"

#include <cmath>

namespace wavecal {

TrapezoidalScheme::TrapezoidalScheme(const SimulationConfig& config) {
    SimulationConfig cfg = config;
    if (cfg.layers != LayerModel::None && cfg.attenuation.values.empty())
        cfg.attenuation.values.assign(cfg.attenuation.control_count(cfg.grid), 0.0);
    cfg.validate();
    if (cfg.grid.dim != 1 || cfg.physics != PhysicsKind::Acoustic)
        throw ConfigError("the trapezoidal integrator supports 1-D acoustic runs");

    grid_ = cfg.grid;
    layout_ = DomainLayout::build(grid_);
    mat_ = cfg.material;
    profile_ = cfg.attenuation;
    layers_ = cfg.layers;
    sources_ = cfg.sources;
    nodes_ = grid_.cells[0] + 1;
    const TimeGrid tg = cfg.time_grid();
    dt_ = tg.dt;
    steps_ = tg.steps;
    n_controls_ = layers_ == LayerModel::None ? 0 : profile_.control_count(grid_);

    const int n = nodes_;
    const double h = grid_.spacing[0];

    // SBP first derivative: centred interior, one-sided boundary rows.
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
    d(0, 0) = -1.0 / h;
    d(0, 1) = 1.0 / h;
    d(n - 1, n - 2) = -1.0 / h;
    d(n - 1, n - 1) = 1.0 / h;
    for (int i = 1; i < n - 1; ++i) {
        d(i, i - 1) = -0.5 / h;
        d(i, i + 1) = 0.5 / h;
    }

    L0_ = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    L0_.block(0, n, n, n) = -d / mat_.rho;  // v rows: -(1/rho) d p
    L0_.block(n, 0, n, n) = -mat_.K * d;    // p rows: -K d v
    // fixed walls: v clamped at both ends
    L0_.row(0).setZero();
    L0_.row(n - 1).setZero();

    weights_.resize(2 * n);
    for (int i = 0; i < n; ++i) {
        const double w = h * ((i == 0 || i == n - 1) ? 0.5 : 1.0);
        weights_[i] = w * mat_.rho;
        weights_[n + i] = w / mat_.K;
    }

    // spatial source shapes (body sources only; v rows clamped at walls)
    for (const auto& src : sources_) {
        Eigen::VectorXd shape = Eigen::VectorXd::Zero(2 * n);
        const int base = (src.component <= 0) ? 0 : n;
        const double lo = grid_.interest_lo(0) * h + (grid_.widths[0][0] ? 0.25 * h : 0.0);
        const double hi = grid_.interest_hi(0) * h - (grid_.widths[0][1] ? 0.25 * h : 0.0);
        if (src.spatial == SourceSpec::Spatial::Point) {
            const int i = std::clamp(static_cast<int>(std::lround(src.position[0] / h)), 0, n - 1);
            if (i * h < lo || i * h > hi)
                throw ConfigError("source support must lie inside the interest region");
            shape[base + i] = 1.0;
        } else {
            for (int i = 0; i < n; ++i) {
                const double dx = i * h - src.position[0];
                if (std::abs(dx) > 4.0 * src.width) continue;
                if (i * h < lo || i * h > hi)
                    throw ConfigError("source support must lie inside the interest region");
                shape[base + i] = std::exp(-dx * dx / (src.width * src.width));
            }
        }
        shape[0] = 0.0;
        shape[n - 1] = 0.0;  // clamped v walls carry no load
        source_shapes_.push_back(std::move(shape));
    }

    sigma_ = Eigen::VectorXd::Zero(n);
    if (layers_ != LayerModel::None) set_controls(profile_.values);
    else refactor();
}

void TrapezoidalScheme::set_controls(const std::vector<double>& u) {
    if (static_cast<int>(u.size()) != n_controls_) throw ConfigError("control vector length mismatch");
    profile_.values = u;
    if (layers_ != LayerModel::None) {
        SampleGrid sg;
        sg.dim = 1;
        sg.n = {nodes_, 1, 1};
        sg.offset = {0.0, 0.5, 0.5};
        SigmaRaster r = rasterize(profile_, layout_, sg);
        for (int i = 0; i < nodes_; ++i) sigma_[i] = r.sigma[0][i];
        jac_ = std::move(r.jacobian[0]);
    }
    refactor();
}

void TrapezoidalScheme::refactor() {
    const int n = nodes_;
    Eigen::MatrixXd L = L0_;
    for (int i = 0; i < n; ++i) {
        L(i, i) -= sigma_[i];
        L(n + i, n + i) -= sigma_[i];
    }
    L.row(0).setZero();
    L.row(n - 1).setZero();
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(2 * n, 2 * n);
    const Eigen::MatrixXd m_minus = eye - 0.5 * dt_ * L;
    m_plus_ = eye + 0.5 * dt_ * L;
    lu_minus_.compute(m_minus);
    lu_minus_t_.compute(m_minus.transpose());
}

Eigen::VectorXd TrapezoidalScheme::source_at(double t) const {
    Eigen::VectorXd f = Eigen::VectorXd::Zero(2 * nodes_);
    for (size_t k = 0; k < sources_.size(); ++k) f += sources_[k].value(t) * source_shapes_[k];
    return f;
}

double TrapezoidalScheme::energy_of(const Eigen::VectorXd& y) const {
    return 0.5 * y.dot(weights_.cwiseProduct(y));
}

TrapezoidalScheme::Run TrapezoidalScheme::run(int steps) const {
    Run out;
    out.dt = dt_;
    Eigen::VectorXd y = Eigen::VectorXd::Zero(2 * nodes_);
    out.states.push_back(y);
    out.energy.push_back(energy_of(y));
    out.time.push_back(0.0);
    for (int m = 0; m < steps; ++m) {
        const Eigen::VectorXd rhs = m_plus_ * y + dt_ * source_at((m + 0.5) * dt_);
        y = lu_minus_.solve(rhs);
        if (!y.allFinite()) throw DivergenceError("trapezoidal run diverged", m + 1);
        out.states.push_back(y);
        out.energy.push_back(energy_of(y));
        out.time.push_back((m + 1) * dt_);
    }
    return out;
}

std::vector<Eigen::VectorXd> TrapezoidalScheme::reverse_sweep(const Run& run) const {
    const int m = static_cast<int>(run.states.size()) - 1;
    std::vector<Eigen::VectorXd> lambda(m + 1, Eigen::VectorXd::Zero(2 * nodes_));
    // Terminal block of the transposed constraint system:
    //   (dc_M/dq_M)^T lambda_M = -dJ/dq_M,  dc_M/dq_M = (I - dt/2 L)/dt
    Eigen::VectorXd rhs = -(weights_.cwiseProduct(run.states[m]));
    lambda[m] = dt_ * lu_minus_t_.solve(rhs);
    for (int k = m - 1; k >= 1; --k) {
        // (dc_k/dq_k)^T lambda_k = -(dc_{k+1}/dq_k)^T lambda_{k+1}
        lambda[k] = lu_minus_t_.solve(m_plus_.transpose() * lambda[k + 1]);
    }
    return lambda;
}

std::vector<double> TrapezoidalScheme::gradient(const Run& run,
                                                const std::vector<Eigen::VectorXd>& lambda) const {
    const int m = static_cast<int>(run.states.size()) - 1;
    const int n = nodes_;
    // dJ/dsigma_i = sum_k lambda_k^T dc_k/dsigma_i,
    // dc_k/dsigma_i = E_i (q_k + q_{k-1})/2 on both damped rows.
    Eigen::VectorXd dj_dsigma = Eigen::VectorXd::Zero(n);
    for (int k = 1; k <= m; ++k) {
        const Eigen::VectorXd avg = 0.5 * (run.states[k] + run.states[k - 1]);
        for (int i = 0; i < n; ++i)
            dj_dsigma[i] += lambda[k][i] * avg[i] + lambda[k][n + i] * avg[n + i];
    }
    std::vector<double> g(n_controls_, 0.0);
    for (const auto& e : jac_) g[e.control] += dj_dsigma[e.node] * e.weight;
    return g;
}

std::pair<double, std::vector<double>> TrapezoidalScheme::objective(const std::vector<double>& u,
                                                                    int steps) const {
    TrapezoidalScheme& self = const_cast<TrapezoidalScheme&>(*this);
    self.set_controls(u);
    const Run r = run(steps);
    const double j = r.energy.back();
    const auto lambda = reverse_sweep(r);
    return {j, gradient(r, lambda)};
}

}  // namespace wavecal
