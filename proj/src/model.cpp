//
// Project Wavecal - Copyright 2026 the Wavecal authors.
// SPDX-License-Identifier: Apache-2.0
//
#include "wavecal/model.hpp"

#include <algorithm>
#include <deque>

namespace wavecal {

const char* to_string(PhysicsKind k) {
    switch (k) {
        case PhysicsKind::Acoustic: return "acoustic";
        case PhysicsKind::Elastodynamic: return "elastodynamic";
        case PhysicsKind::Electromagnetic: return "electromagnetic";
    }
    return "?";
}

void MaterialParams::validate(PhysicsKind kind) const {
    switch (kind) {
        case PhysicsKind::Acoustic:
            if (rho <= 0.0) throw ConfigError("material.rho must be > 0");
            if (K <= 0.0) throw ConfigError("material.K must be > 0");
            break;
        case PhysicsKind::Elastodynamic:
            if (rho <= 0.0) throw ConfigError("material.rho must be > 0");
            if (v_t <= 0.0) throw ConfigError("material.v_t must be > 0");
            if (v_l <= v_t) throw ConfigError("material.v_l must exceed v_t");
            break;
        case PhysicsKind::Electromagnetic:
            if (mu <= 0.0) throw ConfigError("material.mu must be > 0");
            if (eps <= 0.0) throw ConfigError("material.eps must be > 0");
            break;
    }
}

double MaterialParams::max_speed(PhysicsKind kind) const {
    switch (kind) {
        case PhysicsKind::Acoustic: return std::sqrt(K / rho);
        case PhysicsKind::Elastodynamic: return v_l;
        case PhysicsKind::Electromagnetic: return 1.0 / std::sqrt(mu * eps);
    }
    return 0.0;
}

double MaterialParams::min_speed(PhysicsKind kind) const {
    return kind == PhysicsKind::Elastodynamic ? v_t : max_speed(kind);
}

int state_size(PhysicsKind kind, int dim) {
    switch (kind) {
        case PhysicsKind::Acoustic: return dim + 1;
        case PhysicsKind::Elastodynamic:
            if (dim != 2) throw ConfigError("elastodynamic physics is 2-D only");
            return 5;
        case PhysicsKind::Electromagnetic:
            if (dim != 2) throw ConfigError("electromagnetic physics is 2-D (TM) only");
            return 3;
    }
    return 0;
}

Eigen::Matrix3d voigt_stiffness_2d(const MaterialParams& mat) {
    const double lam = mat.lame_lambda();
    const double mu = mat.lame_mu();
    Eigen::Matrix3d c = Eigen::Matrix3d::Zero();
    c(0, 0) = c(1, 1) = lam + 2.0 * mu;
    c(0, 1) = c(1, 0) = lam;
    c(2, 2) = mu;
    return c;
}

Eigen::MatrixXd flux_matrix(PhysicsKind kind, const MaterialParams& mat, int dim, int axis) {
    if (axis < 0 || axis >= dim) throw ConfigError("flux axis out of range for dimension");
    const int n = state_size(kind, dim);
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    switch (kind) {
        case PhysicsKind::Acoustic: {
            // q = (v_1..v_d, p): v couples to p via 1/rho, p to v via K.
            a(axis, dim) = 1.0 / mat.rho;
            a(dim, axis) = mat.K;
            break;
        }
        case PhysicsKind::Electromagnetic: {
            // q = (Hx, Hy, Ez), TM mode.
            if (axis == 0) {
                a(1, 2) = -1.0 / mat.mu;
                a(2, 1) = -1.0 / mat.eps;
            } else {
                a(0, 2) = 1.0 / mat.mu;
                a(2, 0) = 1.0 / mat.eps;
            }
            break;
        }
        case PhysicsKind::Elastodynamic: {
            // q = (v1, v2, T11, T22, T12), velocity-stress, plane strain.
            const Eigen::Matrix3d c = voigt_stiffness_2d(mat);
            if (axis == 0) {
                a(0, 2) = -1.0 / mat.rho;  // v1 <- d/dx T11
                a(1, 4) = -1.0 / mat.rho;  // v2 <- d/dx T12
                a(2, 0) = -c(0, 0);        // T11 <- d/dx v1
                a(3, 0) = -c(1, 0);        // T22 <- d/dx v1
                a(4, 1) = -c(2, 2);        // T12 <- d/dx v2
            } else {
                a(0, 4) = -1.0 / mat.rho;  // v1 <- d/dy T12
                a(1, 3) = -1.0 / mat.rho;  // v2 <- d/dy T22
                a(2, 1) = -c(0, 1);        // T11 <- d/dy v2
                a(3, 1) = -c(1, 1);        // T22 <- d/dy v2
                a(4, 0) = -c(2, 2);        // T12 <- d/dy v1
            }
            break;
        }
    }
    return a;
}

Eigen::VectorXd flux_apply(PhysicsKind kind, const MaterialParams& mat, int dim, int axis,
                           const Eigen::VectorXd& q) {
    const int n = state_size(kind, dim);
    if (q.size() != n) throw ConfigError("state vector length does not match physics/dim");
    return flux_matrix(kind, mat, dim, axis) * q;
}

Eigen::MatrixXd q_matrix(PhysicsKind kind, const MaterialParams& mat, int dim) {
    mat.validate(kind);
    const int n = state_size(kind, dim);
    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n, n);
    switch (kind) {
        case PhysicsKind::Acoustic:
            for (int i = 0; i < dim; ++i) q(i, i) = mat.rho;
            q(dim, dim) = 1.0 / mat.K;
            break;
        case PhysicsKind::Electromagnetic:
            q(0, 0) = q(1, 1) = mat.mu;
            q(2, 2) = mat.eps;
            break;
        case PhysicsKind::Elastodynamic: {
            q(0, 0) = q(1, 1) = mat.rho;
            q.block<3, 3>(2, 2) = voigt_stiffness_2d(mat).inverse();
            break;
        }
    }
    return q;
}

void GridSpec::validate() const {
    if (dim < 1 || dim > 3) throw ConfigError("grid.dim must be 1, 2 or 3");
    if (sublayer_count < 1) throw ConfigError("grid.sublayer_count must be >= 1");
    for (int a = 0; a < dim; ++a) {
        if (cells[a] < 4) throw ConfigError("grid.cells must be >= 4 per axis");
        if (spacing[a] <= 0.0) throw ConfigError("grid.spacing must be > 0");
        if (widths[a][0] < 0 || widths[a][1] < 0) throw ConfigError("layer widths must be >= 0");
        if (widths[a][0] + widths[a][1] >= cells[a])
            throw ConfigError("absorbing sides leave no interest region on axis " + std::to_string(a));
    }
    if (!interest_mask.empty()) {
        if (dim != 2) throw ConfigError("grid.interest_mask requires dim == 2");
        if (static_cast<long>(interest_mask.size()) != total_cells())
            throw ConfigError("grid.interest_mask size does not match the grid");
    }
}

namespace {

DomainLayout build_rectangular(const GridSpec& grid) {
    DomainLayout lay;
    lay.grid = grid;
    const long nc = grid.total_cells();
    lay.side_of.assign(nc, {-1, -1, -1});
    lay.depth_of.assign(nc, {-1, -1, -1});
    lay.cml_layer.assign(nc, 0);
    lay.active.assign(nc, 1);

    const int n = grid.sublayer_count;
    std::array<int, 3> idx = {0, 0, 0};
    for (idx[2] = 0; idx[2] < grid.cells[2] || (grid.dim < 3 && idx[2] == 0); ++idx[2]) {
        if (grid.dim < 3 && idx[2] > 0) break;
        for (idx[1] = 0; idx[1] < grid.cells[1] || (grid.dim < 2 && idx[1] == 0); ++idx[1]) {
            if (grid.dim < 2 && idx[1] > 0) break;
            for (idx[0] = 0; idx[0] < grid.cells[0]; ++idx[0]) {
                const long c = lay.cell_index(idx[0], idx[1], idx[2]);
                int cheb = 0;  // Chebyshev depth over axes, in cells
                for (int a = 0; a < grid.dim; ++a) {
                    if (idx[a] < grid.interest_lo(a)) {
                        lay.side_of[c][a] = 0;
                        lay.depth_of[c][a] = static_cast<int16_t>(grid.interest_lo(a) - 1 - idx[a]);
                    } else if (idx[a] >= grid.interest_hi(a)) {
                        lay.side_of[c][a] = 1;
                        lay.depth_of[c][a] = static_cast<int16_t>(idx[a] - grid.interest_hi(a));
                    }
                    if (lay.depth_of[c][a] >= 0) cheb = std::max(cheb, lay.depth_of[c][a] + 1);
                }
                if (cheb > 0) {
                    // Ring id from the Chebyshev shell; requires uniform side
                    // widths for a consistent corner ring, checked when a CML
                    // profile is rasterized.
                    int w = 0;
                    for (int a = 0; a < grid.dim; ++a)
                        w = std::max({w, grid.widths[a][0], grid.widths[a][1]});
                    const int per = std::max(1, w / n);
                    lay.cml_layer[c] = static_cast<int16_t>(std::min(n, (cheb - 1) / per + 1));
                }
            }
        }
    }
    return lay;
}

DomainLayout build_masked(const GridSpec& grid) {
    DomainLayout lay;
    lay.grid = grid;
    const long nc = grid.total_cells();
    lay.side_of.assign(nc, {-1, -1, -1});
    lay.depth_of.assign(nc, {-1, -1, -1});
    lay.cml_layer.assign(nc, -1);
    lay.active.assign(nc, 0);

    const int nx = grid.cells[0];
    const int ny = grid.cells[1];
    std::deque<long> queue;
    for (long c = 0; c < nc; ++c) {
        if (grid.interest_mask[c]) {
            lay.cml_layer[c] = 0;
            lay.active[c] = 1;
            queue.push_back(c);
        }
    }
    if (queue.empty()) throw ConfigError("grid.interest_mask selects no cells");

    // Breadth-first hop distance, 4-neighbourhood; cells beyond N hops stay
    // exterior and are excluded from the simulation.
    while (!queue.empty()) {
        const long c = queue.front();
        queue.pop_front();
        const int hop = lay.cml_layer[c];
        if (hop >= grid.sublayer_count) continue;
        const int i = static_cast<int>(c % nx);
        const int j = static_cast<int>(c / nx);
        const std::array<std::array<int, 2>, 4> nbrs = {{{i - 1, j}, {i + 1, j}, {i, j - 1}, {i, j + 1}}};
        for (const auto& nb : nbrs) {
            if (nb[0] < 0 || nb[0] >= nx || nb[1] < 0 || nb[1] >= ny) continue;
            const long d = lay.cell_index(nb[0], nb[1]);
            if (lay.cml_layer[d] >= 0) continue;
            lay.cml_layer[d] = static_cast<int16_t>(hop + 1);
            lay.active[d] = 1;
            queue.push_back(d);
        }
    }
    return lay;
}

}  // namespace

DomainLayout DomainLayout::build(const GridSpec& grid) {
    grid.validate();
    return grid.interest_mask.empty() ? build_rectangular(grid) : build_masked(grid);
}

LayoutReport validate_layout(const GridSpec& grid, const DomainLayout& layout) {
    LayoutReport rep;
    auto fail = [&rep](const std::string& msg, long cell) {
        rep.ok = false;
        rep.message = msg;
        rep.first_bad_cell = cell;
        return rep;
    };

    const long nc = grid.total_cells();
    if (static_cast<long>(layout.cml_layer.size()) != nc)
        return fail("layout does not cover the grid", -1);

    if (grid.interest_mask.empty()) {
        for (int a = 0; a < grid.dim; ++a) {
            for (int s = 0; s < 2; ++s) {
                const int w = grid.widths[a][s];
                if (w > 0 && w % grid.sublayer_count != 0)
                    return fail("grid.sublayer_count does not divide the absorbing width on axis " +
                                    std::to_string(a),
                                -1);
            }
        }
    }

    for (long c = 0; c < nc; ++c) {
        const bool interest = layout.cml_layer[c] == 0;
        bool absorbing = false;
        for (int a = 0; a < grid.dim; ++a) {
            if (layout.side_of[c][a] >= 0) {
                absorbing = true;
                if (layout.depth_of[c][a] < 0)
                    return fail("absorbing cell missing sublayer depth", c);
            }
        }
        if (grid.interest_mask.empty()) {
            if (interest == absorbing) return fail("cell tagged both interest and absorbing", c);
        } else {
            if (layout.cml_layer[c] > grid.sublayer_count)
                return fail("hop distance exceeds layer count", c);
            if (layout.cml_layer[c] < 0 && layout.active[c])
                return fail("exterior cell marked active", c);
        }
    }

    // Contiguity: along each axis and side, depths must increase by one per
    // cell moving outward from the interface.
    if (grid.interest_mask.empty() && grid.dim >= 1) {
        for (int a = 0; a < grid.dim; ++a) {
            for (long c = 0; c < nc; ++c) {
                if (layout.side_of[c][a] < 0) continue;
                const int16_t d = layout.depth_of[c][a];
                if (d >= std::max(grid.widths[a][0], grid.widths[a][1]))
                    return fail("sublayer depth exceeds the side width", c);
            }
        }
    }
    return rep;
}

}  // namespace wavecal
