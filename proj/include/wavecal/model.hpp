//
// Project Wavecal - Copyright 2026 the Wavecal authors.
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wavecal/types.hpp"

namespace wavecal {

/// Number of state components for a physics kind in `dim` dimensions.
/// Acoustic: (v_1..v_d, p). Elastodynamic (2-D plane strain):
/// (v1, v2, T11, T22, T12). Electromagnetic (2-D TM): (Hx, Hy, Ez).
int state_size(PhysicsKind kind, int dim);

/// Dense flux matrix A_axis for the first-order system
///   dq/dt + sum_i d(A_i q)/dx_i = f.
/// Entries carry the material parameters; axis is 0-based.
Eigen::MatrixXd flux_matrix(PhysicsKind kind, const MaterialParams& mat, int dim, int axis);

/// A_axis * q for a single state vector.
Eigen::VectorXd flux_apply(PhysicsKind kind, const MaterialParams& mat, int dim, int axis,
                           const Eigen::VectorXd& q);

/// Symmetric positive definite weight of the energy density
/// E = 1/2 <Q q, q>. Acoustic: diag(rho,..,1/K); EM: diag(mu,..,eps);
/// elastodynamic: diag(rho, rho, C^-1) with C the Voigt stiffness.
Eigen::MatrixXd q_matrix(PhysicsKind kind, const MaterialParams& mat, int dim);

/// 2-D Voigt stiffness block for (T11, T22, T12), plane strain.
Eigen::Matrix3d voigt_stiffness_2d(const MaterialParams& mat);

enum class Side { Lo = 0, Hi = 1 };

/// Structured-grid geometry: interest region plus axis-aligned absorbing
/// sides, optionally subdivided into N sublayers.
struct GridSpec {
    int dim = 1;
    std::array<int, 3> cells = {0, 1, 1};      // cells per axis (unused axes = 1)
    std::array<double, 3> spacing = {0, 0, 0}; // h per axis [m]
    // absorbing width in cells per (axis, side)
    std::array<std::array<int, 2>, 3> widths = {{{0, 0}, {0, 0}, {0, 0}}};
    int sublayer_count = 1;

    // Optional rasterized irregular interest region (2-D only); row-major
    // bools over cells. When set, `widths` are ignored and the absorbing
    // region is grown from the mask by hop distance.
    std::vector<uint8_t> interest_mask;

    void validate() const;

    int interest_lo(int axis) const { return widths[axis][0]; }
    int interest_hi(int axis) const { return cells[axis] - widths[axis][1]; }  // exclusive
    int interest_extent(int axis) const { return interest_hi(axis) - interest_lo(axis); }
    double extent(int axis) const { return cells[axis] * spacing[axis]; }
    long total_cells() const {
        long n = 1;
        for (int a = 0; a < dim; ++a) n *= cells[a];
        return n;
    }
};

/// Per-cell region tags derived from a GridSpec.
///
/// Rectangular layouts tag each absorbing cell with its per-axis side and
/// sublayer depth; corner cells carry tags for both axes. CML ring indices
/// are Chebyshev shells for rectangular layouts and 4-neighbourhood
/// breadth-first hop distance for rasterized irregular interest regions.
struct DomainLayout {
    GridSpec grid;

    // per cell: absorbing depth in cells from the interface along each axis
    // (-1 when the cell is interior to that axis' interest span), and side.
    std::vector<std::array<int8_t, 3>> side_of;   // -1 none, 0 lo, 1 hi
    std::vector<std::array<int16_t, 3>> depth_of; // 0-based cells from interface
    std::vector<int16_t> cml_layer;               // 0 interest, 1..N layer id, -1 exterior void
    std::vector<uint8_t> active;                  // 0 = exterior void cell

    bool is_interest(long cell) const { return cml_layer[cell] == 0; }
    long cell_index(int i, int j = 0, int k = 0) const {
        return (static_cast<long>(k) * grid.cells[1] + j) * grid.cells[0] + i;
    }

    static DomainLayout build(const GridSpec& grid);
};

/// Result of validate_layout: empty message means the layout is consistent.
struct LayoutReport {
    bool ok = true;
    std::string message;
    long first_bad_cell = -1;
};

/// Checks tag totality, contiguity of sublayers, divisibility of widths by
/// the sublayer count, and hop-distance bounds for irregular regions.
LayoutReport validate_layout(const GridSpec& grid, const DomainLayout& layout);

}  // namespace wavecal
