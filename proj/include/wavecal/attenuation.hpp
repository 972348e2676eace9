//
// Project Wavecal - Copyright 2026 the Wavecal authors.
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <array>
#include <limits>
#include <vector>

#include "wavecal/model.hpp"

namespace wavecal {

enum class AfKind { Polynomial, Piecewise, Cml };

const char* to_string(AfKind k);

/// Parameterized attenuation function sigma.
///
/// Polynomial and piecewise profiles are per-axis functions of the layer
/// depth coordinate g in [0, 1] (0 at the interest/absorbing interface,
/// 1 at the exterior boundary). CML profiles assign one constant per layer.
/// `values` is the flat control vector; with tie_axes every (axis, side)
/// layer shares one group of values, otherwise groups are ordered
/// axis-major, lo side before hi, and only sides with nonzero width get one.
struct AttenuationProfile {
    AfKind kind = AfKind::Piecewise;
    int order = 0;         // polynomial order n >= 0
    int bins = 1;          // piecewise bin count / CML layer count
    bool tie_axes = true;
    std::vector<double> values;

    int group_size() const { return kind == AfKind::Polynomial ? order + 1 : bins; }
    int group_count(const GridSpec& grid) const;
    int control_count(const GridSpec& grid) const;

    /// Index of the value group serving (axis, side), or -1 when that side
    /// has no layer.
    int group_of(const GridSpec& grid, int axis, Side side) const;

    /// Validates shape consistency and (for piecewise/CML) non-negativity
    /// of configured values. Numeric kernels stay total in the values so
    /// finite-difference probes may pass through negative trial points.
    void validate(const GridSpec& grid) const;
};

/// Evaluate sigma_axis at coordinate x (PML-style per-axis profiles).
/// Exactly zero outside the absorbing spans of that axis.
double eval_af(const AttenuationProfile& profile, const GridSpec& grid, int axis, double x);

/// Evaluate the CML constant for a cell: values[layer-1] inside layer i >= 1,
/// zero on the interest region and exterior cells.
double eval_cml(const AttenuationProfile& profile, const DomainLayout& layout, long cell);

/// Node positions at which sigma is sampled: counts plus per-axis offsets in
/// cell units (0.0 for face nodes, 0.5 for centers).
struct SampleGrid {
    int dim = 1;
    std::array<int, 3> n = {1, 1, 1};
    std::array<double, 3> offset = {0.5, 0.5, 0.5};

    long size() const {
        long s = 1;
        for (int a = 0; a < dim; ++a) s *= n[a];
        return s;
    }
};

/// Dense sigma samples over one SampleGrid plus the exact Jacobian of every
/// sample with respect to the controls (sparse triplets).
struct SigmaRaster {
    struct Entry {
        long node;
        int control;
        double weight;
    };
    // PML profiles fill one slot per axis; CML fills slot 0 only.
    std::vector<std::vector<double>> sigma;
    std::vector<std::vector<Entry>> jacobian;
};

SigmaRaster rasterize(const AttenuationProfile& profile, const DomainLayout& layout,
                      const SampleGrid& nodes);

/// Per-entry box bounds for the optimizer: [0, inf) for piecewise and CML
/// entries, unbounded for polynomial coefficients.
struct ControlBounds {
    std::vector<double> lo;
    std::vector<double> hi;
};

ControlBounds control_bounds(const AttenuationProfile& profile, const GridSpec& grid);

/// Random-restart sampling interval for a profile kind.
std::array<double, 2> restart_interval(AfKind kind);

}  // namespace wavecal
