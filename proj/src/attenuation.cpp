//
// Project Wavecal - Copyright 2026 the Wavecal authors.
// SPDX-License-Identifier: Apache-2.0
//
#include "wavecal/attenuation.hpp"

#include <algorithm>
#include <cmath>

namespace wavecal {

const char* to_string(AfKind k) {
    switch (k) {
        case AfKind::Polynomial: return "polynomial";
        case AfKind::Piecewise: return "piecewise";
        case AfKind::Cml: return "cml";
    }
    return "?";
}

int AttenuationProfile::group_count(const GridSpec& grid) const {
    if (kind == AfKind::Cml || tie_axes) return 1;
    int g = 0;
    for (int a = 0; a < grid.dim; ++a)
        for (int s = 0; s < 2; ++s)
            if (grid.widths[a][s] > 0) ++g;
    return g;
}

int AttenuationProfile::control_count(const GridSpec& grid) const {
    return group_count(grid) * group_size();
}

int AttenuationProfile::group_of(const GridSpec& grid, int axis, Side side) const {
    if (grid.widths[axis][static_cast<int>(side)] == 0) return -1;
    if (kind == AfKind::Cml || tie_axes) return 0;
    int g = 0;
    for (int a = 0; a < grid.dim; ++a) {
        for (int s = 0; s < 2; ++s) {
            if (grid.widths[a][s] == 0) continue;
            if (a == axis && s == static_cast<int>(side)) return g;
            ++g;
        }
    }
    return -1;
}

void AttenuationProfile::validate(const GridSpec& grid) const {
    if (kind == AfKind::Polynomial && order < 0) throw ConfigError("attenuation.order must be >= 0");
    if (kind != AfKind::Polynomial && bins < 1) throw ConfigError("attenuation.bins must be >= 1");
    const int want = control_count(grid);
    if (static_cast<int>(values.size()) != want)
        throw ConfigError("attenuation.values must hold " + std::to_string(want) + " entries");
    if (kind != AfKind::Polynomial) {
        for (double v : values)
            if (v < 0.0) throw ConfigError("piecewise/cml attenuation values must be >= 0");
    }
    if (kind == AfKind::Cml) {
        // CML rings must align with cells: uniform widths divisible by bins.
        if (grid.interest_mask.empty()) {
            int w = -1;
            for (int a = 0; a < grid.dim; ++a) {
                for (int s = 0; s < 2; ++s) {
                    if (grid.widths[a][s] == 0) continue;
                    if (w < 0) w = grid.widths[a][s];
                    if (grid.widths[a][s] != w)
                        throw ConfigError("cml layers require equal widths on all absorbing sides");
                }
            }
            if (w > 0 && w % bins != 0)
                throw ConfigError("cml layer count must divide the absorbing width");
        }
        if (grid.sublayer_count != bins)
            throw ConfigError("cml bins must equal grid.sublayer_count");
    }
}

namespace {

// Depth of coordinate x inside the (axis, side) layer, in cell units;
// negative when outside. g = depth / width maps interface -> 0,
// exterior -> 1.
double layer_depth_cells(const GridSpec& grid, int axis, Side side, double x) {
    const double h = grid.spacing[axis];
    const int w = grid.widths[axis][static_cast<int>(side)];
    if (w == 0) return -1.0;
    const double cell_pos = x / h;
    if (side == Side::Lo) return static_cast<double>(w) - cell_pos;
    return cell_pos - static_cast<double>(grid.cells[axis] - w);
}

double group_value(const AttenuationProfile& p, int group, int slot) {
    return p.values[static_cast<size_t>(group) * p.group_size() + slot];
}

// Piecewise bin for depth t (cells) in a layer of w cells: equal-width bins
// in g, half-open toward the exterior, last bin closed.
int piecewise_bin(double t_cells, int w_cells, int bins) {
    const double scaled = t_cells * static_cast<double>(bins) / static_cast<double>(w_cells);
    int b = static_cast<int>(std::floor(scaled));
    if (b >= bins) b = bins - 1;  // g == 1 belongs to the last bin
    if (b < 0) b = 0;
    return b;
}

}  // namespace

double eval_af(const AttenuationProfile& profile, const GridSpec& grid, int axis, double x) {
    if (profile.kind == AfKind::Cml)
        throw ConfigError("eval_af does not apply to cml profiles; use eval_cml");
    for (int s = 0; s < 2; ++s) {
        const Side side = static_cast<Side>(s);
        const int w = grid.widths[axis][s];
        if (w == 0) continue;
        const double t = layer_depth_cells(grid, axis, side, x);
        if (t < 0.0 || t > static_cast<double>(w)) continue;
        const int group = profile.group_of(grid, axis, side);
        if (profile.kind == AfKind::Polynomial) {
            const double g = t / static_cast<double>(w);
            double acc = 0.0;
            double pw = 1.0;
            for (int j = 0; j <= profile.order; ++j) {
                acc += group_value(profile, group, j) * pw;
                pw *= g;
            }
            return acc;
        }
        const int b = piecewise_bin(t, w, profile.bins);
        return group_value(profile, group, b);
    }
    return 0.0;
}

double eval_cml(const AttenuationProfile& profile, const DomainLayout& layout, long cell) {
    const int layer = layout.cml_layer[cell];
    if (layer <= 0) return 0.0;
    return profile.values[std::min(layer, profile.bins) - 1];
}

namespace {

struct NodeIter {
    const SampleGrid& g;
    std::array<int, 3> idx = {0, 0, 0};
    long lin = 0;
    bool done = false;

    explicit NodeIter(const SampleGrid& grid) : g(grid) {}
    double coord(int axis, double h) const { return (idx[axis] + g.offset[axis]) * h; }
    void next() {
        ++lin;
        for (int a = 0; a < g.dim; ++a) {
            if (++idx[a] < g.n[a]) return;
            idx[a] = 0;
        }
        done = true;
    }
};

}  // namespace

SigmaRaster rasterize(const AttenuationProfile& profile, const DomainLayout& layout,
                      const SampleGrid& nodes) {
    const GridSpec& grid = layout.grid;
    const int slots = profile.kind == AfKind::Cml ? 1 : grid.dim;
    SigmaRaster out;
    out.sigma.assign(slots, std::vector<double>(nodes.size(), 0.0));
    out.jacobian.assign(slots, {});

    if (profile.kind == AfKind::Cml) {
        const int nx = grid.cells[0];
        const int ny = grid.dim > 1 ? grid.cells[1] : 1;
        const int nz = grid.dim > 2 ? grid.cells[2] : 1;
        for (NodeIter it(nodes); !it.done; it.next()) {
            // Adjacent cells: centre offsets pin one cell, face offsets span two.
            int layer = -1;
            std::array<std::array<int, 2>, 3> range;
            for (int a = 0; a < grid.dim; ++a) {
                const int n = a == 0 ? nx : (a == 1 ? ny : nz);
                if (nodes.offset[a] > 0.25) {
                    range[a] = {std::min(it.idx[a], n - 1), std::min(it.idx[a], n - 1)};
                } else {
                    range[a] = {std::max(0, it.idx[a] - 1), std::min(it.idx[a], n - 1)};
                }
            }
            for (int a = grid.dim; a < 3; ++a) range[a] = {0, 0};
            for (int k = range[2][0]; k <= range[2][1]; ++k)
                for (int j = range[1][0]; j <= range[1][1]; ++j)
                    for (int i = range[0][0]; i <= range[0][1]; ++i)
                        layer = std::max(layer, static_cast<int>(layout.cml_layer[layout.cell_index(i, j, k)]));
            if (layer >= 1) {
                const int k = std::min(layer, profile.bins) - 1;
                out.sigma[0][it.lin] = profile.values[k];
                out.jacobian[0].push_back({it.lin, k, 1.0});
            }
        }
        return out;
    }

    for (int axis = 0; axis < grid.dim; ++axis) {
        for (NodeIter it(nodes); !it.done; it.next()) {
            const double t_lo = layer_depth_cells(grid, axis, Side::Lo, it.coord(axis, grid.spacing[axis]));
            const double t_hi = layer_depth_cells(grid, axis, Side::Hi, it.coord(axis, grid.spacing[axis]));
            for (int s = 0; s < 2; ++s) {
                const int w = grid.widths[axis][s];
                if (w == 0) continue;
                const double t = s == 0 ? t_lo : t_hi;
                if (t < 0.0 || t > static_cast<double>(w)) continue;
                const int group = profile.group_of(grid, axis, static_cast<Side>(s));
                const int base = group * profile.group_size();
                if (profile.kind == AfKind::Polynomial) {
                    const double g = t / static_cast<double>(w);
                    double pw = 1.0;
                    double acc = 0.0;
                    for (int j = 0; j <= profile.order; ++j) {
                        acc += profile.values[base + j] * pw;
                        out.jacobian[axis].push_back({it.lin, base + j, pw});
                        pw *= g;
                    }
                    out.sigma[axis][it.lin] = acc;
                } else {
                    const int b = piecewise_bin(t, w, profile.bins);
                    out.sigma[axis][it.lin] = profile.values[base + b];
                    out.jacobian[axis].push_back({it.lin, base + b, 1.0});
                }
                break;  // a node is inside at most one side per axis
            }
        }
    }
    return out;
}

ControlBounds control_bounds(const AttenuationProfile& profile, const GridSpec& grid) {
    const int n = profile.control_count(grid);
    ControlBounds b;
    const double inf = std::numeric_limits<double>::infinity();
    if (profile.kind == AfKind::Polynomial) {
        b.lo.assign(n, -inf);
        b.hi.assign(n, inf);
    } else {
        b.lo.assign(n, 0.0);
        b.hi.assign(n, inf);
    }
    return b;
}

std::array<double, 2> restart_interval(AfKind kind) {
    if (kind == AfKind::Polynomial) return {-500.0, 500.0};
    return {0.0, 7000.0};
}

}  // namespace wavecal
