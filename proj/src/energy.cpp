//
// Project Wavecal - Copyright 2026 the Wavecal authors.
// SPDX-License-Identifier: Apache-2.0
//
#include "wavecal/energy.hpp"

#include <cmath>
#include <limits>

namespace wavecal {

namespace {

// Gathered node indices and weights of one component at one cell centre.
struct Gather {
    std::array<long, 8> node;
    int count = 0;
    double weight = 1.0;  // 1 / count
};

Gather gather_nodes(const Scheme& s, int comp, const std::array<int, 3>& cell) {
    const ComponentSpec& c = s.comps[comp];
    const auto& d = s.comp_dims[comp];
    Gather g;
    int nface = 0;
    std::array<int, 3> face_axes{};
    for (int a = 0; a < s.dim; ++a)
        if (c.face[a]) face_axes[nface++] = a;
    g.count = 1 << nface;
    g.weight = 1.0 / g.count;
    for (int m = 0; m < g.count; ++m) {
        std::array<int, 3> idx = cell;
        for (int b = 0; b < nface; ++b) {
            const int a = face_axes[b];
            int ia = cell[a] + ((m >> b) & 1);
            if (s.boundaries.periodic(a)) ia %= d[a];
            idx[a] = ia;
        }
        g.node[m] = (static_cast<long>(idx[2]) * d[1] + idx[1]) * d[0] + idx[0];
    }
    return g;
}

}  // namespace

double total_energy(const Scheme& s, const WaveState& state) {
    const int n = state_size(s.physics, s.dim);
    const Eigen::MatrixXd Q = q_matrix(s.physics, s.material, s.dim);
    double vol = 1.0;
    for (int a = 0; a < s.dim; ++a) vol *= s.grid.spacing[a];

    Eigen::VectorXd qc(n);
    double energy = 0.0;
    std::array<int, 3> cell;
    const auto& cells = s.grid.cells;
    for (cell[2] = 0; cell[2] < (s.dim > 2 ? cells[2] : 1); ++cell[2])
        for (cell[1] = 0; cell[1] < (s.dim > 1 ? cells[1] : 1); ++cell[1])
            for (cell[0] = 0; cell[0] < cells[0]; ++cell[0]) {
                for (size_t c = 0; c < s.comps.size(); ++c) {
                    if (s.comps[c].family != CompFamily::State) continue;
                    const Gather g = gather_nodes(s, static_cast<int>(c), cell);
                    double v = 0.0;
                    for (int m = 0; m < g.count; ++m) v += state.f[c][g.node[m]];
                    qc[s.comps[c].role] = v * g.weight;
                }
                energy += 0.5 * vol * qc.dot(Q * qc);
            }
    return energy;
}

WaveState energy_gradient(const Scheme& s, const WaveState& state) {
    const int n = state_size(s.physics, s.dim);
    const Eigen::MatrixXd Q = q_matrix(s.physics, s.material, s.dim);
    double vol = 1.0;
    for (int a = 0; a < s.dim; ++a) vol *= s.grid.spacing[a];

    WaveState grad = s.make_state();
    Eigen::VectorXd qc(n);
    std::array<int, 3> cell;
    const auto& cells = s.grid.cells;
    std::vector<int> comp_of_role(n, -1);
    for (size_t c = 0; c < s.comps.size(); ++c)
        if (s.comps[c].family == CompFamily::State) comp_of_role[s.comps[c].role] = static_cast<int>(c);

    for (cell[2] = 0; cell[2] < (s.dim > 2 ? cells[2] : 1); ++cell[2])
        for (cell[1] = 0; cell[1] < (s.dim > 1 ? cells[1] : 1); ++cell[1])
            for (cell[0] = 0; cell[0] < cells[0]; ++cell[0]) {
                for (int role = 0; role < n; ++role) {
                    const int c = comp_of_role[role];
                    const Gather g = gather_nodes(s, c, cell);
                    double v = 0.0;
                    for (int m = 0; m < g.count; ++m) v += state.f[c][g.node[m]];
                    qc[role] = v * g.weight;
                }
                const Eigen::VectorXd w = vol * (Q * qc);
                for (int role = 0; role < n; ++role) {
                    const int c = comp_of_role[role];
                    const Gather g = gather_nodes(s, c, cell);
                    for (int m = 0; m < g.count; ++m)
                        grad.f[c][g.node[m]] += w[role] * g.weight;
                }
            }
    grad.step = state.step;
    return grad;
}

double reduction_db(double E, double E_bar) {
    if (E_bar <= 0.0) throw std::domain_error("reduction_db requires a positive reference energy");
    if (E < 0.0) throw std::domain_error("reduction_db requires E >= 0");
    if (E == 0.0) return -std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(E / E_bar);
}

}  // namespace wavecal
