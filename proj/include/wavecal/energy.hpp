//
// Project Wavecal - Copyright 2026 the Wavecal authors.
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include "wavecal/solver.hpp"

namespace wavecal {

struct EnergyReport {
    double E = 0.0;       // [J]
    double E_bar = 0.0;   // reference (zero-AF) energy [J]
    double delta_db = 0.0;
    double time = 0.0;    // [s]
};

/// E = 1/2 <Q q, q> over the computational domain, midpoint quadrature
/// h^d per cell with staggered components averaged to cell centres.
double total_energy(const Scheme& scheme, const WaveState& state);

/// dE/d(state), scattered back through the same quadrature. The terminal
/// adjoint seed is the negative of this (see adjoint module).
WaveState energy_gradient(const Scheme& scheme, const WaveState& state);

/// 10 log10(E / E_bar): negative when the run is damped (figure convention).
/// E == 0 maps to -infinity; E_bar <= 0 is a domain error.
double reduction_db(double E, double E_bar);

}  // namespace wavecal
