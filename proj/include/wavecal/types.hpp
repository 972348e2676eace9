//
// Project Wavecal - Copyright 2026 the Wavecal authors.
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace wavecal {

/// Error in a user-supplied configuration (geometry, material, schema).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// A forward run produced non-finite fields.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(const std::string& what, int step)
        : std::runtime_error(what + " (step " + std::to_string(step) + ")"), step_(step) {}
    int step() const { return step_; }

private:
    int step_;
};

enum class PhysicsKind {
    Acoustic,
    Elastodynamic,
    Electromagnetic,
};

const char* to_string(PhysicsKind k);

/// Homogeneous material description. Only the fields relevant to the
/// physics kind are meaningful; validate() checks the active subset.
struct MaterialParams {
    // acoustic + elastodynamic
    double rho = 0.0;  // mass density [kg/m^3]
    // acoustic
    double K = 0.0;  // bulk modulus [Pa]
    // elastodynamic (isotropic, given through wave speeds)
    double v_l = 0.0;  // longitudinal speed [m/s]
    double v_t = 0.0;  // transverse speed [m/s]
    // electromagnetic
    double mu = 0.0;   // permeability [H/m]
    double eps = 0.0;  // permittivity [F/m]

    void validate(PhysicsKind kind) const;

    /// Fastest wave speed, used by the CFL bound.
    double max_speed(PhysicsKind kind) const;
    /// Slowest wave speed, used when choosing the calibration time.
    double min_speed(PhysicsKind kind) const;

    // Lame constants derived from (rho, v_l, v_t).
    double lame_lambda() const { return rho * (v_l * v_l - 2.0 * v_t * v_t); }
    double lame_mu() const { return rho * v_t * v_t; }
};

}  // namespace wavecal
