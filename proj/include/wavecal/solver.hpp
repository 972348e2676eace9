//
// Project Wavecal - Copyright 2026 the Wavecal authors.
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <array>
#include <memory>
#include <optional>
#include <vector>

#include "wavecal/attenuation.hpp"
#include "wavecal/field.hpp"
#include "wavecal/model.hpp"

namespace wavecal {

struct SourceSpec {
    enum class Temporal { Gaussian, Sine };
    enum class Spatial { Port, Point, Blob };

    Temporal temporal = Temporal::Gaussian;
    double amplitude = 1.0;
    double t0 = 0.0;     // Gaussian centre [s]
    double tau = 0.0;    // Gaussian width [s]; shape exp(-((t-t0)/tau)^2)
    double omega = 0.0;  // sine angular frequency [rad/s]

    Spatial spatial = Spatial::Port;
    int component = -1;  // state index targeted by point/blob (-1: first velocity row)
    std::array<double, 3> position = {0, 0, 0};  // [m]
    double width = 0.0;                          // blob width [m], truncated at 4*width
    int face_axis = 0;
    Side face_side = Side::Lo;
    int transverse_mode = 0;  // 0 uniform, m >= 1: sin(m pi y / L) port profile

    double value(double t) const {
        if (temporal == Temporal::Gaussian) {
            const double z = (t - t0) / tau;
            return amplitude * std::exp(-z * z);
        }
        return amplitude * std::sin(omega * t);
    }
};

struct BoundarySpec {
    enum class Kind { Fixed, Periodic, Port };
    std::array<std::array<Kind, 2>, 3> face = {{{Kind::Fixed, Kind::Fixed},
                                                {Kind::Fixed, Kind::Fixed},
                                                {Kind::Fixed, Kind::Fixed}}};
    bool periodic(int axis) const { return face[axis][0] == Kind::Periodic; }
};

struct TimeGrid {
    double dt = 0.0;
    int steps = 0;
    double cfl = 0.9;

    /// dt from the CFL bound dt <= cfl * h_min / (v_max sqrt(d)).
    static double stable_dt(const GridSpec& grid, PhysicsKind kind, const MaterialParams& mat,
                            double cfl);
};

enum class LayerModel { None, Pml, Cml };
enum class Integrator { Leapfrog, Trapezoidal };

struct SimulationConfig {
    PhysicsKind physics = PhysicsKind::Acoustic;
    MaterialParams material;
    GridSpec grid;
    LayerModel layers = LayerModel::Pml;
    BoundarySpec boundaries;
    std::vector<SourceSpec> sources;
    AttenuationProfile attenuation;
    Integrator integrator = Integrator::Leapfrog;
    double cfl = 0.9;
    double dt_override = 0.0;  // 0 = derive from CFL
    int steps = 0;
    double t_end = 0.0;  // used when steps == 0

    void validate() const;
    TimeGrid time_grid() const;
};

// ---------------------------------------------------------------------------
// Step program: one time step expressed as a sequence of linear operations.
// The same program drives the forward run, its exact transpose (adjoint) and
// the tangent linearization, so gradients are exact for the implemented
// scheme by construction.
// ---------------------------------------------------------------------------

enum class OpKind : uint8_t { Copy, Scale, Axpy, Stencil, ZeroNodes, AddSource };

enum class CoefForm : uint8_t {
    Const,         // k
    SemiA,         // (1 - S dt/2) / (1 + S dt/2), S = sum of listed sigmas
    SemiB,         // k dt / (1 + S dt/2)
    DtSigma,       // k dt sigma_a
    DtSigmaProd2,  // k dt sigma_a sigma_b
    DtSigmaProd3,  // k dt sigma_0 sigma_1 sigma_2
};

struct CoefSpec {
    CoefForm form = CoefForm::Const;
    double k = 1.0;
    std::array<int8_t, 3> slots = {-1, -1, -1};  // sigma slots of the dst component
    int nslots = 0;
};

struct StencilEntry {
    int out;
    int in;
    double w;
};

struct SourceNode {
    long node;
    double weight;
};

struct Op {
    OpKind kind;
    int dst = -1;
    int src = -1;
    CoefSpec cspec;
    std::vector<double> coef;           // per dst node; empty when Const everywhere
    std::vector<StencilEntry> entries;  // Stencil
    std::vector<long> nodes;            // ZeroNodes
    std::vector<SourceNode> snodes;     // AddSource
    int source_id = -1;
    double tphase = 0.0;  // source evaluation time offset in steps

    bool sigma_dependent() const { return cspec.form != CoefForm::Const; }
};

/// A compiled scheme: component table, per-component sigma samples with
/// their control Jacobians, and the op program for one step.
struct Scheme {
    PhysicsKind physics;
    int dim = 1;
    MaterialParams material;
    GridSpec grid;
    DomainLayout layout;
    LayerModel layers = LayerModel::None;
    AttenuationProfile profile;
    BoundarySpec boundaries;
    std::vector<SourceSpec> sources;
    double dt = 0.0;
    int n_controls = 0;

    std::vector<ComponentSpec> comps;
    std::vector<std::array<int, 3>> comp_dims;
    std::vector<std::vector<uint8_t>> writable;  // per comp: stencil rows allowed

    // sigma samples: [comp][slot][node]; slot = axis for PML, single slot for CML
    std::vector<std::vector<std::vector<double>>> sigma;
    std::vector<std::vector<std::vector<SigmaRaster::Entry>>> sig_jac;

    std::vector<Op> ops;

    int comp_index(const std::string& name) const;
    WaveState make_state() const;

    /// Re-rasterize sigma for new control values and refresh op coefficients.
    void set_controls(const std::vector<double>& u);
    std::vector<double> controls() const { return profile.values; }
};

/// Compile a SimulationConfig into a stepping scheme (leapfrog family).
Scheme build_scheme(const SimulationConfig& config);

/// Advance one step in place (state.step -> state.step + 1).
void step(const Scheme& scheme, WaveState& state);

/// Per-op records for the reverse sweep of a single step.
struct StepTape {
    std::vector<std::vector<double>> saved;  // per op: values needed later (may be empty)
};

void step_with_tape(const Scheme& scheme, WaveState& state, StepTape& tape);

/// Transposed step: pulls the adjoint state one step back in time and, when
/// `dsigma` is non-null, accumulates dJ/dsigma contributions of this step.
void adjoint_step(const Scheme& scheme, const StepTape& tape, WaveState& lambda,
                  std::vector<std::vector<std::vector<double>>>* dsigma);

/// Tangent step: advances (state, delta) under a control perturbation
/// delta_sigma (same layout as Scheme::sigma).
void tangent_step(const Scheme& scheme, WaveState& state, WaveState& delta,
                  const std::vector<std::vector<std::vector<double>>>& delta_sigma);

struct Trajectory {
    std::vector<WaveState> states;  // states[m] = state after m steps (store-all)
    std::vector<double> energy;     // energy per step (index 0 = initial)
    std::vector<double> time;
    double dt = 0.0;
};

/// Run the forward problem. Stores every state when store_all is true
/// (required for the adjoint sweep); always records the energy trace.
Trajectory run_forward(const Scheme& scheme, int steps, bool store_all = true);

}  // namespace wavecal
