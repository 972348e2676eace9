//
// Project Wavecal - Copyright 2026 the Wavecal authors.
// SPDX-License-Identifier: Apache-2.0
//
// Compiles a SimulationConfig into a step program.
//
// Component placement (staggered grids, x fastest):
//   acoustic:   v_a on a-faces (half-time), p at centres (integer time)
//   elastic:    v1/v2 on x/y-faces (half), T11/T22 centres, T12 corners (integer)
//   EM (TM):    Hx on y-faces, Hy on x-faces (half), Ez centres (integer)
// PML auxiliary fields mirror their partner in space and sit on the opposite
// time grid; the s family (3-D) shares the partner's time grid.
//
// One step (PML, leapfrog, semi-implicit damping):
//   copy prev <- q
//   half-time q update   (centred at t_m)
//   [3-D] s update for half-time partners (centred t_m)
//   r update for integer partners (centred t_m)
//   integer q update     (centred t_{m+1/2})
//   [3-D] s update for integer partners (centred t_{m+1/2})
//   r update for half-time partners (centred t_{m+1/2})
// Averages (q_prev + q)/2 realize the exact time centring of every term.
//
#include <algorithm>
#include <cmath>

#include "wavecal/energy.hpp"
#include "wavecal/solver.hpp"

namespace wavecal {

double TimeGrid::stable_dt(const GridSpec& grid, PhysicsKind kind, const MaterialParams& mat,
                           double cfl) {
    double hmin = grid.spacing[0];
    for (int a = 1; a < grid.dim; ++a) hmin = std::min(hmin, grid.spacing[a]);
    return cfl * hmin / (mat.max_speed(kind) * std::sqrt(static_cast<double>(grid.dim)));
}

void SimulationConfig::validate() const {
    material.validate(physics);
    grid.validate();
    state_size(physics, grid.dim);  // throws on unsupported physics/dim
    for (int a = 0; a < grid.dim; ++a) {
        const bool lo = boundaries.face[a][0] == BoundarySpec::Kind::Periodic;
        const bool hi = boundaries.face[a][1] == BoundarySpec::Kind::Periodic;
        if (lo != hi) throw ConfigError("periodic faces must come in opposing pairs");
        if (lo && (grid.widths[a][0] > 0 || grid.widths[a][1] > 0))
            throw ConfigError("periodic axis cannot carry absorbing layers");
    }
    if (integrator == Integrator::Trapezoidal) {
        if (grid.dim != 1) throw ConfigError("trapezoidal integrator is 1-D only");
        for (const auto& s : sources)
            if (s.spatial == SourceSpec::Spatial::Port)
                throw ConfigError("trapezoidal integrator does not support port sources");
    }
    for (const auto& s : sources) {
        if (s.temporal == SourceSpec::Temporal::Gaussian && s.tau <= 0.0)
            throw ConfigError("source.tau must be > 0 for gaussian signals");
        if (s.temporal == SourceSpec::Temporal::Sine && s.omega <= 0.0)
            throw ConfigError("source.omega must be > 0 for sine signals");
        if (s.spatial == SourceSpec::Spatial::Blob && s.width <= 0.0)
            throw ConfigError("source.width must be > 0 for blob sources");
        if (s.spatial == SourceSpec::Spatial::Port) {
            if (s.face_axis < 0 || s.face_axis >= grid.dim) throw ConfigError("port axis out of range");
            if (boundaries.face[s.face_axis][static_cast<int>(s.face_side)] != BoundarySpec::Kind::Port)
                throw ConfigError("port source requires a port boundary on its face");
            if (grid.widths[s.face_axis][static_cast<int>(s.face_side)] != 0)
                throw ConfigError("port face must not carry an absorbing layer");
        }
    }
    if (!grid.interest_mask.empty()) {
        if (layers == LayerModel::Pml)
            throw ConfigError("irregular interest regions support cml layers only");
        for (int a = 0; a < grid.dim; ++a)
            if (grid.widths[a][0] != 0 || grid.widths[a][1] != 0)
                throw ConfigError("grid.widths must be zero when interest_mask is set");
    }
    if (layers == LayerModel::Cml && attenuation.kind != AfKind::Cml)
        throw ConfigError("cml layers require a cml attenuation profile");
    if (layers == LayerModel::Pml && attenuation.kind == AfKind::Cml)
        throw ConfigError("pml layers require a polynomial or piecewise profile");
    if (layers != LayerModel::None) attenuation.validate(grid);
    if (steps <= 0 && t_end <= 0.0) throw ConfigError("time.steps or time.t_end must be set");
    if (cfl <= 0.0 || cfl > 1.0) throw ConfigError("time.cfl must lie in (0, 1]");
}

TimeGrid SimulationConfig::time_grid() const {
    TimeGrid tg;
    tg.cfl = cfl;
    const double stable = TimeGrid::stable_dt(grid, physics, material, cfl);
    tg.dt = dt_override > 0.0 ? dt_override : stable;
    if (integrator == Integrator::Leapfrog && tg.dt > stable * (1.0 + 1e-12))
        throw ConfigError("time.dt violates the CFL bound");
    tg.steps = steps > 0 ? steps : static_cast<int>(std::ceil(t_end / tg.dt - 1e-12));
    return tg;
}

namespace {

struct FluxTerm {
    int out, in, axis;
    double alpha;  // A_axis(out, in)
};

std::vector<ComponentSpec> state_components(PhysicsKind kind, int dim) {
    std::vector<ComponentSpec> c;
    auto add = [&c](const std::string& name, int role, std::array<int, 3> face, bool half) {
        ComponentSpec s;
        s.name = name;
        s.role = role;
        s.face = face;
        s.half_time = half;
        c.push_back(s);
    };
    switch (kind) {
        case PhysicsKind::Acoustic: {
            const char* names[3] = {"v1", "v2", "v3"};
            for (int a = 0; a < dim; ++a) {
                std::array<int, 3> f = {0, 0, 0};
                f[a] = 1;
                add(names[a], a, f, true);
            }
            add("p", dim, {0, 0, 0}, false);
            break;
        }
        case PhysicsKind::Electromagnetic:
            add("Hx", 0, {0, 1, 0}, true);
            add("Hy", 1, {1, 0, 0}, true);
            add("Ez", 2, {0, 0, 0}, false);
            break;
        case PhysicsKind::Elastodynamic:
            add("v1", 0, {1, 0, 0}, true);
            add("v2", 1, {0, 1, 0}, true);
            add("T11", 2, {0, 0, 0}, false);
            add("T22", 3, {0, 0, 0}, false);
            add("T12", 4, {1, 1, 0}, false);
            break;
    }
    return c;
}

std::vector<FluxTerm> flux_terms(PhysicsKind kind, const MaterialParams& mat, int dim) {
    std::vector<FluxTerm> terms;
    for (int axis = 0; axis < dim; ++axis) {
        const Eigen::MatrixXd a = flux_matrix(kind, mat, dim, axis);
        for (int out = 0; out < a.rows(); ++out)
            for (int in = 0; in < a.cols(); ++in)
                if (a(out, in) != 0.0) terms.push_back({out, in, axis, a(out, in)});
    }
    return terms;
}

bool velocity_like(PhysicsKind kind, int role, int dim) {
    switch (kind) {
        case PhysicsKind::Acoustic: return role < dim;
        case PhysicsKind::Elastodynamic: return role < 2;
        case PhysicsKind::Electromagnetic: return false;  // PEC walls clamp nothing
    }
    return false;
}

struct Builder {
    const SimulationConfig& cfg;
    Scheme s;
    std::vector<int> state_ids, prev_ids, r_ids, s_ids;  // by state comp ordinal

    explicit Builder(const SimulationConfig& config) : cfg(config) {}

    int dim() const { return cfg.grid.dim; }
    bool periodic(int a) const { return cfg.boundaries.periodic(a); }

    std::array<int, 3> dims_for(const ComponentSpec& c) const {
        std::array<int, 3> d = {1, 1, 1};
        for (int a = 0; a < dim(); ++a)
            d[a] = cfg.grid.cells[a] + ((c.face[a] && !periodic(a)) ? 1 : 0);
        return d;
    }

    long lin(int comp, const std::array<int, 3>& i) const {
        const auto& d = s.comp_dims[comp];
        return (static_cast<long>(i[2]) * d[1] + i[1]) * d[0] + i[0];
    }

    void add_component(const ComponentSpec& spec) {
        s.comps.push_back(spec);
        s.comp_dims.push_back(dims_for(spec));
    }

    // A node is excluded from stencil writes when it is a clamped wall face
    // (fixed/port velocity) or touches an exterior cell of a masked layout.
    void build_writable() {
        s.writable.resize(s.comps.size());
        for (size_t c = 0; c < s.comps.size(); ++c) {
            const ComponentSpec& spec = s.comps[c];
            const ComponentSpec& base =
                spec.family == CompFamily::State ? spec : s.comps[spec.partner];
            const auto& d = s.comp_dims[c];
            std::vector<uint8_t> ok(static_cast<size_t>(d[0]) * d[1] * d[2], 1);
            std::array<int, 3> i;
            for (i[2] = 0; i[2] < d[2]; ++i[2])
                for (i[1] = 0; i[1] < d[1]; ++i[1])
                    for (i[0] = 0; i[0] < d[0]; ++i[0]) {
                        bool w = true;
                        for (int a = 0; a < dim() && w; ++a) {
                            if (!base.face[a] || periodic(a)) continue;
                            const bool wall = i[a] == 0 || i[a] == d[a] - 1;
                            if (wall && velocity_like(cfg.physics, base.role, dim())) w = false;
                        }
                        if (w && !cfg.grid.interest_mask.empty()) w = node_active(base, i);
                        if (!w) ok[lin(static_cast<int>(c), i)] = 0;
                    }
            s.writable[c] = std::move(ok);
        }
    }

    bool node_active(const ComponentSpec& base, const std::array<int, 3>& i) const {
        if (cfg.grid.interest_mask.empty()) return true;
        std::array<std::array<int, 2>, 3> range;
        for (int a = 0; a < 3; ++a) {
            if (a >= dim()) {
                range[a] = {0, 0};
                continue;
            }
            if (base.face[a]) {
                range[a] = {i[a] - 1, i[a]};
            } else {
                range[a] = {i[a], i[a]};
            }
        }
        for (int k = range[2][0]; k <= range[2][1]; ++k)
            for (int j = range[1][0]; j <= range[1][1]; ++j)
                for (int ii = range[0][0]; ii <= range[0][1]; ++ii) {
                    if (ii < 0 || ii >= cfg.grid.cells[0] || j < 0 ||
                        (dim() > 1 && j >= cfg.grid.cells[1]))
                        continue;
                    if (!s.layout.active[s.layout.cell_index(ii, std::max(j, 0), std::max(k, 0))])
                        return false;
                }
        return true;
    }

    CoefSpec semi_a(int nslots) const {
        CoefSpec cs;
        cs.form = CoefForm::SemiA;
        cs.nslots = nslots;
        for (int i = 0; i < nslots; ++i) cs.slots[i] = static_cast<int8_t>(i);
        return cs;
    }
    CoefSpec semi_b(double k, int nslots) const {
        CoefSpec cs;
        cs.form = CoefForm::SemiB;
        cs.k = k;
        cs.nslots = nslots;
        for (int i = 0; i < nslots; ++i) cs.slots[i] = static_cast<int8_t>(i);
        return cs;
    }
    static CoefSpec dt_sigma(int slot, double k) {
        CoefSpec cs;
        cs.form = CoefForm::DtSigma;
        cs.k = k;
        cs.slots[0] = static_cast<int8_t>(slot);
        cs.nslots = 1;
        return cs;
    }
    static CoefSpec dt_prod2(int a, int b, double k) {
        CoefSpec cs;
        cs.form = CoefForm::DtSigmaProd2;
        cs.k = k;
        cs.slots = {static_cast<int8_t>(a), static_cast<int8_t>(b), -1};
        cs.nslots = 2;
        return cs;
    }
    static CoefSpec dt_prod3(double k) {
        CoefSpec cs;
        cs.form = CoefForm::DtSigmaProd3;
        cs.k = k;
        cs.slots = {0, 1, 2};
        cs.nslots = 3;
        return cs;
    }
    static CoefSpec constant(double k) {
        CoefSpec cs;
        cs.k = k;
        return cs;
    }

    // Emit dst += cspec * d(src)/dx_axis over all writable dst rows, applying
    // boundary rules. `ghost_src` marks sources mirrored antisymmetrically at
    // fixed/port walls; `port` attaches the wall-value signal of a port face.
    void stencil(int dst, int src, int axis, const CoefSpec& cspec, bool ghost_src,
                 const SourceSpec* port, int port_source_id, double port_alpha_dt) {
        Op op;
        op.kind = OpKind::Stencil;
        op.dst = dst;
        op.src = src;
        op.cspec = cspec;
        const auto& dd = s.comp_dims[dst];
        const auto& ds = s.comp_dims[src];
        const double h = cfg.grid.spacing[axis];
        const bool face_out = s.comps[dst].face[axis] == 1;
        Op port_op;
        port_op.kind = OpKind::AddSource;
        port_op.dst = dst;
        port_op.source_id = port_source_id;
        port_op.tphase = 0.0;

        std::array<int, 3> i;
        for (i[2] = 0; i[2] < dd[2]; ++i[2])
            for (i[1] = 0; i[1] < dd[1]; ++i[1])
                for (i[0] = 0; i[0] < dd[0]; ++i[0]) {
                    const long o = lin(dst, i);
                    if (!s.writable[dst][o]) continue;
                    std::array<int, 3> ip = i, im = i;
                    if (face_out) {
                        // face <- centre: d/dx at face i reads cells i-1, i
                        im[axis] = i[axis] - 1;
                        if (periodic(axis)) {
                            im[axis] = (im[axis] + ds[axis]) % ds[axis];
                            ip[axis] = i[axis] % ds[axis];
                        } else if (i[axis] == 0) {
                            if (!ghost_src) continue;
                            op.entries.push_back({static_cast<int>(o), static_cast<int>(lin(src, ip)),
                                                  2.0 / h});
                            if (port && port_matches(*port, axis, Side::Lo, i))
                                port_op.snodes.push_back({o, port_weight(*port, i) * 2.0 * port_alpha_dt / h});
                            continue;
                        } else if (i[axis] == dd[axis] - 1) {
                            if (!ghost_src) continue;
                            im[axis] = ds[axis] - 1;
                            op.entries.push_back({static_cast<int>(o), static_cast<int>(lin(src, im)),
                                                  -2.0 / h});
                            if (port && port_matches(*port, axis, Side::Hi, i))
                                port_op.snodes.push_back({o, -port_weight(*port, i) * 2.0 * port_alpha_dt / h});
                            continue;
                        }
                    } else {
                        // centre <- face: d/dx at centre j reads faces j, j+1
                        ip[axis] = i[axis] + 1;
                        if (periodic(axis)) ip[axis] %= ds[axis];
                    }
                    op.entries.push_back({static_cast<int>(o), static_cast<int>(lin(src, ip)), 1.0 / h});
                    op.entries.push_back({static_cast<int>(o), static_cast<int>(lin(src, im)), -1.0 / h});
                }
        s.ops.push_back(std::move(op));
        if (!port_op.snodes.empty()) s.ops.push_back(std::move(port_op));
    }

    bool port_matches(const SourceSpec& port, int axis, Side side, const std::array<int, 3>&) const {
        return port.face_axis == axis && port.face_side == side;
    }

    double port_weight(const SourceSpec& port, const std::array<int, 3>& i) const {
        if (port.transverse_mode == 0 || dim() == 1) return 1.0;
        const int b = port.face_axis == 0 ? 1 : 0;
        const double y = (i[b] + 0.5) * cfg.grid.spacing[b];
        const double len = cfg.grid.cells[b] * cfg.grid.spacing[b];
        return std::sin(port.transverse_mode * M_PI * y / len);
    }

    void scale(int comp, const CoefSpec& cs) {
        Op op;
        op.kind = OpKind::Scale;
        op.dst = comp;
        op.cspec = cs;
        s.ops.push_back(std::move(op));
    }
    void axpy(int dst, int src, const CoefSpec& cs) {
        Op op;
        op.kind = OpKind::Axpy;
        op.dst = dst;
        op.src = src;
        op.cspec = cs;
        s.ops.push_back(std::move(op));
    }
    void copy(int dst, int src) {
        Op op;
        op.kind = OpKind::Copy;
        op.dst = dst;
        op.src = src;
        s.ops.push_back(std::move(op));
    }

    void body_source(int comp, const SourceSpec& spec, int source_id, double tphase) {
        Op op;
        op.kind = OpKind::AddSource;
        op.dst = comp;
        op.source_id = source_id;
        op.tphase = tphase;
        const auto& d = s.comp_dims[comp];
        const ComponentSpec& c = s.comps[comp];
        const double dt = s.dt;

        auto node_coord = [&](int a, int ia) {
            return (ia + (c.face[a] ? 0.0 : 0.5)) * cfg.grid.spacing[a];
        };
        if (spec.spatial == SourceSpec::Spatial::Point) {
            std::array<int, 3> i = {0, 0, 0};
            for (int a = 0; a < dim(); ++a) {
                const double x = spec.position[a] / cfg.grid.spacing[a] - (c.face[a] ? 0.0 : 0.5);
                i[a] = std::clamp(static_cast<int>(std::lround(x)), 0, d[a] - 1);
            }
            check_in_interest(comp, i);
            op.snodes.push_back({lin(comp, i), dt});
        } else {
            std::array<int, 3> i;
            for (i[2] = 0; i[2] < d[2]; ++i[2])
                for (i[1] = 0; i[1] < d[1]; ++i[1])
                    for (i[0] = 0; i[0] < d[0]; ++i[0]) {
                        double r2 = 0.0;
                        bool inside = true;
                        for (int a = 0; a < dim(); ++a) {
                            const double dx = node_coord(a, i[a]) - spec.position[a];
                            if (std::abs(dx) > 4.0 * spec.width) inside = false;
                            r2 += dx * dx;
                        }
                        if (!inside || r2 > 16.0 * spec.width * spec.width) continue;
                        check_in_interest(comp, i);
                        op.snodes.push_back({lin(comp, i), dt * std::exp(-r2 / (spec.width * spec.width))});
                    }
            if (op.snodes.empty())
                throw ConfigError("blob source support does not touch any grid node");
        }
        s.ops.push_back(std::move(op));
    }

    void check_in_interest(int comp, const std::array<int, 3>& i) const {
        const ComponentSpec& c = s.comps[comp];
        for (int a = 0; a < dim(); ++a) {
            const double h = cfg.grid.spacing[a];
            const double x = (i[a] + (c.face[a] ? 0.0 : 0.5)) * h;
            // Quarter-cell margin keeps source nodes off the interface, where
            // sigma is already nonzero; this enforces sigma * f = 0 exactly.
            const double lo = cfg.grid.interest_lo(a) * h + (cfg.grid.widths[a][0] > 0 ? 0.25 * h : 0.0);
            const double hi = cfg.grid.interest_hi(a) * h - (cfg.grid.widths[a][1] > 0 ? 0.25 * h : 0.0);
            if (cfg.grid.interest_mask.empty() && (x < lo || x > hi))
                throw ConfigError("source support must lie inside the interest region");
        }
        if (!cfg.grid.interest_mask.empty()) {
            std::array<int, 3> cell = i;
            for (int a = 0; a < dim(); ++a) cell[a] = std::min(cell[a], cfg.grid.cells[a] - 1);
            if (!s.layout.grid.interest_mask[s.layout.cell_index(cell[0], cell[1], cell[2])])
                throw ConfigError("source support must lie inside the interest region");
        }
    }

    void port_clamp(int comp, const SourceSpec& spec, int source_id) {
        Op zero;
        zero.kind = OpKind::ZeroNodes;
        zero.dst = comp;
        Op add;
        add.kind = OpKind::AddSource;
        add.dst = comp;
        add.source_id = source_id;
        add.tphase = 0.5;
        const auto& d = s.comp_dims[comp];
        const int a = spec.face_axis;
        const int ia = spec.face_side == Side::Lo ? 0 : d[a] - 1;
        std::array<int, 3> i;
        for (i[2] = 0; i[2] < d[2]; ++i[2])
            for (i[1] = 0; i[1] < d[1]; ++i[1])
                for (i[0] = 0; i[0] < d[0]; ++i[0]) {
                    if (i[a] != ia) continue;
                    const long o = lin(comp, i);
                    zero.nodes.push_back(o);
                    add.snodes.push_back({o, port_weight(spec, i)});
                }
        s.ops.push_back(std::move(zero));
        s.ops.push_back(std::move(add));
    }
};

}  // namespace

Scheme build_scheme(const SimulationConfig& config) {
    SimulationConfig cfg = config;
    if (cfg.layers != LayerModel::None && cfg.attenuation.values.empty())
        cfg.attenuation.values.assign(cfg.attenuation.control_count(cfg.grid), 0.0);
    cfg.validate();
    Builder b(cfg);
    Scheme& s = b.s;
    s.physics = cfg.physics;
    s.dim = cfg.grid.dim;
    s.material = cfg.material;
    s.grid = cfg.grid;
    s.layout = DomainLayout::build(cfg.grid);
    s.layers = cfg.layers;
    s.profile = cfg.attenuation;
    s.boundaries = cfg.boundaries;
    s.sources = cfg.sources;
    const TimeGrid tg = cfg.time_grid();
    s.dt = tg.dt;
    s.n_controls = cfg.layers == LayerModel::None ? 0 : cfg.attenuation.control_count(cfg.grid);

    const bool pml_aux = cfg.layers == LayerModel::Pml && s.dim >= 2;
    const bool aux_s = cfg.layers == LayerModel::Pml && s.dim == 3;
    const int nslots = cfg.layers == LayerModel::Cml ? 1 : s.dim;
    const bool damped = cfg.layers != LayerModel::None;

    // component table
    const auto qspecs = state_components(cfg.physics, s.dim);
    for (const auto& spec : qspecs) {
        b.state_ids.push_back(static_cast<int>(s.comps.size()));
        b.add_component(spec);
    }
    auto mirror = [&](int q, CompFamily fam, const char* prefix, bool flip_time) {
        ComponentSpec m = s.comps[q];
        m.family = fam;
        m.partner = q;
        m.name = std::string(prefix) + m.name;
        if (flip_time) m.half_time = !m.half_time;
        b.add_component(m);
        return static_cast<int>(s.comps.size()) - 1;
    };
    if (pml_aux) {
        for (int q : b.state_ids) b.r_ids.push_back(mirror(q, CompFamily::AuxR, "r_", true));
        if (aux_s)
            for (int q : b.state_ids) b.s_ids.push_back(mirror(q, CompFamily::AuxS, "s_", false));
        for (int q : b.state_ids) b.prev_ids.push_back(mirror(q, CompFamily::Prev, "prev_", false));
    }
    b.build_writable();

    s.sigma.resize(s.comps.size());
    s.sig_jac.resize(s.comps.size());

    const auto terms = flux_terms(cfg.physics, cfg.material, s.dim);
    auto comp_of_role = [&](int role) { return b.state_ids[role]; };
    auto r_of_role = [&](int role) { return b.r_ids[role]; };
    auto s_of_role = [&](int role) { return b.s_ids[role]; };
    auto prev_of_role = [&](int role) { return b.prev_ids[role]; };

    auto ghost_src = [&](int out_role, int in_role) {
        if (cfg.physics == PhysicsKind::Electromagnetic) return in_role == 2;  // Ez mirror at PEC
        if (cfg.physics == PhysicsKind::Elastodynamic) return out_role == 4;   // T12 rows, v ghosts
        return false;
    };

    // active port (EM ports ride on the Ez ghost rows)
    const SourceSpec* em_port = nullptr;
    int em_port_id = -1;
    for (size_t k = 0; k < cfg.sources.size(); ++k) {
        if (cfg.sources[k].spatial == SourceSpec::Spatial::Port &&
            cfg.physics == PhysicsKind::Electromagnetic) {
            em_port = &cfg.sources[k];
            em_port_id = static_cast<int>(k);
        }
    }

    if (pml_aux)
        for (size_t k = 0; k < b.state_ids.size(); ++k) b.copy(b.prev_ids[k], b.state_ids[k]);

    auto q_update = [&](bool half) {
        for (size_t k = 0; k < qspecs.size(); ++k) {
            if (qspecs[k].half_time != half) continue;
            const int comp = b.state_ids[k];
            if (damped) b.scale(comp, b.semi_a(nslots));
            for (const auto& t : terms) {
                if (t.out != static_cast<int>(k)) continue;
                const CoefSpec cs = damped ? b.semi_b(-t.alpha, nslots) : b.constant(-t.alpha * s.dt);
                const SourceSpec* port =
                    em_port && t.in == 2 ? em_port : nullptr;
                b.stencil(comp, comp_of_role(t.in), t.axis, cs, ghost_src(t.out, t.in), port,
                          em_port_id, -t.alpha * s.dt);
            }
            if (pml_aux) b.axpy(comp, r_of_role(static_cast<int>(k)), b.semi_b(-1.0, nslots));
            for (size_t si = 0; si < cfg.sources.size(); ++si) {
                const auto& src = cfg.sources[si];
                if (src.spatial == SourceSpec::Spatial::Port) continue;
                const int target = src.component < 0 ? 0 : src.component;
                if (target != static_cast<int>(k)) continue;
                b.body_source(comp, src, static_cast<int>(si), half ? 0.0 : 0.5);
            }
            for (size_t si = 0; si < cfg.sources.size(); ++si) {
                const auto& src = cfg.sources[si];
                if (src.spatial != SourceSpec::Spatial::Port) continue;
                if (cfg.physics == PhysicsKind::Electromagnetic) continue;
                if (!qspecs[k].half_time || qspecs[k].role != src.face_axis) continue;
                b.port_clamp(comp, src, static_cast<int>(si));
            }
        }
    };

    // r update for partners with the given time grid; centred halfway through
    // the partner-opposite phase. flux input components are averaged when they
    // straddle the centring time.
    auto r_update = [&](bool partner_half) {
        if (!pml_aux) return;
        for (size_t k = 0; k < qspecs.size(); ++k) {
            if (qspecs[k].half_time != partner_half) continue;
            const int rc = r_of_role(static_cast<int>(k));
            for (const auto& t : terms) {
                if (t.out != static_cast<int>(k)) continue;
                // Flux inputs are of the opposite time family, so the update
                // centring always falls between their stored levels: average.
                for (int j = 0; j < s.dim; ++j) {
                    if (j == t.axis) continue;
                    b.stencil(rc, prev_of_role(t.in), t.axis, b.dt_sigma(j, 0.5 * t.alpha),
                              ghost_src(t.out, t.in), nullptr, -1, 0.0);
                    b.stencil(rc, comp_of_role(t.in), t.axis, b.dt_sigma(j, 0.5 * t.alpha),
                              ghost_src(t.out, t.in), nullptr, -1, 0.0);
                }
            }
            if (s.dim == 2) {
                b.axpy(rc, comp_of_role(static_cast<int>(k)), b.dt_prod2(0, 1, 1.0));
            } else {
                b.axpy(rc, comp_of_role(static_cast<int>(k)), b.dt_prod2(0, 1, 1.0));
                b.axpy(rc, comp_of_role(static_cast<int>(k)), b.dt_prod2(0, 2, 1.0));
                b.axpy(rc, comp_of_role(static_cast<int>(k)), b.dt_prod2(1, 2, 1.0));
            }
            if (aux_s) b.axpy(rc, s_of_role(static_cast<int>(k)), b.constant(s.dt));
        }
    };

    auto s_update = [&](bool partner_half) {
        if (!aux_s) return;
        for (size_t k = 0; k < qspecs.size(); ++k) {
            if (qspecs[k].half_time != partner_half) continue;
            const int sc = s_of_role(static_cast<int>(k));
            for (const auto& t : terms) {
                if (t.out != static_cast<int>(k)) continue;
                // Flux inputs of the opposite family sit exactly on the
                // centring time here; no averaging.
                int o1 = -1, o2 = -1;
                for (int j = 0; j < 3; ++j)
                    if (j != t.axis) (o1 < 0 ? o1 : o2) = j;
                b.stencil(sc, comp_of_role(t.in), t.axis, b.dt_prod2(o1, o2, -t.alpha),
                          ghost_src(t.out, t.in), nullptr, -1, 0.0);
            }
            b.axpy(sc, prev_of_role(static_cast<int>(k)), b.dt_prod3(-0.5));
            b.axpy(sc, comp_of_role(static_cast<int>(k)), b.dt_prod3(-0.5));
        }
    };

    // one full step
    q_update(true);      // half-time q (velocities / H), centred t_m
    s_update(true);      // 3-D: s partners of half-time comps, centred t_m
    r_update(false);     // r partners of integer comps, centred t_m
    q_update(false);     // integer q (p / stresses / Ez), centred t_{m+1/2}
    s_update(false);     // 3-D: s partners of integer comps, centred t_{m+1/2}
    r_update(true);      // r partners of half-time comps, centred t_{m+1/2}

    if (s.layers != LayerModel::None) s.set_controls(s.profile.values);
    return s;
}

Trajectory run_forward(const Scheme& scheme, int steps, bool store_all) {
    Trajectory traj;
    traj.dt = scheme.dt;
    WaveState st = scheme.make_state();
    if (store_all) traj.states.reserve(steps + 1);
    if (store_all) traj.states.push_back(st);
    traj.energy.reserve(steps + 1);
    traj.time.reserve(steps + 1);
    traj.energy.push_back(total_energy(scheme, st));
    traj.time.push_back(0.0);
    for (int m = 0; m < steps; ++m) {
        step(scheme, st);
        const double amp = st.max_abs();
        if (!(amp <= 1e12)) throw DivergenceError("forward run diverged", st.step);
        traj.energy.push_back(total_energy(scheme, st));
        traj.time.push_back(st.step * scheme.dt);
        if (store_all) traj.states.push_back(st);
    }
    if (!store_all) traj.states.push_back(std::move(st));
    return traj;
}

}  // namespace wavecal
