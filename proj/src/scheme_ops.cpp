//
// Project Wavecal - Copyright 2026 the Wavecal authors.
// SPDX-License-Identifier: Apache-2.0
//
// Execution, transposition and linearization of step programs. The adjoint
// of each elementary op is exact, so the gradient of any functional of the
// trajectory differentiates the implemented scheme rather than the PDE.
//
#include <cassert>

#include "wavecal/solver.hpp"

namespace wavecal {

namespace {

int sigma_ref(const Scheme& s, int comp) {
    return s.comps[comp].family == CompFamily::State ? comp : s.comps[comp].partner;
}

double sigma_sum(const CoefSpec& cs, const std::vector<std::vector<double>>& sig, long node) {
    double acc = 0.0;
    for (int i = 0; i < cs.nslots; ++i) acc += sig[cs.slots[i]][node];
    return acc;
}

double coef_value(const CoefSpec& cs, const std::vector<std::vector<double>>& sig, long node,
                  double dt) {
    switch (cs.form) {
        case CoefForm::Const: return cs.k;
        case CoefForm::SemiA: {
            const double s = sigma_sum(cs, sig, node) * dt * 0.5;
            return (1.0 - s) / (1.0 + s);
        }
        case CoefForm::SemiB: {
            const double s = sigma_sum(cs, sig, node) * dt * 0.5;
            return cs.k * dt / (1.0 + s);
        }
        case CoefForm::DtSigma: return cs.k * dt * sig[cs.slots[0]][node];
        case CoefForm::DtSigmaProd2:
            return cs.k * dt * sig[cs.slots[0]][node] * sig[cs.slots[1]][node];
        case CoefForm::DtSigmaProd3:
            return cs.k * dt * sig[cs.slots[0]][node] * sig[cs.slots[1]][node] *
                   sig[cs.slots[2]][node];
    }
    return 0.0;
}

// d(coef)/d(sigma_slot) at a node, for each listed slot.
void coef_derivs(const CoefSpec& cs, const std::vector<std::vector<double>>& sig, long node,
                 double dt, double* d) {
    switch (cs.form) {
        case CoefForm::Const: break;
        case CoefForm::SemiA: {
            const double den = 1.0 + sigma_sum(cs, sig, node) * dt * 0.5;
            const double v = -dt / (den * den);
            for (int i = 0; i < cs.nslots; ++i) d[i] = v;
            break;
        }
        case CoefForm::SemiB: {
            const double den = 1.0 + sigma_sum(cs, sig, node) * dt * 0.5;
            const double v = -cs.k * dt * dt * 0.5 / (den * den);
            for (int i = 0; i < cs.nslots; ++i) d[i] = v;
            break;
        }
        case CoefForm::DtSigma: d[0] = cs.k * dt; break;
        case CoefForm::DtSigmaProd2:
            d[0] = cs.k * dt * sig[cs.slots[1]][node];
            d[1] = cs.k * dt * sig[cs.slots[0]][node];
            break;
        case CoefForm::DtSigmaProd3:
            d[0] = cs.k * dt * sig[cs.slots[1]][node] * sig[cs.slots[2]][node];
            d[1] = cs.k * dt * sig[cs.slots[0]][node] * sig[cs.slots[2]][node];
            d[2] = cs.k * dt * sig[cs.slots[0]][node] * sig[cs.slots[1]][node];
            break;
    }
}

double source_value(const Scheme& s, const Op& op, int step) {
    return s.sources[op.source_id].value((static_cast<double>(step) + op.tphase) * s.dt);
}

}  // namespace

int Scheme::comp_index(const std::string& name) const {
    for (size_t i = 0; i < comps.size(); ++i)
        if (comps[i].name == name) return static_cast<int>(i);
    throw std::logic_error("unknown component " + name);
}

WaveState Scheme::make_state() const {
    WaveState st;
    st.f.resize(comps.size());
    for (size_t c = 0; c < comps.size(); ++c) st.f[c].resize(comp_dims[c]);
    return st;
}

void Scheme::set_controls(const std::vector<double>& u) {
    if (static_cast<int>(u.size()) != n_controls)
        throw ConfigError("control vector length mismatch");
    profile.values = u;
    if (layers == LayerModel::None) return;

    for (size_t c = 0; c < comps.size(); ++c) {
        if (comps[c].family != CompFamily::State) continue;
        SampleGrid sg;
        sg.dim = dim;
        for (int a = 0; a < 3; ++a) {
            sg.n[a] = comp_dims[c][a];
            sg.offset[a] = comps[c].face[a] ? 0.0 : 0.5;
        }
        SigmaRaster r = rasterize(profile, layout, sg);
        sigma[c] = std::move(r.sigma);
        sig_jac[c] = std::move(r.jacobian);
    }
    for (auto& op : ops) {
        if (!op.sigma_dependent()) continue;
        const auto& sig = sigma[sigma_ref(*this, op.dst)];
        const long nn = static_cast<long>(comp_dims[op.dst][0]) * comp_dims[op.dst][1] *
                        comp_dims[op.dst][2];
        op.coef.resize(nn);
        for (long i = 0; i < nn; ++i) op.coef[i] = coef_value(op.cspec, sig, i, dt);
    }
}

namespace {

void apply_op(const Scheme& s, const Op& op, WaveState& st, std::vector<double>* save) {
    Field& dst = st.f[op.dst];
    switch (op.kind) {
        case OpKind::Copy:
            dst.a = st.f[op.src].a;
            break;
        case OpKind::Scale: {
            if (save) save->assign(dst.a.begin(), dst.a.end());
            if (op.sigma_dependent()) {
                for (long i = 0; i < dst.size(); ++i) dst[i] *= op.coef[i];
            } else {
                for (long i = 0; i < dst.size(); ++i) dst[i] *= op.cspec.k;
            }
            break;
        }
        case OpKind::Axpy: {
            const Field& src = st.f[op.src];
            if (save) save->assign(src.a.begin(), src.a.end());
            if (op.sigma_dependent()) {
                for (long i = 0; i < dst.size(); ++i) dst[i] += op.coef[i] * src[i];
            } else {
                for (long i = 0; i < dst.size(); ++i) dst[i] += op.cspec.k * src[i];
            }
            break;
        }
        case OpKind::Stencil: {
            const Field& src = st.f[op.src];
            if (save) save->assign(src.a.begin(), src.a.end());
            if (op.sigma_dependent()) {
                for (const auto& e : op.entries) dst[e.out] += op.coef[e.out] * e.w * src[e.in];
            } else {
                for (const auto& e : op.entries) dst[e.out] += op.cspec.k * e.w * src[e.in];
            }
            break;
        }
        case OpKind::ZeroNodes:
            for (long n : op.nodes) dst[n] = 0.0;
            break;
        case OpKind::AddSource: {
            const double g = source_value(s, op, st.step);
            for (const auto& sn : op.snodes) dst[sn.node] += sn.weight * g;
            break;
        }
    }
}

bool op_needs_save(const Op& op) {
    return op.sigma_dependent() &&
           (op.kind == OpKind::Scale || op.kind == OpKind::Axpy || op.kind == OpKind::Stencil);
}

}  // namespace

void step(const Scheme& scheme, WaveState& state) {
    for (const auto& op : scheme.ops) apply_op(scheme, op, state, nullptr);
    ++state.step;
}

void step_with_tape(const Scheme& scheme, WaveState& state, StepTape& tape) {
    tape.saved.assign(scheme.ops.size(), {});
    for (size_t k = 0; k < scheme.ops.size(); ++k) {
        apply_op(scheme, scheme.ops[k], state,
                 op_needs_save(scheme.ops[k]) ? &tape.saved[k] : nullptr);
    }
    ++state.step;
}

void adjoint_step(const Scheme& scheme, const StepTape& tape, WaveState& lambda,
                  std::vector<std::vector<std::vector<double>>>* dsigma) {
    for (size_t kk = scheme.ops.size(); kk-- > 0;) {
        const Op& op = scheme.ops[kk];
        Field& ldst = lambda.f[op.dst];

        if (dsigma && op.sigma_dependent()) {
            const int ref = sigma_ref(scheme, op.dst);
            const auto& sig = scheme.sigma[ref];
            auto& dsig = (*dsigma)[ref];
            const auto& saved = tape.saved[kk];
            double dc[3];
            auto chain = [&](long node, double dj_dcoef) {
                if (dj_dcoef == 0.0) return;
                coef_derivs(op.cspec, sig, node, scheme.dt, dc);
                for (int i = 0; i < op.cspec.nslots; ++i)
                    dsig[op.cspec.slots[i]][node] += dj_dcoef * dc[i];
            };
            switch (op.kind) {
                case OpKind::Scale:
                case OpKind::Axpy:
                    for (long i = 0; i < ldst.size(); ++i) chain(i, ldst[i] * saved[i]);
                    break;
                case OpKind::Stencil:
                    for (const auto& e : op.entries) chain(e.out, ldst[e.out] * e.w * saved[e.in]);
                    break;
                default: break;
            }
        }

        switch (op.kind) {
            case OpKind::Copy: {
                Field& lsrc = lambda.f[op.src];
                for (long i = 0; i < lsrc.size(); ++i) lsrc[i] += ldst[i];
                ldst.fill(0.0);
                break;
            }
            case OpKind::Scale:
                if (op.sigma_dependent()) {
                    for (long i = 0; i < ldst.size(); ++i) ldst[i] *= op.coef[i];
                } else {
                    for (long i = 0; i < ldst.size(); ++i) ldst[i] *= op.cspec.k;
                }
                break;
            case OpKind::Axpy: {
                Field& lsrc = lambda.f[op.src];
                if (op.sigma_dependent()) {
                    for (long i = 0; i < ldst.size(); ++i) lsrc[i] += op.coef[i] * ldst[i];
                } else {
                    for (long i = 0; i < ldst.size(); ++i) lsrc[i] += op.cspec.k * ldst[i];
                }
                break;
            }
            case OpKind::Stencil: {
                Field& lsrc = lambda.f[op.src];
                if (op.sigma_dependent()) {
                    for (const auto& e : op.entries)
                        lsrc[e.in] += op.coef[e.out] * e.w * ldst[e.out];
                } else {
                    for (const auto& e : op.entries) lsrc[e.in] += op.cspec.k * e.w * ldst[e.out];
                }
                break;
            }
            case OpKind::ZeroNodes:
                for (long n : op.nodes) ldst[n] = 0.0;
                break;
            case OpKind::AddSource:
                break;
        }
    }
    --lambda.step;
}

void tangent_step(const Scheme& scheme, WaveState& state, WaveState& delta,
                  const std::vector<std::vector<std::vector<double>>>& delta_sigma) {
    for (const auto& op : scheme.ops) {
        Field& dst = state.f[op.dst];
        Field& ddst = delta.f[op.dst];
        const int ref = sigma_ref(scheme, op.dst);

        double dc[3];
        auto dcoef = [&](long node) {
            if (!op.sigma_dependent()) return 0.0;
            coef_derivs(op.cspec, scheme.sigma[ref], node, scheme.dt, dc);
            double acc = 0.0;
            for (int i = 0; i < op.cspec.nslots; ++i)
                acc += dc[i] * delta_sigma[ref][op.cspec.slots[i]][node];
            return acc;
        };
        auto coef_at = [&](long node) { return op.sigma_dependent() ? op.coef[node] : op.cspec.k; };

        switch (op.kind) {
            case OpKind::Copy:
                ddst.a = delta.f[op.src].a;
                break;
            case OpKind::Scale:
                for (long i = 0; i < dst.size(); ++i)
                    ddst[i] = coef_at(i) * ddst[i] + dcoef(i) * dst[i];
                break;
            case OpKind::Axpy: {
                const Field& dsrc = delta.f[op.src];
                const Field& src = state.f[op.src];
                for (long i = 0; i < dst.size(); ++i)
                    ddst[i] += coef_at(i) * dsrc[i] + dcoef(i) * src[i];
                break;
            }
            case OpKind::Stencil: {
                const Field& dsrc = delta.f[op.src];
                const Field& src = state.f[op.src];
                for (const auto& e : op.entries)
                    ddst[e.out] += coef_at(e.out) * e.w * dsrc[e.in] + dcoef(e.out) * e.w * src[e.in];
                break;
            }
            case OpKind::ZeroNodes:
                for (long n : op.nodes) ddst[n] = 0.0;
                break;
            case OpKind::AddSource:
                break;
        }
        apply_op(scheme, op, state, nullptr);
    }
    ++state.step;
    ++delta.step;
}

}  // namespace wavecal
