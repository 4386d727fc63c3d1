#include "vslab/initial_data.hpp"

namespace vslab {

namespace {

template <class F>
real grid_max(const PhaseGrid& g, F&& f) {
    real m = 0;
    for (int i1 = 0; i1 < g.Nx; ++i1)
        for (int i2 = 0; i2 < g.Nx; ++i2)
            for (int j1 = 0; j1 < g.Nv; ++j1)
                for (int j2 = 0; j2 < g.Nv; ++j2)
                    m = std::max(m, f(TorusPoint{g.x(i1), g.x(i2)}, Vec2{g.v(j1), g.v(j2)}));
    return m;
}

}  // namespace

real InitialData::sup_norm(const PhaseGrid& g) const {
    return grid_max(g, [&](const TorusPoint& x, const Vec2& v) { return std::fabs(eval(x, v)); });
}

real InitialData::weighted_norm(const PhaseGrid& g, real gamma) const {
    return grid_max(g, [&](const TorusPoint& x, const Vec2& v) {
        return std::pow(1.0 + norm(v), gamma + 2.0) * std::fabs(eval(x, v));
    });
}

real InitialData::c1_norm_estimate(const PhaseGrid& g) const {
    const real hx = 1e-4, hv = 1e-4;
    return grid_max(g, [&](const TorusPoint& x, const Vec2& v) {
        const real f = eval(x, v);
        const real dx1 = (eval(TorusPoint{x.x1 + hx, x.x2}, v) - f) / hx;
        const real dx2 = (eval(TorusPoint{x.x1, x.x2 + hx}, v) - f) / hx;
        const real dv1 = (eval(x, Vec2{v.x + hv, v.y}) - f) / hv;
        const real dv2 = (eval(x, Vec2{v.x, v.y + hv}) - f) / hv;
        return std::fabs(f) + std::fabs(dx1) + std::fabs(dx2) + std::fabs(dv1) + std::fabs(dv2);
    });
}

real InitialData::grid_mass(const PhaseGrid& g) const {
    real s = 0;
    for (int i1 = 0; i1 < g.Nx; ++i1)
        for (int i2 = 0; i2 < g.Nx; ++i2)
            for (int j1 = 0; j1 < g.Nv; ++j1)
                for (int j2 = 0; j2 < g.Nv; ++j2)
                    s += eval(TorusPoint{g.x(i1), g.x(i2)}, Vec2{g.v(j1), g.v(j2)});
    return s * g.dx() * g.dx() * g.dv() * g.dv();
}

void InitialData::scale_to_weighted_norm(const PhaseGrid& g, real gamma, real target) {
    if (kind == Kind::zero) return;
    const real cur = weighted_norm(g, gamma);
    if (cur <= 0) throw VslabError("InitialData: cannot scale a vanishing datum");
    const real s = target / cur;
    if (kind == Kind::gaussian) {
        amp *= s;
    } else if (snapshot) {
        for (auto& v : snapshot->values) v *= s;
    }
}

}  // namespace vslab
