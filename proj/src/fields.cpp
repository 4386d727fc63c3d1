#include "vslab/fields.hpp"

#include <algorithm>

namespace vslab {

namespace {

// Lagrange cubic weights on uniform nodes {-1,0,1,2} at parameter u in [0,1].
inline void cubic_weights(real u, real w[4]) {
    const real u2 = u * u;
    const real u3 = u2 * u;
    w[0] = -(u3 - 3.0 * u2 + 2.0 * u) / 6.0;
    w[1] = (u3 - 2.0 * u2 - u + 2.0) / 2.0;
    w[2] = -(u3 - u2 - 2.0 * u) / 2.0;
    w[3] = (u3 - u) / 6.0;
}

}  // namespace

void DistributionField::fill(const std::function<real(TorusPoint, Vec2)>& f) {
    for (int i1 = 0; i1 < grid.Nx; ++i1)
        for (int i2 = 0; i2 < grid.Nx; ++i2)
            for (int j1 = 0; j1 < grid.Nv; ++j1)
                for (int j2 = 0; j2 < grid.Nv; ++j2)
                    at(i1, i2, j1, j2) = f(TorusPoint{grid.x(i1), grid.x(i2)}, Vec2{grid.v(j1), grid.v(j2)});
}

real DistributionField::boundary_max() const {
    real m = 0;
    const real cut = 0.9 * grid.Vmax;
    for (int j1 = 0; j1 < grid.Nv; ++j1)
        for (int j2 = 0; j2 < grid.Nv; ++j2) {
            if (std::hypot(grid.v(j1), grid.v(j2)) <= cut) continue;
            for (int i1 = 0; i1 < grid.Nx; ++i1)
                for (int i2 = 0; i2 < grid.Nx; ++i2) m = std::max(m, std::fabs(at(i1, i2, j1, j2)));
        }
    return m;
}

real interpolate(const DistributionField& f, const TorusPoint& x, const Vec2& v) {
    const PhaseGrid& g = f.grid;
    if (std::fabs(v.x) > g.Vmax || std::fabs(v.y) > g.Vmax) return 0.0;

    const real sx1 = x.x1 * g.Nx;
    const real sx2 = x.x2 * g.Nx;
    int i1 = static_cast<int>(std::floor(sx1));
    int i2 = static_cast<int>(std::floor(sx2));
    real wx1[4], wx2[4];
    cubic_weights(sx1 - i1, wx1);
    cubic_weights(sx2 - i2, wx2);

    // v: node j sits at -Vmax + (j+1/2)dv; the stencil is clamped at the box
    // edge so the 4 nodes stay in range (accuracy degrades only where the
    // decay invariant makes values negligible anyway).
    auto v_base = [&](real vv, real& u) {
        const real s = (vv + g.Vmax) / g.dv() - 0.5;
        int j = static_cast<int>(std::floor(s));
        u = s - j;
        if (j < 1) {
            u += j - 1;
            j = 1;
        } else if (j > g.Nv - 3) {
            u += j - (g.Nv - 3);
            j = g.Nv - 3;
        }
        return j;
    };
    real uv1, uv2;
    const int j1 = v_base(v.x, uv1);
    const int j2 = v_base(v.y, uv2);
    real wv1[4], wv2[4];
    cubic_weights(uv1, wv1);
    cubic_weights(uv2, wv2);

    int ix1[4], ix2[4];
    for (int a = 0; a < 4; ++a) {
        ix1[a] = ((i1 - 1 + a) % g.Nx + g.Nx) % g.Nx;
        ix2[a] = ((i2 - 1 + a) % g.Nx + g.Nx) % g.Nx;
    }

    real acc = 0;
    for (int a = 0; a < 4; ++a) {
        for (int b = 0; b < 4; ++b) {
            const real wxy = wx1[a] * wx2[b];
            if (wxy == 0.0) continue;
            real accv = 0;
            for (int c = 0; c < 4; ++c) {
                const std::size_t base = f.grid.idx(ix1[a], ix2[b], j1 - 1 + c, 0) + (j2 - 1);
                const real* p = f.values.data() + base;
                accv += wv1[c] * (wv2[0] * p[0] + wv2[1] * p[1] + wv2[2] * p[2] + wv2[3] * p[3]);
            }
            acc += wxy * accv;
        }
    }
    return acc;
}

Vec2 VelocityField2D::mean() const {
    Vec2 m;
    for (const auto& u : values) m += u;
    return m * (1.0 / static_cast<real>(values.size()));
}

Vec2 VelocityField2D::eval(const TorusPoint& x) const {
    const real sx1 = x.x1 * Nx;
    const real sx2 = x.x2 * Nx;
    const int i1 = static_cast<int>(std::floor(sx1));
    const int i2 = static_cast<int>(std::floor(sx2));
    real w1[4], w2[4];
    cubic_weights(sx1 - i1, w1);
    cubic_weights(sx2 - i2, w2);
    Vec2 acc;
    for (int a = 0; a < 4; ++a) {
        const int k1 = ((i1 - 1 + a) % Nx + Nx) % Nx;
        for (int b = 0; b < 4; ++b) {
            const int k2 = ((i2 - 1 + b) % Nx + Nx) % Nx;
            acc += values[idx(k1, k2)] * (w1[a] * w2[b]);
        }
    }
    return acc;
}

MomentRecord moments(const DistributionField& f) {
    const PhaseGrid& g = f.grid;
    MomentRecord rec;
    rec.Nx = g.Nx;
    rec.rho.assign(static_cast<std::size_t>(g.Nx) * g.Nx, 0.0);
    rec.j.assign(static_cast<std::size_t>(g.Nx) * g.Nx, Vec2{});
    const real wv = g.dv() * g.dv();
    const real wx = g.dx() * g.dx();

    for (int i1 = 0; i1 < g.Nx; ++i1) {
        for (int i2 = 0; i2 < g.Nx; ++i2) {
            real r = 0;
            Vec2 jj;
            for (int j1 = 0; j1 < g.Nv; ++j1) {
                const real v1 = g.v(j1);
                const real* row = f.values.data() + g.idx(i1, i2, j1, 0);
                real sr = 0, s1 = 0, s2 = 0;
                for (int j2 = 0; j2 < g.Nv; ++j2) {
                    const real val = row[j2];
                    sr += val;
                    s2 += g.v(j2) * val;
                }
                s1 = v1 * sr;
                r += sr;
                jj.x += s1;
                jj.y += s2;
            }
            const std::size_t k = static_cast<std::size_t>(i1) * g.Nx + i2;
            rec.rho[k] = r * wv;
            rec.j[k] = jj * wv;
            rec.mass += rec.rho[k];
            rec.momentum += rec.j[k];
            rec.max_abs_rho = std::max(rec.max_abs_rho, std::fabs(rec.rho[k]));
        }
    }
    rec.mass *= wx;
    rec.momentum *= wx;
    return rec;
}

real weighted_sup_norm(const DistributionField& f, real gamma) {
    if (!(gamma > 2.0)) throw VslabError("weighted_sup_norm: gamma must exceed 2");
    const PhaseGrid& g = f.grid;
    real m = 0;
    for (int j1 = 0; j1 < g.Nv; ++j1) {
        for (int j2 = 0; j2 < g.Nv; ++j2) {
            const real w = std::pow(1.0 + std::hypot(g.v(j1), g.v(j2)), gamma + 2.0);
            for (int i1 = 0; i1 < g.Nx; ++i1) {
                const real* p = f.values.data() + g.idx(i1, 0, j1, j2);
                for (int i2 = 0; i2 < g.Nx; ++i2) {
                    const real a = std::fabs(p[static_cast<std::size_t>(i2) * g.Nv * g.Nv]);
                    if (w * a > m) m = w * a;
                }
            }
        }
    }
    return m;
}

real holder_seminorm(const std::vector<const DistributionField*>& slices, real sigma) {
    if (slices.empty()) return 0.0;
    if (!(sigma > 0.0 && sigma < 1.0)) throw VslabError("holder_seminorm: sigma must lie in (0,1)");
    const PhaseGrid& g = slices.front()->grid;
    real best = 0;

    auto quotient = [&](real df, real dist) { return std::fabs(df) / std::pow(dist, sigma); };

    // spatial and velocity neighbours within each slice
    for (const DistributionField* f : slices) {
        for (int i1 = 0; i1 < g.Nx; ++i1)
            for (int i2 = 0; i2 < g.Nx; ++i2)
                for (int j1 = 0; j1 < g.Nv; ++j1)
                    for (int j2 = 0; j2 < g.Nv; ++j2) {
                        const real v0 = f->at(i1, i2, j1, j2);
                        best = std::max(best, quotient(f->at((i1 + 1) % g.Nx, i2, j1, j2) - v0, g.dx()));
                        best = std::max(best, quotient(f->at(i1, (i2 + 1) % g.Nx, j1, j2) - v0, g.dx()));
                        if (j1 + 1 < g.Nv) best = std::max(best, quotient(f->at(i1, i2, j1 + 1, j2) - v0, g.dv()));
                        if (j2 + 1 < g.Nv) best = std::max(best, quotient(f->at(i1, i2, j1, j2 + 1) - v0, g.dv()));
                    }
    }
    // temporal neighbours
    for (std::size_t k = 0; k + 1 < slices.size(); ++k) {
        const real dt = std::fabs(slices[k + 1]->t - slices[k]->t);
        if (dt <= 0) continue;
        for (std::size_t n = 0; n < slices[k]->values.size(); ++n)
            best = std::max(best, quotient(slices[k + 1]->values[n] - slices[k]->values[n], dt));
    }
    return best;
}

}  // namespace vslab
