#pragma once

#include <functional>
#include <vector>

#include "vslab/common.hpp"
#include "vslab/torus.hpp"

namespace vslab {

// Uniform phase-space grid on T^2 x [-Vmax,Vmax]^2. x nodes at i/Nx
// (periodic), v nodes cell-centered so the box quadrature is symmetric
// under v -> -v and odd integrands cancel exactly.
struct PhaseGrid {
    int Nx{32};
    int Nv{32};
    real Vmax{6.0};

    PhaseGrid() = default;
    PhaseGrid(int nx, int nv, real vmax) : Nx(nx), Nv(nv), Vmax(vmax) { validate(); }

    void validate() const {
        auto pow2 = [](int n) { return n >= 16 && (n & (n - 1)) == 0; };
        if (!pow2(Nx) || !pow2(Nv)) throw VslabError("PhaseGrid: Nx, Nv must be powers of two >= 16");
        if (!(Vmax >= 4.0)) throw VslabError("PhaseGrid: Vmax must be >= 4");
    }

    real dx() const { return 1.0 / Nx; }
    real dv() const { return 2.0 * Vmax / Nv; }
    real x(int i) const { return i * dx(); }
    real v(int j) const { return -Vmax + (j + 0.5) * dv(); }

    std::size_t size() const {
        return static_cast<std::size_t>(Nx) * Nx * static_cast<std::size_t>(Nv) * Nv;
    }
    // row-major (x1, x2, v1, v2)
    std::size_t idx(int i1, int i2, int j1, int j2) const {
        return ((static_cast<std::size_t>(i1) * Nx + i2) * Nv + j1) * Nv + j2;
    }
};

// Distribution snapshot f(t,.,.) on a PhaseGrid.
struct DistributionField {
    PhaseGrid grid;
    real t{0};
    std::vector<real> values;

    DistributionField() = default;
    explicit DistributionField(const PhaseGrid& g, real time = 0) : grid(g), t(time), values(g.size(), 0.0) {}

    real& at(int i1, int i2, int j1, int j2) { return values[grid.idx(i1, i2, j1, j2)]; }
    real at(int i1, int i2, int j1, int j2) const { return values[grid.idx(i1, i2, j1, j2)]; }

    void fill(const std::function<real(TorusPoint, Vec2)>& f);

    // max |value| at nodes with |v| > 0.9 Vmax; the decay invariant.
    real boundary_max() const;
};

// Cubic (4-point per axis) tensor interpolation; periodic in x, clamped
// stencils near the v edges, zero beyond the v box. Exact on grid nodes,
// O(h^4) on smooth data.
real interpolate(const DistributionField& f, const TorusPoint& x, const Vec2& v);

// Spatial 2-vector field on the x grid (Stokes velocity, current density).
struct VelocityField2D {
    int Nx{32};
    real t{0};
    std::vector<Vec2> values;

    VelocityField2D() = default;
    explicit VelocityField2D(int nx, real time = 0) : Nx(nx), t(time), values(static_cast<std::size_t>(nx) * nx) {}

    std::size_t idx(int i1, int i2) const { return static_cast<std::size_t>(i1) * Nx + i2; }
    Vec2& at(int i1, int i2) { return values[idx(i1, i2)]; }
    const Vec2& at(int i1, int i2) const { return values[idx(i1, i2)]; }

    Vec2 mean() const;
    // bicubic periodic interpolation
    Vec2 eval(const TorusPoint& x) const;
};

struct MomentRecord {
    std::vector<real> rho;   // density on the x grid
    std::vector<Vec2> j;     // current density on the x grid
    real mass{0};
    Vec2 momentum;
    real max_abs_rho{0};
    int Nx{0};
};

// One-pass box quadrature (uniform weights dx^2 dv^2) of density, current,
// mass and momentum.
MomentRecord moments(const DistributionField& f);

// max over nodes of (1+|v|)^(gamma+2) |f|; requires gamma > 2.
real weighted_sup_norm(const DistributionField& f, real gamma);

// Nearest-neighbour Holder quotient estimate on a list of snapshots
// (a lower bound of the true seminorm; diagnostic only).
real holder_seminorm(const std::vector<const DistributionField*>& slices, real sigma);

}  // namespace vslab
