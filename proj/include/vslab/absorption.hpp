#pragma once

#include "vslab/common.hpp"
#include "vslab/torus.hpp"

namespace vslab {

// Absorption data of the fixed-point operator: the smooth opacity factor A
// on S(x0,r0) x R^2 and the time truncations Y, Ytilde.
//
//   A = 1 on [S x R^2] \ gamma2-,   A = 0 on gamma3-,
//   Y = 0 on [0,T/48] u [47T/48,T], Y = 1 on [T/24, 23T/24],
//   Yt = 0 on [0,T/100],            Yt = 1 on [T/48, T].
struct AbsorptionModel {
    ControlRegion region;
    real T{1};

    // u = <v,nu(x)>/|v|; blend is exactly 1 for u >= -1/8 or |v| <= 1 and
    // exactly 0 for u <= -1/5 and |v| >= 2 (separation guaranteed by the
    // positive distance between the complement of gamma2- and gamma3-).
    real opacity(const TorusPoint& x, const Vec2& v) const {
        const real speed = norm(v);
        if (speed <= 1.0) return 1.0;
        const real u = dot(v, region.normal_at(x)) / speed;
        if (u >= -0.125) return 1.0;
        const real bu = smooth_step((-u - 0.125) / (0.2 - 0.125));
        const real bv = smooth_step(speed - 1.0);
        return 1.0 - bu * bv;
    }

    real Y(real t) const {
        const real a = T / 48.0, b = T / 24.0;
        const real up = smooth_step((t - a) / (b - a));
        const real down = smooth_step((T - t - T / 48.0) / (T / 24.0 - T / 48.0));
        return up * down;
    }

    real Ytilde(real t) const { return smooth_step((t - T / 100.0) / (T / 48.0 - T / 100.0)); }

    // multiplicative jump applied at a forward crossing
    real crossing_factor(real t, const TorusPoint& x, const Vec2& v) const {
        return 1.0 - Y(t) * (1.0 - opacity(x, v));
    }
};

inline AbsorptionModel build_absorption(const ControlRegion& region, real T) { return {region, T}; }

}  // namespace vslab
