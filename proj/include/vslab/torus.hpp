#pragma once

#include <vector>

#include "vslab/common.hpp"

namespace vslab {

// Point on T^2 = R^2/Z^2, coordinates kept reduced to [0,1).
struct TorusPoint {
    real x1{0}, x2{0};

    TorusPoint() = default;
    TorusPoint(real a, real b) : x1(wrap(a)), x2(wrap(b)) {}

    static real wrap(real u) {
        u -= std::floor(u);
        if (u >= 1.0) u = 0.0;  // guard against floor(1.0-eps) rounding
        return u;
    }

    TorusPoint shifted(const Vec2& d) const { return {x1 + d.x, x2 + d.y}; }
};

// Representative of a-b with both components in [-1/2, 1/2).
inline Vec2 torus_delta(const TorusPoint& a, const TorusPoint& b) {
    auto comp = [](real u) {
        u -= std::round(u);
        return u;
    };
    return {comp(a.x1 - b.x1), comp(a.x2 - b.x2)};
}

// Flat metric: min over the 9 nearest lattice translates.
inline real torus_dist(const TorusPoint& a, const TorusPoint& b) { return norm(torus_delta(a, b)); }

// Control ball data. omega is the region B(x0, 2*r0) where the control may act.
struct ControlRegion {
    TorusPoint x0;
    real r0{0.2};

    ControlRegion() = default;
    ControlRegion(TorusPoint c, real r) : x0(c), r0(r) {
        if (!(r0 > 0.0) || !(2.0 * r0 < 0.5))
            throw VslabError("ControlRegion: need 0 < 2*r0 < 1/2 so balls embed in the torus");
    }

    // bypass the embedding invariant (oracle ladders probe radii beyond it)
    static ControlRegion unchecked(TorusPoint c, real r) {
        ControlRegion reg;
        reg.x0 = c;
        reg.r0 = r;
        return reg;
    }

    real omega_radius() const { return 2.0 * r0; }
    bool in_omega(const TorusPoint& x) const { return torus_dist(x, x0) < omega_radius(); }
    // outward unit normal of S(x0,r0) at a point near the sphere
    Vec2 normal_at(const TorusPoint& x) const {
        Vec2 d = torus_delta(x, x0);
        const real n = norm(d);
        return n > 0 ? d * (1.0 / n) : Vec2{1.0, 0.0};
    }
};

// Nested incoming classes on S(x0,r0) x R^2 (speed floor, incidence cosine):
//   gamma-    |v| >= 1/2,  <v,nu> <= -|v|/10
//   gamma2-   |v| >= 1,    <v,nu> <= -|v|/8
//   gamma3-   |v| >= 2,    <v,nu> <= -|v|/5
//   gamma4-   |v| >= 5/2,  <v,nu> <= -|v|/4
enum class GammaClass : int { not_incoming = 0, gamma_minus = 1, gamma2_minus = 2, gamma3_minus = 3, gamma4_minus = 4 };

struct SphereCrossing {
    real t{0};
    TorusPoint x;
    Vec2 v;
    GammaClass gamma_class{GammaClass::not_incoming};
    bool entering{false};  // forward-time motion into the ball
    bool grazing{false};   // |<v,nu>| below the grazing tolerance
};

inline GammaClass classify_incidence(const ControlRegion& region, const TorusPoint& x, const Vec2& v) {
    const real speed = norm(v);
    if (speed <= 0) return GammaClass::not_incoming;
    const real vn = dot(v, region.normal_at(x));
    if (speed >= 2.5 && vn <= -speed / 4.0) return GammaClass::gamma4_minus;
    if (speed >= 2.0 && vn <= -speed / 5.0) return GammaClass::gamma3_minus;
    if (speed >= 1.0 && vn <= -speed / 8.0) return GammaClass::gamma2_minus;
    if (speed >= 0.5 && vn <= -speed / 10.0) return GammaClass::gamma_minus;
    return GammaClass::not_incoming;
}

// A unit direction together with its primitive integer vector.
struct BadDirection {
    Vec2 e;
    int p{0}, q{0};
};

// Finite set of rational directions whose parallel geodesic family can avoid
// B(x0, r0/4); sorted by angle. A primitive pair (p,q) qualifies iff the
// family admits a line at distance >= r0/4 from x0, i.e. the half-spacing
// 1/(2*sqrt(p^2+q^2)) clears the ball radius (tol guards ties).
std::vector<BadDirection> bad_directions(const ControlRegion& region, real tol = 1e-9);

// Largest distance from x0 to the nearest geodesic of the (p,q) family,
// found by direct minimization over line offsets. Used by the brute-force
// oracle; independent of the half-spacing identity used in bad_directions.
real family_clearance(int p, int q, int offset_samples = 4096);

struct PathSample {
    real t{0};
    TorusPoint x;
    Vec2 v;
};

struct CrossingOptions {
    real tol_t{1e-10};
    real grazing_tol{1e-6};  // relative to |v|
};

// Sign-change detection of dist(x(t),x0)-r0 on a sampled path, refined by
// bisection on linear interpolation between samples. Throws if consecutive
// samples are farther apart than r0/4.
std::vector<SphereCrossing> detect_crossings(const std::vector<PathSample>& path, const ControlRegion& region,
                                             const CrossingOptions& opt = {});

}  // namespace vslab
