#include "vslab/torus.hpp"

#include <algorithm>
#include <numeric>

namespace vslab {

namespace {

int gcd_int(int a, int b) {
    a = std::abs(a);
    b = std::abs(b);
    while (b) {
        const int t = a % b;
        a = b;
        b = t;
    }
    return a;
}

}  // namespace

real family_clearance(int p, int q, int offset_samples) {
    // Lines in direction (p,q) through y have signed offset <y, n> with
    // n = (-q,p)/rho; as y varies the offsets fill a circle of circumference
    // 1/rho. The distance from x0 to the geodesic at offset delta is the
    // circle distance, so the best clearance is attained mid-gap. Direct
    // scan plus local refinement keeps this independent of that identity.
    const real rho = std::hypot(static_cast<real>(p), static_cast<real>(q));
    const Vec2 n{-q / rho, p / rho};
    const real period = 1.0 / rho;

    auto line_dist = [&](real delta) {
        // distance from x0 to the geodesic with offset delta relative to x0
        real d = std::fabs(delta - period * std::round(delta / period));
        return d;
    };
    (void)n;

    real best = 0.0;
    real best_delta = 0.0;
    for (int i = 0; i < offset_samples; ++i) {
        const real delta = period * (i + 0.5) / offset_samples;
        const real d = line_dist(delta);
        if (d > best) {
            best = d;
            best_delta = delta;
        }
    }
    // golden-section polish around the best sample
    real a = best_delta - period / offset_samples, b = best_delta + period / offset_samples;
    for (int it = 0; it < 60; ++it) {
        const real m1 = a + (b - a) * 0.381966011250105;
        const real m2 = b - (b - a) * 0.381966011250105;
        if (line_dist(m1) < line_dist(m2))
            a = m1;
        else
            b = m2;
    }
    return std::max(best, line_dist(0.5 * (a + b)));
}

std::vector<BadDirection> bad_directions(const ControlRegion& region, real tol) {
    const real ball = region.r0 / 4.0;
    std::vector<BadDirection> out;
    if (ball <= 0) throw VslabError("bad_directions: r0/4 must be positive");

    // No line can avoid a ball whose radius reaches the covering radius.
    if (ball >= std::sqrt(0.5)) return out;

    // Primitive pairs with norm below the provable cutoff 2/r0, widened by 1.5.
    const int kmax = static_cast<int>(std::ceil(1.5 * 2.0 / region.r0)) + 1;
    for (int p = -kmax; p <= kmax; ++p) {
        for (int q = -kmax; q <= kmax; ++q) {
            if (p == 0 && q == 0) continue;
            if (gcd_int(p, q) != 1) continue;
            const real rho = std::hypot(static_cast<real>(p), static_cast<real>(q));
            if (rho > 1.5 * 2.0 / region.r0) continue;
            const real clearance = 0.5 / rho;  // half the family spacing
            if (clearance >= ball - tol) {
                out.push_back({Vec2{p / rho, q / rho}, p, q});
            }
        }
    }
    std::sort(out.begin(), out.end(), [](const BadDirection& a, const BadDirection& b) {
        return std::atan2(a.e.y, a.e.x) < std::atan2(b.e.y, b.e.x);
    });
    return out;
}

std::vector<SphereCrossing> detect_crossings(const std::vector<PathSample>& path, const ControlRegion& region,
                                             const CrossingOptions& opt) {
    std::vector<SphereCrossing> out;
    if (path.size() < 2) return out;

    auto level = [&](const TorusPoint& x) { return torus_dist(x, region.x0) - region.r0; };

    for (std::size_t k = 0; k + 1 < path.size(); ++k) {
        const auto& s0 = path[k];
        const auto& s1 = path[k + 1];
        const real step = torus_dist(s1.x, s0.x);
        if (step >= region.r0 / 4.0)
            throw VslabError("detect_crossings: path sampled too coarsely (step >= r0/4)");

        real d0 = level(s0.x);
        real d1 = level(s1.x);
        if (d0 == 0.0) d0 = -1e-300;  // touching counts as inside for sign purposes
        if ((d0 < 0) == (d1 < 0)) continue;

        // bisection on the interpolated segment
        real a = 0.0, b = 1.0;
        const Vec2 dx = torus_delta(s1.x, s0.x);
        auto at = [&](real u) { return s0.x.shifted(dx * u); };
        real da = d0;
        for (int it = 0; it < 200; ++it) {
            const real m = 0.5 * (a + b);
            const real dm = level(at(m));
            if ((dm < 0) == (da < 0)) {
                a = m;
                da = dm;
            } else {
                b = m;
            }
            if ((b - a) * std::fabs(s1.t - s0.t) < opt.tol_t) break;
        }
        const real u = 0.5 * (a + b);
        SphereCrossing c;
        c.t = s0.t + u * (s1.t - s0.t);
        c.x = at(u);
        c.v = s0.v + (s1.v - s0.v) * u;
        const real vn = dot(c.v, region.normal_at(c.x));
        const real speed = norm(c.v);
        c.entering = vn < 0;
        c.grazing = std::fabs(vn) < opt.grazing_tol * std::max(speed, 1e-300);
        c.gamma_class = (c.grazing || !c.entering) ? GammaClass::not_incoming : classify_incidence(region, c.x, c.v);
        out.push_back(c);
    }
    std::sort(out.begin(), out.end(), [](const SphereCrossing& a, const SphereCrossing& b) { return a.t < b.t; });
    return out;
}

}  // namespace vslab
