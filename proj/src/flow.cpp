#include "vslab/flow.hpp"

#include <algorithm>
#include <limits>

namespace vslab {

Vec2 SliceField::eval(real t, const TorusPoint& x) const {
    if (slices_.empty()) return {};
    if (t <= times_.front()) return slices_.front().eval(x);
    if (t >= times_.back()) return slices_.back().eval(x);
    const auto it = std::upper_bound(times_.begin(), times_.end(), t);
    const std::size_t k = static_cast<std::size_t>(it - times_.begin()) - 1;
    const real w = (t - times_[k]) / (times_[k + 1] - times_[k]);
    const Vec2 a = slices_[k].eval(x);
    const Vec2 b = slices_[k + 1].eval(x);
    return a * (1.0 - w) + b * w;
}

void SliceField::breakpoints(real a, real b, std::vector<real>& out) const {
    for (real tt : times_)
        if (tt > a && tt < b) out.push_back(tt);
}

real SliceField::sup_norm() const {
    real m = 0;
    for (const auto& s : slices_)
        for (const auto& u : s.values) m = std::max(m, norm(u));
    return m;
}

namespace {

struct State {
    TorusPoint X;
    Vec2 V;
};

inline void rk4_step(const TimeField& U, real lambda, real t, real h, State& s) {
    auto rhs = [&](real tt, const State& st, Vec2& dX, Vec2& dV) {
        dX = st.V;
        dV = (U.eval(tt, st.X) - st.V) * lambda;
    };
    Vec2 k1x, k1v, k2x, k2v, k3x, k3v, k4x, k4v;
    rhs(t, s, k1x, k1v);
    State s2{s.X.shifted(k1x * (h / 2)), s.V + k1v * (h / 2)};
    rhs(t + h / 2, s2, k2x, k2v);
    State s3{s.X.shifted(k2x * (h / 2)), s.V + k2v * (h / 2)};
    rhs(t + h / 2, s3, k3x, k3v);
    State s4{s.X.shifted(k3x * h), s.V + k3v * h};
    rhs(t + h, s4, k4x, k4v);
    s.X = s.X.shifted((k1x + (k2x + k3x) * 2.0 + k4x) * (h / 6.0));
    s.V += (k1v + (k2v + k3v) * 2.0 + k4v) * (h / 6.0);
}

}  // namespace

FlowResult flow_map(const TimeField& U, real t, real s, const TorusPoint& x, const Vec2& v,
                    const ControlRegion* region, const AbsorptionModel* absorb, const FlowParams& params,
                    const StepObserver& observer) {
    FlowResult out;
    out.X = x;
    out.V = v;
    if (t == s) return out;

    const real dir = t > s ? 1.0 : -1.0;
    const real lo = std::min(s, t), hi = std::max(s, t);

    std::vector<real> brk;
    U.breakpoints(lo, hi, brk);
    brk.push_back(lo);
    brk.push_back(hi);
    std::sort(brk.begin(), brk.end());
    brk.erase(std::unique(brk.begin(), brk.end(), [](real a, real b) { return std::fabs(a - b) < 1e-14; }),
              brk.end());
    if (dir < 0) std::reverse(brk.begin(), brk.end());

    State st{x, v};
    const real h_base = 1.0 / params.n_steps_per_unit;

    auto level = [&](const TorusPoint& p) { return region ? torus_dist(p, region->x0) - region->r0 : 1.0; };
    real d_prev = level(st.X);

    // fine steps are only needed where the sphere could be reached within
    // one step; far from it the cap relaxes to the remaining clearance
    auto disp_cap = [&](real dist_level) {
        if (!region) return params.max_displacement;
        return std::max(params.max_displacement, dist_level - 2.0 * params.max_displacement);
    };

    auto handle_crossing = [&](const State& pre, real t0, real h_step, real d0, real d1) {
        // bisection over the step fraction, re-integrating from the step start
        real a = 0.0, b = 1.0, da = d0;
        State mid = pre;
        for (int it = 0; it < 80; ++it) {
            const real m = 0.5 * (a + b);
            mid = pre;
            rk4_step(U, params.lambda, t0, h_step * m, mid);
            const real dm = level(mid.X);
            if ((dm < 0) == (da < 0)) {
                a = m;
                da = dm;
            } else {
                b = m;
            }
            if ((b - a) * std::fabs(h_step) < params.tol_t) break;
        }
        const real m = 0.5 * (a + b);
        mid = pre;
        rk4_step(U, params.lambda, t0, h_step * m, mid);

        SphereCrossing c;
        c.t = t0 + h_step * m;
        c.x = mid.X;
        c.v = mid.V;
        const real vn = dot(c.v, region->normal_at(c.x));
        const real speed = norm(c.v);
        c.entering = vn < 0;
        c.grazing = std::fabs(vn) < params.grazing_tol * std::max(speed, 1e-300);
        c.gamma_class =
            (c.grazing || !c.entering) ? GammaClass::not_incoming : classify_incidence(*region, c.x, c.v);
        if (c.grazing) out.grazing_warning = true;
        if (absorb && c.entering && !c.grazing && c.gamma_class != GammaClass::not_incoming)
            out.factor *= absorb->crossing_factor(c.t, c.x, c.v);
        if (params.record_crossings) out.crossings.push_back(c);
        (void)d1;
    };

    for (std::size_t seg = 0; seg + 1 < brk.size(); ++seg) {
        const real seg_a = brk[seg];
        const real seg_b = brk[seg + 1];
        real tcur = seg_a;
        int guard = 0;
        while (dir * (seg_b - tcur) > 1e-15) {
            if (++guard > 100000000) throw VslabError("flow_map: step count runaway");
            const real cap = disp_cap(d_prev);
            real h_mag = std::min(h_base, U.smooth_dt(tcur + dir * 1e-13));
            h_mag = std::min(h_mag, cap / (norm(st.V) + 1.0));
            h_mag = std::min(h_mag, std::fabs(seg_b - tcur));
            real h = dir * h_mag;

            State trial = st;
            rk4_step(U, params.lambda, tcur, h, trial);
            int halvings = 0;
            while (norm(torus_delta(trial.X, st.X)) > cap) {
                if (++halvings > 40) throw StepTooCoarse("flow_map: displacement cap unreachable");
                h *= 0.5;
                trial = st;
                rk4_step(U, params.lambda, tcur, h, trial);
            }

            if (region) {
                const real d_new = level(trial.X);
                if ((d_new < 0) != (d_prev < 0)) handle_crossing(st, tcur, h, d_prev, d_new);
                d_prev = d_new;
            }
            st = trial;
            tcur += h;
            if (observer && !observer(tcur, st.X, st.V)) {
                out.X = st.X;
                out.V = st.V;
                return out;
            }
        }
    }

    out.X = st.X;
    out.V = st.V;
    std::sort(out.crossings.begin(), out.crossings.end(),
              [](const SphereCrossing& a, const SphereCrossing& b) { return a.t < b.t; });
    return out;
}

real evaluate_transport(const std::function<real(TorusPoint, Vec2)>& f0, const TimeField& U,
                        const AbsorptionModel* absorb, real t, const TorusPoint& x, const Vec2& v,
                        const ControlRegion* region, const FlowParams& params) {
    if (t == 0.0) return f0(x, v);
    const ControlRegion* reg = region ? region : (absorb ? &absorb->region : nullptr);
    const FlowResult r = flow_map(U, 0.0, t, x, v, reg, absorb, params);
    return std::exp(2.0 * params.lambda * t) * f0(r.X, r.V) * r.factor;
}

real lipschitz_probe(const TimeField& U, const std::vector<ProbePair>& pairs, const FlowParams& params) {
    real worst = 0;
    for (const auto& p : pairs) {
        if (norm(p.v - p.v2) >= 1.0) continue;
        const FlowResult r1 = flow_map(U, p.t, p.s, p.x, p.v, nullptr, nullptr, params);
        const FlowResult r2 = flow_map(U, p.t2, p.s2, p.x2, p.v2, nullptr, nullptr, params);
        const Vec2 dX = torus_delta(r1.X, r2.X);
        const Vec2 dV = r1.V - r2.V;
        const Vec2 dx0 = torus_delta(p.x, p.x2);
        const real din = std::sqrt((p.t - p.t2) * (p.t - p.t2) + (p.s - p.s2) * (p.s - p.s2) + norm2(dx0) +
                                   norm2(p.v - p.v2));
        if (din <= 0) continue;
        const real dout = std::sqrt(norm2(dX) + norm2(dV));
        worst = std::max(worst, dout / ((1.0 + norm(p.v)) * din));
    }
    return worst;
}

real velocity_drift_check(const TimeField& U, const std::vector<PathSample>& samples, real t_final,
                          const FlowParams& params) {
    real worst = 0;
    for (const auto& s : samples) {
        const FlowResult r = flow_map(U, 0.0, t_final, s.x, s.v, nullptr, nullptr, params);
        worst = std::max(worst, std::fabs(std::exp(t_final) * norm(s.v) - norm(r.V)));
    }
    return worst;
}

}  // namespace vslab
