#include "vslab/reference.hpp"

#include <algorithm>

namespace vslab {

real schedule_knot(real tau, int N, real j) { return tau / 4.0 + j * tau / (2.0 * (N + 1)); }

real amplitude_lower_bound(real tau, int N) {
    return std::exp(tau / (8.0 * (N + 1))) * (12.0 * (N + 1) / tau + 2.0 + tau / (4.0 * (N + 1)));
}

namespace {

// index of the window containing t, or -1
template <class W>
int find_window(const std::vector<W>& ws, real t) {
    int lo = 0, hi = static_cast<int>(ws.size()) - 1;
    while (lo <= hi) {
        const int mid = (lo + hi) / 2;
        if (t < ws[mid].t0)
            hi = mid - 1;
        else if (t > ws[mid].t1)
            lo = mid + 1;
        else
            return mid;
    }
    return -1;
}

}  // namespace

Vec2 HighVelocityField::eval(real t, const TorusPoint& x) const {
    const int w = find_window(schedule, t);
    if (w < 0) return {};
    const PulseWindow& pw = schedule[w];
    const real s = (t - pw.t0) / nu;
    if (s <= 0.0 || s >= 1.0) return {};
    return pots[pw.pot_index].grad_perp_theta(x) * (A / nu * eta_profile(s));
}

real HighVelocityField::W(real t, const TorusPoint& x) const {
    const int w = find_window(schedule, t);
    if (w < 0) return 0.0;
    const PulseWindow& pw = schedule[w];
    const real s = (t - pw.t0) / nu;
    if (s <= 0.0 || s >= 1.0) return 0.0;
    return pots[pw.pot_index].lap_theta(x) * (A / nu * eta_profile(s));
}

Vec2 HighVelocityField::gradW(real t, const TorusPoint& x) const {
    const int w = find_window(schedule, t);
    if (w < 0) return {};
    const PulseWindow& pw = schedule[w];
    const real s = (t - pw.t0) / nu;
    if (s <= 0.0 || s >= 1.0) return {};
    return pots[pw.pot_index].grad_lap_theta(x) * (A / nu * eta_profile(s));
}

void HighVelocityField::breakpoints(real a, real b, std::vector<real>& out) const {
    for (const auto& w : schedule) {
        if (w.t1 < a || w.t0 > b) continue;
        if (w.t0 > a && w.t0 < b) out.push_back(w.t0);
        if (w.t1 > a && w.t1 < b) out.push_back(w.t1);
    }
}

real HighVelocityField::smooth_dt(real t) const {
    const int w = find_window(schedule, t);
    if (w < 0) return std::numeric_limits<real>::infinity();
    return nu / steps_per_pulse;
}

SweepOutcome high_velocity_sweep(const HighVelocityField& field, const ControlRegion& region, real m,
                                 const std::vector<BadDirection>& dirs, const SweepOptions& opt) {
    SweepOutcome oc;
    oc.min_entry_speed = std::numeric_limits<real>::infinity();
    Rng rng(opt.seed);
    const real tau = field.tau;
    const real capture_r = region.r0 / 4.0;
    const real floor_factor = 1.0 / (2.0 * std::exp(tau));

    FlowParams fp;
    fp.n_steps_per_unit = 32;
    fp.max_displacement = std::min(opt.max_displacement, region.r0 / 8.0);
    fp.record_crossings = false;

    int failures = 0;
    const int n_cone = dirs.empty() ? 0 : std::min(opt.n_samples / 2, 2 * static_cast<int>(dirs.size()));
    for (int i = 0; i < opt.n_samples; ++i) {
        real angle;
        if (i < n_cone) {
            const Vec2 e = dirs[i % dirs.size()].e;
            angle = std::atan2(e.y, e.x) + rng.uniform(-opt.cone_angle, opt.cone_angle);
        } else {
            angle = rng.uniform(0.0, kTwoPi);
        }
        const real speed = rng.uniform(m, opt.speed_band * m);
        const TorusPoint x{rng.uniform(), rng.uniform()};
        const Vec2 v{speed * std::cos(angle), speed * std::sin(angle)};

        bool captured = false;
        real entry_speed = 0;
        auto obs = [&](real t, const TorusPoint& X, const Vec2& V) {
            if (t > tau / 4.0 && t < 3.0 * tau / 4.0 && torus_dist(X, region.x0) < capture_r &&
                norm(V) >= speed * floor_factor) {
                captured = true;
                entry_speed = norm(V);
                return false;
            }
            return true;
        };
        flow_map(field, 3.0 * tau / 4.0, 0.0, x, v, &region, nullptr, fp, obs);
        if (!captured) {
            ++failures;
            if (opt.stop_at_first_failure) break;
        } else {
            oc.min_entry_speed = std::min(oc.min_entry_speed, entry_speed);
        }
    }
    oc.failures = failures;
    oc.all_passed = failures == 0;
    return oc;
}

HighVelocityField build_high_velocity_field(real tau, const ControlRegion& region,
                                            const std::vector<HarmonicPotential>& pots,
                                            const HighVelocityOptions& opt) {
    if (pots.empty()) throw VslabError("build_high_velocity_field: no potentials");
    const int N = static_cast<int>(pots.size());

    HighVelocityField f;
    f.tau = tau;
    f.pots = pots;
    f.nu = opt.nu_fraction * tau / (8.0 * (N + 1));
    if (!(f.nu < tau / (8.0 * (N + 1))))
        throw ScheduleInfeasible("build_high_velocity_field: nu >= tau/(8(N+1))");
    f.A = opt.A_margin * amplitude_lower_bound(tau, N);

    // dynamic normalization: median |grad theta| over a coarse scan = 1,
    // so every pulse transfers an O(A) impulse (fit amplitudes are kept in
    // the reports; they optimize the unattainable mean-direction target)
    for (auto& p : f.pots) {
        std::vector<real> mags;
        const int n = 48;
        mags.reserve(n * n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                mags.push_back(norm(p.grad_theta(TorusPoint{static_cast<real>(i) / n, static_cast<real>(j) / n})));
        std::nth_element(mags.begin(), mags.begin() + mags.size() / 2, mags.end());
        const real med = mags[mags.size() / 2];
        if (med > 0) p.amp /= med;
    }

    for (int i = 0; i < N; ++i) {
        PulseWindow w;
        w.t0 = schedule_knot(tau, N, i + 0.25);
        w.t1 = w.t0 + f.nu;
        w.pot_index = i;
        f.schedule.push_back(w);
    }
    std::sort(f.schedule.begin(), f.schedule.end(),
              [](const PulseWindow& a, const PulseWindow& b) { return a.t0 < b.t0; });
    for (std::size_t k = 0; k + 1 < f.schedule.size(); ++k)
        if (f.schedule[k].t1 > f.schedule[k + 1].t0)
            throw ScheduleInfeasible("build_high_velocity_field: overlapping pulse windows");

    real grad_sup = 0;
    for (const auto& p : f.pots) {
        const int n = 64;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                grad_sup = std::max(
                    grad_sup, norm(p.grad_theta(TorusPoint{static_cast<real>(i) / n, static_cast<real>(j) / n})));
    }
    f.sup_norm_ = f.A / f.nu * (1.0 / bump01_integral()) * std::exp(-4.0) * grad_sup;

    if (opt.sweep.n_samples > 0) {
        std::vector<BadDirection> dirs;
        for (const auto& p : f.pots) dirs.push_back({p.e, 0, 0});

        // scan the speed ladder with fast rejection and take the smallest
        // rung at which every sample is captured
        SweepOptions probe = opt.sweep;
        probe.stop_at_first_failure = true;
        real best = -1.0;
        real best_fail_fraction = 1.0;
        real m = 2.0;
        for (int d = 0; d <= opt.m_ladder_max_doublings; ++d, m *= 2.0) {
            const SweepOutcome oc = high_velocity_sweep(f, region, m, dirs, probe);
            best_fail_fraction = std::min(best_fail_fraction,
                                          static_cast<real>(oc.failures) / opt.sweep.n_samples);
            if (oc.all_passed) {
                best = m;
                break;
            }
        }
        if (best < 0)
            throw BudgetExceeded("build_high_velocity_field: no speed floor on the ladder captured all samples",
                                 1.0 - best_fail_fraction);
        // refine downward, then store with the safety factor and verify fully
        real lo = best / 2.0, hi = best;
        for (int it = 0; it < 3; ++it) {
            const real mid = 0.5 * (lo + hi);
            if (high_velocity_sweep(f, region, mid, dirs, probe).all_passed)
                hi = mid;
            else
                lo = mid;
        }
        real stored = opt.m_safety * hi;
        SweepOutcome final_oc = high_velocity_sweep(f, region, stored, dirs, opt.sweep);
        int guard = 0;
        while (!final_oc.all_passed && ++guard < 8) {
            stored *= opt.m_safety;
            final_oc = high_velocity_sweep(f, region, stored, dirs, opt.sweep);
        }
        if (!final_oc.all_passed)
            throw BudgetExceeded("build_high_velocity_field: stored speed floor failed verification",
                                 1.0 - static_cast<real>(final_oc.failures) / opt.sweep.n_samples);
        f.m_lower = stored;
        f.verification = final_oc;
    }
    return f;
}

Vec2 LowVelocityField::eval(real t, const TorusPoint& x) const {
    const real s = b_coef * t;
    if (s <= 0.0 || s >= 1.0) return {};
    return theta.grad_perp_theta(x) * (a_coef * eta_profile(s));
}

real LowVelocityField::W(real t, const TorusPoint& x) const {
    const real s = b_coef * t;
    if (s <= 0.0 || s >= 1.0) return 0.0;
    return theta.lap_theta(x) * (a_coef * eta_profile(s));
}

Vec2 LowVelocityField::gradW(real t, const TorusPoint& x) const {
    const real s = b_coef * t;
    if (s <= 0.0 || s >= 1.0) return {};
    return theta.grad_lap_theta(x) * (a_coef * eta_profile(s));
}

void LowVelocityField::breakpoints(real a, real b, std::vector<real>& out) const {
    const real edges[2] = {0.0, 1.0 / b_coef};
    for (real e : edges)
        if (e > a && e < b) out.push_back(e);
}

real LowVelocityField::smooth_dt(real t) const {
    if (t <= 0.0 || t >= 1.0 / b_coef) return std::numeric_limits<real>::infinity();
    return 1.0 / (b_coef * steps_per_pulse);
}

LowVelocityField build_low_velocity_field(real tau, real M, const ControlRegion& region,
                                          const LowVelocityFit& fit, const LowVelocityOptions& opt) {
    LowVelocityField f;
    f.tau = tau;
    f.theta = fit.theta;
    f.m = fit.m;
    f.m_eff = std::max(fit.m, fit.m_bulk);
    f.M_input = M;
    f.c_coef = 2.0 * (M + 1.0) / f.m_eff;

    FlowParams fp;
    fp.n_steps_per_unit = 64;
    // no sphere bookkeeping here: the kick accuracy is set by smooth_dt
    fp.max_displacement = 1.0;
    fp.record_crossings = false;

    real b = opt.b_initial;
    if (b < 2.0 / tau) b = 2.0 / tau;  // keep the pulse inside (0, tau)

    real max_speed_seen = 0;
    for (int d = 0; d <= opt.b_max_doublings; ++d, b *= 2.0) {
        f.b_coef = b;
        f.a_coef = f.c_coef * b;
        max_speed_seen = 0;

        Rng rng(opt.seed);
        int accepted = 0;
        for (int i = 0; i < opt.n_samples; ++i) {
            const TorusPoint x{rng.uniform(), rng.uniform()};
            const real speed = M * std::sqrt(rng.uniform());
            const real ang = rng.uniform(0.0, kTwoPi);
            const Vec2 v{speed * std::cos(ang), speed * std::sin(ang)};

            bool kicked = false;
            real vmax = norm(v);
            auto obs = [&](real t, const TorusPoint&, const Vec2& V) {
                const real sp = norm(V);
                vmax = std::max(vmax, sp);
                if (t <= 1.0 / b && sp > M + 1.0) kicked = true;
                return true;
            };
            flow_map(f, 1.05 / b, 0.0, x, v, nullptr, nullptr, fp, obs);
            if (kicked) ++accepted;
            max_speed_seen = std::max(max_speed_seen, vmax);
        }
        f.acceptance = static_cast<real>(accepted) / opt.n_samples;
        if (accepted == opt.n_samples) {
            f.M_bar = 1.1 * max_speed_seen;
            f.sup_norm_ = f.a_coef * (std::exp(-4.0) / bump01_integral()) * fit.grad_sup;
            return f;
        }
    }
    throw BudgetExceeded("build_low_velocity_field: b ladder exhausted", f.acceptance);
}

void derive_constants(real T, real L, real m_lower1, real r0, ReferenceConstants& c) {
    c.T = T;
    c.L_c01 = L;
    c.m_lower1 = m_lower1;
    if (L <= 0.0) {
        c.C_r0T = 1.0;
        c.alpha = 2.5;
        c.M1 = std::max(m_lower1, 2.0 * c.alpha);
        return;
    }
    real C = 1.0;
    while (std::log1p(9.0 * r0 / (C * L)) >= T / 200.0) {
        C *= 2.0;
        if (C > 1e300) throw VslabError("derive_constants: C_{r0,T} overflow");
    }
    c.C_r0T = C;
    c.alpha = std::max(T * L + 2.5, C * L / 4.0);
    c.M1 = std::max(m_lower1, 2.0 * c.alpha) + T / 3.0 * L;
}

real estimate_c01_norm(const TimeField& U, real t_end, int nt, int nx) {
    std::vector<real> times;
    for (int k = 0; k <= nt; ++k) times.push_back(t_end * k / nt);
    std::vector<real> brk;
    U.breakpoints(0.0, t_end, brk);
    std::sort(brk.begin(), brk.end());
    for (std::size_t k = 0; k + 1 < brk.size(); k += 2) {
        // window interiors, assuming breakpoints come in edge pairs
        for (int i = 1; i <= 5; ++i) times.push_back(brk[k] + (brk[k + 1] - brk[k]) * i / 6.0);
    }
    std::sort(times.begin(), times.end());

    real L = 0;
    const real hx = 1.0 / nx;
    std::vector<Vec2> prev;
    real prev_t = 0;
    for (std::size_t kt = 0; kt < times.size(); ++kt) {
        const real t = times[kt];
        std::vector<Vec2> cur(static_cast<std::size_t>(nx) * nx);
        for (int i = 0; i < nx; ++i)
            for (int j = 0; j < nx; ++j) {
                const TorusPoint x{i * hx, j * hx};
                const Vec2 u = U.eval(t, x);
                cur[static_cast<std::size_t>(i) * nx + j] = u;
                L = std::max(L, norm(u));
            }
        for (int i = 0; i < nx; ++i)
            for (int j = 0; j < nx; ++j) {
                const Vec2 u = cur[static_cast<std::size_t>(i) * nx + j];
                const Vec2 ux = cur[static_cast<std::size_t>((i + 1) % nx) * nx + j];
                const Vec2 uy = cur[static_cast<std::size_t>(i) * nx + (j + 1) % nx];
                L = std::max(L, norm(ux - u) / hx);
                L = std::max(L, norm(uy - u) / hx);
            }
        if (kt > 0 && t > prev_t + 1e-14) {
            for (std::size_t n = 0; n < cur.size(); ++n)
                L = std::max(L, norm(cur[n] - prev[n]) / (t - prev_t));
        }
        prev = std::move(cur);
        prev_t = t;
    }
    return L;
}

Vec2 ReferenceTrajectory::eval(real t, const TorusPoint& x) const {
    if (t < 0.0 || t > T) return {};
    if (t < t_split1) return hv.eval(t, x);
    if (t < t_split2) return lv.eval(t - t_split1, x);
    return hv.eval(t - t_split2, x);
}

real ReferenceTrajectory::W(real t, const TorusPoint& x) const {
    if (t < 0.0 || t > T) return 0.0;
    if (t < t_split1) return hv.W(t, x);
    if (t < t_split2) return lv.W(t - t_split1, x);
    return hv.W(t - t_split2, x);
}

Vec2 ReferenceTrajectory::gradW(real t, const TorusPoint& x) const {
    if (t < 0.0 || t > T) return {};
    if (t < t_split1) return hv.gradW(t, x);
    if (t < t_split2) return lv.gradW(t - t_split1, x);
    return hv.gradW(t - t_split2, x);
}

void ReferenceTrajectory::breakpoints(real a, real b, std::vector<real>& out) const {
    std::vector<real> local;
    hv.breakpoints(std::max(a, 0.0), std::min(b, t_split1), out);
    local.clear();
    lv.breakpoints(std::max(a - t_split1, 0.0), std::min(b - t_split1, t_split2 - t_split1), local);
    for (real t : local) out.push_back(t + t_split1);
    local.clear();
    hv.breakpoints(std::max(a - t_split2, 0.0), std::min(b - t_split2, T - t_split2), local);
    for (real t : local) out.push_back(t + t_split2);
    for (real t : {t_split1, t_split2})
        if (t > a && t < b) out.push_back(t);
}

real ReferenceTrajectory::smooth_dt(real t) const {
    if (t < 0.0 || t > T) return std::numeric_limits<real>::infinity();
    if (t < t_split1) return hv.smooth_dt(t);
    if (t < t_split2) return lv.smooth_dt(t - t_split1);
    return hv.smooth_dt(t - t_split2);
}

std::vector<real> ReferenceTrajectory::stored_times() const {
    std::vector<real> ts{0.0, t_split1, t_split2, T};
    auto add_windows = [&](real off) {
        for (std::size_t k = 0; k < hv.schedule.size(); ++k) {
            ts.push_back(off + 0.5 * (hv.schedule[k].t0 + hv.schedule[k].t1));
            if (k + 1 < hv.schedule.size()) ts.push_back(off + 0.5 * (hv.schedule[k].t1 + hv.schedule[k + 1].t0));
        }
    };
    add_windows(0.0);
    add_windows(t_split2);
    if (lv.b_coef > 0) ts.push_back(t_split1 + 0.5 / lv.b_coef);
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
    return ts;
}

std::vector<real> ReferenceTrajectory::quiet_slice_times(int n_slices) const {
    // absolute pulse windows, padded
    std::vector<std::pair<real, real>> busy;
    const real pad = std::max(hv.nu * 0.5, 1e-4);
    for (real off : {0.0, t_split2})
        for (const auto& w : hv.schedule) busy.push_back({off + w.t0 - pad, off + w.t1 + pad});
    if (lv.b_coef > 0) busy.push_back({t_split1 - pad, t_split1 + 1.0 / lv.b_coef + pad});
    std::sort(busy.begin(), busy.end());

    auto quiet = [&](real t) {
        for (const auto& w : busy)
            if (t >= w.first && t <= w.second) return false;
        return true;
    };

    std::vector<real> out;
    for (int k = 0; k < n_slices; ++k) {
        real t = T * k / (n_slices - 1);
        if (!quiet(t)) {
            // nearest gap midpoint
            real best = t, bestd = std::numeric_limits<real>::infinity();
            for (std::size_t i = 0; i + 1 < busy.size(); ++i) {
                if (busy[i + 1].first <= busy[i].second) continue;
                const real mid = 0.5 * (busy[i].second + busy[i + 1].first);
                if (std::fabs(mid - t) < bestd) {
                    bestd = std::fabs(mid - t);
                    best = mid;
                }
            }
            t = best;
        }
        if (out.empty() || t > out.back() + 1e-9) out.push_back(t);
    }
    if (std::fabs(out.back() - T) > 1e-12) out.push_back(T);
    return out;
}

void ReferenceTrajectory::calibrate_moments(const PhaseGrid& grid) {
    real s1 = 0, s2 = 0;
    for (int j1 = 0; j1 < grid.Nv; ++j1)
        for (int j2 = 0; j2 < grid.Nv; ++j2) {
            const Vec2 v{grid.v(j1), grid.v(j2)};
            const real e = std::exp(-0.5 * norm2(v));
            s1 += v.x * v.x * e;
            s2 += v.y * v.y * e;
        }
    const real w = grid.dv() * grid.dv();
    S1_ = s1 * w;
    S2_ = s2 * w;
    constants.k1 = -1.0 / S2_;
    constants.k2 = -1.0 / S1_;
}

ReferenceTrajectory assemble_reference(real T, const std::array<real, 3>& splits, const ControlRegion& region,
                                       const std::vector<HarmonicPotential>& pots,
                                       const LowVelocityFit& low_fit, const PhaseGrid& grid,
                                       const ReferenceOptions& opt) {
    if (std::fabs(splits[0] + splits[1] + splits[2] - T) > 1e-12)
        throw VslabError("assemble_reference: splits must sum to T");
    if (std::fabs(splits[0] - splits[2]) > 1e-12)
        throw VslabError("assemble_reference: outer segments must match (the sweep field is reused)");

    ReferenceTrajectory ref;
    ref.T = T;
    ref.t_split1 = splits[0];
    ref.t_split2 = splits[0] + splits[1];

    HighVelocityOptions hv_opt = opt.hv;
    if (!opt.verify_sweeps) hv_opt.sweep.n_samples = 0;
    ref.hv = build_high_velocity_field(splits[0], region, pots, hv_opt);

    const real L = estimate_c01_norm(ref.hv, splits[0], 48, 16);
    derive_constants(T, L, ref.hv.m_lower, region.r0, ref.constants);

    const real M_used = std::min(opt.M_low, ref.constants.M1);
    ref.lv = build_low_velocity_field(splits[1], M_used, region, low_fit, opt.lv);

    // glue: the field must vanish at the junctions (support condition)
    for (real t : {0.0, ref.t_split1, ref.t_split2, T}) {
        for (int i = 0; i < 8; ++i) {
            const TorusPoint x{i / 8.0, (3 * i % 8) / 8.0};
            if (norm(ref.eval(t, x)) > 1e-12)
                throw GlueDiscontinuity("assemble_reference: field does not vanish at a junction");
        }
    }

    ref.calibrate_moments(grid);
    ref.constants.A = ref.hv.A;
    ref.constants.nu = ref.hv.nu;
    ref.constants.n_pulse_directions = static_cast<int>(pots.size());
    ref.constants.M_bar = ref.lv.M_bar;
    ref.constants.a = ref.lv.a_coef;
    ref.constants.b = ref.lv.b_coef;
    ref.constants.c = ref.lv.c_coef;
    ref.constants.M_low_used = M_used;
    return ref;
}

}  // namespace vslab
