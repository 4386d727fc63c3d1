#include <doctest.h>

#include "vslab/reference.hpp"

using namespace vslab;

TEST_CASE("pulse schedule arithmetic") {
    // tau = 3, N = 2: t_0 = 0.75, t_{1/4} = 0.875, t_1 = 1.25
    CHECK(schedule_knot(3.0, 2, 0.0) == doctest::Approx(0.75));
    CHECK(schedule_knot(3.0, 2, 0.25) == doctest::Approx(0.875));
    CHECK(schedule_knot(3.0, 2, 1.0) == doctest::Approx(1.25));
}

TEST_CASE("amplitude lower bound arithmetic") {
    // tau = 3, N = 2: A > e^{1/8} (12 + 2 + 0.25) ~ 16.15
    CHECK(amplitude_lower_bound(3.0, 2) == doctest::Approx(16.147).epsilon(1e-3));
}

TEST_CASE("eta profile properties") {
    CHECK(eta_profile(0.0) == 0.0);
    CHECK(eta_profile(1.0) == 0.0);
    CHECK(eta_profile(-0.3) == 0.0);
    CHECK(eta_profile(0.5) > 2.0);
    // unit integral
    real s = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) s += eta_profile((i + 0.5) / n);
    CHECK(s / n == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("derive_constants matches the worked arithmetic") {
    ReferenceConstants c;

    derive_constants(3.0, 0.0, 4.0, 0.2, c);
    CHECK(c.alpha == doctest::Approx(2.5));

    derive_constants(3.0, 1.0, 4.0, 0.2, c);
    CHECK(c.C_r0T == doctest::Approx(128.0));
    // alpha = max(3*1 + 2.5, 128/4) = 32
    CHECK(c.alpha == doctest::Approx(32.0));

    // the spec's M1 example fixes alpha = 5.5 by hand: M1 = max{4, 11} + 1 = 12
    const real alpha = 5.5, L = 1.0, m1 = 4.0, T = 3.0;
    const real M1 = std::max(m1, 2.0 * alpha) + T / 3.0 * L;
    CHECK(M1 == doctest::Approx(12.0));
}

namespace {

struct SmallSetup {
    ControlRegion region{TorusPoint{0.5, 0.5}, 0.2};
    std::shared_ptr<PotentialCore> dir_core;
    std::shared_ptr<PotentialCore> lv_core;
    std::vector<HarmonicPotential> pots;
    LowVelocityFit low_fit;

    SmallSetup() {
        dir_core = std::make_shared<PotentialCore>(region.r0 / 10.0, 512, 2048);
        lv_core = std::make_shared<PotentialCore>(region.r0 / 8.0, 512, 2048);
        HarmonicFitOptions opt;
        opt.eps_fit = 1e9;
        for (auto [p, q] : {std::pair{1, 0}, std::pair{-1, 0}, std::pair{0, 1}, std::pair{0, -1}}) {
            const real rho = std::hypot(static_cast<real>(p), static_cast<real>(q));
            pots.push_back(fit_harmonic_direction(Vec2{p / rho, q / rho}, region, dir_core, opt));
        }
        low_fit = fit_low_velocity_potential(region, lv_core, 256);
    }
};

SmallSetup& small() {
    static SmallSetup s;
    return s;
}

}  // namespace

TEST_CASE("schedule feasibility guard") {
    HighVelocityOptions opt;
    opt.nu_fraction = 1.2;   // violates nu < tau/(8(N+1))
    opt.sweep.n_samples = 0;
    CHECK_THROWS_AS(build_high_velocity_field(1.0, small().region, small().pots, opt), ScheduleInfeasible);
}

TEST_CASE("high-velocity field structure") {
    HighVelocityOptions opt;
    opt.sweep.n_samples = 0;  // structure only
    const HighVelocityField f = build_high_velocity_field(1.0, small().region, small().pots, opt);

    CHECK(f.A > amplitude_lower_bound(1.0, static_cast<int>(small().pots.size())));
    CHECK(f.nu < 1.0 / (8.0 * (small().pots.size() + 1)));
    CHECK(f.schedule.size() == small().pots.size());
    // support in (0, tau): pulses sit inside (tau/4, 3 tau/4)
    for (const auto& w : f.schedule) {
        CHECK(w.t0 >= 0.25);
        CHECK(w.t1 <= 0.75);
    }
    // field vanishes outside the windows
    CHECK(norm(f.eval(0.1, {0.3, 0.3})) == 0.0);
    CHECK(norm(f.eval(0.76, {0.3, 0.3})) == 0.0);
    // inside a window it is the pulse profile times the rotated gradient
    const auto& w0 = f.schedule.front();
    const real tm = 0.5 * (w0.t0 + w0.t1);
    const TorusPoint xq{0.12, 0.77};
    const Vec2 expect =
        f.pots[w0.pot_index].grad_perp_theta(xq) * (f.A / f.nu * eta_profile((tm - w0.t0) / f.nu));
    CHECK(norm(f.eval(tm, xq) - expect) <= 1e-12 * norm(expect));
}

TEST_CASE("high-velocity sweep captures samples at the stored floor") {
    HighVelocityOptions opt;
    opt.sweep.n_samples = 60;  // small but meaningful for a unit test
    opt.sweep.seed = 777;
    const HighVelocityField f = build_high_velocity_field(1.0, small().region, small().pots, opt);
    CHECK(f.m_lower > 0.0);
    CHECK(f.verification.all_passed);
    CHECK(f.verification.min_entry_speed >= f.m_lower / (2.0 * std::exp(1.0)));
}

TEST_CASE("low-velocity field: kick, support and acceptance") {
    LowVelocityOptions opt;
    opt.n_samples = 80;
    opt.seed = 888;
    const LowVelocityField f = build_low_velocity_field(1.0, 2.0, small().region, small().low_fit, opt);

    CHECK(f.acceptance == 1.0);
    CHECK(f.c_coef == doctest::Approx(2.0 * 3.0 / f.m_eff));
    CHECK(f.M_bar > 3.0);
    // eta support: the field vanishes for t > 1/b
    CHECK(norm(f.eval(1.0 / f.b_coef + 1e-6, {0.3, 0.8})) == 0.0);
    CHECK(norm(f.eval(-1e-9, {0.3, 0.8})) == 0.0);

    // v = 0 samples get kicked beyond M+1 (worst-case bound from the proof)
    FlowParams fp;
    fp.n_steps_per_unit = 64;
    fp.max_displacement = 0.02;
    Rng rng(10);
    for (int i = 0; i < 10; ++i) {
        const TorusPoint x{rng.uniform(), rng.uniform()};
        bool kicked = false;
        auto obs = [&](real, const TorusPoint&, const Vec2& V) {
            if (norm(V) > 3.0) kicked = true;
            return !kicked;
        };
        flow_map(f, 1.0 / f.b_coef, 0.0, x, Vec2{0, 0}, nullptr, nullptr, fp, obs);
        CHECK(kicked);
    }
}

TEST_CASE("assembled reference invariants on a small configuration") {
    ReferenceOptions opt;
    opt.verify_sweeps = false;
    opt.M_low = 2.0;
    opt.lv.n_samples = 60;
    const PhaseGrid grid(16, 32, 6.0);
    const ReferenceTrajectory ref =
        assemble_reference(3.0, {1.0, 1.0, 1.0}, small().region, small().pots, small().low_fit, grid, opt);

    // junctions and endpoints are field-free
    for (real t : {0.0, 1.0, 2.0, 3.0})
        for (int i = 0; i < 8; ++i) CHECK(norm(ref.eval(t, TorusPoint{i / 8.0, (3 * i % 8) / 8.0})) == 0.0);

    // f_bar(0) = f_bar(T) = 0 and f_bar vanishes outside omega
    Rng rng(14);
    for (int i = 0; i < 50; ++i) {
        const TorusPoint x{rng.uniform(), rng.uniform()};
        const Vec2 v{rng.uniform(-4, 4), rng.uniform(-4, 4)};
        CHECK(ref.f_bar(0.0, x, v) == 0.0);
        CHECK(ref.f_bar(3.0, x, v) == 0.0);
    }
    const auto times = ref.stored_times();
    for (real t : times)
        for (int i = 0; i < 100; ++i) {
            Rng r2(200 + i);
            const TorusPoint x{r2.uniform(), r2.uniform()};
            if (torus_dist(x, small().region.x0) <= small().region.omega_radius()) continue;
            CHECK(ref.f_bar(t, x, Vec2{0.7, -0.2}) == 0.0);
        }

    // moment calibration: int v2 Z1 = 1 and int Z1 = 0 on the grid quadrature
    real s_v2z1 = 0, s_z1 = 0;
    for (int j1 = 0; j1 < grid.Nv; ++j1)
        for (int j2 = 0; j2 < grid.Nv; ++j2) {
            const Vec2 v{grid.v(j1), grid.v(j2)};
            s_v2z1 += v.y * ref.Z1(v);
            s_z1 += ref.Z1(v);
        }
    s_v2z1 *= grid.dv() * grid.dv();
    s_z1 *= grid.dv() * grid.dv();
    CHECK(s_v2z1 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::fabs(s_z1) <= 1e-14);

    // j_fbar = -grad^perp W pointwise
    const real tq = times[times.size() / 2];
    for (int i = 0; i < 20; ++i) {
        Rng r3(300 + i);
        const TorusPoint x{r3.uniform(), r3.uniform()};
        const Vec2 dW = ref.gradW(tq, x);
        const Vec2 j = ref.j_fbar(tq, x);
        CHECK(j.x == doctest::Approx(dW.y).epsilon(1e-12));
        CHECK(j.y == doctest::Approx(-dW.x).epsilon(1e-12));
    }

    // quiet slice times avoid every pulse window
    const auto qt = ref.quiet_slice_times(25);
    CHECK(qt.front() == 0.0);
    CHECK(qt.back() == 3.0);
    for (real t : qt) CHECK(ref.smooth_dt(t) == std::numeric_limits<real>::infinity());
}

TEST_CASE("c01 norm estimate sees pulse interiors") {
    HighVelocityOptions opt;
    opt.sweep.n_samples = 0;
    const HighVelocityField f = build_high_velocity_field(1.0, small().region, small().pots, opt);
    const real L = estimate_c01_norm(f, 1.0, 24, 8);
    CHECK(L >= f.sup_norm() * 0.2);  // the sup is attained inside a pulse
}
