#include <doctest.h>

#include "vslab/control.hpp"
#include "vslab/scenario.hpp"

using namespace vslab;

TEST_CASE("absorption model values") {
    const ControlRegion reg({0.5, 0.5}, 0.2);
    const AbsorptionModel model = build_absorption(reg, 3.0);

    // head-on at speed 3: gamma3-, fully absorbed
    const TorusPoint xs{0.5 + reg.r0, 0.5};
    CHECK(model.opacity(xs, Vec2{-3.0, 0.0}) == 0.0);
    // slow particles are never absorbed
    CHECK(model.opacity(xs, Vec2{-0.4, 0.0}) == 1.0);
    // inside gamma2- but outside gamma3-: strictly between
    const real u = -0.15;
    const Vec2 v{3.0 * u, 3.0 * std::sqrt(1.0 - u * u)};
    const real a = model.opacity(xs, v);
    CHECK(a > 0.0);
    CHECK(a < 1.0);
    CHECK(a == doctest::Approx(std::exp(1.5) / (1.0 + std::exp(1.5))).epsilon(1e-9));  // blend at u = -0.15

    // truncation windows
    CHECK(model.Y(0.0) == 0.0);
    CHECK(model.Y(3.0 / 48.0) == 0.0);
    CHECK(model.Y(3.0 / 24.0) == 1.0);
    CHECK(model.Y(23.0 * 3.0 / 24.0) == 1.0);
    CHECK(model.Y(3.0) == 0.0);
    CHECK(model.Ytilde(0.0) == 0.0);
    CHECK(model.Ytilde(3.0 / 100.0) == 0.0);
    CHECK(model.Ytilde(3.0 / 48.0) == 1.0);
    CHECK(model.Ytilde(3.0) == 1.0);
}

namespace {

struct MiniSetup {
    ScenarioConfig cfg;
    ScenarioSetup setup;

    MiniSetup() : cfg(make_cfg()), setup(prepare_scenario(cfg)) {}

    static ScenarioConfig make_cfg() {
        ScenarioConfig c;
        c.T = 3.0;
        c.tau_splits = {1.0, 1.0, 1.0};
        c.Nx = 16;
        c.Nv = 16;
        c.Vmax = 6.0;
        c.n_slices = 9;
        c.spray_samples = 15000;
        c.sweep_samples = 120;
        c.potential_table_n = 512;
        c.max_direction_norm = 1.5;
        c.M_low = 2.0;
        c.n_steps_per_unit = 32;
        c.max_iter = 12;
        c.outdir = "test_out/mini";
        return c;
    }
};

MiniSetup& mini() {
    static MiniSetup m;
    return m;
}

}  // namespace

TEST_CASE("zero initial datum is a fixed point after one iteration") {
    const MiniSetup& m = mini();
    InitialData zero;
    zero.kind = InitialData::Kind::zero;
    ControlOperator op(m.setup.region, &m.setup.reference, m.setup.grid, zero, m.setup.sparams,
                       m.setup.op_options);
    IterationState st = op.picard_fixed_point();
    CHECK(st.converged);
    CHECK(st.iterations == 1);
    CHECK(st.delta_sup == 0.0);
    CHECK(op.final_outside_norm(st) == 0.0);
    // moments of g - f_bar vanish identically
    for (const auto& mr : st.mom) {
        CHECK(std::fabs(mr.mass) <= 1e-16);
        CHECK(norm(mr.momentum) <= 1e-16);
    }
}

TEST_CASE("extension enforces the moment normalizations at every slice") {
    const MiniSetup& m = mini();
    ControlOperator op(m.setup.region, &m.setup.reference, m.setup.grid, m.setup.f0, m.setup.sparams,
                       m.setup.op_options);
    IterationState st0 = op.initial_state();
    IterationState st1;
    op.apply_V(st0, st1);
    const real mass0 = op.mass_reference();
    for (std::size_t k = 1; k < op.slice_times().size(); ++k) {
        CHECK(std::fabs(st1.mom[k].mass - mass0) <= 1e-10 * std::max(std::fabs(mass0), 1e-30));
        CHECK(norm(st1.mom[k].momentum) <= 1e-12);
    }
    // t = 0 slice is the initial datum exactly
    CHECK(st1.mom[0].mass == doctest::Approx(mass0));
}

TEST_CASE("pointwise growth bound |V~[g]| <= e^{2t} sup|f0|") {
    const MiniSetup& m = mini();
    ControlOperator op(m.setup.region, &m.setup.reference, m.setup.grid, m.setup.f0, m.setup.sparams,
                       m.setup.op_options);
    IterationState st0 = op.initial_state();
    IterationState st1;
    op.apply_V(st0, st1);
    const real f0sup = m.setup.f0.sup_norm(m.setup.grid);
    for (std::size_t k = 0; k < op.slice_times().size(); ++k) {
        const real cap = std::exp(2.0 * op.slice_times()[k]) * f0sup * (1.0 + 1e-9);
        real sup = 0;
        for (float v : st1.series.h[k]) sup = std::max(sup, static_cast<real>(std::fabs(v)));
        CHECK(sup <= cap);
    }
}

TEST_CASE("mini picard run converges and extracts a control") {
    const MiniSetup& m = mini();
    ControlOperator op(m.setup.region, &m.setup.reference, m.setup.grid, m.setup.f0, m.setup.sparams,
                       m.setup.op_options);
    IterationState st = op.picard_fixed_point();
    CHECK(st.converged);
    CHECK(st.iterations <= 12);
    CHECK(st.mem.d_pass);
    CHECK(st.mem.e_pass);

    const ControlFieldReport rep = op.extract_control(st, 4);
    CHECK(rep.max_abs_integral <= 1e-8);
    CHECK(!rep.G.empty());

    // free-transport residual sanity: with no reference field and f0 smooth,
    // the residual away from omega is pure discretization error
    CHECK(rep.max_outside < std::numeric_limits<real>::infinity());
}

TEST_CASE("two-phase composition on the mini configuration") {
    const MiniSetup& m = mini();
    InitialData f1 = m.setup.f0;
    f1.sigma_v1 = 0.9;
    f1.scale_to_weighted_norm(m.setup.grid, m.cfg.gamma, m.cfg.epsilon);
    const real mass0 = m.setup.f0.grid_mass(m.setup.grid);
    const real mass1 = f1.grid_mass(m.setup.grid);
    f1.amp *= mass0 / mass1;

    OperatorOptions opt = m.setup.op_options;
    opt.n_slices = 7;
    const TwoPhaseReport rep = solve_two_phase(m.setup.region, m.setup.pulse_pots, m.setup.low_fit,
                                               m.setup.grid, m.setup.f0, f1, 3.0, m.setup.sparams, opt,
                                               m.setup.ref_options);
    CHECK(rep.converged_a);
    CHECK(rep.converged_b);
    CHECK(rep.junction_mismatch >= 0.0);
    // f1 = 0 reduces phase B to the trivial run
    InitialData zero;
    zero.kind = InitialData::Kind::zero;
    const TwoPhaseReport rep0 = solve_two_phase(m.setup.region, m.setup.pulse_pots, m.setup.low_fit,
                                                m.setup.grid, zero, zero, 3.0, m.setup.sparams, opt,
                                                m.setup.ref_options);
    CHECK(rep0.junction_mismatch == 0.0);
}
