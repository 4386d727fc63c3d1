#include "vslab/scenario.hpp"

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "vslab/snapshot_io.hpp"

namespace vslab {

namespace {

InitialData make_datum(const std::string& kind, real s1, real s2, real m1, real m2,
                       const std::string& snapshot_path) {
    InitialData d;
    if (kind == "zero") {
        d.kind = InitialData::Kind::zero;
    } else if (kind == "gaussian") {
        d.kind = InitialData::Kind::gaussian;
        d.amp = 1.0;
        d.sigma_v1 = s1;
        d.sigma_v2 = s2;
        d.mod1 = m1;
        d.mod2 = m2;
    } else if (kind == "snapshot") {
        d.kind = InitialData::Kind::snapshot;
        d.snapshot = std::make_shared<DistributionField>(read_snapshot(snapshot_path));
        d.certified = false;  // raw input skips the hypothesis certification
    } else {
        throw VslabError("unknown datum kind '" + kind + "'");
    }
    return d;
}

}  // namespace

ScenarioSetup prepare_scenario(const ScenarioConfig& cfg, int) {
    ScenarioSetup s;
    s.region = ControlRegion(TorusPoint{cfg.x0_1, cfg.x0_2}, cfg.r0);
    s.grid = PhaseGrid(cfg.Nx, cfg.Nv, cfg.Vmax);
    s.all_dirs = bad_directions(s.region);

    auto dir_core = std::make_shared<PotentialCore>(s.region.r0 / 10.0, cfg.potential_table_n);
    auto lv_core = std::make_shared<PotentialCore>(s.region.r0 / 8.0, cfg.potential_table_n);

    HarmonicFitOptions fit_opt;
    fit_opt.eps_fit = cfg.eps_fit;
    for (const auto& d : s.all_dirs) {
        const real rho = std::hypot(static_cast<real>(d.p), static_cast<real>(d.q));
        if (cfg.max_direction_norm > 0 && rho > cfg.max_direction_norm) continue;
        s.pulse_pots.push_back(fit_harmonic_direction(d.e, s.region, dir_core, fit_opt));
    }
    if (s.pulse_pots.empty()) throw VslabError("run_scenario: pulse direction set is empty");

    s.low_fit = fit_low_velocity_potential(s.region, lv_core);

    s.ref_options.M_low = cfg.M_low;
    s.ref_options.verify_sweeps = cfg.verify_sweeps;
    s.ref_options.hv.sweep.n_samples = cfg.sweep_samples;
    s.ref_options.hv.sweep.seed = cfg.seed;
    s.ref_options.lv.n_samples = cfg.sweep_samples;
    s.ref_options.lv.seed = cfg.seed + 1;
    s.reference = assemble_reference(cfg.T, cfg.tau_splits, s.region, s.pulse_pots, s.low_fit, s.grid,
                                     s.ref_options);
    s.reference.constants.n_bad_directions = static_cast<int>(s.all_dirs.size());

    s.f0 = make_datum(cfg.f0_kind, cfg.f0_sigma1, cfg.f0_sigma2, cfg.f0_mod1, cfg.f0_mod2, cfg.f0_snapshot);
    if (s.f0.kind != InitialData::Kind::zero) s.f0.scale_to_weighted_norm(s.grid, cfg.gamma, cfg.epsilon);
    s.f1 = make_datum(cfg.f1_kind, cfg.f1_sigma1, cfg.f1_sigma2, cfg.f1_mod1, cfg.f1_mod2, "");
    if (s.f1.kind != InitialData::Kind::zero) {
        s.f1.scale_to_weighted_norm(s.grid, cfg.gamma, cfg.epsilon);
        // compatibility: equal grid masses (momenta vanish by v-evenness)
        const real m0 = s.f0.grid_mass(s.grid);
        const real m1 = s.f1.grid_mass(s.grid);
        if (m1 != 0.0 && s.f1.kind == InitialData::Kind::gaussian) s.f1.amp *= m0 / m1;
    }

    s.sparams.gamma = cfg.gamma;
    s.sparams.epsilon = cfg.epsilon;

    s.op_options.n_slices = cfg.n_slices;
    s.op_options.flow.lambda = cfg.lambda;
    s.op_options.flow.n_steps_per_unit = cfg.n_steps_per_unit;
    s.op_options.flow.max_displacement = std::min(0.05, s.region.r0 / 4.0);
    s.op_options.picard_tol = cfg.tol;
    s.op_options.max_iter = cfg.max_iter;
    s.op_options.seed = cfg.seed;
    s.op_options.spray_samples = cfg.spray_samples;
    s.op_options.mean_tol = cfg.mean_tol;
    s.op_options.threads = cfg.threads;
    return s;
}

ScenarioResult run_scenario(const ScenarioConfig& cfg) {
    const auto t_start = std::chrono::steady_clock::now();
    if (cfg.threads > 0) omp_set_num_threads(cfg.threads);

    ScenarioResult res;
    res.outdir = cfg.outdir;
    if (cfg.lambda != 1.0)
        res.warnings.push_back("lambda != 1: outside the certified regime of the controllability theorem");

    ScenarioSetup setup = prepare_scenario(cfg);
    res.constants = setup.reference.constants;
    if (setup.grid.Vmax < setup.reference.constants.M_bar + 1.0)
        res.warnings.push_back("Vmax does not dominate the low-velocity dynamic range M_bar + 1; "
                               "excursions beyond the velocity box are absorbed by the extension corrections");

    res.f0_sup = setup.f0.sup_norm(setup.grid);

    ControlOperator op(setup.region, &setup.reference, setup.grid, setup.f0, setup.sparams, setup.op_options);
    res.mass_f0 = op.mass_reference();
    IterationState st = op.picard_fixed_point();
    res.converged = st.converged;
    res.iterations = st.iterations;
    res.delta_sup = st.delta_sup;
    res.mem = st.mem;
    res.log = st.log;
    res.slice_times = op.slice_times();
    res.slice_moments = st.mom;
    res.final_outside_norm = op.final_outside_norm(st);

    // per-slice outside-omega sup of the perturbation (plot bundle)
    {
        const PhaseGrid& g = setup.grid;
        for (std::size_t k = 0; k < res.slice_times.size(); ++k) {
            real m = 0;
            for (int i1 = 0; i1 < g.Nx; ++i1)
                for (int i2 = 0; i2 < g.Nx; ++i2) {
                    if (torus_dist(TorusPoint{g.x(i1), g.x(i2)}, setup.region.x0) <=
                        setup.region.omega_radius())
                        continue;
                    const float* p = st.series.h[k].data() + g.idx(i1, i2, 0, 0);
                    for (int n = 0; n < g.Nv * g.Nv; ++n) m = std::max(m, static_cast<real>(std::fabs(p[n])));
                }
            res.outside_norm_series.push_back(m);
        }
    }

    res.control = op.extract_control(st, cfg.export_stride);
    res.gamma3 = op.gamma3_sweep(st, cfg.sweep_samples, cfg.seed + 2);

    if (cfg.run_two_phase) {
        res.ran_two_phase = true;
        res.two_phase = solve_two_phase(setup.region, setup.pulse_pots, setup.low_fit, setup.grid, setup.f0,
                                        setup.f1, cfg.T, setup.sparams, setup.op_options, setup.ref_options);
    }

    // final state on the grid for the snapshot
    DistributionField final_state(setup.grid, res.slice_times.back());
    {
        const int last = static_cast<int>(res.slice_times.size()) - 1;
        const PhaseGrid& g = setup.grid;
        for (int i1 = 0; i1 < g.Nx; ++i1)
            for (int i2 = 0; i2 < g.Nx; ++i2)
                for (int j1 = 0; j1 < g.Nv; ++j1)
                    for (int j2 = 0; j2 < g.Nv; ++j2)
                        final_state.at(i1, i2, j1, j2) = op.g_value(st, last, i1, i2, j1, j2);
    }

    res.wall_time_s =
        std::chrono::duration_cast<std::chrono::duration<double>>(std::chrono::steady_clock::now() - t_start)
            .count();
    emit_outputs(cfg.outdir, cfg, res, &final_state, setup.grid);
    return res;
}

void emit_outputs(const std::string& outdir, const ScenarioConfig& cfg, const ScenarioResult& result,
                  const DistributionField* final_state, const PhaseGrid& grid) {
    namespace fs = std::filesystem;
    fs::create_directories(outdir);
    char buf[512];

    {
        std::ofstream os(outdir + "/iterations.csv");
        os << "iter,delta_sup,mem_a,mem_b,mem_c,mem_d,mem_e,max_outside_omega\n";
        for (const auto& row : result.log) {
            std::snprintf(buf, sizeof(buf), "%d,%.17g,%d,%d,%d,%d,%d,%.17g\n", row.iter, row.delta_sup,
                          row.mem.a_pass ? 1 : 0, row.mem.b_pass ? 1 : 0, row.mem.c_pass ? 1 : 0,
                          row.mem.d_pass ? 1 : 0, row.mem.e_pass ? 1 : 0, row.max_outside_omega);
            os << buf;
        }
    }

    if (!result.slice_times.empty() && result.slice_moments.size() == result.slice_times.size()) {
        write_moment_csv(outdir + "/moments.csv", result.slice_times, result.slice_moments);
    } else {
        std::ofstream os(outdir + "/moments.csv");
        os << "t,mass,mom1,mom2,max_abs_rho\n";
    }

    {
        std::ofstream os(outdir + "/plot_slices.csv");
        os << "t,mass,mom1,mom2,sup_outside_omega,control_integral\n";
        for (std::size_t k = 0; k < result.slice_times.size(); ++k) {
            const real mass = k < result.slice_moments.size() ? result.slice_moments[k].mass : 0.0;
            const Vec2 mom = k < result.slice_moments.size() ? result.slice_moments[k].momentum : Vec2{};
            const real outn = k < result.outside_norm_series.size() ? result.outside_norm_series[k] : 0.0;
            const real gi = k < result.control.integrals.size() ? result.control.integrals[k] : 0.0;
            std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", result.slice_times[k],
                          mass, mom.x, mom.y, outn, gi);
            os << buf;
        }
    }

    {
        std::ofstream os(outdir + "/constants.txt");
        const ReferenceConstants& c = result.constants;
        os << "T " << c.T << "\n"
           << "alpha " << c.alpha << "\n"
           << "C_r0T " << c.C_r0T << "\n"
           << "M1 " << c.M1 << "\n"
           << "m_lower1 " << c.m_lower1 << "\n"
           << "M_bar " << c.M_bar << "\n"
           << "a " << c.a << "\n"
           << "b " << c.b << "\n"
           << "c " << c.c << "\n"
           << "L_c01 " << c.L_c01 << "\n"
           << "A " << c.A << "\n"
           << "nu " << c.nu << "\n"
           << "n_bad_directions " << c.n_bad_directions << "\n"
           << "n_pulse_directions " << c.n_pulse_directions << "\n"
           << "M_low_used " << c.M_low_used << "\n"
           << "k1 " << c.k1 << "\n"
           << "k2 " << c.k2 << "\n";
    }

    {
        std::ofstream os(outdir + "/summary.txt");
        os << "config " << cfg.summary() << "\n"
           << "converged " << (result.converged ? 1 : 0) << "\n"
           << "iterations " << result.iterations << "\n"
           << "delta_sup " << result.delta_sup << "\n"
           << "final_outside_norm " << result.final_outside_norm << "\n"
           << "f0_sup " << result.f0_sup << "\n"
           << "mass_f0 " << result.mass_f0 << "\n"
           << "control_max_inside " << result.control.max_inside << "\n"
           << "control_max_outside " << result.control.max_outside << "\n"
           << "control_max_integral " << result.control.max_abs_integral << "\n"
           << "gamma3_hits " << result.gamma3.hits << "/" << result.gamma3.n_samples << "\n"
           << "wall_time_s " << result.wall_time_s << "\n";
        for (const auto& w : result.warnings) os << "warning " << w << "\n";
        if (result.ran_two_phase)
            os << "two_phase_junction " << result.two_phase.junction_mismatch << "\n"
               << "two_phase_converged " << (result.two_phase.converged_a && result.two_phase.converged_b)
               << "\n";
    }

    if (final_state) write_snapshot(outdir + "/final_state.vsf", *final_state);

    if (!result.control.G.empty()) {
        std::vector<real> times;
        for (int k : result.control.stored_slices) times.push_back(result.slice_times[k]);
        write_control_snapshot(outdir + "/control.vsf", grid, times, result.control.G);
    }
}

}  // namespace vslab
