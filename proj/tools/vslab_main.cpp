#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

#include "vslab/scenario.hpp"
#include "vslab/verify.hpp"

using namespace vslab;

int main(int argc, char** argv) {
    CLI::App app{"vslab: Vlasov-Stokes controllability laboratory on the 2-torus"};
    app.require_subcommand(1);

    std::string config_path;
    auto* run = app.add_subcommand("run", "run a scenario from a config file");
    run->add_option("config", config_path, "key = value config file")->required();

    std::string suite{"all"};
    std::string suite_outdir{"out/verify"};
    auto* verify = app.add_subcommand("verify", "run a verification suite");
    verify->add_option("suite", suite, "fast | reference | smoke | two-phase | determinism | all");
    verify->add_option("--outdir", suite_outdir, "artifact directory");

    int fit_p = 1, fit_q = 0;
    std::string fit_config;
    auto* fit = app.add_subcommand("fit-harmonic", "fit one bad-direction potential and print its report");
    fit->add_option("p", fit_p, "primitive direction component")->required();
    fit->add_option("q", fit_q, "primitive direction component")->required();
    fit->add_option("config", fit_config, "config file (geometry, eps_fit)")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            const ScenarioConfig cfg = ScenarioConfig::from_file(config_path);
            std::printf("running scenario: %s\n", cfg.summary().c_str());
            const ScenarioResult res = run_scenario(cfg);
            std::printf("converged=%d iterations=%d delta_sup=%.3e final_outside=%.3e wall=%.1fs\n",
                        res.converged ? 1 : 0, res.iterations, res.delta_sup, res.final_outside_norm,
                        res.wall_time_s);
            for (const auto& w : res.warnings) std::printf("warning: %s\n", w.c_str());
            std::printf("artifacts in %s\n", res.outdir.c_str());
            if (!res.converged) return 2;
            return 0;
        }
        if (*verify) {
            const auto results = run_acceptance_suite(suite, suite_outdir);
            int failed = 0;
            for (const auto& r : results) {
                std::printf("[%s] %2d %-38s %s (%.1fs)\n", r.pass ? "PASS" : "FAIL", r.id, r.name.c_str(),
                            r.detail.c_str(), r.seconds);
                if (!r.pass) ++failed;
            }
            std::printf("%zu checks, %d failed\n", results.size(), failed);
            return failed == 0 ? 0 : 1;
        }
        if (*fit) {
            const ScenarioConfig cfg = ScenarioConfig::from_file(fit_config);
            const ControlRegion region(TorusPoint{cfg.x0_1, cfg.x0_2}, cfg.r0);
            auto core = std::make_shared<PotentialCore>(region.r0 / 10.0, cfg.potential_table_n);
            const real rho = std::hypot(static_cast<real>(fit_p), static_cast<real>(fit_q));
            HarmonicFitOptions opt;
            opt.eps_fit = cfg.eps_fit;
            const HarmonicPotential pot =
                fit_harmonic_direction(Vec2{fit_p / rho, fit_q / rho}, region, core, opt);
            std::printf("direction (%d,%d): amp=%.6g grad_target_error=%.6g laplacian_leak=%.6g\n", fit_p,
                        fit_q, pot.report.amp, pot.report.grad_target_error, pot.report.laplacian_leak);
            return 0;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
    return 0;
}
