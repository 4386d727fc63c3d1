#pragma once

#include <array>
#include <map>
#include <string>

#include "vslab/common.hpp"

namespace vslab {

// Line-oriented "key = value" configuration ('#' comments). Unknown keys are
// rejected so typos fail loudly.
struct ScenarioConfig {
    real T{3.0};
    std::array<real, 3> tau_splits{1.0, 1.0, 1.0};
    real x0_1{0.5}, x0_2{0.5};
    real r0{0.2};
    int Nx{32}, Nv{32};
    real Vmax{6.0};
    real gamma{3.0};
    real epsilon{1e-3};
    real lambda{1.0};

    // initial/final data family
    std::string f0_kind{"gaussian"};
    real f0_sigma1{1.0}, f0_sigma2{1.0}, f0_mod1{0.3}, f0_mod2{0.0};
    std::string f0_snapshot;
    std::string f1_kind{"zero"};
    real f1_sigma1{0.8}, f1_sigma2{1.2}, f1_mod1{0.0}, f1_mod2{0.25};

    // tolerances
    real tol{1e-6};
    real ctrl_tol{1e-3};   // relative to ||f0||_inf
    real mean_tol{1e-8};
    real lap_tol{1e-3};
    real eps_fit{1.25};

    int max_iter{25};
    int n_slices{25};
    int n_steps_per_unit{64};
    int spray_samples{200000};
    int potential_table_n{1024};
    real max_direction_norm{3.0};  // pulse schedule restricted to |(p,q)| <= this; 0 = all
    real M_low{4.0};
    int sweep_samples{1000};
    int export_stride{4};

    std::string outdir{"out"};
    std::uint64_t seed{20240817};
    int threads{0};
    bool run_two_phase{false};
    bool verify_sweeps{true};

    static ScenarioConfig from_file(const std::string& path);
    static ScenarioConfig from_string(const std::string& text);
    void validate() const;
    std::string summary() const;
};

}  // namespace vslab
