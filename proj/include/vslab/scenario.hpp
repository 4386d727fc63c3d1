#pragma once

#include <string>
#include <vector>

#include "vslab/config.hpp"
#include "vslab/control.hpp"
#include "vslab/harmonic.hpp"
#include "vslab/reference.hpp"

namespace vslab {

struct ScenarioResult {
    bool converged{false};
    real final_outside_norm{0};
    int iterations{0};
    real wall_time_s{0};
    real delta_sup{0};
    real f0_sup{0};
    real mass_f0{0};
    MembershipReport mem;
    ReferenceConstants constants;
    ControlFieldReport control;
    ControlOperator::Gamma3Sweep gamma3;
    std::vector<IterationRow> log;
    std::vector<real> slice_times;
    std::vector<MomentRecord> slice_moments;
    std::vector<real> outside_norm_series;
    TwoPhaseReport two_phase;
    bool ran_two_phase{false};
    std::string outdir;
    std::vector<std::string> warnings;
};

// Everything the scenario pipeline shares: geometry, fitted potentials,
// reference trajectory, operator inputs.
struct ScenarioSetup {
    ControlRegion region;
    PhaseGrid grid;
    std::vector<BadDirection> all_dirs;
    std::vector<HarmonicPotential> pulse_pots;  // schedule subset
    LowVelocityFit low_fit;
    ReferenceTrajectory reference;
    InitialData f0, f1;
    SEpsilonParams sparams;
    OperatorOptions op_options;
    ReferenceOptions ref_options;
};

ScenarioSetup prepare_scenario(const ScenarioConfig& cfg, int gamma3_samples_hint = 0);

// bad_directions -> fits -> builders -> constants -> reference -> Picard ->
// control extraction (-> two-phase); writes all artifacts under cfg.outdir.
ScenarioResult run_scenario(const ScenarioConfig& cfg);

// Writes iteration log, moment series, constants record, plot bundle,
// final-state and control snapshots. Tolerates empty results (header-only
// CSVs).
void emit_outputs(const std::string& outdir, const ScenarioConfig& cfg, const ScenarioResult& result,
                  const DistributionField* final_state, const PhaseGrid& grid);

}  // namespace vslab
