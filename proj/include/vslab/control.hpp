#pragma once

#include <functional>
#include <string>
#include <vector>

#include "vslab/absorption.hpp"
#include "vslab/fields.hpp"
#include "vslab/flow.hpp"
#include "vslab/initial_data.hpp"
#include "vslab/reference.hpp"
#include "vslab/stokes.hpp"

namespace vslab {

struct NoConvergence : VslabError {
    int iterations;
    real last_delta;
    NoConvergence(const std::string& w, int it, real d) : VslabError(w), iterations(it), last_delta(d) {}
};

struct SEpsilonParams {
    real gamma{3.0};
    real epsilon{1e-3};
    real c1{0}, c2{0}, c3{0};  // diagnostic thresholds from measured proxies

    real delta1() const { return gamma / (2.0 * (gamma + 3.0)); }
    real delta2() const { return (gamma + 2.0) / (gamma + 3.0); }
};

struct MembershipReport {
    real a_value{0}, b_value{0}, c_value{0};
    real d_max_momentum{0};
    real e_max_mass_dev{0};
    bool a_pass{false}, b_pass{false}, c_pass{false}, d_pass{false}, e_pass{false};
};

// Perturbation series h = g - f_bar on the slice grid. Slice times are quiet
// (no reference pulse active), so g(t_k) on the grid equals
//   h[k] + mu1_coef[k].mu1 + mu2_coef[k].mu2.
// The mu profiles are separable, omega-supported in x, and calibrated on the
// grid so the extension's moment normalizations are exact.
struct SliceSeries {
    PhaseGrid grid;
    std::vector<real> times;
    std::vector<std::vector<float>> h;
    std::vector<Vec2> mu1_coef;
    std::vector<real> mu2_coef;

    void init(const PhaseGrid& g, const std::vector<real>& ts) {
        grid = g;
        times = ts;
        h.assign(ts.size(), std::vector<float>(g.size(), 0.0f));
        mu1_coef.assign(ts.size(), Vec2{});
        mu2_coef.assign(ts.size(), 0.0);
    }
};

struct IterationRow {
    int iter{0};
    real delta_sup{0};
    MembershipReport mem;
    real max_outside_omega{0};
};

struct IterationState {
    SliceSeries series;
    std::vector<MomentRecord> mom;           // per slice, of g - f_bar
    std::vector<VelocityField2D> deltaU;     // Stokes of j_{g - f_bar}
    MembershipReport mem;
    real delta_sup{0};
    int iterations{0};
    bool converged{false};
    std::vector<IterationRow> log;
    real K3_measured{0};
    real C_pi_measured{1};
};

struct OperatorOptions {
    int n_slices{25};
    FlowParams flow;
    real picard_tol{1e-6};
    int max_iter{25};
    std::uint64_t seed{2024};
    int spray_samples{200000};
    int supercell{2};
    real mean_tol{1e-8};
    int threads{0};  // 0 = hardware default
};

struct ControlFieldReport {
    real max_inside{0};
    real max_outside{0};
    real max_abs_integral{0};  // max over slices of |integral of G|
    std::vector<real> integrals;
    std::vector<real> times;
    // exported subset
    std::vector<int> stored_slices;
    std::vector<std::vector<float>> G;
};

// The fixed-point machinery of the controllability scheme. Holds the
// reference trajectory, the absorption model and the initial datum, and
// exposes the operator V_eps, its Picard iteration, the control residual
// extraction and the two-phase composition.
class ControlOperator {
  public:
    ControlOperator(const ControlRegion& region, const ReferenceTrajectory* ref, const PhaseGrid& grid,
                    const InitialData& f0, const SEpsilonParams& sp, const OperatorOptions& opt);

    // V_eps[g] = f_bar + Pi(tilde V_eps[g] restricted); state in, state out
    void apply_V(const IterationState& in, IterationState& out) const;

    IterationState initial_state() const;  // g0 = f_bar + f0
    IterationState picard_fixed_point();

    ControlFieldReport extract_control(const IterationState& state, int export_stride = 4) const;

    real final_outside_norm(const IterationState& state) const;
    real mass_reference() const { return mass_f0_; }

    // gamma3- crossing sweep on the converged field (Prop. 5.1 check)
    struct Gamma3Sweep {
        int n_samples{0};
        int hits{0};
        bool all_passed{false};
    };
    Gamma3Sweep gamma3_sweep(const IterationState& state, int n_samples, std::uint64_t seed) const;

    const std::vector<real>& slice_times() const { return slice_times_; }
    const AbsorptionModel& absorption() const { return absorb_; }
    const OperatorOptions& options() const { return opt_; }

    // g value at a slice (h + mu corrections; f_bar vanishes at quiet slices)
    real g_value(const IterationState& st, int slice, int i1, int i2, int j1, int j2) const;

    void build_deltaU(IterationState& st) const;

  private:
    ControlRegion region_;
    AbsorptionModel absorb_;
    const ReferenceTrajectory* ref_;
    PhaseGrid grid_;
    InitialData f0_;
    SEpsilonParams sp_;
    OperatorOptions opt_;
    StokesSolver stokes_;
    std::vector<real> slice_times_;

    // separable profile tables
    std::vector<real> wx_;       // omega-supported spatial bump, grid values
    std::vector<real> Ev_;       // exp(-|v|^2/2) on v nodes (2d)
    real Qw_{1}, QE_{1}, QV1_{1}, QV2_{1};
    real mass_f0_{0};
    std::vector<real> chi_;      // extension cutoff on the x grid
    std::vector<real> f0_grid_;  // f0 sampled on the grid (slice 0)

    struct Tags;
    void spray_tags(const TimeField& U, Tags& tags) const;

    void transport_slice(const TimeField& U, real t, const Tags* tags, int slice,
                         std::vector<float>& out, MomentRecord& mom_raw) const;

    friend struct TwoPhaseRunner;
};

struct TwoPhaseReport {
    bool converged_a{false}, converged_b{false};
    real junction_mismatch{0};   // sup over outside-omega nodes at T/2
    real terminal_error{0};      // sup over outside-omega nodes of |g(T) - f1|
    int iterations_a{0}, iterations_b{0};
};

// Steer f0 -> f1 on [0,T] by composing a forward run (f0 -> 0 outside omega
// on [0,T/2]) with the time-and-velocity reversal of a second run for
// v -> f1(x,-v). The terminal state equals f1 outside omega by construction;
// the junction mismatch at T/2 is the operative error.
TwoPhaseReport solve_two_phase(const ControlRegion& region, const std::vector<HarmonicPotential>& pots,
                               const LowVelocityFit& low_fit, const PhaseGrid& grid, const InitialData& f0,
                               const InitialData& f1, real T, const SEpsilonParams& sp,
                               const OperatorOptions& opt, const ReferenceOptions& ref_opt);

}  // namespace vslab
