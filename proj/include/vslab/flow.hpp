#pragma once

#include <functional>
#include <vector>

#include "vslab/absorption.hpp"
#include "vslab/common.hpp"
#include "vslab/fields.hpp"
#include "vslab/torus.hpp"

namespace vslab {

// Time-dependent velocity field on the torus. Implementations advertise the
// time structure the integrator must respect: hard breakpoints (pulse window
// edges, slice times) and the local smoothness step inside a window.
class TimeField {
  public:
    virtual ~TimeField() = default;
    virtual Vec2 eval(real t, const TorusPoint& x) const = 0;

    // ordered times in (a,b) where the field's smooth description changes
    virtual void breakpoints(real a, real b, std::vector<real>& out) const {
        (void)a;
        (void)b;
        (void)out;
    }
    // largest step the field's time variation allows near t (infinity when
    // the field is smooth on the whole enclosing segment)
    virtual real smooth_dt(real t) const {
        (void)t;
        return std::numeric_limits<real>::infinity();
    }
    virtual real sup_norm() const { return 0.0; }
};

class ZeroField final : public TimeField {
  public:
    Vec2 eval(real, const TorusPoint&) const override { return {}; }
};

class ConstField final : public TimeField {
  public:
    explicit ConstField(Vec2 u) : u_(u) {}
    Vec2 eval(real, const TorusPoint&) const override { return u_; }
    real sup_norm() const override { return norm(u_); }

  private:
    Vec2 u_;
};

// Stored time slices with linear interpolation in t and bicubic in x.
// Slice spacing is the caller's responsibility (the operator keeps the
// per-slice variation of this g-dependent part small).
class SliceField final : public TimeField {
  public:
    SliceField() = default;
    SliceField(std::vector<real> times, std::vector<VelocityField2D> slices)
        : times_(std::move(times)), slices_(std::move(slices)) {}

    Vec2 eval(real t, const TorusPoint& x) const override;
    void breakpoints(real a, real b, std::vector<real>& out) const override;
    real sup_norm() const override;
    bool empty() const { return slices_.empty(); }

  private:
    std::vector<real> times_;
    std::vector<VelocityField2D> slices_;
};

class SumField final : public TimeField {
  public:
    void add(const TimeField* f) {
        if (f) parts_.push_back(f);
    }
    Vec2 eval(real t, const TorusPoint& x) const override {
        Vec2 u;
        for (const auto* p : parts_) u += p->eval(t, x);
        return u;
    }
    void breakpoints(real a, real b, std::vector<real>& out) const override {
        for (const auto* p : parts_) p->breakpoints(a, b, out);
    }
    real smooth_dt(real t) const override {
        real m = std::numeric_limits<real>::infinity();
        for (const auto* p : parts_) m = std::min(m, p->smooth_dt(t));
        return m;
    }
    real sup_norm() const override {
        real s = 0;
        for (const auto* p : parts_) s += p->sup_norm();
        return s;
    }

  private:
    std::vector<const TimeField*> parts_;
};

struct StepTooCoarse : VslabError {
    explicit StepTooCoarse(const std::string& w) : VslabError(w) {}
};

struct FlowParams {
    real lambda{1.0};
    int n_steps_per_unit{64};     // base RK4 resolution between breakpoints
    int min_steps_per_window{8};  // floor inside a pulse window
    real max_displacement{0.05};  // crossing detection needs steps < r0/4
    real tol_t{1e-10};
    real grazing_tol{1e-6};
    bool record_crossings{true};
};

struct FlowResult {
    TorusPoint X;
    Vec2 V;
    real factor{1.0};  // product of crossing factors; 1 when no crossings
    std::vector<SphereCrossing> crossings;
    bool grazing_warning{false};
};

// Called after every accepted substep; return false to stop the trace early.
using StepObserver = std::function<bool(real t, const TorusPoint& x, const Vec2& v)>;

// Characteristics of the field lambda(-v + U): dX/dt = V, dV/dt = lambda(U - V),
// integrated by fixed-substep RK4 from time s to time t (backward supported).
// Crossing detection and absorption factors are active when region/absorb
// are provided; crossings are reported with forward-time orientation.
FlowResult flow_map(const TimeField& U, real t, real s, const TorusPoint& x, const Vec2& v,
                    const ControlRegion* region = nullptr, const AbsorptionModel* absorb = nullptr,
                    const FlowParams& params = {}, const StepObserver& observer = {});

// e^{2 lambda t} f0((X,V)(0,t,x,v)) times the accumulated absorption factor.
real evaluate_transport(const std::function<real(TorusPoint, Vec2)>& f0, const TimeField& U,
                        const AbsorptionModel* absorb, real t, const TorusPoint& x, const Vec2& v,
                        const ControlRegion* region = nullptr, const FlowParams& params = {});

struct ProbePair {
    real t{0}, s{0};
    TorusPoint x;
    Vec2 v;
    real t2{0}, s2{0};
    TorusPoint x2;
    Vec2 v2;
};

// max over pairs of |Delta(X,V)| / ((1+|v|) |Delta(t,s,x,v)|); pairs with
// |v-v'| >= 1 or zero separation are skipped.
real lipschitz_probe(const TimeField& U, const std::vector<ProbePair>& pairs, const FlowParams& params = {});

// max over samples of | e^t |v| - |V(0,t,x,v)| |  (friction-drift bound)
real velocity_drift_check(const TimeField& U, const std::vector<PathSample>& samples, real t_final,
                          const FlowParams& params = {});

}  // namespace vslab
