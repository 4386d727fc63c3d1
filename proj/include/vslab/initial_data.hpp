#pragma once

#include <memory>

#include "vslab/fields.hpp"

namespace vslab {

// Analytic initial-datum families: anisotropic v-Gaussians (even in v, so
// the momentum compatibility condition holds by construction) times a
// positive trigonometric spatial profile, scaled so the grid-evaluated
// weighted sup norm equals a target. A raw-snapshot path exists for
// experimentation but skips the hypothesis certification.
struct InitialData {
    enum class Kind { zero, gaussian, snapshot };
    Kind kind{Kind::zero};

    real amp{0};
    real sigma_v1{1.0}, sigma_v2{1.0};
    real mod1{0.3}, mod2{0.0};      // spatial modulation amplitudes (|.|<1)
    real phase1{0.0}, phase2{0.25}; // spatial phases
    std::shared_ptr<DistributionField> snapshot;
    bool certified{true};

    real eval(const TorusPoint& x, const Vec2& v) const {
        switch (kind) {
            case Kind::zero:
                return 0.0;
            case Kind::gaussian: {
                const real shape = 1.0 + mod1 * std::cos(kTwoPi * (x.x1 - phase1)) +
                                   mod2 * std::cos(kTwoPi * (x.x2 - phase2));
                const real a = v.x / sigma_v1;
                const real b = v.y / sigma_v2;
                return amp * shape * std::exp(-0.5 * (a * a + b * b));
            }
            case Kind::snapshot:
                return snapshot ? interpolate(*snapshot, x, v) : 0.0;
        }
        return 0.0;
    }

    real sup_norm(const PhaseGrid& g) const;
    real weighted_norm(const PhaseGrid& g, real gamma) const;
    real c1_norm_estimate(const PhaseGrid& g) const;  // finite-difference C^1 proxy
    real grid_mass(const PhaseGrid& g) const;

    // rescale so the grid weighted sup norm equals the target
    void scale_to_weighted_norm(const PhaseGrid& g, real gamma, real target);
};

}  // namespace vslab
