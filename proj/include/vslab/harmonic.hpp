#pragma once

#include <memory>
#include <vector>

#include "vslab/common.hpp"
#include "vslab/torus.hpp"

namespace vslab {

struct FitFailed : VslabError {
    real achieved;
    FitFailed(const std::string& w, real a) : VslabError(w), achieved(a) {}
};

struct DegenerateFit : VslabError {
    explicit DegenerateFit(const std::string& w) : VslabError(w) {}
};

struct FitReport {
    real grad_target_error{0};
    real laplacian_leak{0};  // relative to sup |grad theta|
    real amp{0};
    int table_n{0};
};

// Periodic solution of Delta psi = b - mean(b) for a radial C^inf bump b of
// radius R centered at the origin, built spectrally once and tabulated
// (psi, grad psi, Hessian) for fast bicubic evaluation. Potentials with
// ball-supported Laplacian are assembled from directional derivatives and
// translates of this core; the derivative kills the mean term, so their
// Laplacians are exactly the analytic bump combinations.
class PotentialCore {
  public:
    // The Poisson solve runs on a construct_n grid (spectrally converged for
    // the bump profile); tables for fast evaluation are subsampled to
    // table_n. Leak figures are measured on half-cell-shifted syntheses of
    // the stored spectrum.
    explicit PotentialCore(real source_radius, int table_n = 1024, int construct_n = 4096);
    ~PotentialCore();
    PotentialCore(const PotentialCore&) = delete;
    PotentialCore& operator=(const PotentialCore&) = delete;

    real source_radius() const { return R_; }
    int table_n() const { return n_; }

    // d is a torus displacement from the core center (components in [-1/2,1/2))
    real psi(const Vec2& d) const;
    Vec2 grad_psi(const Vec2& d) const;
    Mat2 hess_psi(const Vec2& d) const;

    real bump(const Vec2& d) const;
    Vec2 grad_bump(const Vec2& d) const;
    Mat2 hess_bump(const Vec2& d) const;

    // sup outside the source ball of the band-limited d/dx_i bump, from a
    // shifted synthesis; used for the laplacian_leak bound of direction fits
    real axis_leak(int axis) const { return axis == 0 ? leak1_ : leak2_; }
    real hess_sup() const { return hess_sup_; }
    real bump_leak_outside(real r) const;
    // exact rectangle-rule means of the stored tables (zero up to roundoff)
    Vec2 grad_table_mean() const { return grad_mean_; }
    Mat2 hess_table_mean() const { return hess_mean_; }

  private:
    real R_;
    int n_;
    real leak1_{0}, leak2_{0}, hess_sup_{0};
    Vec2 grad_mean_;
    Mat2 hess_mean_;
    struct Tables;
    std::unique_ptr<Tables> t_;
};

// theta assembled from the core: either a directional-derivative potential
// theta = amp * <e, grad psi>(x - x0) (high-velocity fits) or a two-pole
// difference theta = psi(x-a) - psi(x-b) (low-velocity construction).
struct HarmonicPotential {
    enum class Kind { direction, dipole };
    Kind kind{Kind::direction};
    TorusPoint center;
    Vec2 e;          // unit target direction (direction kind)
    real amp{1};
    Vec2 off_a, off_b;  // pole offsets from center (dipole kind)
    std::shared_ptr<const PotentialCore> core;
    FitReport report;

    Vec2 grad_theta(const TorusPoint& x) const;
    Vec2 grad_perp_theta(const TorusPoint& x) const { return perp(grad_theta(x)); }
    real lap_theta(const TorusPoint& x) const;        // exact ball-supported source
    Vec2 grad_lap_theta(const TorusPoint& x) const;   // for derivatives of curl fields
};

struct HarmonicFitOptions {
    real eps_fit{1e-2};
    int collocation_n{128};
    real band_radius_factor{0.1};  // band half-width = factor * r0
};

// Penalized least squares against grad theta ~ e over collocation points
// outside the band B(x0, r0/10) + R e, within the ball-source family above
// (one scale parameter; the Laplacian support constraint holds by
// construction). Throws FitFailed if the achieved sup error exceeds eps_fit.
HarmonicPotential fit_harmonic_direction(const Vec2& e, const ControlRegion& region,
                                         std::shared_ptr<const PotentialCore> core,
                                         const HarmonicFitOptions& opt);

struct LowVelocityFit {
    HarmonicPotential theta;
    real m{0};        // min |grad theta| on the scan outside B(x0, r0)
    real m_bulk{0};   // 1% quantile of |grad theta| on the same scan
    real grad_sup{0};
};

// theta = G(x-a) - G(x-b) with a,b in B(x0, r0/2) (smeared poles); verifies
// min |grad theta| > 0 on a fine grid outside B(x0, r0). Retries with
// perturbed poles on a degenerate scan before giving up.
LowVelocityFit fit_low_velocity_potential(const ControlRegion& region,
                                          std::shared_ptr<const PotentialCore> core, int scan_n = 512);

// perpendicular torus distance from x to the geodesic through x0 in the
// primitive direction (p,q)
real band_distance(const TorusPoint& x, const TorusPoint& x0, int p, int q);

}  // namespace vslab
