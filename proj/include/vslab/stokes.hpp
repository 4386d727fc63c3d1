#pragma once

#include <complex>
#include <memory>
#include <vector>

#include "vslab/common.hpp"
#include "vslab/fields.hpp"

namespace vslab {

struct NonZeroMean : VslabError {
    explicit NonZeroMean(const std::string& w) : VslabError(w) {}
};

struct StokesSolution {
    VelocityField2D U;
    std::vector<real> p;     // mean-zero pressure on the x grid
    real residual_norm{0};   // ||-Delta U + grad p - j||_L2
    real div_norm{0};        // spectral L2 norm of div U
    real U_H2{0};
    real p_H1{0};
    real j_L2{0};
};

// Stationary Stokes on T^2 by Fourier diagonalization:
//   U_k = P_k j_k / (4 pi^2 |k|^2),  P_k = I - k k^T/|k|^2,  U_0 = 0.
// The torus makes the system diagonal; no dealiasing is needed for this
// linear solve.
class StokesSolver {
  public:
    explicit StokesSolver(int Nx);
    ~StokesSolver();

    StokesSolver(const StokesSolver&) = delete;
    StokesSolver& operator=(const StokesSolver&) = delete;

    // mean_tol is relative to ||j||_L2 (absolute floor 1e-300); a violation
    // signals a moment-bookkeeping bug upstream.
    StokesSolution solve(const std::vector<Vec2>& j, real mean_tol = 1e-8) const;

    int Nx() const { return Nx_; }

    // spectral L2 norm of div for an arbitrary field on this grid
    real divergence_norm(const VelocityField2D& U) const;

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    int Nx_;
};

// max over samples of (||U||_H2 + ||p||_H1) / ||j||_L2 (Sobolev norms with
// the (1+|n|)^(2m) spectral weights).
real stokes_estimate_check(const StokesSolver& solver, const std::vector<std::vector<Vec2>>& samples);

// relative spectral residual of -Delta W = curl j on an n x n grid
real curl_consistency_residual(int n, const std::vector<real>& W, const std::vector<Vec2>& j);

}  // namespace vslab
