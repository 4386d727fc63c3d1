#include "vslab/stokes.hpp"

#include <fftw3.h>

#include <cstring>
#include <mutex>

namespace vslab {

namespace {
std::mutex g_fftw_plan_mutex;  // FFTW planning is not thread-safe
}

struct StokesSolver::Impl {
    int n;
    fftw_plan fwd;
    fftw_plan bwd;
    std::vector<double> rbuf;
    std::vector<std::complex<double>> cbuf;

    explicit Impl(int nx) : n(nx), rbuf(static_cast<std::size_t>(nx) * nx), cbuf(static_cast<std::size_t>(nx) * (nx / 2 + 1)) {
        std::lock_guard<std::mutex> lock(g_fftw_plan_mutex);
        fwd = fftw_plan_dft_r2c_2d(n, n, rbuf.data(), reinterpret_cast<fftw_complex*>(cbuf.data()), FFTW_ESTIMATE);
        bwd = fftw_plan_dft_c2r_2d(n, n, reinterpret_cast<fftw_complex*>(cbuf.data()), rbuf.data(), FFTW_ESTIMATE);
    }
    ~Impl() {
        std::lock_guard<std::mutex> lock(g_fftw_plan_mutex);
        fftw_destroy_plan(fwd);
        fftw_destroy_plan(bwd);
    }

    // new-array execution keeps const solve() thread-safe per workspace
    void forward(const std::vector<double>& in, std::vector<std::complex<double>>& out) const {
        std::vector<double> tmp(in);
        out.resize(cbuf.size());
        fftw_execute_dft_r2c(fwd, tmp.data(), reinterpret_cast<fftw_complex*>(out.data()));
    }
    void backward(std::vector<std::complex<double>> in, std::vector<double>& out) const {
        out.resize(rbuf.size());
        fftw_execute_dft_c2r(bwd, reinterpret_cast<fftw_complex*>(in.data()), out.data());
        const double s = 1.0 / (static_cast<double>(n) * n);
        for (auto& v : out) v *= s;
    }

    int wave(int i) const { return i <= n / 2 ? i : i - n; }
};

StokesSolver::StokesSolver(int Nx) : impl_(std::make_unique<Impl>(Nx)), Nx_(Nx) {}
StokesSolver::~StokesSolver() = default;

StokesSolution StokesSolver::solve(const std::vector<Vec2>& j, real mean_tol) const {
    const int n = Nx_;
    const std::size_t npts = static_cast<std::size_t>(n) * n;
    if (j.size() != npts) throw VslabError("StokesSolver: source size mismatch");

    std::vector<double> j1(npts), j2(npts);
    real jl2 = 0;
    Vec2 jmean;
    for (std::size_t k = 0; k < npts; ++k) {
        j1[k] = j[k].x;
        j2[k] = j[k].y;
        jl2 += norm2(j[k]);
        jmean += j[k];
    }
    jl2 = std::sqrt(jl2 / npts);
    jmean *= 1.0 / static_cast<real>(npts);
    if (norm(jmean) > mean_tol * std::max(jl2, static_cast<real>(1e-300)))
        throw NonZeroMean("solve_stokes: source has nonzero mean (compatibility condition violated)");

    std::vector<std::complex<double>> J1, J2;
    impl_->forward(j1, J1);
    impl_->forward(j2, J2);

    const std::size_t nc = J1.size();
    std::vector<std::complex<double>> U1(nc), U2(nc), P(nc);
    real u_h2 = 0, p_h1 = 0, div2 = 0;

    const int ncol = n / 2 + 1;
    for (int i = 0; i < n; ++i) {
        const int k1 = impl_->wave(i);
        for (int c = 0; c < ncol; ++c) {
            const int k2 = c;  // r2c keeps the non-negative half in the last axis
            const std::size_t idx = static_cast<std::size_t>(i) * ncol + c;
            const double kk = static_cast<double>(k1) * k1 + static_cast<double>(k2) * k2;
            if (kk == 0.0) {
                U1[idx] = U2[idx] = P[idx] = 0.0;
                continue;
            }
            const std::complex<double> a = J1[idx];
            const std::complex<double> b = J2[idx];
            const std::complex<double> kdotj = static_cast<double>(k1) * a + static_cast<double>(k2) * b;
            // projection orthogonal to k, divided by 4 pi^2 |k|^2
            const double inv = 1.0 / (4.0 * kPi * kPi * kk);
            U1[idx] = (a - static_cast<double>(k1) * kdotj / kk) * inv;
            U2[idx] = (b - static_cast<double>(k2) * kdotj / kk) * inv;
            // -Delta U + grad p = j  =>  p_k = -i (k . j_k) / (2 pi |k|^2)
            P[idx] = std::complex<double>(0, -1) * kdotj / (2.0 * kPi * kk);

            // Hermitian double-count weight for the reduced spectrum
            const double w = (k2 == 0 || k2 == n / 2) ? 1.0 : 2.0;
            const double mag2 = std::norm(U1[idx]) + std::norm(U2[idx]);
            const double wn = 1.0 + std::sqrt(kk);
            u_h2 += w * wn * wn * wn * wn * mag2;
            p_h1 += w * wn * wn * std::norm(P[idx]);
            const double dv = std::norm(2.0 * kPi * (static_cast<double>(k1) * U1[idx] + static_cast<double>(k2) * U2[idx]));
            div2 += w * dv;
        }
    }

    StokesSolution out;
    out.j_L2 = jl2;
    const double scale = 1.0 / (static_cast<double>(n) * n);  // unnormalized FFT -> L2 of coefficients
    out.U_H2 = std::sqrt(u_h2) * scale;
    out.p_H1 = std::sqrt(p_h1) * scale;
    out.div_norm = std::sqrt(div2) * scale;

    std::vector<double> u1, u2, pr;
    impl_->backward(U1, u1);
    impl_->backward(U2, u2);
    impl_->backward(P, pr);

    out.U = VelocityField2D(n);
    out.p.resize(npts);
    for (std::size_t k = 0; k < npts; ++k) {
        out.U.values[k] = Vec2{u1[k], u2[k]};
        out.p[k] = pr[k];
    }

    // residual of -Delta U + grad p - j, evaluated spectrally
    real res2 = 0;
    for (int i = 0; i < n; ++i) {
        const int k1 = impl_->wave(i);
        for (int c = 0; c < ncol; ++c) {
            const int k2 = c;
            const std::size_t idx = static_cast<std::size_t>(i) * ncol + c;
            const double kk = static_cast<double>(k1) * k1 + static_cast<double>(k2) * k2;
            const double lam = 4.0 * kPi * kPi * kk;
            const std::complex<double> g1 = std::complex<double>(0, 2.0 * kPi * k1) * P[idx];
            const std::complex<double> g2 = std::complex<double>(0, 2.0 * kPi * k2) * P[idx];
            std::complex<double> r1 = lam * U1[idx] + g1 - (kk == 0.0 ? 0.0 : J1[idx]);
            std::complex<double> r2 = lam * U2[idx] + g2 - (kk == 0.0 ? 0.0 : J2[idx]);
            const double w = (k2 == 0 || k2 == n / 2) ? 1.0 : 2.0;
            res2 += w * (std::norm(r1) + std::norm(r2));
        }
    }
    out.residual_norm = std::sqrt(res2) * scale;
    return out;
}

real StokesSolver::divergence_norm(const VelocityField2D& U) const {
    const int n = Nx_;
    const std::size_t npts = static_cast<std::size_t>(n) * n;
    std::vector<double> u1(npts), u2(npts);
    for (std::size_t k = 0; k < npts; ++k) {
        u1[k] = U.values[k].x;
        u2[k] = U.values[k].y;
    }
    std::vector<std::complex<double>> A, B;
    impl_->forward(u1, A);
    impl_->forward(u2, B);
    const int ncol = n / 2 + 1;
    real acc = 0;
    for (int i = 0; i < n; ++i) {
        const int k1 = impl_->wave(i);
        for (int c = 0; c < ncol; ++c) {
            const std::size_t idx = static_cast<std::size_t>(i) * ncol + c;
            const double w = (c == 0 || c == n / 2) ? 1.0 : 2.0;
            acc += w * std::norm(2.0 * kPi * (static_cast<double>(k1) * A[idx] + static_cast<double>(c) * B[idx]));
        }
    }
    return std::sqrt(acc) / (static_cast<double>(n) * n);
}

real curl_consistency_residual(int n, const std::vector<real>& W, const std::vector<Vec2>& j) {
    const std::size_t npts = static_cast<std::size_t>(n) * n;
    if (W.size() != npts || j.size() != npts) throw VslabError("curl_consistency_residual: size mismatch");
    std::vector<double> w(W.begin(), W.end()), j1(npts), j2(npts);
    for (std::size_t k = 0; k < npts; ++k) {
        j1[k] = j[k].x;
        j2[k] = j[k].y;
    }
    const int ncol = n / 2 + 1;
    std::vector<std::complex<double>> Wh(static_cast<std::size_t>(n) * ncol), J1(Wh.size()), J2(Wh.size());
    {
        std::lock_guard<std::mutex> lock(g_fftw_plan_mutex);
        fftw_plan p = fftw_plan_dft_r2c_2d(n, n, w.data(), reinterpret_cast<fftw_complex*>(Wh.data()),
                                           FFTW_ESTIMATE);
        fftw_execute(p);
        fftw_execute_dft_r2c(p, j1.data(), reinterpret_cast<fftw_complex*>(J1.data()));
        fftw_execute_dft_r2c(p, j2.data(), reinterpret_cast<fftw_complex*>(J2.data()));
        fftw_destroy_plan(p);
    }
    real num = 0, den = 0;
    for (int i = 0; i < n; ++i) {
        const int k1 = i <= n / 2 ? i : i - n;
        for (int c = 0; c < ncol; ++c) {
            const std::size_t idx = static_cast<std::size_t>(i) * ncol + c;
            const double kk = static_cast<double>(k1) * k1 + static_cast<double>(c) * c;
            const double wgt = (c == 0 || c == n / 2) ? 1.0 : 2.0;
            const std::complex<double> lapW = -4.0 * kPi * kPi * kk * Wh[idx];
            const std::complex<double> curlJ =
                std::complex<double>(0, kTwoPi) * (static_cast<double>(k1) * J2[idx] -
                                                   static_cast<double>(c) * J1[idx]);
            num += wgt * std::norm(-lapW - curlJ);
            den += wgt * std::norm(lapW);
        }
    }
    return den > 0 ? std::sqrt(num / den) : 0.0;
}

real stokes_estimate_check(const StokesSolver& solver, const std::vector<std::vector<Vec2>>& samples) {
    real worst = 0;
    for (const auto& j : samples) {
        const StokesSolution s = solver.solve(j);
        if (s.j_L2 <= 0) continue;
        worst = std::max(worst, (s.U_H2 + s.p_H1) / s.j_L2);
    }
    return worst;
}

}  // namespace vslab
