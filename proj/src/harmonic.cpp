#include "vslab/harmonic.hpp"

#include <fftw3.h>

#include <algorithm>
#include <complex>
#include <mutex>

namespace vslab {

namespace {

std::mutex g_plan_mutex;

inline void cubic_weights(real u, real w[4]) {
    const real u2 = u * u;
    const real u3 = u2 * u;
    w[0] = -(u3 - 3.0 * u2 + 2.0 * u) / 6.0;
    w[1] = (u3 - 2.0 * u2 - u + 2.0) / 2.0;
    w[2] = -(u3 - u2 - 2.0 * u) / 2.0;
    w[3] = (u3 - u) / 6.0;
}

// radial profile derivatives of radial_bump(r,R)
struct BumpDerivs {
    real b, br, brr;  // value, d/dr, d2/dr2
};

BumpDerivs bump_derivs(real r, real R) {
    // profile exp(a(1 - (1-u^2)^{-1/2})): g' = -a u (1-u^2)^{-3/2},
    // g'' = -a (1+2u^2) (1-u^2)^{-5/2}
    BumpDerivs d{0, 0, 0};
    const real u = r / R;
    if (u >= 1.0) return d;
    const real den = 1.0 - u * u;
    const real a = kBumpSharpness;
    const real b = std::exp(a * (1.0 - 1.0 / std::sqrt(den)));
    const real gp = -a * u / (den * std::sqrt(den));
    const real gpp = -a * (1.0 + 2.0 * u * u) / (den * den * std::sqrt(den));
    d.b = b;
    d.br = b * gp / R;
    d.brr = b * (gp * gp + gpp) / (R * R);
    return d;
}

}  // namespace

struct PotentialCore::Tables {
    int n;
    std::vector<real> psi, g1, g2, h11, h12, h22;

    real sample(const std::vector<real>& tab, int i, int j) const {
        return tab[static_cast<std::size_t>((i % n + n) % n) * n + ((j % n + n) % n)];
    }

    real interp(const std::vector<real>& tab, const Vec2& d) const {
        const real s1 = TorusPoint::wrap(d.x) * n;
        const real s2 = TorusPoint::wrap(d.y) * n;
        const int i1 = static_cast<int>(std::floor(s1));
        const int i2 = static_cast<int>(std::floor(s2));
        real w1[4], w2[4];
        cubic_weights(s1 - i1, w1);
        cubic_weights(s2 - i2, w2);
        real acc = 0;
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b) acc += w1[a] * w2[b] * sample(tab, i1 - 1 + a, i2 - 1 + b);
        return acc;
    }
};

PotentialCore::PotentialCore(real source_radius, int table_n, int construct_n)
    : R_(source_radius), n_(table_n), t_(new Tables) {
    if (construct_n < table_n) construct_n = table_n;
    const int N = construct_n;
    const int stride = N / table_n;
    if (stride * table_n != N) throw VslabError("PotentialCore: construct_n must be a multiple of table_n");
    t_->n = n_;
    const std::size_t Npts = static_cast<std::size_t>(N) * N;
    const int Ncol = N / 2 + 1;

    std::vector<double> rb(Npts);
    for (int i = 0; i < N; ++i) {
        const real dx = i <= N / 2 ? static_cast<real>(i) / N : static_cast<real>(i) / N - 1.0;
        for (int j = 0; j < N; ++j) {
            const real dy = j <= N / 2 ? static_cast<real>(j) / N : static_cast<real>(j) / N - 1.0;
            rb[static_cast<std::size_t>(i) * N + j] = radial_bump(std::hypot(dx, dy), R_);
        }
    }

    std::vector<std::complex<double>> spec(static_cast<std::size_t>(N) * Ncol);
    {
        std::lock_guard<std::mutex> lock(g_plan_mutex);
        fftw_plan p = fftw_plan_dft_r2c_2d(N, N, rb.data(), reinterpret_cast<fftw_complex*>(spec.data()),
                                           FFTW_ESTIMATE);
        fftw_execute(p);
        fftw_destroy_plan(p);
    }
    rb.clear();
    rb.shrink_to_fit();

    auto wave = [N](int i) { return i <= N / 2 ? i : i - N; };

    // synthesis of coeff(k) * spec at full resolution, with an optional
    // half-cell phase shift per axis; returns the buffer
    std::vector<double> buf(Npts);
    std::vector<std::complex<double>> work(spec.size());
    fftw_plan plan_c2r;
    {
        std::lock_guard<std::mutex> lock(g_plan_mutex);
        plan_c2r = fftw_plan_dft_c2r_2d(N, N, reinterpret_cast<fftw_complex*>(work.data()), buf.data(),
                                        FFTW_ESTIMATE);
    }
    auto synth = [&](auto coeff, int shift_x, int shift_y) {
        for (int i = 0; i < N; ++i) {
            const int k1 = wave(i);
            for (int jc = 0; jc < Ncol; ++jc) {
                const std::size_t idx = static_cast<std::size_t>(i) * Ncol + jc;
                std::complex<double> c = coeff(k1, jc) * spec[idx];
                if (shift_x) c *= std::polar(1.0, kPi * k1 / N);
                if (shift_y) c *= std::polar(1.0, kPi * jc / N);
                work[idx] = c;
            }
        }
        fftw_execute_dft_c2r(plan_c2r, reinterpret_cast<fftw_complex*>(work.data()), buf.data());
        const double sc = 1.0 / (static_cast<double>(N) * N);
        for (auto& v : buf) v *= sc;
    };

    auto inv_lap = [&](int k1, int k2) -> std::complex<double> {
        const double kk = static_cast<double>(k1) * k1 + static_cast<double>(k2) * k2;
        if (kk == 0.0) return 0.0;
        return -1.0 / (4.0 * kPi * kPi * kk);
    };

    auto subsample = [&](std::vector<real>& out, real& mean) {
        out.resize(static_cast<std::size_t>(n_) * n_);
        double m = 0;
        for (int i = 0; i < n_; ++i)
            for (int j = 0; j < n_; ++j)
                out[static_cast<std::size_t>(i) * n_ + j] =
                    buf[static_cast<std::size_t>(i) * stride * N + static_cast<std::size_t>(j) * stride];
        for (double v : buf) m += v;
        mean = m / static_cast<double>(Npts);
    };

    real mdummy;
    synth([&](int k1, int k2) { return inv_lap(k1, k2); }, 0, 0);
    subsample(t_->psi, mdummy);
    synth([&](int k1, int k2) { return inv_lap(k1, k2) * std::complex<double>(0, kTwoPi * k1); }, 0, 0);
    subsample(t_->g1, grad_mean_.x);
    synth([&](int k1, int k2) { return inv_lap(k1, k2) * std::complex<double>(0, kTwoPi * k2); }, 0, 0);
    subsample(t_->g2, grad_mean_.y);
    synth([&](int k1, int k2) { return inv_lap(k1, k2) * (-kTwoPi * kTwoPi * k1 * k1); }, 0, 0);
    subsample(t_->h11, hess_mean_.a11);
    synth([&](int k1, int k2) { return inv_lap(k1, k2) * (-kTwoPi * kTwoPi * k1 * k2); }, 0, 0);
    subsample(t_->h12, hess_mean_.a12);
    synth([&](int k1, int k2) { return inv_lap(k1, k2) * (-kTwoPi * kTwoPi * k2 * k2); }, 0, 0);
    subsample(t_->h22, hess_mean_.a22);

    for (std::size_t k = 0; k < t_->h11.size(); ++k) {
        const real h = std::sqrt(t_->h11[k] * t_->h11[k] + 2 * t_->h12[k] * t_->h12[k] +
                                 t_->h22[k] * t_->h22[k]);
        hess_sup_ = std::max(hess_sup_, h);
    }

    // Gibbs tail of the stored band-limited source derivative, probed on
    // shifted grids so off-node ripples are seen
    for (int axis = 0; axis < 2; ++axis) {
        real leak = 0;
        for (int sx = 0; sx <= 1; ++sx)
            for (int sy = 0; sy <= 1; ++sy) {
                synth([&](int k1, int k2) {
                    return std::complex<double>(0, kTwoPi * (axis == 0 ? k1 : k2));
                }, sx, sy);
                for (int i = 0; i < N; ++i) {
                    real dx = (i + 0.5 * sx) / N;
                    if (dx > 0.5) dx -= 1.0;
                    for (int j = 0; j < N; ++j) {
                        real dy = (j + 0.5 * sy) / N;
                        if (dy > 0.5) dy -= 1.0;
                        if (std::hypot(dx, dy) <= R_) continue;
                        leak = std::max(leak, std::fabs(buf[static_cast<std::size_t>(i) * N + j]));
                    }
                }
            }
        (axis == 0 ? leak1_ : leak2_) = leak;
    }
    {
        std::lock_guard<std::mutex> lock(g_plan_mutex);
        fftw_destroy_plan(plan_c2r);
    }
}

PotentialCore::~PotentialCore() = default;

real PotentialCore::psi(const Vec2& d) const { return t_->interp(t_->psi, d); }
Vec2 PotentialCore::grad_psi(const Vec2& d) const { return {t_->interp(t_->g1, d), t_->interp(t_->g2, d)}; }
Mat2 PotentialCore::hess_psi(const Vec2& d) const {
    return {t_->interp(t_->h11, d), t_->interp(t_->h12, d), t_->interp(t_->h22, d)};
}

real PotentialCore::bump(const Vec2& d) const { return radial_bump(norm(d), R_); }

Vec2 PotentialCore::grad_bump(const Vec2& d) const {
    const real r = norm(d);
    if (r >= R_ || r < 1e-14) return {};
    const real br = bump_derivs(r, R_).br;
    return d * (br / r);
}

Mat2 PotentialCore::hess_bump(const Vec2& d) const {
    const real r = norm(d);
    if (r >= R_) return {};
    const BumpDerivs bd = bump_derivs(r, R_);
    if (r < 1e-10) {
        const real c = -kBumpSharpness / (R_ * R_);  // b''(0), b(0) = 1
        return {c, 0.0, c};
    }
    const real c1 = bd.brr / (r * r);
    const real c2 = bd.br / r;
    return {c1 * d.x * d.x + c2 * (1.0 - d.x * d.x / (r * r)) * 1.0,
            (c1 - c2 / (r * r)) * d.x * d.y,
            c1 * d.y * d.y + c2 * (1.0 - d.y * d.y / (r * r)) * 1.0};
}

real PotentialCore::bump_leak_outside(real) const { return std::max(leak1_, leak2_); }

Vec2 HarmonicPotential::grad_theta(const TorusPoint& x) const {
    if (kind == Kind::direction) {
        const Vec2 d = torus_delta(x, center);
        return core->hess_psi(d).apply(e) * amp;
    }
    const Vec2 da = torus_delta(x, center) - off_a;
    const Vec2 db = torus_delta(x, center) - off_b;
    return (core->grad_psi(da) - core->grad_psi(db)) * amp;
}

real HarmonicPotential::lap_theta(const TorusPoint& x) const {
    if (kind == Kind::direction) {
        const Vec2 d = torus_delta(x, center);
        return dot(e, core->grad_bump(d)) * amp;
    }
    const Vec2 da = torus_delta(x, center) - off_a;
    const Vec2 db = torus_delta(x, center) - off_b;
    return (core->bump(da) - core->bump(db)) * amp;
}

Vec2 HarmonicPotential::grad_lap_theta(const TorusPoint& x) const {
    if (kind == Kind::direction) {
        const Vec2 d = torus_delta(x, center);
        return core->hess_bump(d).apply(e) * amp;
    }
    const Vec2 da = torus_delta(x, center) - off_a;
    const Vec2 db = torus_delta(x, center) - off_b;
    return (core->grad_bump(da) - core->grad_bump(db)) * amp;
}

real band_distance(const TorusPoint& x, const TorusPoint& x0, int p, int q) {
    const real rho = std::hypot(static_cast<real>(p), static_cast<real>(q));
    const Vec2 nrm{-q / rho, p / rho};
    const real s = dot(torus_delta(x, x0), nrm);
    const real period = 1.0 / rho;
    return std::fabs(s - period * std::round(s / period));
}

HarmonicPotential fit_harmonic_direction(const Vec2& e, const ControlRegion& region,
                                         std::shared_ptr<const PotentialCore> core,
                                         const HarmonicFitOptions& opt) {
    HarmonicPotential pot;
    pot.kind = HarmonicPotential::Kind::direction;
    pot.center = region.x0;
    pot.e = e;
    pot.core = core;

    // rational direction recovery for the band geometry
    int bp = 0, bq = 0;
    real best = 1e9;
    const int kmax = static_cast<int>(std::ceil(3.0 / region.r0)) + 2;
    for (int p = -kmax; p <= kmax; ++p)
        for (int q = -kmax; q <= kmax; ++q) {
            if (!p && !q) continue;
            const real rho = std::hypot(static_cast<real>(p), static_cast<real>(q));
            const real err = std::hypot(p / rho - e.x, q / rho - e.y) + 1e-12 * rho;
            if (err < best) {
                best = err;
                bp = p;
                bq = q;
            }
        }
    if (best > 1e-6) throw VslabError("fit_harmonic_direction: direction is not rational (not a bad direction)");

    const real band = opt.band_radius_factor * region.r0;
    const int n = opt.collocation_n;
    real num = 0, den = 0;
    std::vector<Vec2> he_vals;
    std::vector<std::size_t> keep;
    he_vals.reserve(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const TorusPoint x{static_cast<real>(i) / n, static_cast<real>(j) / n};
            const Vec2 he = core->hess_psi(torus_delta(x, region.x0)).apply(e);
            he_vals.push_back(he);
            if (band_distance(x, region.x0, bp, bq) <= band) continue;
            keep.push_back(he_vals.size() - 1);
            num += dot(he, e);
            den += norm2(he);
        }
    pot.amp = den > 0 ? num / den : 0.0;

    real err = 0;
    real grad_sup = 0;
    for (std::size_t k : keep) {
        const Vec2 g = he_vals[k] * pot.amp;
        err = std::max(err, norm(g - e));
        grad_sup = std::max(grad_sup, norm(g));
    }
    for (const Vec2& he : he_vals) grad_sup = std::max(grad_sup, norm(he * pot.amp));

    pot.report.grad_target_error = err;
    pot.report.amp = pot.amp;
    pot.report.table_n = core->table_n();
    const real leak_abs = std::fabs(pot.amp) * (std::fabs(e.x) * core->axis_leak(0) + std::fabs(e.y) * core->axis_leak(1));
    pot.report.laplacian_leak = grad_sup > 0 ? leak_abs / grad_sup : 0.0;

    if (err > opt.eps_fit)
        throw FitFailed("fit_harmonic_direction: achieved sup error " + std::to_string(err) +
                            " exceeds eps_fit (periodic gradients cannot match a nonzero mean direction)",
                        err);
    return pot;
}

LowVelocityFit fit_low_velocity_potential(const ControlRegion& region,
                                          std::shared_ptr<const PotentialCore> core, int scan_n) {
    const real r0 = region.r0;
    Vec2 base_a{r0 / 4.0, 0.0}, base_b{-r0 / 4.0, 0.0};

    for (int attempt = 0; attempt < 8; ++attempt) {
        HarmonicPotential pot;
        pot.kind = HarmonicPotential::Kind::dipole;
        pot.center = region.x0;
        pot.core = core;
        pot.amp = 1.0;
        // deterministic pole perturbation on retry
        const real ang = attempt * 0.37;
        pot.off_a = {base_a.x * std::cos(ang) - base_a.y * std::sin(ang),
                     base_a.x * std::sin(ang) + base_a.y * std::cos(ang)};
        pot.off_b = pot.off_a * -1.0;
        if (norm(pot.off_a) + core->source_radius() >= r0)
            throw VslabError("fit_low_velocity_potential: poles do not fit inside B(x0,r0)");

        // normalize to a unit median gradient so the acceleration scale and
        // the degeneracy threshold are dimensionless
        {
            std::vector<real> pre;
            const int cn = 96;
            for (int i = 0; i < cn; ++i)
                for (int j = 0; j < cn; ++j) {
                    const TorusPoint x{static_cast<real>(i) / cn, static_cast<real>(j) / cn};
                    if (torus_dist(x, region.x0) <= r0) continue;
                    pre.push_back(norm(pot.grad_theta(x)));
                }
            std::nth_element(pre.begin(), pre.begin() + pre.size() / 2, pre.end());
            const real med = pre[pre.size() / 2];
            if (med > 0) pot.amp = 1.0 / med;
        }

        real mn = std::numeric_limits<real>::infinity();
        real sup = 0;
        std::vector<real> mags;
        mags.reserve(static_cast<std::size_t>(scan_n) * scan_n / 2);
        for (int i = 0; i < scan_n; ++i)
            for (int j = 0; j < scan_n; ++j) {
                const TorusPoint x{static_cast<real>(i) / scan_n, static_cast<real>(j) / scan_n};
                const real g = norm(pot.grad_theta(x));
                sup = std::max(sup, g);
                if (torus_dist(x, region.x0) <= r0) continue;
                mn = std::min(mn, g);
                mags.push_back(g);
            }
        if (mn >= 1e-6) {
            std::nth_element(mags.begin(), mags.begin() + mags.size() / 100, mags.end());
            LowVelocityFit out;
            out.theta = pot;
            out.m = mn;
            out.m_bulk = mags[mags.size() / 100];
            out.grad_sup = sup;
            out.theta.report.amp = 1.0;
            out.theta.report.table_n = core->table_n();
            out.theta.report.grad_target_error = 0.0;
            out.theta.report.laplacian_leak = sup > 0 ? 2.0 * core->bump_leak_outside(r0) / sup : 0.0;
            return out;
        }
    }
    throw DegenerateFit("fit_low_velocity_potential: |grad theta| below 1e-6 outside the ball after retries");
}

}  // namespace vslab
