#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace vslab {

using real = double;

inline constexpr real kTwoPi = 6.28318530717958647692528676655900577;
inline constexpr real kPi = 3.14159265358979323846264338327950288;

struct Vec2 {
    real x{0}, y{0};

    Vec2() = default;
    Vec2(real x_, real y_) : x(x_), y(y_) {}

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(real s) const { return {x * s, y * s}; }
    Vec2 operator-() const { return {-x, -y}; }
    Vec2& operator+=(const Vec2& o) {
        x += o.x;
        y += o.y;
        return *this;
    }
    Vec2& operator-=(const Vec2& o) {
        x -= o.x;
        y -= o.y;
        return *this;
    }
    Vec2& operator*=(real s) {
        x *= s;
        y *= s;
        return *this;
    }
};

inline Vec2 operator*(real s, const Vec2& v) { return v * s; }
inline real dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
inline real norm(const Vec2& v) { return std::hypot(v.x, v.y); }
inline real norm2(const Vec2& v) { return v.x * v.x + v.y * v.y; }
// 90-degree rotation: perp(grad phi) = grad^perp phi = (-d2, d1).
inline Vec2 perp(const Vec2& v) { return {-v.y, v.x}; }

// Symmetric 2x2 matrix (Hessians of scalar potentials).
struct Mat2 {
    real a11{0}, a12{0}, a22{0};
    Vec2 apply(const Vec2& v) const { return {a11 * v.x + a12 * v.y, a12 * v.x + a22 * v.y}; }
};

// C^infinity bump exp(-1/(s(1-s))) on (0,1), identically zero outside.
inline real bump01(real s) {
    if (s <= 0.0 || s >= 1.0) return 0.0;
    return std::exp(-1.0 / (s * (1.0 - s)));
}

// integral of bump01 over (0,1); computed once by adaptive Simpson.
real bump01_integral();

// eta of the pulse construction: bump01 scaled to unit integral,
// supported in (0,1), 0 <= eta, max ~ 2.6.
inline real eta_profile(real s) { return bump01(s) / bump01_integral(); }

// C^infinity monotone step: 0 for u <= 0, 1 for u >= 1.
inline real smooth_step(real u) {
    if (u <= 0.0) return 0.0;
    if (u >= 1.0) return 1.0;
    const real a = std::exp(-1.0 / u);
    const real b = std::exp(-1.0 / (1.0 - u));
    return a / (a + b);
}

// Radial C^infinity bump with support |r| < R, value 1 at r = 0. The
// Gevrey-mild profile exp(a(1 - (1-u^2)^{-1/2})) keeps the truncated
// spectrum's Gibbs tail far below the Laplacian-leak tolerance.
inline constexpr real kBumpSharpness = 6.0;

inline real radial_bump(real r, real R) {
    const real u = r / R;
    if (u >= 1.0) return 0.0;
    return std::exp(kBumpSharpness * (1.0 - 1.0 / std::sqrt(1.0 - u * u)));
}

// d/dr of radial_bump.
inline real radial_bump_deriv(real r, real R) {
    const real u = r / R;
    if (u >= 1.0) return 0.0;
    const real d = 1.0 - u * u;
    return radial_bump(r, R) * (-kBumpSharpness * u / (d * std::sqrt(d))) / R;
}

// Deterministic, seedable RNG. Uniform doubles are derived from raw 64-bit
// draws so sequences do not depend on the standard library's distribution
// implementations.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : s_(seed ? seed : 0x9e3779b97f4a7c15ull) {}

    std::uint64_t next_u64() {
        // xorshift* variant; adequate for sampling, fully reproducible.
        std::uint64_t x = s_;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        s_ = x;
        return x * 0x2545f4914f6cdd1dull;
    }

    real uniform() { return static_cast<real>(next_u64() >> 11) * 0x1.0p-53; }
    real uniform(real lo, real hi) { return lo + (hi - lo) * uniform(); }

    // standard normal via Box-Muller on reproducible uniforms
    real normal() {
        real u1 = uniform();
        while (u1 <= 1e-300) u1 = uniform();
        const real u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
    }

  private:
    std::uint64_t s_;
};

struct VslabError : std::runtime_error {
    explicit VslabError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace vslab
