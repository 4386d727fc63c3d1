#include <doctest.h>

#include "vslab/stokes.hpp"

using namespace vslab;

namespace {

std::vector<Vec2> field_on_grid(int n, const std::function<Vec2(real, real)>& f) {
    std::vector<Vec2> out(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) out[static_cast<std::size_t>(i) * n + k] = f(static_cast<real>(i) / n, static_cast<real>(k) / n);
    return out;
}

}  // namespace

TEST_CASE("zero source gives zero solution") {
    StokesSolver solver(32);
    const auto s = solver.solve(std::vector<Vec2>(32 * 32));
    for (const auto& u : s.U.values) CHECK(norm(u) == 0.0);
    for (real p : s.p) CHECK(p == 0.0);
}

TEST_CASE("manufactured solutions") {
    const int n = 64;
    StokesSolver solver(n);

    SUBCASE("divergence-free single mode") {
        const auto j = field_on_grid(n, [](real, real x2) { return Vec2{std::sin(kTwoPi * x2), 0.0}; });
        const auto s = solver.solve(j);
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < n; ++k) {
                const Vec2 ex{std::sin(kTwoPi * k / n) / (4.0 * kPi * kPi), 0.0};
                CHECK(norm(s.U.values[static_cast<std::size_t>(i) * n + k] - ex) <= 1e-13);
                CHECK(std::fabs(s.p[static_cast<std::size_t>(i) * n + k]) <= 1e-13);
            }
    }

    SUBCASE("pure gradient source is absorbed by the pressure") {
        const auto j = field_on_grid(n, [](real x1, real) { return Vec2{-kTwoPi * std::sin(kTwoPi * x1), 0.0}; });
        const auto s = solver.solve(j);
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < n; ++k) {
                CHECK(norm(s.U.values[static_cast<std::size_t>(i) * n + k]) <= 1e-12);
                CHECK(s.p[static_cast<std::size_t>(i) * n + k] ==
                      doctest::Approx(std::cos(kTwoPi * i / n)).epsilon(1e-12));
            }
    }
}

TEST_CASE("linearity, divergence, mean and residual") {
    const int n = 32;
    StokesSolver solver(n);
    Rng rng(21);
    auto noise = [&]() {
        std::vector<Vec2> j(static_cast<std::size_t>(n) * n);
        Vec2 mean;
        for (auto& u : j) {
            u = {rng.normal(), rng.normal()};
            mean += u;
        }
        mean *= 1.0 / static_cast<real>(j.size());
        for (auto& u : j) u -= mean;
        return j;
    };
    const auto j1 = noise();
    const auto j2 = noise();
    const auto s1 = solver.solve(j1);
    const auto s2 = solver.solve(j2);

    std::vector<Vec2> combo(j1.size());
    for (std::size_t k = 0; k < combo.size(); ++k) combo[k] = j1[k] * 0.3 + j2[k] * (-1.7);
    const auto sc = solver.solve(combo);
    real scale = 0;
    for (std::size_t k = 0; k < combo.size(); ++k) scale = std::max(scale, norm(sc.U.values[k]));
    for (std::size_t k = 0; k < combo.size(); ++k) {
        const Vec2 ex = s1.U.values[k] * 0.3 + s2.U.values[k] * (-1.7);
        CHECK(norm(sc.U.values[k] - ex) <= 1e-12 * std::max(scale, static_cast<real>(1e-30)));
    }

    CHECK(s1.div_norm <= 1e-12 * s1.j_L2);
    CHECK(norm(s1.U.mean()) <= 1e-15);
    CHECK(s1.residual_norm <= 1e-11 * s1.j_L2);
}

TEST_CASE("nonzero-mean source is rejected") {
    const int n = 32;
    StokesSolver solver(n);
    std::vector<Vec2> j(static_cast<std::size_t>(n) * n, Vec2{1.0, 0.0});
    CHECK_THROWS_AS(solver.solve(j), NonZeroMean);
}

TEST_CASE("estimate check: closed-form single mode and homogeneity") {
    const int n = 32;
    StokesSolver solver(n);
    // k = (0,1) mode, divergence-free: U = j/(4 pi^2), p = 0.
    // ||j||_L2 = 1/sqrt(2); ||U||_H2 = (1+1)^2 /(4 pi^2) /sqrt2: ratio = 4/(4 pi^2)
    const auto j = field_on_grid(n, [](real, real x2) { return Vec2{std::sin(kTwoPi * x2), 0.0}; });
    const real ratio = stokes_estimate_check(solver, {j});
    CHECK(ratio == doctest::Approx(4.0 / (4.0 * kPi * kPi)).epsilon(1e-10));

    auto j10 = j;
    for (auto& u : j10) u *= 10.0;
    CHECK(stokes_estimate_check(solver, {j10}) == doctest::Approx(ratio).epsilon(1e-12));
}

TEST_CASE("uniqueness: the mode formula is injective on mean-zero data") {
    // solve(0) = 0 and linearity give uniqueness; check a nontrivial kernel probe
    const int n = 32;
    StokesSolver solver(n);
    const auto j = field_on_grid(n, [](real x1, real x2) {
        return Vec2{std::sin(kTwoPi * x2) + 0.3 * std::cos(2 * kTwoPi * x1), -0.3 * std::sin(kTwoPi * x1)};
    });
    const auto s = solver.solve(j);
    real nonzero = 0;
    for (const auto& u : s.U.values) nonzero = std::max(nonzero, norm(u));
    CHECK(nonzero > 1e-4);
}
