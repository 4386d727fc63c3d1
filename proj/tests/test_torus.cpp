#include <doctest.h>

#include <set>

#include "vslab/torus.hpp"

using namespace vslab;

TEST_CASE("torus metric basics") {
    CHECK(torus_dist({0.1, 0.1}, {0.1, 0.1}) == doctest::Approx(0.0));
    CHECK(torus_dist({0.0, 0.0}, {0.9, 0.0}) == doctest::Approx(0.1));
    CHECK(torus_dist({0.0, 0.0}, {0.5, 0.5}) == doctest::Approx(std::sqrt(2.0) / 2.0));
}

TEST_CASE("torus metric properties") {
    Rng rng(11);
    for (int i = 0; i < 200; ++i) {
        const TorusPoint a{rng.uniform(), rng.uniform()};
        const TorusPoint b{rng.uniform(), rng.uniform()};
        const TorusPoint c{rng.uniform(), rng.uniform()};
        CHECK(torus_dist(a, b) == doctest::Approx(torus_dist(b, a)));
        CHECK(torus_dist(a, c) <= torus_dist(a, b) + torus_dist(b, c) + 1e-12);
        // invariance under integer translations
        const TorusPoint at{a.x1 + 3.0, a.x2 - 2.0};
        CHECK(torus_dist(at, b) == doctest::Approx(torus_dist(a, b)));
    }
}

TEST_CASE("bad directions: covering ball yields none") {
    const auto dirs = bad_directions(ControlRegion::unchecked({0.5, 0.5}, 2.4));  // r0/4 = 0.6
    CHECK(dirs.empty());
}

TEST_CASE("bad directions at r0/4 = 0.05 contain the principal axes") {
    const ControlRegion reg({0.5, 0.5}, 0.2);
    const auto dirs = bad_directions(reg);
    std::set<std::pair<int, int>> got;
    for (const auto& d : dirs) got.insert({d.p, d.q});
    CHECK(got.count({1, 0}) == 1);
    CHECK(got.count({-1, 0}) == 1);
    CHECK(got.count({0, 1}) == 1);
    CHECK(got.count({0, -1}) == 1);
    CHECK(got.count({1, 1}) == 1);
    CHECK(got.count({-1, -1}) == 1);
    CHECK(dirs.size() % 2 == 0);  // +/- pairs
    // sorted by angle
    for (std::size_t k = 0; k + 1 < dirs.size(); ++k)
        CHECK(std::atan2(dirs[k].e.y, dirs[k].e.x) <= std::atan2(dirs[k + 1].e.y, dirs[k + 1].e.x));
}

TEST_CASE("bad directions match the brute-force oracle on the radius ladder") {
    for (real r0 : {0.4, 0.2, 0.1, 0.05}) {
        const ControlRegion reg = ControlRegion::unchecked({0.5, 0.5}, r0);
        const auto dirs = bad_directions(reg);
        std::set<std::pair<int, int>> got;
        for (const auto& d : dirs) got.insert({d.p, d.q});

        std::set<std::pair<int, int>> oracle;
        const int kmax = static_cast<int>(std::ceil(3.0 / r0)) + 1;
        for (int p = -kmax; p <= kmax; ++p)
            for (int q = -kmax; q <= kmax; ++q) {
                if (!p && !q) continue;
                int a = std::abs(p), b = std::abs(q);
                while (b) {
                    const int t = a % b;
                    a = b;
                    b = t;
                }
                if (a != 1) continue;
                if (std::hypot(static_cast<real>(p), static_cast<real>(q)) > 3.0 / r0) continue;
                if (family_clearance(p, q) >= r0 / 4.0 - 1e-9) oracle.insert({p, q});
            }
        CHECK(got == oracle);
    }
}

TEST_CASE("crossing detection on sampled paths") {
    const ControlRegion reg({0.5, 0.5}, 0.2);

    SUBCASE("head-on path through the center") {
        std::vector<PathSample> path;
        const Vec2 v{3.0, 0.0};
        for (int k = 0; k <= 400; ++k) {
            const real t = k * 0.25 / 400;  // travels 0.75 across the ball
            path.push_back({t, TorusPoint{0.2 + 3.0 * t, 0.5}, v});
        }
        const auto cs = detect_crossings(path, reg);
        REQUIRE(cs.size() == 2);
        CHECK(cs[0].entering);
        CHECK(cs[0].gamma_class == GammaClass::gamma4_minus);  // head-on saturates every threshold
        CHECK(!cs[1].entering);
        CHECK(torus_dist(cs[0].x, reg.x0) == doctest::Approx(reg.r0).epsilon(1e-6));
        CHECK(cs[1].t > cs[0].t + 1e-6);  // isolated
    }

    SUBCASE("tangent path outside the ball") {
        std::vector<PathSample> path;
        for (int k = 0; k <= 400; ++k) {
            const real t = k * 0.25 / 400;
            path.push_back({t, TorusPoint{0.2 + 3.0 * t, 0.5 + reg.r0 + 0.01}, Vec2{3.0, 0.0}});
        }
        CHECK(detect_crossings(path, reg).empty());
    }

    SUBCASE("80 degree incidence is gamma- and gamma2- but not gamma3-") {
        // crossing point on the +x pole with v at 80 degrees off the inward
        // normal: cos(80deg) ~ 0.17 lies between 1/8 and 1/5
        const real ang = 80.0 * kPi / 180.0;
        const Vec2 v = Vec2{-std::cos(ang), std::sin(ang)} * 3.0;
        const TorusPoint xc{0.5 + reg.r0, 0.5};
        const real back = 0.015;  // start just before the crossing
        std::vector<PathSample> path;
        for (int k = 0; k <= 800; ++k) {
            const real t = -back + k * 2.0 * back / 800;
            path.push_back({t + back, TorusPoint{xc.x1 + v.x * t, xc.x2 + v.y * t}, v});
        }
        const auto cs = detect_crossings(path, reg);
        REQUIRE(!cs.empty());
        const auto& c = cs.front();
        CHECK(c.entering);
        CHECK(static_cast<int>(c.gamma_class) >= static_cast<int>(GammaClass::gamma2_minus));
        CHECK(static_cast<int>(c.gamma_class) < static_cast<int>(GammaClass::gamma3_minus));
    }

    SUBCASE("coarse sampling is rejected") {
        std::vector<PathSample> path{{0.0, TorusPoint{0.0, 0.5}, Vec2{1, 0}},
                                     {1.0, TorusPoint{0.4, 0.5}, Vec2{1, 0}}};
        CHECK_THROWS_AS(detect_crossings(path, reg), VslabError);
    }
}

TEST_CASE("gamma classes are nested") {
    const ControlRegion reg({0.5, 0.5}, 0.2);
    Rng rng(5);
    for (int i = 0; i < 500; ++i) {
        const real ang = rng.uniform(0.0, kTwoPi);
        const TorusPoint x{0.5 + reg.r0 * std::cos(ang), 0.5 + reg.r0 * std::sin(ang)};
        const Vec2 v{rng.uniform(-4, 4), rng.uniform(-4, 4)};
        const GammaClass c = classify_incidence(reg, x, v);
        const real speed = norm(v);
        const real vn = dot(v, reg.normal_at(x));
        if (c == GammaClass::gamma4_minus) CHECK((speed >= 2.5 && vn <= -speed / 4));
        if (static_cast<int>(c) >= static_cast<int>(GammaClass::gamma3_minus))
            CHECK((speed >= 2.0 && vn <= -speed / 5));
        if (static_cast<int>(c) >= static_cast<int>(GammaClass::gamma2_minus))
            CHECK((speed >= 1.0 && vn <= -speed / 8));
        if (static_cast<int>(c) >= static_cast<int>(GammaClass::gamma_minus))
            CHECK((speed >= 0.5 && vn <= -speed / 10));
    }
}
