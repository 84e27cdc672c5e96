#include <doctest.h>

#include <cmath>
#include <span>
#include <vector>

#include "cglab/errors.hpp"
#include "cglab/sphere_geometry.hpp"
#include "cglab/util.hpp"

using namespace cglab;

namespace {

UnitVec3 random_unit(Rng& rng) {
    // area-uniform via z, phi
    double z = rng.uniform(-1, 1);
    double phi = rng.uniform(0, 2 * M_PI);
    double r = std::sqrt(std::max(0.0, 1 - z * z));
    return {r * std::cos(phi), r * std::sin(phi), z};
}

// quasi-uniform direction grid (Fibonacci sphere)
std::vector<UnitVec3> fibonacci_grid(int n) {
    std::vector<UnitVec3> out;
    const double ga = M_PI * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < n; ++i) {
        double z = 1.0 - 2.0 * (i + 0.5) / n;
        double r = std::sqrt(std::max(0.0, 1 - z * z));
        out.push_back({r * std::cos(ga * i), r * std::sin(ga * i), z});
    }
    return out;
}

} // namespace

TEST_CASE("stereographic chart hits the marked points") {
    auto close = [](const UnitVec3& a, const UnitVec3& b) { return (a - b).norm() < 1e-14; };
    CHECK(close(stereo_to_sphere(StereoCoord(0.0, 0.0)), {1, 0, 0}));
    CHECK(close(stereo_to_sphere(StereoCoord(1.0, 0.0)), {0, 1, 0}));
    CHECK(close(stereo_to_sphere(StereoCoord(0.0, 1.0)), {0, 0, 1}));
    CHECK(close(stereo_to_sphere(StereoCoord::infinity()), {-1, 0, 0}));
    CHECK(sphere_to_stereo({1, 0, 0}).zeta == Complex(0, 0));
    CHECK(sphere_to_stereo({-1, 0, 0}).infinite);
    CHECK(std::abs(sphere_to_stereo({0, 1, 0}).zeta - Complex(1, 0)) < 1e-15);
}

TEST_CASE("stereographic round trips") {
    Rng rng(11);
    for (int i = 0; i < 200; ++i) {
        UnitVec3 x = random_unit(rng);
        UnitVec3 back = stereo_to_sphere(sphere_to_stereo(x));
        CHECK((x - back).norm() < 1e-12);
        Complex z(rng.uniform(-4, 4), rng.uniform(-4, 4));
        StereoCoord s = sphere_to_stereo(stereo_to_sphere(StereoCoord(z)));
        REQUIRE_FALSE(s.infinite);
        CHECK(std::abs(s.zeta - z) < 1e-12 * std::max(1.0, std::abs(z)));
    }
    CHECK_THROWS_AS(sphere_to_stereo({0.5, 0.5, 0.5}), ValidationError);
}

TEST_CASE("hemisphere margin: witnessed cap") {
    Rng rng(23);
    std::vector<UnitVec3> pts;
    for (int i = 0; i < 8; ++i) {
        UnitVec3 p = random_unit(rng);
        p.x = std::abs(p.x) + 4.0; // first coordinate dominates after normalization
        pts.push_back(p.normalized());
    }
    bool all_big = true;
    for (auto& p : pts) all_big &= p.x >= 0.8;
    REQUIRE(all_big);
    auto rep = hemisphere_margin(pts);
    CHECK(rep.feasible);
    CHECK(rep.margin >= 0.8);
}

TEST_CASE("hemisphere margin: cube vertices are infeasible") {
    std::vector<UnitVec3> pts;
    for (int sx : {-1, 1})
        for (int sy : {-1, 1})
            for (int sz : {-1, 1}) pts.push_back(UnitVec3{1.0 * sx, 1.0 * sy, 1.0 * sz}.normalized());
    auto rep = hemisphere_margin(pts);
    CHECK_FALSE(rep.feasible);
    CHECK(rep.margin <= 0.0);
    CHECK(rep.margin == doctest::Approx(-1.0 / std::sqrt(3.0)).epsilon(1e-12));
}

TEST_CASE("hemisphere margin: antipodal pair sits on the boundary") {
    std::vector<UnitVec3> pts{{1, 0, 0}, {-1, 0, 0}};
    auto rep = hemisphere_margin(pts);
    CHECK_FALSE(rep.feasible);
    CHECK(std::abs(rep.margin) < 1e-12);
    CHECK_THROWS_AS(hemisphere_margin(std::span<const UnitVec3>{}), ValidationError);
}

TEST_CASE("hemisphere margin agrees with a grid oracle and is rotation equivariant") {
    Rng rng(37);
    auto grid = fibonacci_grid(100000);
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<UnitVec3> pts;
        for (int i = 0; i < 8; ++i) pts.push_back(random_unit(rng));
        auto rep = hemisphere_margin(pts);

        double grid_best = -2;
        for (const auto& n : grid) {
            double m = 2;
            for (const auto& p : pts) m = std::min(m, n.dot(p));
            grid_best = std::max(grid_best, m);
        }
        CHECK(rep.margin >= grid_best - 1e-12); // exact optimum dominates the grid
        CHECK(rep.margin <= grid_best + 0.015); // and the grid nearly attains it

        UnitVec3 axis = random_unit(rng);
        Eigen::Matrix3d R = Eigen::AngleAxisd(rng.uniform(0, 3), axis.eigen()).toRotationMatrix();
        std::vector<UnitVec3> rotated;
        for (const auto& p : pts) rotated.push_back(UnitVec3::from(R * p.eigen()));
        auto rep2 = hemisphere_margin(rotated);
        CHECK(rep2.margin == doctest::Approx(rep.margin).epsilon(1e-9));
        CHECK((UnitVec3::from(R * rep.direction.eigen()) - rep2.direction).norm() < 1e-6);
    }
}

TEST_CASE("mobius maps: composition, associativity, rotation conjugation") {
    Rng rng(51);
    for (int trial = 0; trial < 20; ++trial) {
        MobiusMap a{Complex(rng.uniform(-1, 1), rng.uniform(-1, 1)),
                    Complex(rng.uniform(-1, 1), rng.uniform(-1, 1)),
                    Complex(rng.uniform(-1, 1), rng.uniform(-1, 1)),
                    Complex(rng.uniform(-1, 1), rng.uniform(-1, 1))};
        MobiusMap b = a, c = a;
        b.b += 0.7;
        c.d += Complex(0, 0.4);
        if (!a.valid() || !b.valid() || !c.valid()) continue;
        StereoCoord z(Complex(rng.uniform(-2, 2), rng.uniform(-2, 2)));
        auto lhs = a.compose(b.compose(c)).apply(z);
        auto rhs = a.compose(b).compose(c).apply(z);
        REQUIRE_FALSE(lhs.infinite);
        CHECK(std::abs(lhs.zeta - rhs.zeta) < 1e-12 * std::max(1.0, std::abs(lhs.zeta)));
    }
    for (int trial = 0; trial < 20; ++trial) {
        UnitVec3 axis = random_unit(rng);
        Eigen::Matrix3d R = Eigen::AngleAxisd(rng.uniform(-3, 3), axis.eigen()).toRotationMatrix();
        MobiusMap m = mobius_from_rotation(R);
        UnitVec3 x = random_unit(rng);
        UnitVec3 lhs = mobius_apply_sphere(m, x);
        UnitVec3 rhs = UnitVec3::from(R * x.eigen());
        CHECK((lhs - rhs).norm() < 1e-10);
    }
}

TEST_CASE("hemispherizing mobius") {
    std::vector<UnitVec3> cube;
    for (int sx : {-1, 1})
        for (int sy : {-1, 1})
            for (int sz : {-1, 1}) cube.push_back(UnitVec3{1.0 * sx, 1.0 * sy, 1.0 * sz}.normalized());
    auto m = hemispherizing_mobius(cube);
    REQUIRE(m.has_value());
    std::vector<UnitVec3> mapped;
    for (const auto& p : cube) mapped.push_back(mobius_apply_sphere(*m, p));
    CHECK(hemisphere_margin(mapped).feasible);

    // already-capped points are accepted via the identity
    std::vector<UnitVec3> cap;
    Rng rng(3);
    for (int i = 0; i < 8; ++i)
        cap.push_back(UnitVec3{3.0, rng.uniform(-1, 1), rng.uniform(-1, 1)}.normalized());
    auto id = hemispherizing_mobius(cap);
    REQUIRE(id.has_value());
    CHECK(std::abs(id->a - Complex(1, 0)) < 1e-14);
    CHECK(std::abs(id->b) < 1e-14);

    std::vector<UnitVec3> single{{0, 0, 1}};
    auto s = hemispherizing_mobius(single);
    REQUIRE(s.has_value());
    CHECK(hemisphere_margin(std::vector<UnitVec3>{mobius_apply_sphere(*s, single[0])}).feasible);
}

TEST_CASE("spherical primitives") {
    CHECK(spherical_distance({1, 0, 0}, {0, 1, 0}) == doctest::Approx(M_PI / 2).epsilon(1e-14));
    auto octant = spherical_triangle_area({1, 0, 0}, {0, 1, 0}, {0, 0, 1});
    CHECK_FALSE(octant.degenerate);
    CHECK(octant.area == doctest::Approx(M_PI / 2).epsilon(1e-12));

    auto degen = spherical_triangle_area({1, 0, 0}, {0, 1, 0}, UnitVec3{1, 1, 0}.normalized());
    CHECK(degen.degenerate);
    CHECK(degen.area == 0.0);
}
