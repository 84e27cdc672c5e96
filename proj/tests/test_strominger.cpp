#include <doctest.h>

#include <cmath>

#include "cglab/errors.hpp"
#include "cglab/strominger.hpp"
#include "test_fixtures.hpp"

using namespace cglab;
using namespace cglab::testing;

TEST_CASE("pointwise dilaton roots") {
    CHECK(solve_dilaton_pointwise(2.0, 0.0, 1.0).ef == doctest::Approx(2.0).epsilon(1e-15));
    {
        auto r = solve_dilaton_pointwise(0.0, -2.0, 1.0);
        CHECK(r.ef == doctest::Approx(1.0).epsilon(1e-15)); // 1 - 0 + (-2)/2 = 0
        CHECK_FALSE(r.near_degenerate);
    }
    CHECK(solve_dilaton_pointwise(1.0, -4.0, 1.0).ef == doctest::Approx(2.0).epsilon(1e-15));
    // near-degenerate branch: u very negative, kappa barely negative
    auto nd = solve_dilaton_pointwise(-3.0, -1e-18, 1.0);
    CHECK(nd.ef > 0.0);
    CHECK(nd.near_degenerate);
    CHECK_THROWS_AS(solve_dilaton_pointwise(-3.0, 0.0, 1.0), PositivityFailure);
    CHECK_THROWS_AS(solve_dilaton_pointwise(0.0, 0.0, 1.0), PositivityFailure);
    CHECK_THROWS_AS(solve_dilaton_pointwise(1.0, -1.0, 0.0), ValidationError);
    CHECK_THROWS_AS(solve_dilaton_pointwise(1.0, 0.5, 1.0), ValidationError);
}

TEST_CASE("admissible coefficients: cap, cube, equivariance") {
    BranchConfig cap = validate_config(cap_config(1));
    AdmissibleU adm = admissible_coefficients(cap);
    CHECK(adm.margin > 0.0);
    // cap points sit around (1,0,0) before normalization; after the
    // normalizing rotation the optimal direction still witnesses the margin
    for (int i = 0; i < 8; ++i) CHECK(adm.c.dot(cap.branch_value(i)) >= adm.margin - 1e-12);

    BranchConfig cube = validate_config(cube_config(1));
    CHECK_THROWS_AS(admissible_coefficients(cube), NoAdmissibleU);
    try {
        admissible_coefficients(cube);
    } catch (const NoAdmissibleU& e) {
        REQUIRE_FALSE(e.certificate_subset.empty());
        // certificate: convex weights summing the named branch values to 0
        UnitVec3 sum{0, 0, 0};
        double total = 0;
        for (std::size_t i = 0; i < e.certificate_subset.size(); ++i) {
            sum = sum + cube.branch_value(e.certificate_subset[i]) * e.certificate_weights[i];
            total += e.certificate_weights[i];
        }
        CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(sum.norm() < 1e-6);
    }

    // rotation equivariance of the admissible direction
    auto raw = cap_config(1);
    Eigen::Matrix3d R = Eigen::AngleAxisd(0.8, Eigen::Vector3d(1, 2, -1).normalized()).toRotationMatrix();
    RawBranchInput rot = raw;
    for (auto& p : rot.points) p = sphere_to_stereo(UnitVec3::from(R * stereo_to_sphere(p).eigen()));
    AdmissibleU adm2 = admissible_coefficients(validate_config(rot));
    CHECK(adm2.margin == doctest::Approx(adm.margin).epsilon(1e-9));
}

TEST_CASE("full solve on the cap config") {
    BranchConfig cfg = validate_config(cap_config(2));
    SurfaceMesh mesh = build_surface(cfg);
    StromingerSolution sol = full_solve(mesh);

    CHECK(sol.margin > 0.0);
    CHECK(sol.residuals.quadratic_max <= 1e-12);
    CHECK(sol.residuals.pde_pointwise_max <= 1e-9);
    CHECK(sol.residuals.min_u_at_ramification > 0.0);
    CHECK(sol.residuals.max_ef <= sol.residuals.ef_bound * (1 + 1e-12));
    for (double f : sol.f) CHECK(std::isfinite(f)); // e^f > 0 everywhere

    // u at a ramification vertex equals c . (branch value)
    for (int r : mesh.ramification_vertices) {
        double expect = sol.c.dot(mesh.vertices[r].pos);
        CHECK(sol.u[r] == doctest::Approx(expect).epsilon(1e-12));
        CHECK(sol.u[r] >= sol.margin - 1e-12);
    }
}

TEST_CASE("full solve: alpha' sweep expands the dilaton range") {
    auto raw = cap_config(2);
    raw.alpha_prime = 1000.0;
    SurfaceMesh mesh = build_surface(validate_config(raw));
    StromingerSolution big = full_solve(mesh);
    CHECK(big.residuals.quadratic_max <= 1e-12);

    raw.alpha_prime = 0.1;
    StromingerSolution small = full_solve(build_surface(validate_config(raw)));
    CHECK(small.residuals.quadratic_max <= 1e-12);
    CHECK(big.residuals.max_ef > small.residuals.max_ef); // discriminant grows with alpha'
}

TEST_CASE("full solve fails exactly on hemisphere violation") {
    BranchConfig cube = validate_config(cube_config(2));
    CHECK_THROWS_AS(full_solve(cube), NoAdmissibleU);
}

TEST_CASE("u-scale freedom: solutions map to solutions") {
    BranchConfig cfg = validate_config(cap_config(1));
    SurfaceMesh mesh = build_surface(cfg);
    StromingerSolution s1 = full_solve(mesh, 1.0);
    StromingerSolution s3 = full_solve(mesh, 3.0);
    CHECK(s3.margin == s1.margin); // admissibility is scale-invariant
    CHECK(s3.residuals.quadratic_max <= 1e-12);
    for (std::size_t v = 0; v < s1.u.size(); ++v)
        CHECK(s3.u[v] == doctest::Approx(3.0 * s1.u[v]).epsilon(1e-12));
    CHECK_THROWS_AS(full_solve(mesh, -1.0), ValidationError);
}

TEST_CASE("mobius-composed configurations become solvable") {
    BranchConfig cube = validate_config(cube_config(1));
    auto values = cube.branch_values();
    auto m = hemispherizing_mobius(std::span<const UnitVec3>(values.data(), 8));
    REQUIRE(m.has_value());
    RawBranchInput moved;
    moved.mesh_level = 1;
    for (const auto& v : values) moved.points.push_back(m->apply(sphere_to_stereo(v)));
    StromingerSolution sol = full_solve(validate_config(moved));
    CHECK(sol.residuals.quadratic_max <= 1e-12);
    CHECK(sol.residuals.min_u_at_ramification > 0.0);
}

TEST_CASE("solution CSV") {
    BranchConfig cfg = validate_config(cap_config(1));
    SurfaceMesh mesh = build_surface(cfg);
    StromingerSolution sol = full_solve(mesh);
    std::string csv = export_solution_csv(mesh, sol);
    CHECK(csv.rfind("vertex,u,f,kappa\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == mesh.vertex_count() + 1);
}
