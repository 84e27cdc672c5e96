#pragma once

// The reduced system on the curve: pick u = c1 alpha + c2 beta + c3 gamma
// positive at every ramification point (the hemisphere LP over the branch
// values), then solve the pointwise quadratic e^f + alpha' kappa / (2 e^f)
// = u for the positive root.

#include <Eigen/Dense>
#include <vector>

#include "cglab/errors.hpp"
#include "cglab/spectral.hpp"
#include "cglab/surface.hpp"

namespace cglab {

struct AdmissibleU {
    UnitVec3 c;    // unit coefficient vector, max-margin LP direction
    double margin; // min over branch values of c . x_i, > 0
};

// Throws NoAdmissibleU (with a hull certificate) when the branch values fit
// in no open hemisphere.
AdmissibleU admissible_coefficients(const BranchConfig& config);

struct DilatonRoot {
    double ef = 0.0;
    bool near_degenerate = false; // ef positive but tiny (kappa < 0, u << 0)
};

// Unique positive root e^f = (u + sqrt(u^2 - 2 alpha' kappa)) / 2 for
// kappa < 0; equals u at kappa = 0 (PositivityFailure if u <= 0 there).
DilatonRoot solve_dilaton_pointwise(double u, double kappa, double alpha_prime);

struct ResidualReport {
    double quadratic_max = 0.0;   // max normalized |e^{2f} - u e^f + a'k/2|
    double pde_pointwise_max = 0.0; // |Delta u - 2 kappa u| at smooth vertices
    double fem_residual = 0.0;    // ||(K - V) u||_{M^-1} / ||u||_M
    double min_u_at_ramification = 0.0;
    double max_ef = 0.0;
    double ef_bound = 0.0;        // (max u + sqrt(max u^2 + 2 a' max|k|)) / 2
};

struct StromingerSolution {
    UnitVec3 c;
    double margin = 0.0;
    double alpha_prime = 0.0;
    double u_scale = 1.0;
    std::vector<double> u;      // per vertex
    std::vector<double> f;      // per vertex, e^f > 0 everywhere
    std::vector<double> kappa;  // per vertex
    ResidualReport residuals;
};

// mesh -> fields -> LP -> pointwise quadratic -> residual report. The scale
// of u is a free cone direction; it defaults to 1 and rescales solutions to
// solutions.
StromingerSolution full_solve(const SurfaceMesh& mesh, double u_scale = 1.0);
StromingerSolution full_solve(const BranchConfig& config, double u_scale = 1.0);

ResidualReport verify_solution(const StromingerSolution& sol, const SurfaceMesh& mesh,
                               const OperatorTriple& ops);

std::string export_solution_csv(const SurfaceMesh& mesh, const StromingerSolution& sol);

} // namespace cglab
