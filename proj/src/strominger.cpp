#include "cglab/strominger.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <sstream>

#include "cglab/errors.hpp"
#include "cglab/fields.hpp"
#include "cglab/util.hpp"

namespace cglab {

namespace {

// Caratheodory certificate: convex weights on <= 4 branch values summing to
// the origin. Exists whenever the margin is <= 0.
std::pair<std::vector<int>, std::vector<double>> hull_certificate(
    const std::array<UnitVec3, 8>& pts) {
    auto try_subset = [&](const std::vector<int>& idx) -> std::vector<double> {
        const int k = static_cast<int>(idx.size());
        // solve sum w_i x_i = 0, sum w_i = 1, w >= 0 (least squares + check)
        Eigen::MatrixXd A(4, k);
        for (int j = 0; j < k; ++j) {
            A(0, j) = pts[idx[j]].x;
            A(1, j) = pts[idx[j]].y;
            A(2, j) = pts[idx[j]].z;
            A(3, j) = 1.0;
        }
        Eigen::Vector4d b(0, 0, 0, 1);
        Eigen::VectorXd w = A.colPivHouseholderQr().solve(b);
        if ((A * w - b).norm() > 1e-9) return {};
        for (int j = 0; j < k; ++j)
            if (w[j] < -1e-9) return {};
        for (int j = 0; j < k; ++j) w[j] = std::max(0.0, w[j]);
        return std::vector<double>(w.data(), w.data() + k);
    };
    for (int sz = 2; sz <= 4; ++sz) {
        std::vector<int> idx(sz);
        std::function<std::pair<std::vector<int>, std::vector<double>>(int, int)> rec =
            [&](int start, int depth) -> std::pair<std::vector<int>, std::vector<double>> {
            if (depth == sz) {
                auto w = try_subset(idx);
                if (!w.empty()) return {idx, w};
                return {};
            }
            for (int i = start; i < 8; ++i) {
                idx[depth] = i;
                auto r = rec(i + 1, depth + 1);
                if (!r.first.empty()) return r;
            }
            return {};
        };
        auto r = rec(0, 0);
        if (!r.first.empty()) return r;
    }
    return {};
}

} // namespace

AdmissibleU admissible_coefficients(const BranchConfig& config) {
    auto values = config.branch_values();
    HemisphereReport rep = hemisphere_margin(std::span<const UnitVec3>(values.data(), 8));
    if (!rep.feasible) {
        auto [subset, weights] = hull_certificate(values);
        std::ostringstream os;
        os << "no admissible u in V_phi: branch values fit in no open hemisphere "
           << "(margin " << rep.margin << "); origin is in the hull of points {";
        for (std::size_t i = 0; i < subset.size(); ++i)
            os << (i ? "," : "") << subset[i] + 1;
        os << "}";
        throw NoAdmissibleU(os.str(), subset, weights, rep.margin);
    }
    return {rep.direction, rep.margin};
}

DilatonRoot solve_dilaton_pointwise(double u, double kappa, double alpha_prime) {
    if (!(alpha_prime > 0.0)) throw ValidationError("alpha' must be positive");
    if (kappa > 0.0) throw ValidationError("kappa must be <= 0");
    if (kappa == 0.0) {
        if (u <= 0.0)
            throw PositivityFailure("u <= 0 at a ramification point: no smooth dilaton");
        return {u, false};
    }
    const double disc = u * u - 2.0 * alpha_prime * kappa; // >= u^2
    // rationalized form for u <= 0: avoids the cancellation that rounds the
    // tiny positive root to zero
    const double ef = (u > 0.0) ? 0.5 * (u + std::sqrt(disc))
                                : -alpha_prime * kappa / (std::sqrt(disc) - u);
    DilatonRoot r;
    // product of roots is alpha' kappa / 2 < 0, so ef > 0; it only collapses
    // toward 0 when u is very negative
    r.ef = ef;
    r.near_degenerate = ef < 1e-8 * std::max(1.0, std::abs(u));
    return r;
}

StromingerSolution full_solve(const SurfaceMesh& mesh, double u_scale) {
    if (!(u_scale > 0.0)) throw ValidationError("u-scale must be positive");
    AdmissibleU adm = admissible_coefficients(mesh.config);

    const int n = mesh.vertex_count();
    StromingerSolution sol;
    sol.c = adm.c;
    sol.margin = adm.margin;
    sol.alpha_prime = mesh.config.alpha_prime;
    sol.u_scale = u_scale;
    sol.u.resize(n);
    sol.f.resize(n);
    sol.kappa.resize(n);

    parallel_for(static_cast<std::size_t>(n), [&](std::size_t v) {
        const auto& cv = mesh.vertices[v];
        sol.u[v] = u_scale * adm.c.dot(cv.pos);
        if (cv.is_ramification) {
            sol.kappa[v] = 0.0;
        } else {
            const double D = 1.0 + std::norm(cv.coord);
            sol.kappa[v] = -std::norm(cv.w) / (D * D * D * D);
        }
        sol.f[v] = std::log(solve_dilaton_pointwise(sol.u[v], sol.kappa[v], sol.alpha_prime).ef);
    });

    OperatorTriple ops = assemble_operators(mesh);
    sol.residuals = verify_solution(sol, mesh, ops);
    return sol;
}

StromingerSolution full_solve(const BranchConfig& config, double u_scale) {
    // fail fast on the LP before paying for the mesh
    admissible_coefficients(config);
    return full_solve(build_surface(config), u_scale);
}

ResidualReport verify_solution(const StromingerSolution& sol, const SurfaceMesh& mesh,
                               const OperatorTriple& ops) {
    ResidualReport rep;
    const int n = mesh.vertex_count();
    double max_u = -1e300, max_abs_kappa = 0.0;
    rep.min_u_at_ramification = 1e300;

    for (int v = 0; v < n; ++v) {
        const double ef = std::exp(sol.f[v]);
        const double quad = ef * ef - sol.u[v] * ef + 0.5 * sol.alpha_prime * sol.kappa[v];
        const double scale = std::max({1.0, ef * ef, std::abs(sol.u[v] * ef),
                                       0.5 * sol.alpha_prime * std::abs(sol.kappa[v])});
        rep.quadratic_max = std::max(rep.quadratic_max, std::abs(quad) / scale);
        rep.max_ef = std::max(rep.max_ef, ef);
        max_u = std::max(max_u, sol.u[v]);
        max_abs_kappa = std::max(max_abs_kappa, std::abs(sol.kappa[v]));
        if (mesh.vertices[v].is_ramification)
            rep.min_u_at_ramification = std::min(rep.min_u_at_ramification, sol.u[v]);
        else {
            PointFrame fr = evaluate_frame(mesh, v);
            FieldDerivs uf;
            uf.value = sol.u[v];
            uf.dz = sol.u_scale * (sol.c.x * fr.alpha.dz + sol.c.y * fr.beta.dz + sol.c.z * fr.gamma.dz);
            uf.dzb = std::conj(uf.dz);
            uf.dzdzb = sol.u_scale *
                       (sol.c.x * fr.alpha.dzdzb + sol.c.y * fr.beta.dzdzb + sol.c.z * fr.gamma.dzdzb);
            rep.pde_pointwise_max = std::max(rep.pde_pointwise_max, kernel_residual_pointwise(fr, uf));
        }
    }
    rep.ef_bound = 0.5 * (max_u + std::sqrt(max_u * max_u + 2.0 * sol.alpha_prime * max_abs_kappa));

    // variational residual |u^T (K - V) u| / u^T M u: the quadratic-form
    // error of the discrete pencil, O(h^2) on these cone meshes (pointwise
    // row norms are dominated by the cone vertices and decay only like h)
    Eigen::Map<const Eigen::VectorXd> u(sol.u.data(), n);
    Eigen::VectorXd r = ops.stiffness * u - ops.potential.cwiseProduct(u);
    rep.fem_residual = std::abs(u.dot(r)) / std::max(u.dot(ops.mass.cwiseProduct(u)), 1e-300);
    return rep;
}

std::string export_solution_csv(const SurfaceMesh& mesh, const StromingerSolution& sol) {
    std::ostringstream os;
    os.precision(17);
    os << "vertex,u,f,kappa\n";
    for (int v = 0; v < mesh.vertex_count(); ++v)
        os << v << "," << sol.u[v] << "," << sol.f[v] << "," << sol.kappa[v] << "\n";
    return os.str();
}

} // namespace cglab
