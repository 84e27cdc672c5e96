#include "cglab/spectral.hpp"

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>

#include "cglab/errors.hpp"
#include "cglab/fields.hpp"

namespace cglab {

namespace {

// Corner angles of the Euclidean triangle with side lengths (a, b, c);
// angle[i] is opposite side[i].
std::array<double, 3> flat_angles(double a, double b, double c) {
    auto ang = [](double opp, double s1, double s2) {
        double cosv = (s1 * s1 + s2 * s2 - opp * opp) / (2.0 * s1 * s2);
        return std::acos(std::clamp(cosv, -1.0, 1.0));
    };
    return {ang(a, b, c), ang(b, c, a), ang(c, a, b)};
}

} // namespace

OperatorTriple assemble_operators(const SurfaceMesh& mesh) {
    const int n = mesh.vertex_count();
    OperatorTriple ops;
    ops.n = n;
    ops.covering_degree = mesh.covering_degree;
    ops.mass = Eigen::VectorXd::Zero(n);

    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(mesh.triangles.size() * 9);
    for (int t = 0; t < static_cast<int>(mesh.triangles.size()); ++t) {
        const auto& tr = mesh.triangles[t];
        const double l01 = mesh.intrinsic_length(tr[0], tr[1]);
        const double l12 = mesh.intrinsic_length(tr[1], tr[2]);
        const double l20 = mesh.intrinsic_length(tr[2], tr[0]);
        // side opposite corner i
        const std::array<double, 3> opp{l12, l20, l01};
        const double s = 0.5 * (l01 + l12 + l20);
        const double area2 = s * (s - l01) * (s - l12) * (s - l20);
        if (!(area2 > 0.0))
            throw NumericalError("degenerate triangle " + std::to_string(t) + " in stiffness assembly");
        auto ang = flat_angles(opp[0], opp[1], opp[2]);
        for (int c = 0; c < 3; ++c) {
            const int i = tr[(c + 1) % 3], j = tr[(c + 2) % 3];
            const double w = 0.5 / std::tan(ang[c]);
            trips.emplace_back(i, j, -w);
            trips.emplace_back(j, i, -w);
            trips.emplace_back(i, i, w);
            trips.emplace_back(j, j, w);
        }
        auto area = spherical_triangle_area(mesh.vertices[tr[0]].pos, mesh.vertices[tr[1]].pos,
                                            mesh.vertices[tr[2]].pos);
        if (area.degenerate)
            throw NumericalError("degenerate triangle " + std::to_string(t) + " in mass assembly");
        for (int c = 0; c < 3; ++c) ops.mass[tr[c]] += area.area / 3.0;
    }
    ops.stiffness.resize(n, n);
    ops.stiffness.setFromTriplets(trips.begin(), trips.end());
    ops.stiffness.makeCompressed();
    ops.potential = 2.0 * ops.mass;
    return ops;
}

Eigen::VectorXd assemble_conformal_mass(const SurfaceMesh& mesh,
                                        const std::function<double(const UnitVec3&)>& g) {
    Eigen::VectorXd m = Eigen::VectorXd::Zero(mesh.vertex_count());
    for (const auto& tr : mesh.triangles) {
        auto area = spherical_triangle_area(mesh.vertices[tr[0]].pos, mesh.vertices[tr[1]].pos,
                                            mesh.vertices[tr[2]].pos);
        double gc = (g(mesh.vertices[tr[0]].pos) + g(mesh.vertices[tr[1]].pos) +
                     g(mesh.vertices[tr[2]].pos)) / 3.0;
        double scaled = area.area * std::exp(2.0 * gc);
        for (int c = 0; c < 3; ++c) m[tr[c]] += scaled / 3.0;
    }
    return m;
}

// ---------------------------------------------------------------------------
// shift-invert Lanczos for (A, M), M diagonal positive
// ---------------------------------------------------------------------------

namespace {

struct PencilEigs {
    Eigen::VectorXd values;
    Eigen::MatrixXd vectors;
    Eigen::VectorXd residuals;
};

// Smallest eigenpairs of A x = lambda M x via shift-invert Lanczos in the
// M-inner product with full reorthogonalization. Converged pairs are locked
// and deflated between restarts, which is what resolves the multiplicity-5
// spherical-harmonic clusters a single Krylov sequence cannot see.
PencilEigs pencil_lowest(const Eigen::SparseMatrix<double>& A, const Eigen::VectorXd& M,
                         int count, double sigma, const LanczosOptions& opts) {
    const int n = static_cast<int>(A.rows());
    count = std::min(count, n);

    Eigen::SparseMatrix<double> shifted = A;
    Eigen::VectorXd shift_diag = -sigma * M;
    for (int i = 0; i < n; ++i) shifted.coeffRef(i, i) += shift_diag[i];
    shifted.makeCompressed();
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(shifted);
    if (solver.info() != Eigen::Success)
        throw NumericalError("shift-invert factorization failed");

    std::vector<double> locked_vals;
    std::vector<Eigen::VectorXd> locked_vecs; // M-orthonormal
    auto deflate = [&](Eigen::VectorXd& v) {
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& y : locked_vecs) v -= y * v.dot(M.cwiseProduct(y));
    };

    // one restart: lock every converged Ritz pair with lambda < bound,
    // smallest first; returns how many were locked
    auto run_round = [&](int m, int round_seed, double bound) -> int {
        m = std::min(m, n - static_cast<int>(locked_vals.size()));
        if (m < 1) return 0;
        Eigen::MatrixXd Q(n, m);
        std::vector<double> alpha, beta;
        Rng rng(opts.seed + 977 * round_seed);
        Eigen::VectorXd q(n);
        for (int i = 0; i < n; ++i) q[i] = rng.uniform() - 0.5;
        deflate(q);
        double qn = std::sqrt(q.dot(M.cwiseProduct(q)));
        if (qn < 1e-14) return 0;
        Q.col(0) = q / qn;

        int built = 0;
        for (int k = 0; k < m; ++k) {
            Eigen::VectorXd v = solver.solve(M.cwiseProduct(Q.col(k)));
            double a = v.dot(M.cwiseProduct(Q.col(k)));
            alpha.push_back(a);
            built = k + 1;
            deflate(v);
            for (int pass = 0; pass < 2; ++pass)
                for (int i = 0; i <= k; ++i) v -= Q.col(i) * v.dot(M.cwiseProduct(Q.col(i)));
            double b = std::sqrt(std::max(0.0, v.dot(M.cwiseProduct(v))));
            if (b < 1e-13) break; // invariant subspace (w.r.t. the deflated operator) exhausted
            if (k + 1 < m) {
                beta.push_back(b);
                Q.col(k + 1) = v / b;
            }
        }

        Eigen::MatrixXd T = Eigen::MatrixXd::Zero(built, built);
        for (int k = 0; k < built; ++k) {
            T(k, k) = alpha[k];
            if (k + 1 < built) T(k, k + 1) = T(k + 1, k) = beta[k];
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
        Eigen::VectorXd theta = es.eigenvalues(); // 1/(lambda - sigma), largest <-> smallest lambda
        Eigen::MatrixXd S = es.eigenvectors();
        std::vector<int> order(built);
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int a, int b) { return theta[a] > theta[b]; });

        int added = 0;
        for (int i = 0; i < built; ++i) {
            int k = order[i];
            if (theta[k] <= 1e-300) break;
            double lambda = sigma + 1.0 / theta[k];
            if (lambda >= bound) break;
            Eigen::VectorXd x = Q.leftCols(built) * S.col(k);
            deflate(x);
            double xn = std::sqrt(x.dot(M.cwiseProduct(x)));
            if (xn < 1e-8) continue;
            x /= xn;
            Eigen::VectorXd r = A * x - lambda * M.cwiseProduct(x);
            double res = r.norm() / std::max((M.cwiseProduct(x)).norm(), 1e-300);
            if (res > opts.tol * std::max(1.0, std::abs(lambda)) * 1e3) break; // later pairs only get worse
            locked_vals.push_back(lambda);
            locked_vecs.push_back(std::move(x));
            ++added;
        }
        return added;
    };

    auto count_th_value = [&]() {
        std::vector<double> v = locked_vals;
        std::nth_element(v.begin(), v.begin() + (count - 1), v.end());
        return v[count - 1];
    };

    const int rounds = std::max(1, opts.budget_rounds); // locking makes restarts cheap
    int round_seed = 0;
    for (int round = 0; round < rounds; ++round) {
        const int missing = count - static_cast<int>(locked_vals.size());
        if (missing <= 0) break;
        const int m = opts.max_subspace > 0 ? opts.max_subspace : std::max(2 * missing + 30, 60);
        run_round(m, round_seed++, std::numeric_limits<double>::infinity());
    }
    if (static_cast<int>(locked_vals.size()) < count) {
        std::ostringstream os;
        os << "Lanczos failed to converge " << count << " eigenpairs (got " << locked_vals.size()
           << ") within the restart budget";
        throw NumericalError(os.str());
    }

    // guard: a converged lock need not be among the smallest `count`; probe
    // the deflated operator for anything still below the count-th value
    for (int probe = 0; probe < 6; ++probe) {
        double bound = count_th_value() - 1e-12 * std::max(1.0, std::abs(count_th_value()));
        if (run_round(40, round_seed++, bound) == 0) break;
    }

    std::vector<int> order(locked_vals.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return locked_vals[a] < locked_vals[b]; });

    PencilEigs out;
    out.values.resize(count);
    out.vectors.resize(n, count);
    out.residuals.resize(count);
    for (int i = 0; i < count; ++i) {
        int k = order[i];
        out.values[i] = locked_vals[k];
        out.vectors.col(i) = locked_vecs[k];
        Eigen::VectorXd r = A * locked_vecs[k] - locked_vals[k] * M.cwiseProduct(locked_vecs[k]);
        out.residuals[i] = r.norm() / std::max((M.cwiseProduct(locked_vecs[k])).norm(), 1e-300);
    }
    return out;
}

} // namespace

Spectrum low_spectrum(const OperatorTriple& ops, int count, const LanczosOptions& opts) {
    if (count < 1 || count > 30) throw ValidationError("eigenpair count must be in [1, 30]");
    PencilEigs pe = pencil_lowest(ops.stiffness, ops.mass, count, -1.0, opts);
    return {pe.values, pe.vectors, pe.residuals};
}

IndexResult morse_index(const OperatorTriple& ops, double delta) {
    IndexResult res;
    res.delta = delta;
    const int n = ops.n;
    Eigen::SparseMatrix<double> A = ops.stiffness;
    for (int i = 0; i < n; ++i) A.coeffRef(i, i) -= (2.0 - delta) * ops.mass[i];
    A.makeCompressed();

    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(A);
    bool trustworthy = (ldlt.info() == Eigen::Success);
    if (trustworthy) {
        const auto& D = ldlt.vectorD();
        double dscale = D.cwiseAbs().maxCoeff();
        for (int i = 0; i < n; ++i)
            if (!std::isfinite(D[i]) || std::abs(D[i]) < 1e-13 * dscale) trustworthy = false;
        if (trustworthy) {
            // probe: LDL^T must actually reproduce A (no silent breakdown)
            Rng rng(7);
            for (int probe = 0; probe < 2 && trustworthy; ++probe) {
                Eigen::VectorXd x(n);
                for (int i = 0; i < n; ++i) x[i] = rng.uniform() - 0.5;
                Eigen::VectorXd b = A * x;
                Eigen::VectorXd y = ldlt.solve(b);
                if ((y - x).norm() > 1e-6 * x.norm()) trustworthy = false;
            }
        }
        if (trustworthy) {
            int neg = 0;
            for (int i = 0; i < n; ++i)
                if (D[i] < 0) ++neg;
            res.index = neg;
            return res;
        }
    }

    // fallback: count pencil eigenvalues below 2 - delta directly
    res.used_fallback = true;
    int want = 20;
    for (;;) {
        PencilEigs pe = pencil_lowest(ops.stiffness, ops.mass, std::min(want, ops.n), -1.0, {});
        int cnt = 0;
        for (int i = 0; i < pe.values.size(); ++i)
            if (pe.values[i] < 2.0 - delta) ++cnt;
        if (cnt < pe.values.size() || want >= 30) {
            res.index = cnt;
            return res;
        }
        want += 10;
    }
}

int count_negative_pencil(const OperatorTriple& ops, const Eigen::VectorXd& other_mass,
                          double delta) {
    Eigen::SparseMatrix<double> A = ops.stiffness;
    for (int i = 0; i < ops.n; ++i) A.coeffRef(i, i) -= (2.0 - delta) * ops.mass[i];
    A.makeCompressed();
    // A >= -(2-delta) M_phi >= -(2-delta) ratio M', so this sigma stays
    // strictly below the pencil spectrum while hugging its low end
    double ratio = (ops.mass.cwiseQuotient(other_mass)).maxCoeff();
    double sigma = -((2.0 - delta) * ratio + 0.5);
    int want = 12;
    for (;;) {
        PencilEigs pe = pencil_lowest(A, other_mass, std::min(want, ops.n), sigma, {});
        int cnt = 0;
        for (int i = 0; i < pe.values.size(); ++i)
            if (pe.values[i] < 0.0) ++cnt;
        if (cnt < pe.values.size() || want >= 30) return cnt;
        want += 8;
    }
}

KernelCount kernel_multiplicity(const Spectrum& spec, double delta) {
    const int m = static_cast<int>(spec.values.size());
    if (m == 0 || spec.values[m - 1] < 2.0 + delta)
        throw ValidationError("kernel_multiplicity: spectrum not resolved past 2 + delta");
    KernelCount out;
    for (int i = 0; i < m; ++i) {
        double v = spec.values[i];
        if (v >= 2.0 - delta && v <= 2.0 + delta) ++out.count;
        if (v >= 2.0 - 2.0 * delta && v <= 2.0 + 2.0 * delta) ++out.count_widened;
    }
    // anything in the doubled collar but outside the window straddles the cut
    out.widened_warning = (out.count_widened != out.count);
    return out;
}

double kernel_window_delta(int mesh_level) {
    static std::map<int, double> cache;
    static std::mutex mu;
    {
        std::lock_guard<std::mutex> lock(mu);
        auto it = cache.find(mesh_level);
        if (it != cache.end()) return it->second;
    }
    SurfaceMesh sphere = build_calibration_sphere(mesh_level);
    OperatorTriple ops = assemble_operators(sphere);
    Spectrum spec = low_spectrum(ops, 4);
    double err = 0.0;
    for (int i = 1; i <= 3; ++i) err = std::max(err, std::abs(spec.values[i] - 2.0));
    double delta = std::max(3.0 * err, 1e-3);
    std::lock_guard<std::mutex> lock(mu);
    cache[mesh_level] = delta;
    return delta;
}

ParityParts parity_decompose(const SurfaceMesh& mesh, const Eigen::VectorXd& v) {
    auto iota = sheet_involution(mesh);
    ParityParts p;
    p.even.resize(v.size());
    p.odd.resize(v.size());
    for (int i = 0; i < v.size(); ++i) {
        p.even[i] = 0.5 * (v[i] + v[iota[i]]);
        p.odd[i] = v[i] - p.even[i]; // even + odd == v exactly
    }
    return p;
}

SpectralReport spectral_report(const SurfaceMesh& mesh, int eig_count, const LanczosOptions& opts) {
    OperatorTriple ops = assemble_operators(mesh);
    double delta = kernel_window_delta(mesh.config.mesh_level);

    int count = std::min(eig_count, ops.n);
    Spectrum spec = low_spectrum(ops, count, opts);
    while (spec.values[spec.values.size() - 1] < 2.0 + delta && count < 30) {
        count = std::min(30, count + 7);
        spec = low_spectrum(ops, count, opts);
    }

    SpectralReport rep;
    rep.eigenvalues = spec.values;
    rep.eigen_residuals = spec.residuals;
    rep.delta = delta;
    rep.total_mass = ops.total_mass();
    rep.covering_degree = ops.covering_degree;
    IndexResult ir = morse_index(ops, delta);
    rep.index = ir.index;
    rep.index_used_fallback = ir.used_fallback;
    if (spec.values[spec.values.size() - 1] >= 2.0 + delta) {
        KernelCount kc = kernel_multiplicity(spec, delta);
        rep.kernel_multiplicity = kc.count;
        rep.kernel_window_widened = kc.widened_warning;
    } else {
        // spectrum cap reached before 2 + delta: count the window by inertia
        // difference instead (#{lambda < 2+delta} - #{lambda < 2-delta})
        rep.kernel_multiplicity = morse_index(ops, -delta).index - ir.index;
        rep.kernel_window_widened = false;
    }

    // how well the known kernel elements project onto the cluster
    std::vector<int> cluster;
    for (int i = 0; i < spec.values.size(); ++i)
        if (std::abs(spec.values[i] - 2.0) <= delta) cluster.push_back(i);
    if (!cluster.empty()) {
        double worst = 0.0;
        for (int comp = 0; comp < 3; ++comp) {
            Eigen::VectorXd b(ops.n);
            for (int v = 0; v < ops.n; ++v) {
                const auto& pos = mesh.vertices[v].pos;
                b[v] = comp == 0 ? pos.x : (comp == 1 ? pos.y : pos.z);
            }
            double bn = std::sqrt(b.dot(ops.mass.cwiseProduct(b)));
            Eigen::VectorXd proj = Eigen::VectorXd::Zero(ops.n);
            for (int k : cluster) {
                const Eigen::VectorXd& y = spec.vectors.col(k);
                proj += y * y.dot(ops.mass.cwiseProduct(b));
            }
            double res = std::sqrt(std::max(0.0, (b - proj).dot(ops.mass.cwiseProduct(b - proj)))) / bn;
            worst = std::max(worst, res);
        }
        rep.kernel_projection_residual = worst;
    } else {
        rep.kernel_projection_residual = 1.0;
    }
    return rep;
}

std::string export_spectrum_csv(const Spectrum& spec) {
    std::ostringstream os;
    os.precision(17);
    os << "k,lambda,residual\n";
    for (int i = 0; i < spec.values.size(); ++i)
        os << i << "," << spec.values[i] << "," << spec.residuals[i] << "\n";
    return os.str();
}

} // namespace cglab
