#pragma once

// Finite elements for the pencil of L_phi = -Delta - |grad phi|^2 on the
// cover: intrinsic cotan stiffness from pullback edge lengths, lumped mass
// in the singular metric omega_phi = phi^* omega_FS (potential = 2 * mass),
// shift-invert Lanczos for the low spectrum, the Morse index by matrix
// inertia, kernel multiplicity, and the involution parity split.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <functional>
#include <string>
#include <vector>

#include "cglab/surface.hpp"

namespace cglab {

struct OperatorTriple {
    Eigen::SparseMatrix<double> stiffness; // K, PSD, K * 1 = 0
    Eigen::VectorXd mass;                  // lumped omega_phi areas; sum = 4*pi*deg
    Eigen::VectorXd potential;             // V = 2 * mass, exactly
    int n = 0;
    int covering_degree = 1;
    double total_mass() const { return mass.sum(); }
};

// K by flattening each triangle from its three intrinsic lengths; M by the
// spherical excess of the underlying base triangle (once per covering
// triangle). Degenerate triangles raise NumericalError naming the triangle.
OperatorTriple assemble_operators(const SurfaceMesh& mesh);

// Lumped mass of the conformally rescaled metric e^{2g} omega_phi; used to
// exhibit the Sylvester invariance of the index.
Eigen::VectorXd assemble_conformal_mass(const SurfaceMesh& mesh,
                                        const std::function<double(const UnitVec3&)>& g);

struct Spectrum {
    Eigen::VectorXd values;    // ascending pencil eigenvalues of (K, M)
    Eigen::MatrixXd vectors;   // M-orthonormal columns
    Eigen::VectorXd residuals; // ||K x - lambda M x|| / ||M x||
};

struct LanczosOptions {
    int max_subspace = 0;   // 0: automatic
    int budget_rounds = 8;  // deflated restarts before giving up
    double tol = 1e-9;
    std::uint64_t seed = 0x5eed5u;
};

// Smallest `count` eigenpairs of K x = lambda M x by shift-invert Lanczos at
// sigma = -1 (K + M is SPD) with full reorthogonalization. Throws
// NumericalError with residual norms if the budget is exhausted.
Spectrum low_spectrum(const OperatorTriple& ops, int count, const LanczosOptions& opts = {});

// Negative count of K - (2 - delta) M, i.e. #{pencil eigenvalues < 2-delta}:
// sparse LDLT inertia, falling back to eigenvalue counting when the
// factorization is untrustworthy.
struct IndexResult {
    int index = 0;
    bool used_fallback = false;
    double delta = 0.0;
};
IndexResult morse_index(const OperatorTriple& ops, double delta);

// Same count read off a generalized pencil (K - (2-delta) M_phi, M') for an
// arbitrary positive mass M' (Sylvester's law makes it M'-independent).
int count_negative_pencil(const OperatorTriple& ops, const Eigen::VectorXd& other_mass,
                          double delta);

struct KernelCount {
    int count = 0;
    bool widened_warning = false; // eigenvalues straddle the window boundary
    int count_widened = 0;
};

// #eigenvalues in [2-delta, 2+delta]; requires the spectrum to reach past
// 2+delta.
KernelCount kernel_multiplicity(const Spectrum& spec, double delta);

// delta = max(3 * sphere-calibration error of eigenvalue 2 at this level,
// 1e-3); the calibration solve is cached per level.
double kernel_window_delta(int mesh_level);

struct ParityParts {
    Eigen::VectorXd even, odd;
};
ParityParts parity_decompose(const SurfaceMesh& mesh, const Eigen::VectorXd& v);

struct SpectralReport {
    Eigen::VectorXd eigenvalues;
    Eigen::VectorXd eigen_residuals;
    int index = 0;
    bool index_used_fallback = false;
    int kernel_multiplicity = 0;
    bool kernel_window_widened = false;
    double delta = 0.0;
    double total_mass = 0.0;
    double kernel_projection_residual = 0.0; // alpha/beta/gamma against the cluster
    int covering_degree = 1;
};

// Full spectral pass: assemble, calibrate delta, resolve the spectrum past
// 2 + delta (growing the eigenpair count up to 30), index and kernel count.
SpectralReport spectral_report(const SurfaceMesh& mesh, int eig_count = 16,
                               const LanczosOptions& opts = {});

std::string export_spectrum_csv(const Spectrum& spec);

} // namespace cglab
