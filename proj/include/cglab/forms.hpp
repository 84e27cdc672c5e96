#pragma once

// Pointwise exterior algebra on the six-dimensional tangent space of the
// twisted product X = Sigma x T^4: the flat hyperkahler triple, the twisted
// complex structure J0 = j ⊕ (alpha I + beta J + gamma K), the holomorphic
// (3,0)-form Omega, the ansatz metrics omega_0 and omega_f, (p,q) type
// projection through the J0 eigenspaces, and numerical verification of the
// algebraic and differential identities of the reduction.
//
// Basis order: (dx, dy, e0, e1, e2, e3), with z = x + iy the chart
// coordinate of the Sigma factor.

#include <Eigen/Dense>
#include <array>
#include <string>
#include <vector>

#include "cglab/fields.hpp"

namespace cglab {

// Complex-coefficient exterior form over R^6, coefficients indexed by the
// 64 basis bitmasks; degree is tracked for sanity checks.
class Form {
public:
    Form() = default;
    explicit Form(int degree) : deg_(degree) {}
    static Form scalar(Complex c);
    static Form basis1(int i); // dx^i

    int degree() const { return deg_; }
    Complex coeff(unsigned mask) const { return c_[mask]; }
    void set_coeff(unsigned mask, Complex v);

    Form wedge(const Form& o) const;
    Form conjugate() const;
    Form operator+(const Form& o) const;
    Form operator-(const Form& o) const;
    Form operator*(Complex s) const;
    Form& operator+=(const Form& o);

    double sup_norm() const;
    bool is_zero(double tol) const;

    // evaluation on complex vectors (multilinear, alternating)
    Complex eval(const std::vector<Eigen::Matrix<Complex, 6, 1>>& vectors) const;

    // pullback under a linear map of the tangent space:
    // (L* form)(v1..vk) = form(L v1, .., L vk)
    Form pullback(const Eigen::Matrix<double, 6, 6>& L) const;

private:
    int deg_ = 0;
    std::array<Complex, 64> c_{};
};

struct HyperkahlerTriple {
    Form omega_I, omega_J, omega_K, vol; // constant forms on the T^4 factor
    Eigen::Matrix4d I, J, K;             // IJK = -id
};

// The standard flat quaternionic model on R^4.
const HyperkahlerTriple& hyperkahler_basis();

struct AnsatzFrame {
    PointFrame pt;
    double f = 0.0;
    Complex df{};                  // d f / dz at the point (dzbar part = conj)
    double ef = 1.0;               // e^f
    Eigen::Matrix<double, 6, 6> J0; // twisted complex structure on T(Sigma x M)
    Form omega_hat;                // rho * i dz^dzbar = 2 rho dx^dy
    Form omega_prime;              // alpha w_I + beta w_J + gamma w_K
    Form omega_0;                  // omega_hat + omega_prime
    Form omega_f;                  // e^{2f} omega_hat + e^f omega_prime
    Form Omega;                    // mu1^w_I + mu2^w_J + mu3^w_K
    Form vol_M;
    std::array<Complex, 3> mu;     // Weierstrass coefficients in the chart
};

// Builds every structure at the point. Ramification frames come through the
// uniformizer limit (Omega stays nowhere vanishing).
AnsatzFrame assemble_point_structures(const PointFrame& frame, double f, Complex df);

// ||Omega||_omega from ||Omega||^2 omega^3 / 3! = i Omega ^ conj(Omega);
// throws NumericalError for degenerate omega.
double norm_omega(const Form& Omega, const Form& omega);

// (p, q) projection of a form w.r.t. J0 at the frame's point.
Form type_project(const AnsatzFrame& frame, const Form& form, int p, int q);

struct IdentityResidual {
    std::string name;
    double residual; // sup-norm, normalized by the identity's own scale
};

// J0 pushforward on omega_I/J/K, omega_0^3 = 6 omega_hat ^ vol,
// i Omega ^ conj(Omega) = 2 omega_hat ^ vol, the omega_f^2 expansion,
// quaternion relations, omega'^2 = 2 vol, Omega ^ Omega = 0.
std::vector<IdentityResidual> verify_algebraic_identities(const AnsatzFrame& frame);

// d omega' and its (2,1)/(1,2) split, i d del dbar omega' = -kappa
// omega_hat ^ omega', d(omega_0^2) = 0, d(||Omega|| omega_f^2) = 0, and
// alpha dbar alpha + beta dbar beta + gamma dbar gamma = 0. Needs a smooth
// point (exact first/second derivatives in the frame).
std::vector<IdentityResidual> verify_differential_identities(const AnsatzFrame& frame);

double max_residual(const std::vector<IdentityResidual>& rs);

} // namespace cglab
