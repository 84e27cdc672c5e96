#pragma once

// Closed-form evaluation at curve points: the sphere map (alpha, beta,
// gamma) with exact first and second chart derivatives, the metric density
// rho of i(mu1^mu1b + mu2^mu2b + mu3^mu3b), the Gauss curvature kappa, the
// Weierstrass forms, pointwise kernel residuals of -Delta + 2 kappa, and
// period integrals of the holomorphic forms along homology loops.

#include <array>
#include <complex>

#include "cglab/errors.hpp"
#include "cglab/surface.hpp"

namespace cglab {

// Value together with exact chart derivatives: dz = d/dz, dzb = d/dzbar,
// dzdzb = d^2/(dz dzbar). Real-valued fields keep dzb = conj(dz).
struct FieldDerivs {
    double value = 0.0;
    Complex dz{};
    Complex dzb{};
    double dzdzb = 0.0;
};

struct PointFrame {
    int chart = 1;              // 1: z, w; 2: xi = 1/z, wt = w/z^4 (uniformizer frames use chart = 0)
    Complex z{};                // chart coordinate
    Complex w{};                // curve coordinate in the chart trivialization
    StereoCoord phi;            // the map to CP^1
    UnitVec3 sphere;            // (alpha, beta, gamma)
    FieldDerivs alpha, beta, gamma;
    double rho = 0.0;           // density of omega-hat against i dz^dzbar
    double kappa = 0.0;         // = -|w|^2 / (1+|z|^2)^4, <= 0
    double grad_phi_sq = 0.0;   // = -2 kappa
    Complex d_kappa{};          // d kappa / dz
    Complex d_rho{};            // d rho / dz
    bool at_ramification = false;
    // At a ramification vertex the dz-trivialization of rho diverges; the
    // frame switches to the uniformizer t (z = p + t^2, w = t*s + O(t^3))
    // where rho stays finite and all field derivatives vanish.
    Complex uniformizer_s{};               // s = sqrt(R'(p)); 0 off ramification
    int uniformizer_source_chart = 0;      // chart the uniformizer expansion was set up in
    std::array<Complex, 8> curve_points{}; // branch points, for downstream form assembly

    double laplacian(const FieldDerivs& v) const { return 2.0 * v.dzdzb / rho; }
};

struct WeierstrassForms {
    std::array<Complex, 3> mu{}; // coefficients against d(chart coordinate)
    int chart = 1;
};

// Frame at a stored mesh vertex.
PointFrame evaluate_frame(const SurfaceMesh& mesh, int vertex);

// Frame at an arbitrary chart point; (z, w) must satisfy the curve equation
// to 1e-8 (relative).
PointFrame evaluate_frame(const BranchConfig& config, int chart, Complex z, Complex w);

// (2z, z^2-1, -i(1+z^2))/w in chart 1; (-2xi, xi^2-1, i(1+xi^2))/wt in
// chart 2; the uniformizer limit 2*phi_j(p)/s at ramification points.
WeierstrassForms weierstrass_forms(const PointFrame& frame);

enum class KernelField { Alpha, Beta, Gamma, One };

// |Delta v - 2 kappa v| from the exact second derivatives; alpha, beta,
// gamma sit in the kernel, constants do not.
double kernel_residual_pointwise(const PointFrame& frame, KernelField which);
double kernel_residual_pointwise(const PointFrame& frame, const FieldDerivs& v);

enum class PeriodForm {
    Mu1,        // 2z dz / w
    Mu2,        // (z^2 - 1) dz / w
    Mu3,        // -i (1 + z^2) dz / w
    DzOverW,    // dz / w        = -(mu2 - i mu3)/2
    ZDzOverW,   // z dz / w      =  mu1 / 2
    Z2DzOverW,  // z^2 dz / w    =  (mu2 + i mu3)/2
};

// Composite Gauss-Legendre along the loop's edge path with sheet-consistent
// w (per-edge analytic continuation from the stored endpoint values); node
// count doubles until successive values agree to 1e-8.
Complex period_integral(const SurfaceMesh& mesh, const HomologyLoop& loop, PeriodForm form);
inline Complex period_integral(const SurfaceMesh& mesh, const HomologyLoop& loop, int j) {
    const PeriodForm forms[3] = {PeriodForm::Mu1, PeriodForm::Mu2, PeriodForm::Mu3};
    if (j < 1 || j > 3) throw ValidationError("period index j must be 1..3");
    return period_integral(mesh, loop, forms[j - 1]);
}

// Per-vertex CSV (alpha, beta, gamma, kappa, |grad phi|^2 and, when
// supplied, u and f).
std::string export_fields_csv(const SurfaceMesh& mesh, const std::vector<double>* u = nullptr,
                              const std::vector<double>* f = nullptr);

} // namespace cglab
