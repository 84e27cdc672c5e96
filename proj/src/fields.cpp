#include "cglab/fields.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace cglab {

namespace {

struct SphereDerivs {
    FieldDerivs alpha, beta, gamma;
};

// Chart-1 formulas at zeta; chart 2 reuses them at xi with alpha and gamma
// negated (z = 1/xi swaps the poles of the chart and conjugates the circle
// direction).
SphereDerivs sphere_derivs_at(Complex zeta) {
    const Complex zb = std::conj(zeta);
    const double D = 1.0 + std::norm(zeta);
    const double D2 = D * D;
    SphereDerivs s;
    s.alpha.value = (1.0 - std::norm(zeta)) / D;
    s.alpha.dz = -2.0 * zb / D2;
    s.alpha.dzb = -2.0 * zeta / D2;
    s.alpha.dzdzb = -2.0 * s.alpha.value / D2;

    s.beta.value = 2.0 * zeta.real() / D;
    s.beta.dz = (1.0 - zb * zb) / D2;
    s.beta.dzb = (1.0 - zeta * zeta) / D2;
    s.beta.dzdzb = -2.0 * s.beta.value / D2;

    s.gamma.value = 2.0 * zeta.imag() / D;
    s.gamma.dz = Complex(0, -1) * (1.0 + zb * zb) / D2;
    s.gamma.dzb = Complex(0, 1) * (1.0 + zeta * zeta) / D2;
    s.gamma.dzdzb = -2.0 * s.gamma.value / D2;
    return s;
}

FieldDerivs negate(const FieldDerivs& f) { return {-f.value, -f.dz, -f.dzb, -f.dzdzb}; }

PointFrame ramification_frame(const BranchConfig& config, int chart, Complex coord) {
    // uniformizer t with coord = coord0 + t^2, w_chart = t * s * (1 + O(t^2))
    PointFrame fr;
    fr.curve_points = config.points;
    fr.at_ramification = true;
    fr.chart = 0;
    fr.z = Complex{0, 0};
    fr.w = Complex{0, 0};
    Complex s2 = curve_poly_derivative(config, chart, coord);
    fr.uniformizer_s = std::sqrt(s2);
    if (std::abs(fr.uniformizer_s) < 1e-12)
        throw NumericalError("degenerate ramification point (repeated root?)");
    const double D = 1.0 + std::norm(coord);
    fr.rho = 8.0 * D * D / std::norm(fr.uniformizer_s);
    fr.kappa = 0.0;
    fr.grad_phi_sq = 0.0;

    SphereDerivs sd = sphere_derivs_at(coord);
    if (chart == 2) {
        sd.alpha = negate(sd.alpha);
        sd.gamma = negate(sd.gamma);
    }
    auto freeze = [](FieldDerivs f) { return FieldDerivs{f.value, {}, {}, 0.0}; };
    fr.alpha = freeze(sd.alpha);
    fr.beta = freeze(sd.beta);
    fr.gamma = freeze(sd.gamma);
    fr.sphere = {fr.alpha.value, fr.beta.value, fr.gamma.value};
    fr.phi = (chart == 1) ? StereoCoord(coord)
                          : (std::abs(coord) < 1e-300 ? StereoCoord::infinity() : StereoCoord(1.0 / coord));
    fr.d_kappa = fr.d_rho = Complex{0, 0};
    fr.z = coord; // chart-point of the branch value; fr.chart == 0 flags the t-frame
    fr.uniformizer_source_chart = chart;
    return fr;
}

} // namespace

PointFrame evaluate_frame(const BranchConfig& config, int chart, Complex z, Complex w) {
    if (chart != 1 && chart != 2) throw ValidationError("chart must be 1 or 2");
    const Complex R = curve_poly(config, chart, z);
    const double scale = std::max({1.0, std::abs(R), std::norm(w)});
    if (std::abs(w * w - R) > 1e-8 * scale)
        throw ValidationError("point does not satisfy the curve equation in its chart");

    if (std::abs(w) < 1e-12 * std::sqrt(scale)) return ramification_frame(config, chart, z);

    PointFrame fr;
    fr.curve_points = config.points;
    fr.chart = chart;
    fr.z = z;
    fr.w = w;
    const double D = 1.0 + std::norm(z);
    fr.rho = 2.0 * D * D / std::norm(w);
    fr.kappa = -std::norm(w) / (D * D * D * D);
    fr.grad_phi_sq = -2.0 * fr.kappa;

    const Complex Rp = curve_poly_derivative(config, chart, z);
    const Complex zb = std::conj(z);
    fr.d_kappa = fr.kappa * (Rp / (2.0 * R) - 4.0 * zb / D);
    fr.d_rho = fr.rho * (2.0 * zb / D - Rp / (2.0 * R));

    SphereDerivs sd = sphere_derivs_at(z);
    if (chart == 2) {
        sd.alpha = negate(sd.alpha);
        sd.gamma = negate(sd.gamma);
    }
    fr.alpha = sd.alpha;
    fr.beta = sd.beta;
    fr.gamma = sd.gamma;
    fr.sphere = {fr.alpha.value, fr.beta.value, fr.gamma.value};
    fr.phi = (chart == 1) ? StereoCoord(z)
                          : (std::abs(z) < 1e-300 ? StereoCoord::infinity() : StereoCoord(1.0 / z));
    return fr;
}

PointFrame evaluate_frame(const SurfaceMesh& mesh, int vertex) {
    const auto& cv = mesh.vertices[vertex];
    if (cv.is_ramification) {
        return ramification_frame(mesh.config, cv.chart, cv.coord);
    }
    return evaluate_frame(mesh.config, cv.chart, cv.coord, cv.w);
}

WeierstrassForms weierstrass_forms(const PointFrame& frame) {
    WeierstrassForms out;
    if (frame.at_ramification) {
        // limit 2 f_j(p) / s against dt in the uniformizer
        const int src_chart = frame.uniformizer_source_chart;
        const Complex p = frame.z;
        std::array<Complex, 3> f;
        if (src_chart == 1)
            f = {2.0 * p, p * p - 1.0, Complex(0, -1) * (1.0 + p * p)};
        else
            f = {-2.0 * p, p * p - 1.0, Complex(0, 1) * (1.0 + p * p)};
        for (int j = 0; j < 3; ++j) out.mu[j] = 2.0 * f[j] / frame.uniformizer_s;
        out.chart = 0;
        return out;
    }
    if (std::abs(frame.w) == 0.0) throw NumericalError("weierstrass_forms: w = 0 off ramification");
    const Complex z = frame.z;
    if (frame.chart == 1) {
        out.mu = {2.0 * z / frame.w, (z * z - 1.0) / frame.w, Complex(0, -1) * (1.0 + z * z) / frame.w};
    } else {
        out.mu = {-2.0 * z / frame.w, (z * z - 1.0) / frame.w, Complex(0, 1) * (1.0 + z * z) / frame.w};
    }
    out.chart = frame.chart;
    return out;
}

double kernel_residual_pointwise(const PointFrame& frame, const FieldDerivs& v) {
    if (frame.at_ramification)
        throw ValidationError("kernel residual needs a smooth point (w != 0)");
    return std::abs(frame.laplacian(v) - 2.0 * frame.kappa * v.value);
}

double kernel_residual_pointwise(const PointFrame& frame, KernelField which) {
    switch (which) {
        case KernelField::Alpha: return kernel_residual_pointwise(frame, frame.alpha);
        case KernelField::Beta: return kernel_residual_pointwise(frame, frame.beta);
        case KernelField::Gamma: return kernel_residual_pointwise(frame, frame.gamma);
        case KernelField::One: return kernel_residual_pointwise(frame, FieldDerivs{1.0, {}, {}, 0.0});
    }
    throw ValidationError("unknown kernel field");
}

// ---------------------------------------------------------------------------
// periods
// ---------------------------------------------------------------------------

namespace {

// Gauss-Legendre nodes/weights on [0, 1] by Newton iteration; cached.
const std::pair<std::vector<double>, std::vector<double>>& gauss_legendre(int n) {
    static std::map<int, std::pair<std::vector<double>, std::vector<double>>> cache;
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    std::vector<double> x(n), w(n);
    for (int i = 0; i < n; ++i) {
        double t = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = t;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            double dp = n * (t * p1 - p0) / (t * t - 1.0);
            double step = p1 / dp;
            t -= step;
            if (std::abs(step) < 1e-15) break;
        }
        double p0 = 1.0, p1 = t;
        for (int k = 2; k <= n; ++k) {
            double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        double dp = n * (t * p1 - p0) / (t * t - 1.0);
        x[i] = 0.5 * (1.0 - t); // descending t -> ascending x
        w[i] = 1.0 / ((1.0 - t * t) * dp * dp);
    }
    return cache.emplace(n, std::make_pair(std::move(x), std::move(w))).first->second;
}

Complex chart_integrand(PeriodForm form, int chart, Complex t) {
    if (chart == 1) {
        switch (form) {
            case PeriodForm::Mu1: return 2.0 * t;
            case PeriodForm::Mu2: return t * t - 1.0;
            case PeriodForm::Mu3: return Complex(0, -1) * (1.0 + t * t);
            case PeriodForm::DzOverW: return 1.0;
            case PeriodForm::ZDzOverW: return t;
            case PeriodForm::Z2DzOverW: return t * t;
        }
    } else {
        switch (form) {
            case PeriodForm::Mu1: return -2.0 * t;
            case PeriodForm::Mu2: return t * t - 1.0;
            case PeriodForm::Mu3: return Complex(0, 1) * (1.0 + t * t);
            case PeriodForm::DzOverW: return -t * t;
            case PeriodForm::ZDzOverW: return -t;
            case PeriodForm::Z2DzOverW: return -1.0;
        }
    }
    throw ValidationError("unknown period form");
}

Complex sqrt_ratio_product(const BranchConfig& cfg, int chart, Complex from, Complex to) {
    Complex f{1.0, 0.0};
    for (const auto& p : cfg.points) {
        Complex num = (chart == 1) ? (to - p) : (1.0 - p * to);
        Complex den = (chart == 1) ? (from - p) : (1.0 - p * from);
        f *= std::sqrt(num / den);
    }
    return f;
}

Complex convert_w_chart(Complex w, Complex coord_from, int chart_from, int chart_to) {
    if (chart_from == chart_to) return w;
    Complex z = (chart_from == 1) ? coord_from : 1.0 / coord_from;
    Complex z4 = z * z * z * z;
    return (chart_from == 1) ? w / z4 : w * z4;
}

} // namespace

Complex period_integral(const SurfaceMesh& mesh, const HomologyLoop& loop, PeriodForm form) {
    const int n = static_cast<int>(loop.vertices.size());
    if (n < 3) throw ValidationError("period loop must have at least 3 vertices");
    for (int i = 0; i < n; ++i)
        if (mesh.edge_between(loop.vertices[i], loop.vertices[(i + 1) % n]) < 0)
            throw ValidationError("period loop is not closed along mesh edges");

    Complex total{0, 0};
    for (int i = 0; i < n; ++i) {
        const auto& U = mesh.vertices[loop.vertices[i]];
        const auto& V = mesh.vertices[loop.vertices[(i + 1) % n]];
        if (U.is_ramification || V.is_ramification)
            throw ValidationError("period loop passes through a ramification vertex");

        const double zu = (U.chart == 1) ? std::abs(U.coord) : 1.0 / std::abs(U.coord);
        const double zv = (V.chart == 1) ? std::abs(V.coord) : 1.0 / std::abs(V.coord);
        const int cc = (std::max(zu, zv) <= 3.0) ? 1 : 2;
        const Complex cu = (U.chart == cc) ? U.coord : 1.0 / U.coord;
        const Complex cv = (V.chart == cc) ? V.coord : 1.0 / V.coord;
        const Complex wu = convert_w_chart(U.w, U.coord, U.chart, cc);
        const Complex wv = convert_w_chart(V.w, V.coord, V.chart, cc);

        auto quadrature = [&](int nodes) {
            const auto& [xs, ws] = gauss_legendre(nodes);
            Complex acc{0, 0};
            for (int q = 0; q < nodes; ++q) {
                Complex t = cu + xs[q] * (cv - cu);
                Complex wt = wu * sqrt_ratio_product(mesh.config, cc, cu, t);
                acc += ws[q] * chart_integrand(form, cc, t) * (cv - cu) / wt;
            }
            return acc;
        };

        // continuation sanity: landing value must match the stored sheet
        Complex landed = wu * sqrt_ratio_product(mesh.config, cc, cu, cv);
        if (std::abs(landed - wv) > 1e-6 * std::abs(wv))
            throw NumericalError("period: sheet continuation mismatch along an edge");

        Complex prev = quadrature(8);
        for (int nodes = 16; nodes <= 512; nodes *= 2) {
            Complex next = quadrature(nodes);
            if (std::abs(next - prev) <= 1e-8 * std::max(1.0, std::abs(next))) {
                prev = next;
                break;
            }
            prev = next;
            if (nodes == 512)
                throw NumericalError("period quadrature failed to converge on an edge");
        }
        total += prev;
    }
    return total;
}

std::string export_fields_csv(const SurfaceMesh& mesh, const std::vector<double>* u,
                              const std::vector<double>* f) {
    std::ostringstream os;
    os.precision(17);
    os << "index,alpha,beta,gamma,kappa,grad_phi_sq";
    if (u) os << ",u";
    if (f) os << ",f";
    os << "\n";
    for (int v = 0; v < mesh.vertex_count(); ++v) {
        PointFrame fr = evaluate_frame(mesh, v);
        os << v << "," << fr.alpha.value << "," << fr.beta.value << "," << fr.gamma.value << ","
           << fr.kappa << "," << fr.grad_phi_sq;
        if (u) os << "," << (*u)[v];
        if (f) os << "," << (*f)[v];
        os << "\n";
    }
    return os.str();
}

} // namespace cglab
