#include "cglab/forms.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "cglab/errors.hpp"

namespace cglab {

namespace {

int wedge_sign(unsigned a, unsigned b) {
    // parity of #{(i in a, j in b) : i > j}
    int inv = 0;
    for (unsigned j = 0; j < 6; ++j)
        if (b & (1u << j)) inv += std::popcount(a >> (j + 1));
    return (inv & 1) ? -1 : 1;
}

const std::vector<unsigned>& masks_of_degree(int k) {
    static std::array<std::vector<unsigned>, 7> table = [] {
        std::array<std::vector<unsigned>, 7> t;
        for (unsigned m = 0; m < 64; ++m) t[std::popcount(m)].push_back(m);
        return t;
    }();
    return table[k];
}

} // namespace

Form Form::scalar(Complex c) {
    Form f(0);
    f.c_[0] = c;
    return f;
}

Form Form::basis1(int i) {
    Form f(1);
    f.c_[1u << i] = 1.0;
    return f;
}

void Form::set_coeff(unsigned mask, Complex v) {
    c_[mask] = v;
    deg_ = std::popcount(mask);
}

Form Form::wedge(const Form& o) const {
    Form out(std::min(deg_ + o.deg_, 6));
    if (deg_ + o.deg_ > 6) return out; // vanishes identically
    for (unsigned a : masks_of_degree(deg_)) {
        if (c_[a] == Complex{}) continue;
        for (unsigned b : masks_of_degree(o.deg_)) {
            if (o.c_[b] == Complex{} || (a & b)) continue;
            out.c_[a | b] += static_cast<double>(wedge_sign(a, b)) * c_[a] * o.c_[b];
        }
    }
    return out;
}

Form Form::conjugate() const {
    Form out(deg_);
    for (unsigned m = 0; m < 64; ++m) out.c_[m] = std::conj(c_[m]);
    return out;
}

Form Form::operator+(const Form& o) const {
    Form out = *this;
    out += o;
    return out;
}

Form& Form::operator+=(const Form& o) {
    if (deg_ != o.deg_) {
        if (is_zero(0.0)) deg_ = o.deg_;
        else if (!o.is_zero(0.0))
            throw NumericalError("adding forms of different degree");
    }
    for (unsigned m = 0; m < 64; ++m) c_[m] += o.c_[m];
    return *this;
}

Form Form::operator-(const Form& o) const { return *this + o * Complex(-1.0, 0.0); }

Form Form::operator*(Complex s) const {
    Form out(deg_);
    for (unsigned m = 0; m < 64; ++m) out.c_[m] = c_[m] * s;
    return out;
}

double Form::sup_norm() const {
    double s = 0;
    for (const auto& v : c_) s = std::max(s, std::abs(v));
    return s;
}

bool Form::is_zero(double tol) const { return sup_norm() <= tol; }

Complex Form::eval(const std::vector<Eigen::Matrix<Complex, 6, 1>>& vectors) const {
    const int k = deg_;
    if (static_cast<int>(vectors.size()) != k)
        throw ValidationError("form evaluation arity mismatch");
    if (k == 0) return c_[0];
    Complex total{};
    Eigen::MatrixXcd Mtx(k, k);
    for (unsigned m : masks_of_degree(k)) {
        if (c_[m] == Complex{}) continue;
        int row = 0;
        for (unsigned bit = 0; bit < 6; ++bit)
            if (m & (1u << bit)) {
                for (int col = 0; col < k; ++col) Mtx(row, col) = vectors[col][bit];
                ++row;
            }
        total += c_[m] * Mtx.determinant();
    }
    return total;
}

Form Form::pullback(const Eigen::Matrix<double, 6, 6>& L) const {
    Form out(deg_);
    if (deg_ == 0) return *this;
    std::vector<Eigen::Matrix<Complex, 6, 1>> cols(deg_);
    for (unsigned m : masks_of_degree(deg_)) {
        int col = 0;
        for (unsigned bit = 0; bit < 6; ++bit)
            if (m & (1u << bit)) cols[col++] = L.col(bit).cast<Complex>();
        out.c_[m] = eval(cols);
    }
    return out;
}

// ---------------------------------------------------------------------------
// hyperkahler model
// ---------------------------------------------------------------------------

const HyperkahlerTriple& hyperkahler_basis() {
    static const HyperkahlerTriple triple = [] {
        HyperkahlerTriple t;
        t.I << 0, -1, 0, 0, 1, 0, 0, 0, 0, 0, 0, -1, 0, 0, 1, 0;
        t.J << 0, 0, -1, 0, 0, 0, 0, 1, 1, 0, 0, 0, 0, -1, 0, 0;
        t.K << 0, 0, 0, -1, 0, 0, -1, 0, 0, 1, 0, 0, 1, 0, 0, 0;
        auto b2 = [](int i, int j) { return Form::basis1(i + 2).wedge(Form::basis1(j + 2)); };
        t.omega_I = b2(0, 1) + b2(2, 3);
        t.omega_J = b2(0, 2) - b2(1, 3);
        t.omega_K = b2(0, 3) + b2(1, 2);
        t.vol = b2(0, 1).wedge(b2(2, 3));
        return t;
    }();
    return triple;
}

// ---------------------------------------------------------------------------
// frame assembly
// ---------------------------------------------------------------------------

namespace {

Form dz_form() { return Form::basis1(0) + Form::basis1(1) * Complex(0, 1); }
Form dzb_form() { return Form::basis1(0) + Form::basis1(1) * Complex(0, -1); }

Eigen::Matrix4d blend(const AnsatzFrame& fr) {
    const auto& hk = hyperkahler_basis();
    return fr.pt.alpha.value * hk.I + fr.pt.beta.value * hk.J + fr.pt.gamma.value * hk.K;
}

} // namespace

AnsatzFrame assemble_point_structures(const PointFrame& frame, double f, Complex df) {
    AnsatzFrame fr;
    fr.pt = frame;
    fr.f = f;
    fr.df = df;
    fr.ef = std::exp(f);

    const auto& hk = hyperkahler_basis();
    const Form dz = dz_form(), dzb = dzb_form();

    fr.vol_M = hk.vol;
    fr.omega_hat = dz.wedge(dzb) * Complex(0, frame.rho);
    fr.omega_prime = hk.omega_I * Complex(frame.alpha.value) + hk.omega_J * Complex(frame.beta.value) +
                     hk.omega_K * Complex(frame.gamma.value);
    fr.omega_0 = fr.omega_hat + fr.omega_prime;
    fr.omega_f = fr.omega_hat * Complex(fr.ef * fr.ef) + fr.omega_prime * Complex(fr.ef);

    WeierstrassForms wf = weierstrass_forms(frame);
    fr.mu = wf.mu;
    fr.Omega = dz.wedge(hk.omega_I * wf.mu[0] + hk.omega_J * wf.mu[1] + hk.omega_K * wf.mu[2]);

    fr.J0.setZero();
    fr.J0(1, 0) = 1.0;
    fr.J0(0, 1) = -1.0;
    Eigen::Matrix4d N = frame.alpha.value * hk.I + frame.beta.value * hk.J + frame.gamma.value * hk.K;
    fr.J0.block<4, 4>(2, 2) = N;
    return fr;
}

double norm_omega(const Form& Omega, const Form& omega) {
    Form top = Omega.wedge(Omega.conjugate()) * Complex(0, 1);
    Form bottom = omega.wedge(omega).wedge(omega);
    Complex t = top.coeff(63);
    Complex b = bottom.coeff(63) / 6.0;
    if (std::abs(b) < 1e-14 * std::max(1.0, std::abs(t)))
        throw NumericalError("norm_omega: degenerate metric form");
    Complex ratio = t / b;
    if (std::abs(ratio.imag()) > 1e-9 * std::max(1.0, std::abs(ratio)))
        throw NumericalError("norm_omega: norm ratio is not real");
    return std::sqrt(std::max(0.0, ratio.real()));
}

// ---------------------------------------------------------------------------
// type projection
// ---------------------------------------------------------------------------

namespace {

struct ComplexFrame {
    Eigen::Matrix<Complex, 6, 6> F;    // columns: (1,0),(0,1) alternating
    Eigen::Matrix<Complex, 6, 6> Finv; // rows: dual coframe
    std::array<Form, 6> theta;         // coframe 1-forms
};

ComplexFrame complex_frame(const AnsatzFrame& fr) {
    ComplexFrame cf;
    Eigen::Matrix<double, 6, 6> J0 = fr.J0;
    auto holo = [&](const Eigen::Matrix<double, 6, 1>& v) {
        Eigen::Matrix<Complex, 6, 1> out = v.cast<Complex>();
        out -= Complex(0, 1) * (J0 * v).cast<Complex>();
        return Eigen::Matrix<Complex, 6, 1>(0.5 * out);
    };
    Eigen::Matrix<double, 6, 1> ex = Eigen::Matrix<double, 6, 1>::Unit(0);
    Eigen::Matrix<double, 6, 1> E0 = Eigen::Matrix<double, 6, 1>::Unit(2);
    // second fiber direction: the real coordinate least captured by span{E0, N E0}
    Eigen::Matrix<double, 6, 1> NE0 = J0 * E0;
    Eigen::Matrix<double, 6, 2> S;
    S.col(0) = E0;
    S.col(1) = NE0;
    int pick = 3;
    double best = -1;
    for (int b = 3; b <= 5; ++b) {
        Eigen::Matrix<double, 6, 1> Eb = Eigen::Matrix<double, 6, 1>::Unit(b);
        Eigen::Matrix<double, 6, 1> res = Eb - S * (S.transpose() * S).inverse() * (S.transpose() * Eb);
        if (res.norm() > best) {
            best = res.norm();
            pick = b;
        }
    }
    Eigen::Matrix<double, 6, 1> Eb = Eigen::Matrix<double, 6, 1>::Unit(pick);

    cf.F.col(0) = holo(ex);
    cf.F.col(1) = cf.F.col(0).conjugate();
    cf.F.col(2) = holo(E0);
    cf.F.col(3) = cf.F.col(2).conjugate();
    cf.F.col(4) = holo(Eb);
    cf.F.col(5) = cf.F.col(4).conjugate();
    cf.Finv = cf.F.inverse();
    for (int i = 0; i < 6; ++i) {
        Form th(1);
        for (int a = 0; a < 6; ++a) th.set_coeff(1u << a, cf.Finv(i, a));
        cf.theta[i] = th;
    }
    return cf;
}

} // namespace

Form type_project(const AnsatzFrame& frame, const Form& form, int p, int q) {
    const int k = form.degree();
    if (p + q != k) return Form(k);
    ComplexFrame cf = complex_frame(frame);

    Form out(k);
    std::vector<Eigen::Matrix<Complex, 6, 1>> vecs(k);
    for (unsigned m : masks_of_degree(k)) {
        int holo_count = 0, col = 0;
        for (unsigned bit = 0; bit < 6; ++bit)
            if (m & (1u << bit)) {
                vecs[col++] = cf.F.col(bit);
                if (bit % 2 == 0) ++holo_count;
            }
        if (holo_count != p) continue;
        Complex coeff = form.eval(vecs);
        if (coeff == Complex{}) continue;
        // rebuild theta^{i1} ^ ... ^ theta^{ik}
        Form mono = Form::scalar(1.0);
        for (unsigned bit = 0; bit < 6; ++bit)
            if (m & (1u << bit)) mono = mono.wedge(cf.theta[bit]);
        out += mono * coeff;
    }
    return out;
}

// ---------------------------------------------------------------------------
// identity suites
// ---------------------------------------------------------------------------

namespace {

double rel_residual(const Form& diff, std::initializer_list<const Form*> scale_forms) {
    double scale = 1.0;
    for (const Form* f : scale_forms) scale = std::max(scale, f->sup_norm());
    return diff.sup_norm() / scale;
}

} // namespace

std::vector<IdentityResidual> verify_algebraic_identities(const AnsatzFrame& fr) {
    const auto& hk = hyperkahler_basis();
    std::vector<IdentityResidual> out;
    const double a = fr.pt.alpha.value, b = fr.pt.beta.value, g = fr.pt.gamma.value;

    {
        Form lhsI = hk.omega_I.pullback(fr.J0);
        Form rhsI = hk.omega_I * Complex(2 * a * a - 1) + hk.omega_J * Complex(2 * a * b) +
                    hk.omega_K * Complex(2 * a * g);
        Form lhsJ = hk.omega_J.pullback(fr.J0);
        Form rhsJ = hk.omega_J * Complex(2 * b * b - 1) + hk.omega_I * Complex(2 * a * b) +
                    hk.omega_K * Complex(2 * b * g);
        Form lhsK = hk.omega_K.pullback(fr.J0);
        Form rhsK = hk.omega_K * Complex(2 * g * g - 1) + hk.omega_I * Complex(2 * a * g) +
                    hk.omega_J * Complex(2 * b * g);
        double r = std::max({rel_residual(lhsI - rhsI, {&lhsI}), rel_residual(lhsJ - rhsJ, {&lhsJ}),
                             rel_residual(lhsK - rhsK, {&lhsK})});
        out.push_back({"J0_action_on_hyperkahler_forms", r});
    }
    {
        Form lhs = fr.omega_0.wedge(fr.omega_0).wedge(fr.omega_0);
        Form rhs = fr.omega_hat.wedge(fr.vol_M) * Complex(6.0);
        out.push_back({"omega0_cubed_eq_6_omegahat_vol", rel_residual(lhs - rhs, {&lhs, &rhs})});
    }
    {
        Form lhs = fr.Omega.wedge(fr.Omega.conjugate()) * Complex(0, 1);
        Form rhs = fr.omega_hat.wedge(fr.vol_M) * Complex(2.0);
        out.push_back({"iOmega_wedge_conj_eq_2_omegahat_vol", rel_residual(lhs - rhs, {&lhs, &rhs})});
    }
    {
        double n0 = norm_omega(fr.Omega, fr.omega_0);
        double nf = norm_omega(fr.Omega, fr.omega_f);
        out.push_back({"norm_omega0_eq_sqrt2", std::abs(n0 - std::sqrt(2.0))});
        out.push_back({"norm_scaling_exp_minus_2f",
                       std::abs(nf - std::exp(-2.0 * fr.f) * n0) / std::max(1.0, nf)});
        Form lhs = fr.omega_f.wedge(fr.omega_f) * Complex(nf);
        Form rhs = fr.omega_hat.wedge(fr.omega_prime) * Complex(2.0 * (fr.ef - 1.0) * n0) +
                   fr.omega_0.wedge(fr.omega_0) * Complex(n0);
        out.push_back({"conformally_balanced_expansion", rel_residual(lhs - rhs, {&lhs, &rhs})});
    }
    {
        double worst = 0;
        const Form* forms[3] = {&hk.omega_I, &hk.omega_J, &hk.omega_K};
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                Form lhs = forms[i]->wedge(*forms[j]);
                Form rhs = hk.vol * Complex(i == j ? 2.0 : 0.0);
                worst = std::max(worst, (lhs - rhs).sup_norm());
            }
        out.push_back({"quaternion_wedge_relations", worst});
        Form opsq = fr.omega_prime.wedge(fr.omega_prime) - hk.vol * Complex(2.0);
        out.push_back({"omega_prime_sq_eq_2vol", opsq.sup_norm()});
        out.push_back({"Omega_wedge_Omega_eq_0",
                       rel_residual(fr.Omega.wedge(fr.Omega), {&fr.Omega})});
    }
    {
        // Omega(d_z, v, x + i J0 x) = 0 and Omega has pure type (3,0)
        Rng rng(1234);
        Eigen::Matrix<Complex, 6, 1> dzv;
        dzv.setZero();
        dzv[0] = 0.5;
        dzv[1] = Complex(0, -0.5);
        double worst = 0;
        for (int s = 0; s < 20; ++s) {
            Eigen::Matrix<double, 6, 1> v = Eigen::Matrix<double, 6, 1>::Zero();
            Eigen::Matrix<double, 6, 1> x = Eigen::Matrix<double, 6, 1>::Zero();
            for (int i = 2; i < 6; ++i) {
                v[i] = rng.uniform(-1, 1);
                x[i] = rng.uniform(-1, 1);
            }
            Eigen::Matrix<Complex, 6, 1> xc = x.cast<Complex>() + Complex(0, 1) * (fr.J0 * x).cast<Complex>();
            Complex val = fr.Omega.eval({dzv, v.cast<Complex>(), xc});
            worst = std::max(worst, std::abs(val) / std::max(1.0, fr.Omega.sup_norm()));
        }
        out.push_back({"Omega_kills_antiholomorphic_fiber", worst});
        double impurity = 0;
        for (int p = 0; p <= 3; ++p) {
            int q = 3 - p;
            if (p == 3 && q == 0) continue;
            impurity = std::max(impurity, type_project(fr, fr.Omega, p, q).sup_norm());
        }
        out.push_back({"Omega_type_30", impurity / std::max(1.0, fr.Omega.sup_norm())});
    }
    return out;
}

std::vector<IdentityResidual> verify_differential_identities(const AnsatzFrame& fr) {
    if (fr.pt.at_ramification)
        throw ValidationError("differential identities need a smooth point");
    const auto& hk = hyperkahler_basis();
    const Form dz = dz_form(), dzb = dzb_form();
    std::vector<IdentityResidual> out;

    const FieldDerivs* v[3] = {&fr.pt.alpha, &fr.pt.beta, &fr.pt.gamma};
    const Form* w[3] = {&hk.omega_I, &hk.omega_J, &hk.omega_K};

    Form d_omega_prime(3);
    for (int j = 0; j < 3; ++j)
        d_omega_prime += (dz * v[j]->dz + dzb * v[j]->dzb).wedge(*w[j]);

    {
        // (2,1) part carries the dzbar-derivatives, (1,2) the dz-derivatives
        Form p21 = type_project(fr, d_omega_prime, 2, 1);
        Form p12 = type_project(fr, d_omega_prime, 1, 2);
        Form rhs21(3), rhs12(3);
        for (int j = 0; j < 3; ++j) {
            rhs21 += (dzb * v[j]->dzb).wedge(*w[j]);
            rhs12 += (dz * v[j]->dz).wedge(*w[j]);
        }
        out.push_back({"del_omega_prime_split", rel_residual(p21 - rhs21, {&p21, &rhs21})});
        out.push_back({"delbar_omega_prime_split", rel_residual(p12 - rhs12, {&p12, &rhs12})});
    }
    {
        // d of the (1,2) part, using its verified closed form: every second
        // derivative enters through del-delbar of the coefficients
        Form d_eta(4);
        for (int j = 0; j < 3; ++j)
            d_eta += dz.wedge(dzb).wedge(*w[j]) * Complex(-v[j]->dzdzb);
        Form lhs = type_project(fr, d_eta, 2, 2) * Complex(0, 1);
        Form rhs = fr.omega_hat.wedge(fr.omega_prime) * Complex(-fr.pt.kappa);
        out.push_back({"i_ddbar_omega_prime_eq_minus_kappa", rel_residual(lhs - rhs, {&lhs, &rhs})});
        out.push_back({"ddbar_omega_prime_purity", rel_residual(d_eta - type_project(fr, d_eta, 2, 2),
                                                                {&d_eta})});
    }
    Form d_omega_hat = (dz * fr.pt.d_rho + dzb * std::conj(fr.pt.d_rho)).wedge(dz.wedge(dzb) * Complex(0, 1));
    {
        Form d_omega0 = d_omega_hat + d_omega_prime;
        Form lhs = d_omega0.wedge(fr.omega_0) * Complex(2.0);
        out.push_back({"d_omega0_squared", rel_residual(lhs, {&fr.omega_0})});
    }
    {
        // d( ||Omega||_f omega_f^2 ) with ||Omega||_f = sqrt2 e^{-2f}
        const double n0 = std::sqrt(2.0);
        const double nf = n0 * std::exp(-2.0 * fr.f);
        Form df_form = dz * fr.df + dzb * std::conj(fr.df);
        Form d_omega_f = df_form.wedge(fr.omega_hat) * Complex(2.0 * fr.ef * fr.ef) +
                         d_omega_hat * Complex(fr.ef * fr.ef) +
                         df_form.wedge(fr.omega_prime) * Complex(fr.ef) +
                         d_omega_prime * Complex(fr.ef);
        Form dN = df_form * Complex(-2.0 * nf);
        Form lhs = dN.wedge(fr.omega_f.wedge(fr.omega_f)) +
                   d_omega_f.wedge(fr.omega_f) * Complex(2.0 * nf);
        Form scale = fr.omega_f.wedge(fr.omega_f);
        out.push_back({"d_conformally_balanced", rel_residual(lhs, {&scale})});
    }
    {
        Complex s{};
        for (int j = 0; j < 3; ++j) s += v[j]->value * v[j]->dzb;
        out.push_back({"sum_v_dbar_v", std::abs(s)});
    }
    return out;
}

double max_residual(const std::vector<IdentityResidual>& rs) {
    double m = 0;
    for (const auto& r : rs) m = std::max(m, r.residual);
    return m;
}

} // namespace cglab
