#include "cglab/sphere_geometry.hpp"

#include <algorithm>
#include <cmath>

#include "cglab/errors.hpp"

namespace cglab {

UnitVec3 UnitVec3::normalized() const {
    double n = norm();
    if (n < 1e-300) throw ValidationError("cannot normalize a zero vector");
    return {x / n, y / n, z / n};
}

bool MobiusMap::valid(double tol) const {
    double scale = std::max({std::abs(a), std::abs(b), std::abs(c), std::abs(d)});
    return std::abs(det()) >= tol * scale * scale;
}

StereoCoord MobiusMap::apply(const StereoCoord& s) const {
    if (s.infinite) {
        if (std::abs(c) == 0.0) return StereoCoord::infinity();
        return StereoCoord(a / c);
    }
    Complex num = a * s.zeta + b;
    Complex den = c * s.zeta + d;
    double scale = std::max(1.0, std::abs(s.zeta)) * std::max({std::abs(a), std::abs(b), std::abs(c), std::abs(d)});
    if (std::abs(den) <= 1e-15 * scale) return StereoCoord::infinity();
    return StereoCoord(num / den);
}

MobiusMap MobiusMap::compose(const MobiusMap& i) const {
    return {a * i.a + b * i.c, a * i.b + b * i.d, c * i.a + d * i.c, c * i.b + d * i.d};
}

UnitVec3 stereo_to_sphere(const StereoCoord& s) {
    if (s.infinite) return {-1.0, 0.0, 0.0};
    const double r2 = std::norm(s.zeta);
    const double den = 1.0 + r2;
    return {(1.0 - r2) / den, 2.0 * s.zeta.real() / den, 2.0 * s.zeta.imag() / den};
}

StereoCoord sphere_to_stereo(const UnitVec3& v) {
    const double n = v.norm();
    if (std::abs(n - 1.0) > 1e-9)
        throw ValidationError("sphere_to_stereo: input is not a unit vector (|x| = " + std::to_string(n) + ")");
    const UnitVec3 u = v.normalized();
    if (u.x <= -1.0 + 1e-15) return StereoCoord::infinity();
    return StereoCoord(Complex(u.y, u.z) / (1.0 + u.x));
}

namespace {

double min_dot(const UnitVec3& n, std::span<const UnitVec3> pts) {
    double m = 2.0;
    for (const auto& p : pts) m = std::min(m, n.dot(p));
    return m;
}

void push_unit(std::vector<UnitVec3>& out, const UnitVec3& v) {
    double n = v.norm();
    if (n > 1e-9) {
        out.push_back(v * (1.0 / n));
        out.push_back(v * (-1.0 / n));
    }
}

UnitVec3 any_orthogonal(const UnitVec3& v) {
    UnitVec3 ref = std::abs(v.x) < 0.9 ? UnitVec3{1, 0, 0} : UnitVec3{0, 1, 0};
    return v.cross(ref).normalized();
}

} // namespace

HemisphereReport hemisphere_margin(std::span<const UnitVec3> points) {
    if (points.empty()) throw ValidationError("hemisphere_margin: empty point list");
    const int n = static_cast<int>(points.size());

    std::vector<UnitVec3> cands;
    cands.reserve(8 + 4 * n * n + 2 * n * n * n / 6);
    for (int i = 0; i < n; ++i) cands.push_back(points[i]);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            push_unit(cands, points[i] + points[j]);
            if ((points[i] + points[j]).norm() <= 1e-9) {
                // antipodal pair: the equidistant set is a full great circle
                UnitVec3 t = any_orthogonal(points[i]);
                cands.push_back(t);
                cands.push_back(-t);
                cands.push_back(points[i].cross(t).normalized());
            }
            for (int k = j + 1; k < n; ++k)
                push_unit(cands, (points[j] - points[i]).cross(points[k] - points[i]));
        }

    HemisphereReport best;
    best.margin = -2.0;
    for (const auto& c : cands) {
        double m = min_dot(c, points);
        if (m > best.margin) {
            best.margin = m;
            best.direction = c;
        }
    }
    best.margin = std::clamp(best.margin, -1.0, 1.0);
    best.feasible = best.margin > 0.0;
    return best;
}

double spherical_distance(const UnitVec3& a, const UnitVec3& b) {
    // atan2 form is stable for both near-zero and near-pi separations
    return std::atan2(a.cross(b).norm(), a.dot(b));
}

SphericalArea spherical_triangle_area(const UnitVec3& a, const UnitVec3& b, const UnitVec3& c) {
    const double la = spherical_distance(b, c);
    const double lb = spherical_distance(c, a);
    const double lc = spherical_distance(a, b);
    const double s = 0.5 * (la + lb + lc);
    const double t = std::tan(s / 2) * std::tan((s - la) / 2) * std::tan((s - lb) / 2) * std::tan((s - lc) / 2);
    if (!(t > 0.0)) return {0.0, true};
    return {4.0 * std::atan(std::sqrt(t)), false};
}

Eigen::Matrix3d rotation_between(const UnitVec3& from, const UnitVec3& to) {
    Eigen::Vector3d f = from.normalized().eigen();
    Eigen::Vector3d t = to.normalized().eigen();
    Eigen::Vector3d axis = f.cross(t);
    double s = axis.norm();
    double cang = f.dot(t);
    if (s < 1e-14) {
        if (cang > 0) return Eigen::Matrix3d::Identity();
        // antipodal: rotate by pi about any orthogonal axis
        Eigen::Vector3d o = any_orthogonal(from).eigen();
        return Eigen::AngleAxisd(M_PI, o).toRotationMatrix();
    }
    return Eigen::AngleAxisd(std::atan2(s, cang), axis / s).toRotationMatrix();
}

namespace {

// Matrix of the Mobius map sending (p, q, r) to (0, 1, inf).
MobiusMap to_standard_triple(const StereoCoord& p, const StereoCoord& q, const StereoCoord& r) {
    if (p.infinite) return {0.0, q.zeta - r.zeta, 1.0, -r.zeta};
    if (q.infinite) return {1.0, -p.zeta, 1.0, -r.zeta};
    if (r.infinite) return {1.0, -p.zeta, 0.0, q.zeta - p.zeta};
    return {q.zeta - r.zeta, -p.zeta * (q.zeta - r.zeta), q.zeta - p.zeta, -r.zeta * (q.zeta - p.zeta)};
}

MobiusMap inverse(const MobiusMap& m) { return {m.d, -m.b, -m.c, m.a}; }

} // namespace

MobiusMap mobius_from_rotation(const Eigen::Matrix3d& rot) {
    const UnitVec3 b1{1, 0, 0}, b2{0, 1, 0}, b3{0, 0, 1}; // stereo 0, 1, i
    StereoCoord z1(0.0, 0.0), z2(1.0, 0.0), z3(0.0, 1.0);
    StereoCoord w1 = sphere_to_stereo(UnitVec3::from(rot * b1.eigen()));
    StereoCoord w2 = sphere_to_stereo(UnitVec3::from(rot * b2.eigen()));
    StereoCoord w3 = sphere_to_stereo(UnitVec3::from(rot * b3.eigen()));
    MobiusMap A = to_standard_triple(z1, z2, z3);
    MobiusMap B = to_standard_triple(w1, w2, w3);
    MobiusMap m = inverse(B).compose(A);
    if (!m.valid()) throw NumericalError("mobius_from_rotation produced a degenerate map");
    return m;
}

UnitVec3 mobius_apply_sphere(const MobiusMap& m, const UnitVec3& v) {
    return stereo_to_sphere(m.apply(sphere_to_stereo(v)));
}

std::optional<MobiusMap> hemispherizing_mobius(std::span<const UnitVec3> points) {
    if (points.empty()) throw ValidationError("hemispherizing_mobius: empty point list");
    if (hemisphere_margin(points).feasible) return MobiusMap::identity();

    // direction farthest from every point = center of the largest empty cap
    std::vector<UnitVec3> neg(points.begin(), points.end());
    for (auto& p : neg) p = -p;
    UnitVec3 gap = hemisphere_margin(neg).direction;

    MobiusMap rot = mobius_from_rotation(rotation_between(gap, chart_pole));
    double lambda = 1.0;
    for (int it = 0; it < 60; ++it, lambda *= 0.5) {
        MobiusMap m = MobiusMap::scaling(Complex(lambda, 0.0)).compose(rot);
        std::vector<UnitVec3> mapped;
        mapped.reserve(points.size());
        for (const auto& p : points) mapped.push_back(mobius_apply_sphere(m, p));
        if (hemisphere_margin(mapped).feasible) return m;
    }
    return std::nullopt;
}

} // namespace cglab
