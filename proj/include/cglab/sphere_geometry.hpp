#pragma once

// Round-sphere primitives: the stereographic chart, Mobius transformations,
// the smallest-enclosing-cap / open-hemisphere feasibility problem, and
// geodesic distance / spherical-excess area.

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <vector>

#include "cglab/util.hpp"

namespace cglab {

// A point of C u {inf}. Infinity is a tagged state, never a float overflow.
struct StereoCoord {
    Complex zeta{0.0, 0.0};
    bool infinite = false;

    StereoCoord() = default;
    StereoCoord(Complex z) : zeta(z) {}
    StereoCoord(double re, double im) : zeta(re, im) {}
    static StereoCoord infinity() {
        StereoCoord s;
        s.infinite = true;
        return s;
    }
    bool operator==(const StereoCoord& o) const {
        if (infinite || o.infinite) return infinite == o.infinite;
        return zeta == o.zeta;
    }
};

struct UnitVec3 {
    double x = 0, y = 0, z = 0;

    double dot(const UnitVec3& o) const { return x * o.x + y * o.y + z * o.z; }
    UnitVec3 cross(const UnitVec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    double norm() const { return std::sqrt(x * x + y * y + z * z); }
    UnitVec3 normalized() const;
    UnitVec3 operator-() const { return {-x, -y, -z}; }
    UnitVec3 operator+(const UnitVec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    UnitVec3 operator-(const UnitVec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    UnitVec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Eigen::Vector3d eigen() const { return {x, y, z}; }
    static UnitVec3 from(const Eigen::Vector3d& v) { return {v.x(), v.y(), v.z()}; }
};

// The chart pole: stereo coordinate infinity.
inline constexpr UnitVec3 chart_pole{-1.0, 0.0, 0.0};

// Fractional-linear map zeta -> (a zeta + b)/(c zeta + d).
struct MobiusMap {
    Complex a{1, 0}, b{0, 0}, c{0, 0}, d{1, 0};

    static MobiusMap identity() { return {}; }
    static MobiusMap scaling(Complex lambda) { return {lambda, 0.0, 0.0, 1.0}; }
    Complex det() const { return a * d - b * c; }
    bool valid(double tol = 1e-12) const;
    StereoCoord apply(const StereoCoord& s) const;
    MobiusMap compose(const MobiusMap& inner) const; // this after inner
};

struct HemisphereReport {
    bool feasible = false;   // margin > 0 (open hemisphere)
    UnitVec3 direction{1, 0, 0};
    double margin = -1.0;    // min_i direction . x_i at the optimum, in [-1, 1]
};

// Eq.-driven stereographic chart: 0 -> (1,0,0), 1 -> (0,1,0), i -> (0,0,1),
// inf -> (-1,0,0).
UnitVec3 stereo_to_sphere(const StereoCoord& s);

// Inverse chart; throws ValidationError for non-unit input (|1 - |x|| > 1e-9).
StereoCoord sphere_to_stereo(const UnitVec3& v);

// Smallest enclosing spherical cap, solved exactly by support-point
// enumeration over singletons, pairs and triples (the minimax optimum is
// attained at one of those candidates). margin = cos(cap radius).
HemisphereReport hemisphere_margin(std::span<const UnitVec3> points);

// Searches for a Mobius map making the transformed points hemisphere
// feasible: rotate the farthest-from-all-points direction onto the chart
// pole, then contract zeta -> lambda * zeta, halving lambda (budget 60).
// nullopt signals search-budget exhaustion, not a proof of nonexistence.
std::optional<MobiusMap> hemispherizing_mobius(std::span<const UnitVec3> points);

// Geodesic distance in radians.
double spherical_distance(const UnitVec3& a, const UnitVec3& b);

struct SphericalArea {
    double area = 0.0; // spherical excess, in [0, 2*pi)
    bool degenerate = false;
};

// l'Huilier's formula; collinear/degenerate triangles come back with
// area 0 and the flag set.
SphericalArea spherical_triangle_area(const UnitVec3& a, const UnitVec3& b, const UnitVec3& c);

// Rotation taking `from` to `to` along the shortest arc.
Eigen::Matrix3d rotation_between(const UnitVec3& from, const UnitVec3& to);

// The Mobius map conjugate to a rotation of the sphere under the chart,
// built from the images of three reference points.
MobiusMap mobius_from_rotation(const Eigen::Matrix3d& rot);

// Convenience: sphere-level action of a Mobius map.
UnitVec3 mobius_apply_sphere(const MobiusMap& m, const UnitVec3& v);

} // namespace cglab
