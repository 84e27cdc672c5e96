#pragma once

#include <cmath>
#include <vector>

#include "cglab/surface.hpp"
#include "cglab/util.hpp"

namespace cglab::testing {

// 8 branch points in a cap around (1,0,0): a jittered 7-ring plus center,
// pairwise separation >= 0.5 rad. Hemisphere feasible with a wide margin
// and enough clearance for the homology rings at level >= 2.
inline RawBranchInput cap_config(int level = 2, double alpha_prime = 1.0) {
    RawBranchInput raw;
    raw.points.push_back(StereoCoord(0.013, -0.021));
    const double r = 0.337; // polar angle 0.65 from the cap center
    const double jit[7] = {0.011, -0.017, 0.008, 0.021, -0.009, 0.015, -0.013};
    for (int k = 0; k < 7; ++k) {
        double ang = 2.0 * M_PI * k / 7.0 + jit[k];
        double rad = r * (1.0 + jit[(k + 3) % 7]);
        raw.points.push_back(StereoCoord(rad * std::cos(ang), rad * std::sin(ang)));
    }
    raw.alpha_prime = alpha_prime;
    raw.mesh_level = level;
    return raw;
}

// Branch values at the cube vertices: w^2 = z^8 + 14 z^4 + 1 (hemisphere
// infeasible; the classical Schwarz P/D branch data).
inline RawBranchInput cube_config(int level = 2) {
    RawBranchInput raw;
    const double m1 = std::pow(7.0 - 4.0 * std::sqrt(3.0), 0.25);
    const double m2 = std::pow(7.0 + 4.0 * std::sqrt(3.0), 0.25);
    for (double m : {m1, m2})
        for (int k = 0; k < 4; ++k) {
            double ang = M_PI / 4 + k * M_PI / 2;
            raw.points.push_back(StereoCoord(m * std::cos(ang), m * std::sin(ang)));
        }
    raw.mesh_level = level;
    return raw;
}

// Random hemisphere-feasible config: 8 jittered points in a spherical cap.
inline RawBranchInput random_cap_config(std::uint64_t seed, int level = 2) {
    Rng rng(seed);
    for (int attempt = 0; attempt < 200; ++attempt) {
        RawBranchInput raw;
        raw.mesh_level = level;
        bool ok = true;
        std::vector<Complex> pts;
        for (int i = 0; i < 8 && ok; ++i) {
            for (int tries = 0;; ++tries) {
                Complex z(rng.uniform(-0.45, 0.45), rng.uniform(-0.45, 0.45));
                bool clear = true;
                for (const auto& p : pts)
                    if (std::abs(z - p) < 0.12) clear = false;
                if (clear) {
                    pts.push_back(z);
                    break;
                }
                if (tries > 100) {
                    ok = false;
                    break;
                }
            }
        }
        if (!ok) continue;
        for (const auto& p : pts) raw.points.push_back(StereoCoord(p));
        return raw;
    }
    throw std::runtime_error("random_cap_config failed to place points");
}

inline std::vector<UnitVec3> to_sphere(const RawBranchInput& raw) {
    std::vector<UnitVec3> out;
    for (const auto& p : raw.points) out.push_back(stereo_to_sphere(p));
    return out;
}

} // namespace cglab::testing
