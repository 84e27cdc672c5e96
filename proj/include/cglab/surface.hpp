#pragma once

// The genus-3 hyperelliptic curve w^2 = prod (z - p_i) realized as a
// triangulated branched double cover of the sphere: base icosphere with the
// branch points inserted as vertices, a disjoint system of four cut arcs,
// crosswise gluing of two sheets, sheet involution, cyclic unramified covers
// and homology loops around the cut arcs.

#include <array>
#include <complex>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cglab/errors.hpp"
#include "cglab/sphere_geometry.hpp"

namespace cglab {

struct RawBranchInput {
    std::vector<StereoCoord> points;
    double alpha_prime = 1.0;
    int mesh_level = 3;
    std::optional<std::array<std::array<int, 2>, 4>> pairing; // 0-based
};

struct BranchConfig {
    std::array<Complex, 8> points{};           // normalized: finite, away from the chart pole
    double alpha_prime = 1.0;
    int mesh_level = 3;
    std::array<std::array<int, 2>, 4> pairing{{{0, 1}, {2, 3}, {4, 5}, {6, 7}}};
    Eigen::Matrix3d normalizing_rotation = Eigen::Matrix3d::Identity();
    double min_pole_distance = 0.0;            // after normalization
    int genus = 3;                             // Riemann-Hurwitz: 2 - 2g = 2*2 - 8

    UnitVec3 branch_value(int i) const { return stereo_to_sphere(StereoCoord(points[i])); }
    std::array<UnitVec3, 8> branch_values() const;
};

// Duplicate points, wrong count, or alpha' <= 0 throw ValidationError. The
// returned config is rotated so every point sits at spherical distance
// >= 0.2 from the chart pole (always achievable for 8 points).
BranchConfig validate_config(const RawBranchInput& raw);

struct BaseMesh {
    std::vector<UnitVec3> positions;
    std::vector<std::array<int, 3>> triangles;   // CCW seen from outside
    std::array<int, 8> branch_vertex{};          // vertex ids of the branch points
    std::array<std::vector<int>, 4> arcs;        // vertex paths between paired branch vertices
    std::array<std::array<int, 2>, 4> pairing{};

    int vertex_count() const { return static_cast<int>(positions.size()); }
    int triangle_count() const { return static_cast<int>(triangles.size()); }
    int edge_count() const;
    int euler_characteristic() const;

    // edge (min,max) -> the one or two incident triangles
    const std::map<std::pair<int, int>, std::array<int, 2>>& edge_triangles() const;
    std::vector<std::vector<int>> vertex_neighbors() const;
    bool is_cut_edge(int u, int v) const;
    int arc_of_vertex(int v) const; // -1 if not on any arc

    mutable std::map<std::pair<int, int>, std::array<int, 2>> edge_tris_cache_;
    std::vector<int> arc_of_vertex_;
};

// Geodesic icosphere at subdivision (level + 1) -- level 3 ~ 2.5k vertices,
// level 4 ~ 10k -- with each branch point made a vertex (snap or local
// split) and the four pairing arcs routed as vertex-disjoint edge paths.
BaseMesh build_base_mesh(const BranchConfig& config, int level);

struct CoverVertex {
    int base_vertex = -1;
    UnitVec3 pos;               // base sphere position = (alpha, beta, gamma)
    int chart = 1;              // 1: coordinate z; 2: coordinate xi = 1/z, wt = w / z^4
    Complex coord{};            // z or xi
    Complex w{};                // w or wt, continuous branch per sheet
    int sheet = 0;              // bookkeeping label; ill-defined on the cuts
    bool is_ramification = false;
    bool on_cut = false;        // base vertex lies on a cut arc
};

struct HomologyLoop {
    std::vector<int> vertices;  // closed: edge (v[i], v[i+1 mod n]) exists on the cover
    int arc = -1;               // which cut arc it encircles (-1: ad hoc)
    int sheet = 0;
};

struct SurfaceMesh {
    BranchConfig config;
    BaseMesh base;
    std::vector<CoverVertex> vertices;
    std::vector<std::array<int, 3>> triangles;
    std::vector<int> tri_base;                   // base triangle per cover triangle
    std::vector<int> tri_sheet;
    std::vector<int> ramification_vertices;      // cover vertex ids
    std::vector<std::array<int, 2>> base_to_cover; // per base vertex: sheet-0/1 lift (ram: same id)
    int covering_degree = 2;                     // 2k after a k-fold cyclic cover
    std::vector<int> involution;                 // empty unless covering_degree == 2

    // edges, oriented-edge -> triangle maps, intrinsic lengths
    std::vector<std::array<int, 2>> edges;       // (min, max)
    std::vector<double> edge_lengths;            // pullback spherical distance
    std::vector<bool> edge_crosses_cut;
    std::map<std::pair<int, int>, int> edge_index;

    int vertex_count() const { return static_cast<int>(vertices.size()); }
    int euler_characteristic() const;
    int genus() const { return (2 - euler_characteristic()) / 2; }
    bool has_involution() const { return !involution.empty(); }

    int edge_between(int u, int v) const; // -1 if absent
    double intrinsic_length(int u, int v) const;
};

// Two copies of the base cut along the pairing arcs and glued crosswise.
// Per-vertex (z, w) carries a continuous square-root branch of the curve
// polynomial; w = 0 exactly at the 8 ramification vertices.
SurfaceMesh build_branched_double_cover(const BranchConfig& config, const BaseMesh& base);

// Convenience: validate + base + cover at the config's mesh level.
SurfaceMesh build_surface(const BranchConfig& config);

// The hyperelliptic involution as a vertex permutation (iota^2 = id, fixed
// exactly on the ramification vertices, w -> -w).
std::vector<int> sheet_involution(const SurfaceMesh& mesh);

// k-sheeted cyclic cover cut along `loop` (simple, closed, non-separating).
// chi multiplies by k; per-vertex field data is copied through the cover.
SurfaceMesh cyclic_unramified_cover(const SurfaceMesh& mesh, const HomologyLoop& loop, int k);

// Six loops: for each of the first three cut arcs, a base edge cycle
// encircling that arc only, lifted to both sheets (closed lifts: the
// encircling monodromy is a product of two transpositions).
std::vector<HomologyLoop> homology_loops(const SurfaceMesh& mesh);

// Ring of base vertices at combinatorial distance `ring` around an arc,
// lifted to the given sheet. ring = 1 is what homology_loops returns.
HomologyLoop ring_loop_around_arc(const SurfaceMesh& mesh, int arc, int sheet, int ring);

// A plain icosphere as a degree-1 "cover" of itself: the calibration mesh
// for the spectral suite (no branch points, kappa-potential = round 2).
SurfaceMesh build_calibration_sphere(int level);

// OFF-style export (positions on the base sphere; sheet labels and curve
// coordinates in comments) and the per-vertex CSV table.
std::string export_off(const SurfaceMesh& mesh);
std::string export_vertex_csv(const SurfaceMesh& mesh);

// Curve polynomial helpers (chart 1: P(z) = prod (z - p_i); chart 2:
// Q(xi) = prod (1 - p_i xi), so wt^2 = Q).
Complex curve_poly(const BranchConfig& config, int chart, Complex t);
Complex curve_poly_derivative(const BranchConfig& config, int chart, Complex t);

} // namespace cglab
