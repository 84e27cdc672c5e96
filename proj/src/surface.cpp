#include "cglab/surface.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <cstdio>
#include <cstdlib>
#include <numeric>
#include <queue>
#include <set>
#include <sstream>

#include "cglab/errors.hpp"

namespace cglab {

namespace {

constexpr double kChartSplit = 0.3; // pole distance below which chart 2 is used

std::pair<int, int> ekey(int u, int v) { return {std::min(u, v), std::max(u, v)}; }

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }
    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

} // namespace

std::array<UnitVec3, 8> BranchConfig::branch_values() const {
    std::array<UnitVec3, 8> out;
    for (int i = 0; i < 8; ++i) out[i] = branch_value(i);
    return out;
}

BranchConfig validate_config(const RawBranchInput& raw) {
    if (raw.points.size() != 8)
        throw ValidationError("expected exactly 8 branch points, got " + std::to_string(raw.points.size()));
    if (!(raw.alpha_prime > 0.0))
        throw ValidationError("alpha' must be positive (the ansatz has no solutions otherwise)");
    if (raw.mesh_level < 0 || raw.mesh_level > 7)
        throw ValidationError("mesh_level out of range [0, 7]");

    std::array<UnitVec3, 8> pts;
    for (int i = 0; i < 8; ++i) pts[i] = stereo_to_sphere(raw.points[i]);
    for (int i = 0; i < 8; ++i)
        for (int j = i + 1; j < 8; ++j)
            if (spherical_distance(pts[i], pts[j]) < 1e-9)
                throw ValidationError("branch points " + std::to_string(i + 1) + " and " +
                                      std::to_string(j + 1) + " coincide");

    // Rotate the center of the largest empty cap onto the chart pole. A cap
    // of radius >= arccos(3/4) is always free for 8 points, so every
    // normalized point lands well clear of the pole.
    std::vector<UnitVec3> neg(pts.begin(), pts.end());
    for (auto& p : neg) p = -p;
    UnitVec3 gap = hemisphere_margin(neg).direction;
    Eigen::Matrix3d rot = rotation_between(gap, chart_pole);

    BranchConfig cfg;
    cfg.alpha_prime = raw.alpha_prime;
    cfg.mesh_level = raw.mesh_level;
    cfg.normalizing_rotation = rot;
    cfg.min_pole_distance = M_PI;
    for (int i = 0; i < 8; ++i) {
        UnitVec3 r = UnitVec3::from(rot * pts[i].eigen());
        cfg.min_pole_distance = std::min(cfg.min_pole_distance, spherical_distance(r, chart_pole));
        StereoCoord s = sphere_to_stereo(r);
        if (s.infinite) throw NumericalError("normalization failed to clear the chart pole");
        cfg.points[i] = s.zeta;
    }
    if (cfg.min_pole_distance < 0.2)
        throw NumericalError("normalized branch points too close to the chart pole");

    if (raw.pairing) {
        std::array<int, 8> seen{};
        for (const auto& pr : *raw.pairing)
            for (int ix : pr) {
                if (ix < 0 || ix > 7) throw ValidationError("pairing index out of range");
                if (seen[ix]++) throw ValidationError("pairing reuses point " + std::to_string(ix + 1));
            }
        cfg.pairing = *raw.pairing;
    }
    cfg.genus = 3; // 2 - 2g = 2 * chi(S^2) - 8
    return cfg;
}

Complex curve_poly(const BranchConfig& config, int chart, Complex t) {
    Complex prod{1.0, 0.0};
    for (const auto& p : config.points) prod *= (chart == 1) ? (t - p) : (1.0 - p * t);
    return prod;
}

Complex curve_poly_derivative(const BranchConfig& config, int chart, Complex t) {
    Complex sum{0.0, 0.0};
    for (int i = 0; i < 8; ++i) {
        Complex term{1.0, 0.0};
        for (int j = 0; j < 8; ++j) {
            if (j == i) continue;
            term *= (chart == 1) ? (t - config.points[j]) : (1.0 - config.points[j] * t);
        }
        sum += (chart == 1) ? term : (-config.points[i]) * term;
    }
    return sum;
}

// ---------------------------------------------------------------------------
// base mesh
// ---------------------------------------------------------------------------

int BaseMesh::edge_count() const { return static_cast<int>(edge_triangles().size()); }

int BaseMesh::euler_characteristic() const {
    return vertex_count() - edge_count() + triangle_count();
}

const std::map<std::pair<int, int>, std::array<int, 2>>& BaseMesh::edge_triangles() const {
    if (edge_tris_cache_.empty()) {
        for (int t = 0; t < triangle_count(); ++t)
            for (int c = 0; c < 3; ++c) {
                auto key = ekey(triangles[t][c], triangles[t][(c + 1) % 3]);
                auto it = edge_tris_cache_.find(key);
                if (it == edge_tris_cache_.end())
                    edge_tris_cache_[key] = {t, -1};
                else
                    it->second[1] = t;
            }
    }
    return edge_tris_cache_;
}

std::vector<std::vector<int>> BaseMesh::vertex_neighbors() const {
    std::vector<std::set<int>> nb(vertex_count());
    for (const auto& t : triangles)
        for (int c = 0; c < 3; ++c) {
            nb[t[c]].insert(t[(c + 1) % 3]);
            nb[t[c]].insert(t[(c + 2) % 3]);
        }
    std::vector<std::vector<int>> out(vertex_count());
    for (int v = 0; v < vertex_count(); ++v) out[v].assign(nb[v].begin(), nb[v].end());
    return out;
}

bool BaseMesh::is_cut_edge(int u, int v) const {
    for (const auto& arc : arcs)
        for (std::size_t i = 0; i + 1 < arc.size(); ++i)
            if (ekey(arc[i], arc[i + 1]) == ekey(u, v)) return true;
    return false;
}

int BaseMesh::arc_of_vertex(int v) const { return arc_of_vertex_.empty() ? -1 : arc_of_vertex_[v]; }

namespace {

struct MeshBuild {
    std::vector<UnitVec3> pos;
    std::vector<std::array<int, 3>> tri;
};

MeshBuild icosphere(int subdivisions) {
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    MeshBuild m;
    const double raw[12][3] = {{-1, t, 0}, {1, t, 0},  {-1, -t, 0}, {1, -t, 0},
                               {0, -1, t}, {0, 1, t},  {0, -1, -t}, {0, 1, -t},
                               {t, 0, -1}, {t, 0, 1},  {-t, 0, -1}, {-t, 0, 1}};
    for (const auto& r : raw) m.pos.push_back(UnitVec3{r[0], r[1], r[2]}.normalized());
    const int f[20][3] = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                          {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                          {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                          {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
    for (const auto& a : f) m.tri.push_back({a[0], a[1], a[2]});

    for (int s = 0; s < subdivisions; ++s) {
        std::map<std::pair<int, int>, int> mid;
        auto midpoint = [&](int a, int b) {
            auto key = ekey(a, b);
            auto it = mid.find(key);
            if (it != mid.end()) return it->second;
            int id = static_cast<int>(m.pos.size());
            m.pos.push_back((m.pos[a] + m.pos[b]).normalized());
            mid[key] = id;
            return id;
        };
        std::vector<std::array<int, 3>> next;
        next.reserve(m.tri.size() * 4);
        for (const auto& tr : m.tri) {
            int ab = midpoint(tr[0], tr[1]);
            int bc = midpoint(tr[1], tr[2]);
            int ca = midpoint(tr[2], tr[0]);
            next.push_back({tr[0], ab, ca});
            next.push_back({tr[1], bc, ab});
            next.push_back({tr[2], ca, bc});
            next.push_back({ab, bc, ca});
        }
        m.tri = std::move(next);
    }
    return m;
}

double orient(const UnitVec3& a, const UnitVec3& b, const UnitVec3& c) {
    return a.cross(b).dot(c);
}

// All incident triangles stay positively oriented if vertex v moves to p.
bool snap_is_valid(const MeshBuild& m, int v, const UnitVec3& p) {
    for (const auto& t : m.tri) {
        if (t[0] != v && t[1] != v && t[2] != v) continue;
        UnitVec3 a = t[0] == v ? p : m.pos[t[0]];
        UnitVec3 b = t[1] == v ? p : m.pos[t[1]];
        UnitVec3 c = t[2] == v ? p : m.pos[t[2]];
        if (orient(a, b, c) <= 1e-12) return false;
    }
    return true;
}

int insert_point(MeshBuild& m, const UnitVec3& p, const std::set<int>& claimed) {
    // nearest vertex
    int nearest = -1;
    double best = 1e30;
    for (int v = 0; v < static_cast<int>(m.pos.size()); ++v) {
        double d = spherical_distance(m.pos[v], p);
        if (d < best) {
            best = d;
            nearest = v;
        }
    }
    double local_edge = 1e30;
    for (const auto& t : m.tri) {
        if (t[0] != nearest && t[1] != nearest && t[2] != nearest) continue;
        for (int c = 0; c < 3; ++c)
            local_edge = std::min(local_edge, spherical_distance(m.pos[t[c]], m.pos[t[(c + 1) % 3]]));
    }
    if (best <= 0.3 * local_edge && !claimed.count(nearest) && snap_is_valid(m, nearest, p)) {
        m.pos[nearest] = p;
        return nearest;
    }

    // locate a containing triangle
    int host = -1;
    double besthost = -1e30;
    for (int t = 0; t < static_cast<int>(m.tri.size()); ++t) {
        const auto& tr = m.tri[t];
        double d0 = orient(m.pos[tr[0]], m.pos[tr[1]], p);
        double d1 = orient(m.pos[tr[1]], m.pos[tr[2]], p);
        double d2 = orient(m.pos[tr[2]], m.pos[tr[0]], p);
        double worst = std::min({d0, d1, d2});
        if (worst > besthost) {
            besthost = worst;
            host = t;
        }
    }
    const auto tr = m.tri[host];
    int nv = static_cast<int>(m.pos.size());
    m.pos.push_back(p);

    // split across an edge when p is (numerically) on it
    for (int c = 0; c < 3; ++c) {
        int u = tr[c], v = tr[(c + 1) % 3];
        if (std::abs(orient(m.pos[u], m.pos[v], p)) < 1e-13) {
            int other = -1;
            for (int t2 = 0; t2 < static_cast<int>(m.tri.size()); ++t2) {
                if (t2 == host) continue;
                const auto& s = m.tri[t2];
                for (int cc = 0; cc < 3; ++cc)
                    if (ekey(s[cc], s[(cc + 1) % 3]) == ekey(u, v)) other = t2;
            }
            int w = tr[(c + 2) % 3];
            m.tri[host] = {u, nv, w};
            m.tri.push_back({nv, v, w});
            if (other >= 0) {
                const auto s = m.tri[other];
                int x = -1;
                for (int cc = 0; cc < 3; ++cc)
                    if (s[cc] != u && s[cc] != v) x = s[cc];
                m.tri[other] = {v, nv, x};
                m.tri.push_back({nv, u, x});
            }
            return nv;
        }
    }

    // interior 1-to-3 split
    m.tri[host] = {tr[0], tr[1], nv};
    m.tri.push_back({tr[1], tr[2], nv});
    m.tri.push_back({tr[2], tr[0], nv});
    return nv;
}

// Splits edge (u, v) at the geodesic midpoint; both incident triangles go
// 2-to-4. Returns the new vertex id.
int split_edge(MeshBuild& m, int u, int v) {
    int nv = static_cast<int>(m.pos.size());
    m.pos.push_back((m.pos[u] + m.pos[v]).normalized());
    std::vector<int> incident;
    for (int t = 0; t < static_cast<int>(m.tri.size()); ++t)
        for (int c = 0; c < 3; ++c)
            if (ekey(m.tri[t][c], m.tri[t][(c + 1) % 3]) == ekey(u, v)) incident.push_back(t);
    if (incident.size() != 2) throw NumericalError("edge split on a non-manifold edge");
    for (int t : incident) {
        const auto tr = m.tri[t];
        int c = 0;
        while (!(tr[c] == u && tr[(c + 1) % 3] == v) && !(tr[c] == v && tr[(c + 1) % 3] == u)) ++c;
        int a = tr[c], b = tr[(c + 1) % 3], x = tr[(c + 2) % 3];
        m.tri[t] = {a, nv, x};
        m.tri.push_back({nv, b, x});
    }
    return nv;
}

// Dijkstra edge path avoiding `forbidden` (endpoints excepted); vertices
// adjacent to the forbidden set carry a soft penalty so arcs keep a clear
// one-vertex collar whenever the mesh allows it.
std::vector<int> shortest_path(const BaseMesh& mesh, const std::vector<std::vector<int>>& nbrs,
                               int src, int dst, const std::set<int>& forbidden, double penalty) {
    const int n = mesh.vertex_count();
    std::vector<double> node_cost(n, 0.0);
    if (penalty > 0)
        for (int v : forbidden)
            for (int u : nbrs[v]) node_cost[u] = penalty;
    std::vector<double> dist(n, 1e300);
    std::vector<int> prev(n, -1);
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    dist[src] = 0;
    pq.push({0.0, src});
    while (!pq.empty()) {
        auto [d, v] = pq.top();
        pq.pop();
        if (d > dist[v]) continue;
        if (v == dst) break;
        for (int u : nbrs[v]) {
            if (u != dst && forbidden.count(u)) continue;
            // no direct src-dst edge: a one-edge arc would join two
            // ramification classes by a doubled cover edge
            if (v == src && u == dst) continue;
            double nd = d + spherical_distance(mesh.positions[v], mesh.positions[u]) +
                        (u == dst ? 0.0 : node_cost[u]);
            if (nd < dist[u] - 1e-15) {
                dist[u] = nd;
                prev[u] = v;
                pq.push({nd, u});
            }
        }
    }
    if (prev[dst] < 0 && src != dst) return {};
    std::vector<int> path{dst};
    for (int v = dst; v != src; v = prev[v]) path.push_back(prev[v]);
    std::reverse(path.begin(), path.end());
    return path;
}

bool route_arcs(BaseMesh& mesh, const std::array<std::array<int, 2>, 4>& pairing) {
    auto nbrs = mesh.vertex_neighbors();
    // route shortest endpoint pairs first
    std::array<int, 4> order{0, 1, 2, 3};
    std::array<double, 4> len{};
    for (int a = 0; a < 4; ++a)
        len[a] = spherical_distance(mesh.positions[mesh.branch_vertex[pairing[a][0]]],
                                    mesh.positions[mesh.branch_vertex[pairing[a][1]]]);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return len[a] < len[b]; });

    double mean_edge = 0;
    int cnt = 0;
    for (const auto& [key, tris] : mesh.edge_triangles()) {
        mean_edge += spherical_distance(mesh.positions[key.first], mesh.positions[key.second]);
        ++cnt;
    }
    mean_edge /= std::max(1, cnt);

    std::set<int> used;
    for (int b : mesh.branch_vertex) used.insert(b);
    std::array<std::vector<int>, 4> arcs;
    for (int a : order) {
        int s = mesh.branch_vertex[pairing[a][0]];
        int t = mesh.branch_vertex[pairing[a][1]];
        std::set<int> forbidden = used;
        forbidden.erase(s);
        auto path = shortest_path(mesh, nbrs, s, t, forbidden, 3.0 * mean_edge);
        if (path.empty()) return false;
        arcs[a] = path;
        for (int v : path) used.insert(v);
    }
    mesh.arcs = arcs;
    mesh.pairing = pairing;
    mesh.arc_of_vertex_.assign(mesh.vertex_count(), -1);
    for (int a = 0; a < 4; ++a)
        for (int v : mesh.arcs[a]) mesh.arc_of_vertex_[v] = a;
    return true;
}

// cross-arc adjacencies; rings around an arc need this to be zero
int arc_contacts(const BaseMesh& mesh) {
    auto nbrs = mesh.vertex_neighbors();
    int contacts = 0;
    for (int a = 0; a < 4; ++a)
        for (int v : mesh.arcs[a])
            for (int u : nbrs[v]) {
                int b = mesh.arc_of_vertex(u);
                if (b >= 0 && b != a) ++contacts;
            }
    return contacts;
}

std::array<std::array<int, 2>, 4> greedy_pairing(const BranchConfig& config) {
    std::vector<std::tuple<double, int, int>> cand;
    for (int i = 0; i < 8; ++i)
        for (int j = i + 1; j < 8; ++j)
            cand.emplace_back(spherical_distance(config.branch_value(i), config.branch_value(j)), i, j);
    std::sort(cand.begin(), cand.end());
    std::array<bool, 8> taken{};
    std::array<std::array<int, 2>, 4> pairing{};
    int next = 0;
    for (const auto& [d, i, j] : cand) {
        if (taken[i] || taken[j]) continue;
        pairing[next++] = {i, j};
        taken[i] = taken[j] = true;
    }
    return pairing;
}

} // namespace

BaseMesh build_base_mesh(const BranchConfig& config, int level) {
    MeshBuild m = icosphere(level + 1);
    BaseMesh mesh;

    std::set<int> claimed;
    std::array<int, 8> ids{};
    for (int i = 0; i < 8; ++i) {
        ids[i] = insert_point(m, config.branch_value(i), claimed);
        claimed.insert(ids[i]);
    }
    // adjacent branch vertices would lift to doubled cover edges between
    // ramification classes; split any joining edge at its midpoint
    std::set<int> branch_ids(ids.begin(), ids.end());
    for (bool changed = true; changed;) {
        changed = false;
        for (int t = 0; t < static_cast<int>(m.tri.size()) && !changed; ++t)
            for (int c = 0; c < 3 && !changed; ++c) {
                int u = m.tri[t][c], v = m.tri[t][(c + 1) % 3];
                if (branch_ids.count(u) && branch_ids.count(v)) {
                    split_edge(m, u, v);
                    changed = true;
                }
            }
    }

    mesh.positions = std::move(m.pos);
    mesh.triangles = std::move(m.tri);
    mesh.branch_vertex = ids;

    if (mesh.euler_characteristic() != 2)
        throw NumericalError("base mesh lost the sphere topology during point insertion");

    // Prefer a contact-free cut system (rings around each arc need a clear
    // collar); the curve itself does not depend on the pairing.
    bool ok_default = route_arcs(mesh, config.pairing);
    int contacts_default = ok_default ? arc_contacts(mesh) : -1;
    if (!ok_default || contacts_default > 0) {
        auto repaired = greedy_pairing(config);
        bool ok_greedy = route_arcs(mesh, repaired);
        if (!ok_greedy) {
            if (ok_default) {
                route_arcs(mesh, config.pairing); // restore the workable system
            } else {
                throw ArcRoutingError("failed to route disjoint cut arcs between pairs (" +
                                          std::to_string(repaired[3][0] + 1) + "," +
                                          std::to_string(repaired[3][1] + 1) + ") after re-pairing",
                                      repaired[3][0], repaired[3][1]);
            }
        } else if (ok_default && arc_contacts(mesh) > contacts_default) {
            route_arcs(mesh, config.pairing);
        }
    }
    return mesh;
}

// ---------------------------------------------------------------------------
// branched double cover
// ---------------------------------------------------------------------------

namespace {

int vertex_chart(const UnitVec3& pos) {
    return spherical_distance(pos, chart_pole) < kChartSplit ? 2 : 1;
}

Complex chart_coordinate(const UnitVec3& pos, int chart) {
    StereoCoord s = sphere_to_stereo(pos);
    if (chart == 1) {
        if (s.infinite) throw NumericalError("chart-1 coordinate requested at the pole");
        return s.zeta;
    }
    if (s.infinite) return Complex{0.0, 0.0};
    if (std::abs(s.zeta) < 1e-12) throw NumericalError("chart-2 coordinate requested at z = 0");
    return 1.0 / s.zeta;
}

// w (chart 1) <-> wt = w / z^4 (chart 2)
Complex convert_w(Complex w, Complex coord_from, int chart_from, int chart_to) {
    if (chart_from == chart_to) return w;
    Complex z = (chart_from == 1) ? coord_from : 1.0 / coord_from;
    Complex z4 = z * z * z * z;
    return (chart_from == 1) ? w / z4 : w * z4;
}

// Analytic continuation of the square root along a straight chart segment:
// each factor's subtended angle at a root is < pi, so principal ratios
// compose to the true branch transport along that segment.
Complex straight_continuation(const BranchConfig& cfg, int chart, Complex from, Complex to) {
    Complex f{1.0, 0.0};
    for (const auto& p : cfg.points) {
        Complex num = (chart == 1) ? (to - p) : (1.0 - p * to);
        Complex den = (chart == 1) ? (from - p) : (1.0 - p * from);
        f *= std::sqrt(num / den);
    }
    return f;
}

double dist_point_segment(Complex p, Complex a, Complex b) {
    Complex ab = b - a;
    double len2 = std::norm(ab);
    if (len2 < 1e-300) return std::abs(p - a);
    double t = std::clamp(((p - a) * std::conj(ab)).real() / len2, 0.0, 1.0);
    return std::abs(p - (a + t * ab));
}

// Branch transport along the GEODESIC edge between two sphere points. Mesh
// edges are geodesics; a snapped branch point can sit closer to an edge
// than the chord-vs-arc sagitta, in which case the straight chart segment
// winds the wrong way around it. Recursive midpoint splitting keeps every
// straight piece homotopic to its sub-arc.
Complex geodesic_continuation(const BranchConfig& cfg, int chart, const UnitVec3& A,
                              const UnitVec3& B, int depth = 0) {
    Complex za = chart_coordinate(A, chart);
    Complex zb = chart_coordinate(B, chart);
    double len = std::abs(zb - za);
    double dmin = 1e300;
    for (const auto& p : cfg.points) {
        Complex root = (chart == 1) ? p : 1.0 / p;
        dmin = std::min(dmin, dist_point_segment(root, za, zb));
    }
    if (dmin >= 0.5 * len || depth >= 40) {
        if (dmin < 1e-11 * std::max(1.0, len))
            throw NumericalError("mesh edge passes through a branch point");
        return straight_continuation(cfg, chart, za, zb);
    }
    UnitVec3 mid = (A + B).normalized();
    return geodesic_continuation(cfg, chart, A, mid, depth + 1) *
           geodesic_continuation(cfg, chart, mid, B, depth + 1);
}

void finalize_edges(SurfaceMesh& mesh) {
    mesh.edges.clear();
    mesh.edge_lengths.clear();
    mesh.edge_crosses_cut.clear();
    mesh.edge_index.clear();
    for (const auto& t : mesh.triangles)
        for (int c = 0; c < 3; ++c) {
            int u = t[c], v = t[(c + 1) % 3];
            auto key = ekey(u, v);
            if (mesh.edge_index.count(key)) continue;
            mesh.edge_index[key] = static_cast<int>(mesh.edges.size());
            mesh.edges.push_back({key.first, key.second});
            mesh.edge_lengths.push_back(
                spherical_distance(mesh.vertices[u].pos, mesh.vertices[v].pos));
            mesh.edge_crosses_cut.push_back(
                mesh.base.is_cut_edge(mesh.vertices[u].base_vertex, mesh.vertices[v].base_vertex));
        }
}

void assign_w(SurfaceMesh& mesh) {
    const auto& cfg = mesh.config;
    const int n = mesh.vertex_count();
    std::vector<std::vector<int>> nbrs(n);
    for (const auto& e : mesh.edges) {
        nbrs[e[0]].push_back(e[1]);
        nbrs[e[1]].push_back(e[0]);
    }

    std::vector<char> assigned(n, 0);
    for (int v : mesh.ramification_vertices) {
        mesh.vertices[v].w = Complex{0.0, 0.0};
        assigned[v] = 1;
    }

    // seed: sheet-0 vertex farthest from the branch locus
    int seed = -1;
    double best = -1;
    for (int v = 0; v < n; ++v) {
        if (mesh.vertices[v].sheet != 0 || mesh.vertices[v].is_ramification || mesh.vertices[v].on_cut)
            continue;
        double d = 1e30;
        for (int i = 0; i < 8; ++i)
            d = std::min(d, spherical_distance(mesh.vertices[v].pos, cfg.branch_value(i)));
        if (d > best) {
            best = d;
            seed = v;
        }
    }
    if (seed < 0) throw NumericalError("no seed vertex for sheet tracking");
    mesh.vertices[seed].w = std::sqrt(curve_poly(cfg, mesh.vertices[seed].chart, mesh.vertices[seed].coord));
    assigned[seed] = 1;

    std::queue<int> bfs;
    bfs.push(seed);
    while (!bfs.empty()) {
        int u = bfs.front();
        bfs.pop();
        const auto& vu = mesh.vertices[u];
        for (int vi : nbrs[u]) {
            auto& vv = mesh.vertices[vi];
            if (vv.is_ramification) continue;
            // continuation chart: 1 when both coordinates are moderate
            double zu = (vu.chart == 1) ? std::abs(vu.coord) : 1.0 / std::abs(vu.coord);
            double zv = (vv.chart == 1) ? std::abs(vv.coord) : 1.0 / std::abs(vv.coord);
            int cc = (std::max(zu, zv) <= 3.0) ? 1 : 2;
            Complex cv = (vv.chart == cc) ? vv.coord : 1.0 / vv.coord;
            Complex wu = convert_w(vu.w, vu.coord, vu.chart, cc);
            Complex cont = wu * geodesic_continuation(cfg, cc, vu.pos, vv.pos);
            Complex cont_own = convert_w(cont, cv, cc, vv.chart);
            Complex exact = std::sqrt(curve_poly(cfg, vv.chart, vv.coord));
            Complex snapped = (std::abs(cont_own - exact) <= std::abs(cont_own + exact)) ? exact : -exact;
            if (!assigned[vi]) {
                if (std::abs(exact) > 0 && std::abs(cont_own - snapped) > 0.5 * std::abs(exact))
                    throw NumericalError("sheet tracking too coarse near a ramification point; "
                                         "increase the mesh level");
                vv.w = snapped;
                assigned[vi] = 1;
                bfs.push(vi);
            } else if (!vv.is_ramification) {
                if (std::abs(cont_own - vv.w) > std::abs(cont_own + vv.w)) {
                    if (std::getenv("CGLAB_DEBUG_GLUING")) {
                        std::fprintf(stderr,
                                     "gluing mismatch on edge %d->%d: base %d->%d, charts %d/%d, "
                                     "sheets %d/%d, on_cut %d/%d, z_u=%g%+gi z_v=%g%+gi cont=%g%+gi "
                                     "wv=%g%+gi\n",
                                     u, vi, vu.base_vertex, vv.base_vertex, vu.chart, vv.chart,
                                     vu.sheet, vv.sheet, int(vu.on_cut), int(vv.on_cut),
                                     vu.coord.real(), vu.coord.imag(), vv.coord.real(),
                                     vv.coord.imag(), cont_own.real(), cont_own.imag(), vv.w.real(),
                                     vv.w.imag());
                    }
                    throw NumericalError("inconsistent sheet gluing detected (internal error)");
                }
            }
        }
    }
    for (int v = 0; v < n; ++v)
        if (!assigned[v]) throw NumericalError("cover is not connected (internal error)");
}

} // namespace

int SurfaceMesh::euler_characteristic() const {
    return vertex_count() - static_cast<int>(edges.size()) + static_cast<int>(triangles.size());
}

int SurfaceMesh::edge_between(int u, int v) const {
    auto it = edge_index.find(ekey(u, v));
    return it == edge_index.end() ? -1 : it->second;
}

double SurfaceMesh::intrinsic_length(int u, int v) const {
    int e = edge_between(u, v);
    if (e < 0) throw ValidationError("queried length of a non-edge");
    return edge_lengths[e];
}

SurfaceMesh build_branched_double_cover(const BranchConfig& config, const BaseMesh& base) {
    const int F = base.triangle_count();
    for (const auto& arc : base.arcs)
        if (arc.size() < 3)
            throw NumericalError("cut arc with no interior vertex (doubled cover edge)");
    auto slot = [&](int t, int c, int s) { return (t * 3 + c) * 2 + s; };

    std::set<int> branch_set(base.branch_vertex.begin(), base.branch_vertex.end());
    UnionFind uf(static_cast<std::size_t>(F) * 6);
    for (const auto& [key, tris] : base.edge_triangles()) {
        if (tris[1] < 0) throw NumericalError("base mesh has a boundary edge (internal error)");
        int cut = base.is_cut_edge(key.first, key.second) ? 1 : 0;
        for (int endpoint : {key.first, key.second}) {
            int c1 = -1, c2 = -1;
            for (int c = 0; c < 3; ++c) {
                if (base.triangles[tris[0]][c] == endpoint) c1 = c;
                if (base.triangles[tris[1]][c] == endpoint) c2 = c;
            }
            for (int s = 0; s < 2; ++s) uf.unite(slot(tris[0], c1, s), slot(tris[1], c2, s ^ cut));
        }
    }

    SurfaceMesh mesh;
    mesh.config = config;
    mesh.base = base;
    std::vector<int> root_to_id(static_cast<std::size_t>(F) * 6, -1);
    for (int t = 0; t < F; ++t)
        for (int c = 0; c < 3; ++c)
            for (int s = 0; s < 2; ++s) {
                int r = uf.find(slot(t, c, s));
                if (root_to_id[r] >= 0) continue;
                root_to_id[r] = mesh.vertex_count();
                CoverVertex cv;
                cv.base_vertex = base.triangles[t][c];
                cv.pos = base.positions[cv.base_vertex];
                cv.sheet = s;
                cv.is_ramification = branch_set.count(cv.base_vertex) > 0;
                cv.on_cut = base.arc_of_vertex(cv.base_vertex) >= 0;
                cv.chart = vertex_chart(cv.pos);
                cv.coord = chart_coordinate(cv.pos, cv.chart);
                mesh.vertices.push_back(cv);
            }

    mesh.triangles.reserve(2 * F);
    for (int s = 0; s < 2; ++s)
        for (int t = 0; t < F; ++t) {
            mesh.triangles.push_back({root_to_id[uf.find(slot(t, 0, s))],
                                      root_to_id[uf.find(slot(t, 1, s))],
                                      root_to_id[uf.find(slot(t, 2, s))]});
            mesh.tri_base.push_back(t);
            mesh.tri_sheet.push_back(s);
        }

    // per-base lifts and ramification bookkeeping
    mesh.base_to_cover.assign(base.vertex_count(), {-1, -1});
    for (int v = 0; v < mesh.vertex_count(); ++v) {
        const auto& cv = mesh.vertices[v];
        auto& pair = mesh.base_to_cover[cv.base_vertex];
        if (cv.is_ramification) {
            pair = {v, v};
        } else if (cv.on_cut) {
            if (pair[0] < 0)
                pair[0] = v;
            else
                pair[1] = v;
        } else {
            pair[cv.sheet] = v;
        }
        if (cv.is_ramification) mesh.ramification_vertices.push_back(v);
    }
    std::sort(mesh.ramification_vertices.begin(), mesh.ramification_vertices.end());
    mesh.ramification_vertices.erase(
        std::unique(mesh.ramification_vertices.begin(), mesh.ramification_vertices.end()),
        mesh.ramification_vertices.end());
    if (static_cast<int>(mesh.ramification_vertices.size()) != 8)
        throw NumericalError("expected 8 ramification vertices, found " +
                             std::to_string(mesh.ramification_vertices.size()));
    if (mesh.vertex_count() != 2 * base.vertex_count() - 8)
        throw NumericalError("cover vertex count mismatch (non-manifold gluing?)");

    finalize_edges(mesh);
    if (mesh.euler_characteristic() != -4)
        throw NumericalError("cover Euler characteristic is " +
                             std::to_string(mesh.euler_characteristic()) + ", expected -4");

    // involution: swap the sheet bit of any representative slot
    mesh.involution.assign(mesh.vertex_count(), -1);
    for (int t = 0; t < F; ++t)
        for (int c = 0; c < 3; ++c)
            for (int s = 0; s < 2; ++s)
                mesh.involution[root_to_id[uf.find(slot(t, c, s))]] =
                    root_to_id[uf.find(slot(t, c, 1 - s))];

    mesh.covering_degree = 2;
    assign_w(mesh);
    return mesh;
}

SurfaceMesh build_surface(const BranchConfig& config) {
    return build_branched_double_cover(config, build_base_mesh(config, config.mesh_level));
}

std::vector<int> sheet_involution(const SurfaceMesh& mesh) {
    if (!mesh.has_involution())
        throw ValidationError("sheet involution is only defined on the double cover");
    return mesh.involution;
}

// ---------------------------------------------------------------------------
// cyclic covers
// ---------------------------------------------------------------------------

SurfaceMesh cyclic_unramified_cover(const SurfaceMesh& mesh, const HomologyLoop& loop, int k) {
    if (k < 1) throw ValidationError("cyclic cover parameter k must be >= 1");
    const int m = static_cast<int>(loop.vertices.size());
    if (m < 3) throw ValidationError("loop too short");
    {
        std::set<int> uniq(loop.vertices.begin(), loop.vertices.end());
        if (static_cast<int>(uniq.size()) != m) throw ValidationError("loop is not simple");
    }

    // edge -> incident cover triangles
    std::map<std::pair<int, int>, std::array<int, 2>> etri;
    for (int t = 0; t < static_cast<int>(mesh.triangles.size()); ++t)
        for (int c = 0; c < 3; ++c) {
            auto key = ekey(mesh.triangles[t][c], mesh.triangles[t][(c + 1) % 3]);
            auto it = etri.find(key);
            if (it == etri.end())
                etri[key] = {t, -1};
            else
                it->second[1] = t;
        }

    // crossing shift per ordered triangle pair over a loop edge
    std::map<std::pair<int, int>, int> shift; // (t_from, t_to) -> +-1
    for (int i = 0; i < m; ++i) {
        int u = loop.vertices[i], v = loop.vertices[(i + 1) % m];
        auto it = etri.find(ekey(u, v));
        if (it == etri.end() || it->second[1] < 0)
            throw ValidationError("loop step " + std::to_string(i) + " is not a mesh edge");
        int left = -1, right = -1;
        for (int t : it->second) {
            const auto& tr = mesh.triangles[t];
            for (int c = 0; c < 3; ++c)
                if (tr[c] == u && tr[(c + 1) % 3] == v) left = t;
        }
        right = (it->second[0] == left) ? it->second[1] : it->second[0];
        if (left < 0) throw NumericalError("loop edge orientation lookup failed");
        shift[{left, right}] = 1;
        shift[{right, left}] = -1;
    }

    const int F = static_cast<int>(mesh.triangles.size());
    auto slot = [&](int t, int c, int s) { return (t * 3 + c) * k + s; };
    UnionFind uf(static_cast<std::size_t>(F) * 3 * k);
    for (const auto& [key, tris] : etri) {
        int t1 = tris[0], t2 = tris[1];
        if (t2 < 0) throw NumericalError("cover has a boundary edge (internal error)");
        int d12 = 0;
        if (auto it = shift.find({t1, t2}); it != shift.end()) d12 = it->second;
        for (int endpoint : {key.first, key.second}) {
            int c1 = -1, c2 = -1;
            for (int c = 0; c < 3; ++c) {
                if (mesh.triangles[t1][c] == endpoint) c1 = c;
                if (mesh.triangles[t2][c] == endpoint) c2 = c;
            }
            for (int s = 0; s < k; ++s)
                uf.unite(slot(t1, c1, s), slot(t2, c2, ((s + d12) % k + k) % k));
        }
    }

    SurfaceMesh out;
    out.config = mesh.config;
    out.base = mesh.base;
    out.covering_degree = mesh.covering_degree * k;

    std::vector<int> root_to_id(static_cast<std::size_t>(F) * 3 * k, -1);
    for (int t = 0; t < F; ++t)
        for (int c = 0; c < 3; ++c)
            for (int s = 0; s < k; ++s) {
                int r = uf.find(slot(t, c, s));
                if (root_to_id[r] >= 0) continue;
                root_to_id[r] = out.vertex_count();
                CoverVertex cv = mesh.vertices[mesh.triangles[t][c]];
                out.vertices.push_back(cv);
                if (cv.is_ramification) out.ramification_vertices.push_back(root_to_id[r]);
            }
    for (int s = 0; s < k; ++s)
        for (int t = 0; t < F; ++t) {
            out.triangles.push_back({root_to_id[uf.find(slot(t, 0, s))],
                                     root_to_id[uf.find(slot(t, 1, s))],
                                     root_to_id[uf.find(slot(t, 2, s))]});
            out.tri_base.push_back(mesh.tri_base[t]);
            out.tri_sheet.push_back(mesh.tri_sheet[t]);
        }

    if (out.vertex_count() != k * mesh.vertex_count())
        throw NumericalError("cyclic cover is ramified somewhere (internal error)");
    finalize_edges(out);
    if (out.euler_characteristic() != k * mesh.euler_characteristic())
        throw NumericalError("cyclic cover Euler characteristic mismatch");

    // connectivity <=> the loop is non-separating
    std::vector<char> seen(out.vertex_count(), 0);
    std::queue<int> bfs;
    bfs.push(0);
    seen[0] = 1;
    int reached = 1;
    std::vector<std::vector<int>> nbrs(out.vertex_count());
    for (const auto& e : out.edges) {
        nbrs[e[0]].push_back(e[1]);
        nbrs[e[1]].push_back(e[0]);
    }
    while (!bfs.empty()) {
        int v = bfs.front();
        bfs.pop();
        for (int u : nbrs[v])
            if (!seen[u]) {
                seen[u] = 1;
                ++reached;
                bfs.push(u);
            }
    }
    if (reached != out.vertex_count())
        throw SeparatingLoopError("cut loop separates the surface; the cyclic cover is disconnected");
    return out;
}

// ---------------------------------------------------------------------------
// homology loops
// ---------------------------------------------------------------------------

HomologyLoop ring_loop_around_arc(const SurfaceMesh& mesh, int arc, int sheet, int ring) {
    if (arc < 0 || arc > 3) throw ValidationError("arc index out of range");
    if (!mesh.has_involution())
        throw ValidationError("homology rings need the double cover");
    const BaseMesh& base = mesh.base;
    auto nbrs = base.vertex_neighbors();

    // vertices within graph distance <= ring-1 of the arc
    std::set<int> region(base.arcs[arc].begin(), base.arcs[arc].end());
    for (int grow = 1; grow < ring; ++grow) {
        std::set<int> next = region;
        for (int v : region)
            for (int u : nbrs[v]) next.insert(u);
        region = next;
    }

    std::set<int> region_tris;
    for (int t = 0; t < base.triangle_count(); ++t)
        for (int c = 0; c < 3; ++c)
            if (region.count(base.triangles[t][c])) {
                region_tris.insert(t);
                break;
            }

    // boundary edges = edges incident to exactly one region triangle
    std::map<int, std::vector<int>> adj;
    for (const auto& [key, tris] : base.edge_triangles()) {
        bool t0in = region_tris.count(tris[0]) > 0;
        bool t1in = tris[1] >= 0 && region_tris.count(tris[1]) > 0;
        if (t0in != t1in) {
            adj[key.first].push_back(key.second);
            adj[key.second].push_back(key.first);
        }
    }
    for (const auto& [v, ns] : adj)
        if (ns.size() != 2)
            throw NumericalError("homology ring is not a simple cycle; increase the mesh level");
    if (adj.empty()) throw NumericalError("homology ring construction found no boundary");

    std::vector<int> cycle;
    int start = adj.begin()->first;
    int prev = -1, cur = start;
    do {
        cycle.push_back(cur);
        int nxt = (adj[cur][0] == prev) ? adj[cur][1] : adj[cur][0];
        prev = cur;
        cur = nxt;
        if (cycle.size() > adj.size() + 1)
            throw NumericalError("homology ring walk failed to close");
    } while (cur != start);
    if (cycle.size() != adj.size())
        throw NumericalError("homology ring has several components; increase the mesh level");

    for (int v : cycle)
        if (base.arc_of_vertex(v) >= 0)
            throw NumericalError("homology ring touches a cut arc; increase the mesh level");

    // consistent orientation: positive winding seen from the arc midpoint
    UnitVec3 center = base.positions[base.arcs[arc][base.arcs[arc].size() / 2]];
    Eigen::Vector3d cn = center.eigen();
    double winding = 0;
    auto angle_of = [&](int v) {
        Eigen::Vector3d p = base.positions[v].eigen();
        Eigen::Vector3d t = p - p.dot(cn) * cn;
        Eigen::Vector3d e1 = cn.unitOrthogonal();
        Eigen::Vector3d e2 = cn.cross(e1);
        return std::atan2(t.dot(e2), t.dot(e1));
    };
    for (std::size_t i = 0; i < cycle.size(); ++i) {
        double da = angle_of(cycle[(i + 1) % cycle.size()]) - angle_of(cycle[i]);
        while (da > M_PI) da -= 2 * M_PI;
        while (da < -M_PI) da += 2 * M_PI;
        winding += da;
    }
    if (winding < 0) std::reverse(cycle.begin(), cycle.end());

    HomologyLoop loop;
    loop.arc = arc;
    loop.sheet = sheet;
    for (int v : cycle) {
        int lift = mesh.base_to_cover[v][sheet];
        if (lift < 0 || mesh.vertices[lift].on_cut || mesh.vertices[lift].is_ramification)
            throw NumericalError("homology ring lift is ambiguous; increase the mesh level");
        loop.vertices.push_back(lift);
    }
    for (std::size_t i = 0; i < loop.vertices.size(); ++i)
        if (mesh.edge_between(loop.vertices[i], loop.vertices[(i + 1) % loop.vertices.size()]) < 0)
            throw NumericalError("homology ring lift is not an edge path (internal error)");
    return loop;
}

std::vector<HomologyLoop> homology_loops(const SurfaceMesh& mesh) {
    std::vector<HomologyLoop> loops;
    for (int arc = 0; arc < 3; ++arc)
        for (int sheet = 0; sheet < 2; ++sheet) {
            int ring = 1;
            for (;; ++ring) {
                try {
                    loops.push_back(ring_loop_around_arc(mesh, arc, sheet, ring));
                    break;
                } catch (const NumericalError&) {
                    if (ring >= 3) throw;
                }
            }
        }
    return loops;
}

// ---------------------------------------------------------------------------
// calibration sphere and exports
// ---------------------------------------------------------------------------

SurfaceMesh build_calibration_sphere(int level) {
    MeshBuild m = icosphere(level + 1);
    SurfaceMesh mesh;
    mesh.covering_degree = 1;
    mesh.base.positions = m.pos;
    mesh.base.triangles = m.tri;
    mesh.vertices.reserve(m.pos.size());
    for (int v = 0; v < static_cast<int>(m.pos.size()); ++v) {
        CoverVertex cv;
        cv.base_vertex = v;
        cv.pos = m.pos[v];
        cv.chart = vertex_chart(cv.pos);
        cv.coord = chart_coordinate(cv.pos, cv.chart);
        cv.w = Complex{1.0, 0.0};
        mesh.vertices.push_back(cv);
        mesh.base_to_cover.push_back({v, v});
    }
    mesh.triangles = m.tri;
    mesh.tri_base.resize(m.tri.size());
    std::iota(mesh.tri_base.begin(), mesh.tri_base.end(), 0);
    mesh.tri_sheet.assign(m.tri.size(), 0);
    finalize_edges(mesh);
    return mesh;
}

std::string export_off(const SurfaceMesh& mesh) {
    std::ostringstream os;
    os.precision(17);
    os << "OFF\n# branched cover over the sphere; columns after '#' per vertex: sheet chart re(z) im(z) re(w) im(w) ram\n";
    os << mesh.vertex_count() << " " << mesh.triangles.size() << " 0\n";
    for (const auto& v : mesh.vertices) {
        os << v.pos.x << " " << v.pos.y << " " << v.pos.z << " # " << v.sheet << " " << v.chart
           << " " << v.coord.real() << " " << v.coord.imag() << " " << v.w.real() << " "
           << v.w.imag() << " " << (v.is_ramification ? 1 : 0) << "\n";
    }
    for (const auto& t : mesh.triangles) os << "3 " << t[0] << " " << t[1] << " " << t[2] << "\n";
    return os.str();
}

std::string export_vertex_csv(const SurfaceMesh& mesh) {
    std::ostringstream os;
    os.precision(17);
    os << "index,chart,re_z,im_z,re_w,im_w,sheet,is_ramification\n";
    for (int v = 0; v < mesh.vertex_count(); ++v) {
        const auto& cv = mesh.vertices[v];
        os << v << "," << cv.chart << "," << cv.coord.real() << "," << cv.coord.imag() << ","
           << cv.w.real() << "," << cv.w.imag() << "," << cv.sheet << ","
           << (cv.is_ramification ? 1 : 0) << "\n";
    }
    return os.str();
}

} // namespace cglab
