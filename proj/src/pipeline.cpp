#include "cglab/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "cglab/errors.hpp"
#include "cglab/fields.hpp"
#include "cglab/util.hpp"

namespace cglab {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::vector<double> split_numbers(const std::string& s, int line_no) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            double v = std::stod(item, &used);
            while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) ++used;
            if (used != item.size()) throw std::invalid_argument(item);
            out.push_back(v);
        } catch (const std::exception&) {
            throw ValidationError("line " + std::to_string(line_no) + ": cannot parse number '" + item + "'");
        }
    }
    return out;
}

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    auto e = s.find_last_not_of(" \t\r");
    if (b == std::string::npos) return "";
    return s.substr(b, e - b + 1);
}

} // namespace

RawBranchInput parse_config_text(const std::string& text) {
    RawBranchInput raw;
    std::array<std::optional<StereoCoord>, 8> points;
    std::istringstream is(text);
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ValidationError("line " + std::to_string(line_no) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));

        if (key.rfind("point", 0) == 0) {
            int idx = 0;
            try {
                idx = std::stoi(key.substr(5));
            } catch (const std::exception&) {
                throw ValidationError("line " + std::to_string(line_no) + ": bad point key '" + key + "'");
            }
            if (idx < 1 || idx > 8)
                throw ValidationError("line " + std::to_string(line_no) + ": point index must be 1..8");
            if (points[idx - 1])
                throw ValidationError("line " + std::to_string(line_no) + ": point" +
                                      std::to_string(idx) + " given twice");
            if (value == "inf" || value == "infinity") {
                points[idx - 1] = StereoCoord::infinity();
            } else {
                auto nums = split_numbers(value, line_no);
                if (nums.size() == 2)
                    points[idx - 1] = StereoCoord(nums[0], nums[1]);
                else if (nums.size() == 3) {
                    // accept hand-typed triples to ~1e-6 and renormalize
                    UnitVec3 v{nums[0], nums[1], nums[2]};
                    if (std::abs(v.norm() - 1.0) > 1e-6)
                        throw ValidationError("line " + std::to_string(line_no) +
                                              ": point triple is not a unit vector");
                    points[idx - 1] = sphere_to_stereo(v.normalized());
                } else
                    throw ValidationError("line " + std::to_string(line_no) +
                                          ": a point needs 2 (re,im) or 3 (x,y,z) numbers");
            }
        } else if (key == "alpha_prime") {
            raw.alpha_prime = split_numbers(value, line_no).at(0);
        } else if (key == "mesh_level") {
            raw.mesh_level = static_cast<int>(split_numbers(value, line_no).at(0));
        } else if (key == "pairing") {
            std::array<std::array<int, 2>, 4> pairing{};
            std::stringstream ps(value);
            std::string tok;
            int k = 0;
            while (std::getline(ps, tok, ',')) {
                tok = trim(tok);
                auto dash = tok.find('-');
                if (dash == std::string::npos || k >= 4)
                    throw ValidationError("line " + std::to_string(line_no) +
                                          ": pairing wants 4 entries like 1-2,3-4,5-6,7-8");
                try {
                    pairing[k][0] = std::stoi(tok.substr(0, dash)) - 1;
                    pairing[k][1] = std::stoi(tok.substr(dash + 1)) - 1;
                } catch (const std::exception&) {
                    throw ValidationError("line " + std::to_string(line_no) + ": bad pairing entry '" + tok + "'");
                }
                ++k;
            }
            if (k != 4)
                throw ValidationError("line " + std::to_string(line_no) + ": pairing wants 4 entries");
            raw.pairing = pairing;
        } else {
            throw ValidationError("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
        }
    }
    for (int i = 0; i < 8; ++i)
        if (points[i]) raw.points.push_back(*points[i]);
    if (raw.points.size() != 8) {
        std::ostringstream os;
        os << "config defines " << raw.points.size() << " of the 8 required points (missing:";
        for (int i = 0; i < 8; ++i)
            if (!points[i]) os << " point" << i + 1;
        os << ")";
        throw ValidationError(os.str());
    }
    return raw;
}

RawBranchInput parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

std::string config_hash(const BranchConfig& config, int cover_k) {
    Fnv1a h;
    h.feed("cglab-config-v1");
    for (const auto& p : config.points) {
        h.feed(fmt(p.real()) + "," + fmt(p.imag()) + ";");
    }
    h.feed("alpha=" + fmt(config.alpha_prime));
    h.feed("level=" + std::to_string(config.mesh_level));
    for (const auto& pr : config.pairing)
        h.feed("pair=" + std::to_string(pr[0]) + "-" + std::to_string(pr[1]));
    h.feed("cover=" + std::to_string(cover_k));
    return h.hex();
}

namespace {

struct SamplePoint {
    PointFrame frame;
    double f;
    Complex df;
};

// Random smooth curve points (both sheets) away from the branch locus.
std::vector<SamplePoint> sample_points(const BranchConfig& cfg, int count, std::uint64_t seed) {
    std::vector<SamplePoint> out;
    Rng rng(seed);
    while (static_cast<int>(out.size()) < count) {
        Complex z(rng.uniform(-2.2, 2.2), rng.uniform(-2.2, 2.2));
        Complex P = curve_poly(cfg, 1, z);
        if (std::abs(P) < 1e-3) continue;
        bool near = false;
        for (const auto& p : cfg.points)
            if (std::abs(z - p) < 0.05) near = true;
        if (near) continue;
        Complex w = std::sqrt(P);
        if (rng.uniform() < 0.5) w = -w;
        SamplePoint sp{evaluate_frame(cfg, 1, z, w), rng.uniform(-0.6, 0.6),
                       Complex(rng.uniform(-0.4, 0.4), rng.uniform(-0.4, 0.4))};
        out.push_back(std::move(sp));
    }
    return out;
}

std::vector<IdentityResidual> merge_max(std::vector<IdentityResidual> acc,
                                        const std::vector<IdentityResidual>& next) {
    if (acc.empty()) return next;
    for (std::size_t i = 0; i < acc.size(); ++i)
        acc[i].residual = std::max(acc[i].residual, next[i].residual);
    return acc;
}

PeriodChecks run_period_checks(const SurfaceMesh& mesh) {
    PeriodChecks pc;
    auto loops = homology_loops(mesh);
    for (const auto& loop : loops)
        for (int j = 1; j <= 3; ++j) pc.periods.push_back(period_integral(mesh, loop, j));

    for (int arc = 0; arc < 3; ++arc) {
        HomologyLoop inner = ring_loop_around_arc(mesh, arc, 0, 1);
        HomologyLoop outer = ring_loop_around_arc(mesh, arc, 0, 2);
        for (int j = 1; j <= 3; ++j) {
            Complex a = period_integral(mesh, inner, j);
            Complex b = period_integral(mesh, outer, j);
            pc.homologous_rel_diff =
                std::max(pc.homologous_rel_diff, std::abs(a - b) / std::max(1.0, std::abs(a)));
        }
    }

    // a triangle boundary is contractible
    for (int t = 0; t < static_cast<int>(mesh.triangles.size()); ++t) {
        const auto& tr = mesh.triangles[t];
        bool clean = true;
        for (int c = 0; c < 3; ++c)
            if (mesh.vertices[tr[c]].is_ramification) clean = false;
        if (!clean) continue;
        HomologyLoop tri;
        tri.vertices = {tr[0], tr[1], tr[2]};
        for (int j = 1; j <= 3; ++j)
            pc.contractible_abs = std::max(pc.contractible_abs,
                                           std::abs(period_integral(mesh, tri, j)));
        break;
    }
    return pc;
}

} // namespace

RunReport run_pipeline(const RunOptions& options) {
    const auto t0 = std::chrono::steady_clock::now();
    static const std::vector<std::string> known = {"mesh", "spectrum", "solve", "verify", "report"};
    if (std::find(known.begin(), known.end(), options.subcommand) == known.end())
        throw ValidationError("unknown subcommand '" + options.subcommand + "'");

    RawBranchInput raw = parse_config_file(options.config_path);
    if (options.level_override >= 0) raw.mesh_level = options.level_override;
    BranchConfig config = validate_config(raw);
    if (options.cover_k < 1) throw ValidationError("--cover must be >= 1");
    if (options.eigs < 1 || options.eigs > 30) throw ValidationError("--eigs must be in [1, 30]");
    if (options.samples < 1) throw ValidationError("--samples must be >= 1");

    RunReport rep;
    rep.config = config;
    rep.cover_k = options.cover_k;
    rep.config_hash = config_hash(config, options.cover_k);
    {
        auto values = config.branch_values();
        rep.hemisphere = hemisphere_margin(std::span<const UnitVec3>(values.data(), 8));
    }

    SurfaceMesh mesh = build_surface(config);
    if (options.cover_k > 1) {
        HomologyLoop loop = homology_loops(mesh)[0];
        mesh = cyclic_unramified_cover(mesh, loop, options.cover_k);
    }
    rep.vertex_count = mesh.vertex_count();
    rep.edge_count = static_cast<int>(mesh.edges.size());
    rep.face_count = static_cast<int>(mesh.triangles.size());
    rep.euler = mesh.euler_characteristic();
    rep.genus = mesh.genus();
    rep.covering_degree = mesh.covering_degree;

    const bool want_spectrum = options.subcommand == "spectrum" || options.subcommand == "report";
    const bool want_solution = options.subcommand == "solve" || options.subcommand == "report";
    const bool want_identities = options.subcommand == "verify" || options.subcommand == "report";

    if (want_spectrum) {
        LanczosOptions lo;
        lo.budget_rounds = options.lanczos_budget;
        rep.spectral = spectral_report(mesh, options.eigs, lo);
    }
    if (want_solution) {
        // `solve` propagates NoAdmissibleU; `report` records infeasibility
        // without failing (the condition being violated IS the report)
        if (options.subcommand == "solve" || rep.hemisphere.feasible)
            rep.solution = full_solve(mesh, options.u_scale);
    }
    if (want_identities) {
        auto samples = sample_points(config, options.samples, options.seed);
        std::vector<IdentityResidual> alg, diff;
        for (const auto& sp : samples) {
            AnsatzFrame af = assemble_point_structures(sp.frame, sp.f, sp.df);
            alg = merge_max(std::move(alg), verify_algebraic_identities(af));
            diff = merge_max(std::move(diff), verify_differential_identities(af));
        }
        rep.identities = alg;
        rep.identities.insert(rep.identities.end(), diff.begin(), diff.end());
        if (mesh.covering_degree == 2) rep.periods = run_period_checks(mesh);
    }

    rep.mesh = std::move(mesh);
    rep.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

// ---------------------------------------------------------------------------
// exports and summaries
// ---------------------------------------------------------------------------

std::string machine_summary(const RunReport& rep) {
    std::ostringstream os;
    os << "config_hash=" << rep.config_hash << "\n";
    os << "alpha_prime=" << fmt(rep.config.alpha_prime) << "\n";
    os << "mesh_level=" << rep.config.mesh_level << "\n";
    os << "cover_k=" << rep.cover_k << "\n";
    for (int i = 0; i < 8; ++i)
        os << "point" << i + 1 << "=" << fmt(rep.config.points[i].real()) << ","
           << fmt(rep.config.points[i].imag()) << "\n";
    os << "vertices=" << rep.vertex_count << "\n";
    os << "edges=" << rep.edge_count << "\n";
    os << "faces=" << rep.face_count << "\n";
    os << "euler_characteristic=" << rep.euler << "\n";
    os << "genus=" << rep.genus << "\n";
    os << "covering_degree=" << rep.covering_degree << "\n";
    os << "hemisphere_feasible=" << (rep.hemisphere.feasible ? 1 : 0) << "\n";
    os << "hemisphere_margin=" << fmt(rep.hemisphere.margin) << "\n";
    os << "hemisphere_direction=" << fmt(rep.hemisphere.direction.x) << ","
       << fmt(rep.hemisphere.direction.y) << "," << fmt(rep.hemisphere.direction.z) << "\n";
    if (rep.spectral) {
        os << "index=" << rep.spectral->index << "\n";
        os << "index_fallback=" << (rep.spectral->index_used_fallback ? 1 : 0) << "\n";
        os << "kernel_multiplicity=" << rep.spectral->kernel_multiplicity << "\n";
        os << "kernel_window_delta=" << fmt(rep.spectral->delta) << "\n";
        os << "kernel_projection_residual=" << fmt(rep.spectral->kernel_projection_residual) << "\n";
        os << "total_mass=" << fmt(rep.spectral->total_mass) << "\n";
        for (int i = 0; i < rep.spectral->eigenvalues.size(); ++i)
            os << "eigenvalue" << i << "=" << fmt(rep.spectral->eigenvalues[i]) << "\n";
    }
    if (rep.solution) {
        const auto& s = *rep.solution;
        os << "strominger_solved=1\n";
        os << "u_coefficients=" << fmt(s.c.x) << "," << fmt(s.c.y) << "," << fmt(s.c.z) << "\n";
        os << "u_margin=" << fmt(s.margin) << "\n";
        os << "residual_quadratic=" << fmt(s.residuals.quadratic_max) << "\n";
        os << "residual_pde_pointwise=" << fmt(s.residuals.pde_pointwise_max) << "\n";
        os << "residual_fem=" << fmt(s.residuals.fem_residual) << "\n";
        os << "min_u_at_ramification=" << fmt(s.residuals.min_u_at_ramification) << "\n";
        os << "max_ef=" << fmt(s.residuals.max_ef) << "\n";
        os << "max_ef_bound=" << fmt(s.residuals.ef_bound) << "\n";
    } else {
        os << "strominger_solved=0\n";
    }
    for (const auto& idr : rep.identities)
        os << "identity." << idr.name << "=" << fmt(idr.residual) << "\n";
    if (rep.periods) {
        os << "periods_homologous_rel_diff=" << fmt(rep.periods->homologous_rel_diff) << "\n";
        os << "periods_contractible_abs=" << fmt(rep.periods->contractible_abs) << "\n";
        for (std::size_t i = 0; i < rep.periods->periods.size(); ++i)
            os << "period" << i << "=" << fmt(rep.periods->periods[i].real()) << ","
               << fmt(rep.periods->periods[i].imag()) << "\n";
    }
    return os.str();
}

std::string summarize(const RunReport& rep) {
    std::ostringstream os;
    os.precision(6);
    os << "cglab " << rep.config_hash << "  (alpha' = " << rep.config.alpha_prime
       << ", level " << rep.config.mesh_level << ", cover k = " << rep.cover_k << ")\n";
    os << "mesh: V=" << rep.vertex_count << " E=" << rep.edge_count << " F=" << rep.face_count
       << "  chi=" << rep.euler << "  genus=" << rep.genus << "  deg phi=" << rep.covering_degree
       << "\n";
    char buf[160];
    std::snprintf(buf, sizeof(buf), "hemisphere: %s (margin %.3f)",
                  rep.hemisphere.feasible ? "FEASIBLE" : "INFEASIBLE", rep.hemisphere.margin);
    os << buf << "\n";
    const int deg = rep.covering_degree;
    const int tysk = static_cast<int>(std::floor(7.68183 * deg));
    if (rep.spectral) {
        os << "index: " << rep.spectral->index << "  (hemisphere bound: index >= " << deg
           << " when feasible; Tysk bound: index <= " << tysk << ")\n";
        os << "kernel multiplicity: " << rep.spectral->kernel_multiplicity
           << "  (>= 3 expected; window delta = " << rep.spectral->delta
           << ", projection residual " << rep.spectral->kernel_projection_residual << ")\n";
        os << "total omega_phi mass: " << rep.spectral->total_mass << "  (4 pi deg = "
           << 4.0 * M_PI * deg << ")\n";
    }
    if (rep.solution) {
        const auto& s = *rep.solution;
        std::snprintf(buf, sizeof(buf),
                      "strominger: solved with c = (%.4f, %.4f, %.4f), margin %.3f", s.c.x, s.c.y,
                      s.c.z, s.margin);
        os << buf << "\n";
        os << "  residuals: quadratic " << s.residuals.quadratic_max << ", pde "
           << s.residuals.pde_pointwise_max << ", fem " << s.residuals.fem_residual
           << ", min u(ram) " << s.residuals.min_u_at_ramification << "\n";
    } else if (!rep.hemisphere.feasible) {
        if (rep.spectral && rep.spectral->index < deg)
            os << "strominger: index " << rep.spectral->index << " < deg " << deg
               << ": Strominger ansatz unsolvable\n";
        else
            os << "strominger: hemisphere condition fails: Strominger ansatz unsolvable\n";
    }
    if (!rep.identities.empty()) {
        double worst = 0;
        for (const auto& idr : rep.identities) worst = std::max(worst, idr.residual);
        os << "identities: " << rep.identities.size() << " checked, max residual " << worst << "\n";
    }
    if (rep.periods) {
        os << "periods: homologous rel diff " << rep.periods->homologous_rel_diff
           << ", contractible " << rep.periods->contractible_abs << "\n";
    }
    return os.str();
}

std::vector<std::string> export_artifacts(const RunReport& rep, const std::string& directory) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(directory, ec);
    if (!fs::is_directory(directory))
        throw IoError("cannot create output directory '" + directory + "'");

    auto write = [&](const std::string& name, const std::string& content) {
        fs::path p = fs::path(directory) / (rep.config_hash + "_" + name);
        std::ofstream out(p, std::ios::binary);
        if (!out) throw IoError("cannot write '" + p.string() + "'");
        out << content;
        if (!out) throw IoError("short write on '" + p.string() + "'");
        return p.string();
    };

    std::vector<std::string> written;
    if (rep.mesh) {
        written.push_back(write("mesh.off", export_off(*rep.mesh)));
        written.push_back(write("vertices.csv", export_vertex_csv(*rep.mesh)));
        if (rep.solution) {
            written.push_back(write("fields.csv",
                                    export_fields_csv(*rep.mesh, &rep.solution->u, &rep.solution->f)));
            written.push_back(write("solution.csv", export_solution_csv(*rep.mesh, *rep.solution)));
        } else {
            written.push_back(write("fields.csv", export_fields_csv(*rep.mesh)));
        }
    }
    if (rep.spectral) {
        std::ostringstream os;
        os.precision(17);
        os << "k,lambda,residual\n";
        for (int i = 0; i < rep.spectral->eigenvalues.size(); ++i)
            os << i << "," << rep.spectral->eigenvalues[i] << ","
               << rep.spectral->eigen_residuals[i] << "\n";
        written.push_back(write("spectrum.csv", os.str()));
    }
    written.push_back(write("summary.txt", machine_summary(rep)));
    return written;
}

} // namespace cglab
