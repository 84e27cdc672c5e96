// pybind11 surface over the pipeline: mesh construction, hemisphere LP,
// spectral report, reduced-system solve, identity verification, periods.

#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <map>

#include "cglab/errors.hpp"
#include "cglab/fields.hpp"
#include "cglab/forms.hpp"
#include "cglab/pipeline.hpp"
#include "cglab/spectral.hpp"
#include "cglab/strominger.hpp"
#include "cglab/surface.hpp"

namespace py = pybind11;
using namespace cglab;

namespace {

BranchConfig config_from(const std::vector<Complex>& points, double alpha_prime, int level) {
    RawBranchInput raw;
    for (const auto& p : points) raw.points.push_back(StereoCoord(p));
    raw.alpha_prime = alpha_prime;
    raw.mesh_level = level;
    return validate_config(raw);
}

SurfaceMesh mesh_from(const std::vector<Complex>& points, double alpha_prime, int level, int cover) {
    SurfaceMesh mesh = build_surface(config_from(points, alpha_prime, level));
    if (cover > 1) mesh = cyclic_unramified_cover(mesh, homology_loops(mesh)[0], cover);
    return mesh;
}

py::dict mesh_dict(const SurfaceMesh& mesh) {
    const int n = mesh.vertex_count();
    py::array_t<double> verts({n, 3});
    py::array_t<std::complex<double>> z(n), w(n);
    py::array_t<int> sheet(n), chart(n);
    py::array_t<bool> ram(n);
    auto vb = verts.mutable_unchecked<2>();
    auto zb = z.mutable_unchecked<1>();
    auto wb = w.mutable_unchecked<1>();
    auto sb = sheet.mutable_unchecked<1>();
    auto cb = chart.mutable_unchecked<1>();
    auto rb = ram.mutable_unchecked<1>();
    for (int v = 0; v < n; ++v) {
        const auto& cv = mesh.vertices[v];
        vb(v, 0) = cv.pos.x;
        vb(v, 1) = cv.pos.y;
        vb(v, 2) = cv.pos.z;
        zb(v) = cv.coord;
        wb(v) = cv.w;
        sb(v) = cv.sheet;
        cb(v) = cv.chart;
        rb(v) = cv.is_ramification;
    }
    py::array_t<int> tris({static_cast<int>(mesh.triangles.size()), 3});
    auto tb = tris.mutable_unchecked<2>();
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t)
        for (int c = 0; c < 3; ++c) tb(t, c) = mesh.triangles[t][c];

    py::dict d;
    d["vertices"] = verts;
    d["triangles"] = tris;
    d["z"] = z;
    d["w"] = w;
    d["sheet"] = sheet;
    d["chart"] = chart;
    d["is_ramification"] = ram;
    d["euler_characteristic"] = mesh.euler_characteristic();
    d["genus"] = mesh.genus();
    d["covering_degree"] = mesh.covering_degree;
    d["ramification_count"] = mesh.ramification_vertices.size();
    return d;
}

std::vector<UnitVec3> to_units(py::array_t<double, py::array::c_style | py::array::forcecast> pts) {
    if (pts.ndim() != 2 || pts.shape(1) != 3) throw ValidationError("expected an (N, 3) array");
    std::vector<UnitVec3> out;
    auto b = pts.unchecked<2>();
    for (py::ssize_t i = 0; i < pts.shape(0); ++i)
        out.push_back(UnitVec3{b(i, 0), b(i, 1), b(i, 2)}.normalized());
    return out;
}

} // namespace

PYBIND11_MODULE(_cglab, m) {
    m.doc() = "genus-3 branched covers, Schrodinger spectra and the reduced system solver";

    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    static py::exception<NoAdmissibleU> no_admissible(m, "NoAdmissibleUError");
    py::register_exception<NumericalError>(m, "NumericalError", PyExc_RuntimeError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const NoAdmissibleU& e) {
#if defined(PYBIND11_VERSION_HEX) && PYBIND11_VERSION_HEX >= 0x020C0000
            py::set_error(no_admissible, e.what());
#else
            no_admissible(e.what());
#endif
        }
    });

    m.def("stereo_to_sphere", [](std::complex<double> z) {
        UnitVec3 v = stereo_to_sphere(StereoCoord(z));
        return py::make_tuple(v.x, v.y, v.z);
    });
    m.def("sphere_to_stereo", [](double x, double y, double z) -> py::object {
        StereoCoord s = sphere_to_stereo(UnitVec3{x, y, z});
        if (s.infinite) return py::none();
        return py::cast(s.zeta);
    });

    m.def(
        "hemisphere_margin",
        [](py::array_t<double, py::array::c_style | py::array::forcecast> pts) {
            auto units = to_units(pts);
            HemisphereReport r = hemisphere_margin(units);
            py::dict d;
            d["feasible"] = r.feasible;
            d["margin"] = r.margin;
            d["direction"] = py::make_tuple(r.direction.x, r.direction.y, r.direction.z);
            return d;
        },
        py::arg("points"), "smallest enclosing cap of unit vectors; margin = cos(radius)");

    m.def(
        "hemispherizing_mobius",
        [](py::array_t<double, py::array::c_style | py::array::forcecast> pts) -> py::object {
            auto units = to_units(pts);
            auto mob = hemispherizing_mobius(units);
            if (!mob) return py::none();
            py::list rows;
            rows.append(py::make_tuple(mob->a, mob->b));
            rows.append(py::make_tuple(mob->c, mob->d));
            return rows;
        },
        py::arg("points"));

    m.def(
        "build_mesh",
        [](const std::vector<Complex>& points, double alpha_prime, int level, int cover) {
            return mesh_dict(mesh_from(points, alpha_prime, level, cover));
        },
        py::arg("points"), py::arg("alpha_prime") = 1.0, py::arg("level") = 2,
        py::arg("cover") = 1,
        "triangulated branched double cover (optionally a cyclic cover on top)");

    m.def(
        "spectrum",
        [](const std::vector<Complex>& points, double alpha_prime, int level, int cover, int eigs) {
            SurfaceMesh mesh = mesh_from(points, alpha_prime, level, cover);
            SpectralReport rep = spectral_report(mesh, eigs);
            py::dict d;
            d["eigenvalues"] = py::array_t<double>(rep.eigenvalues.size(), rep.eigenvalues.data());
            d["index"] = rep.index;
            d["kernel_multiplicity"] = rep.kernel_multiplicity;
            d["delta"] = rep.delta;
            d["total_mass"] = rep.total_mass;
            d["kernel_projection_residual"] = rep.kernel_projection_residual;
            d["covering_degree"] = rep.covering_degree;
            return d;
        },
        py::arg("points"), py::arg("alpha_prime") = 1.0, py::arg("level") = 2,
        py::arg("cover") = 1, py::arg("eigs") = 16);

    m.def(
        "solve",
        [](const std::vector<Complex>& points, double alpha_prime, int level, double u_scale) {
            SurfaceMesh mesh = build_surface(config_from(points, alpha_prime, level));
            StromingerSolution sol = full_solve(mesh, u_scale);
            py::dict d;
            d["c"] = py::make_tuple(sol.c.x, sol.c.y, sol.c.z);
            d["margin"] = sol.margin;
            d["u"] = py::array_t<double>(sol.u.size(), sol.u.data());
            d["f"] = py::array_t<double>(sol.f.size(), sol.f.data());
            d["kappa"] = py::array_t<double>(sol.kappa.size(), sol.kappa.data());
            py::dict r;
            r["quadratic_max"] = sol.residuals.quadratic_max;
            r["pde_pointwise_max"] = sol.residuals.pde_pointwise_max;
            r["fem_residual"] = sol.residuals.fem_residual;
            r["min_u_at_ramification"] = sol.residuals.min_u_at_ramification;
            r["max_ef"] = sol.residuals.max_ef;
            d["residuals"] = r;
            return d;
        },
        py::arg("points"), py::arg("alpha_prime") = 1.0, py::arg("level") = 2,
        py::arg("u_scale") = 1.0);

    m.def(
        "verify_identities",
        [](const std::vector<Complex>& points, double alpha_prime, int level, int samples,
           std::uint64_t seed) {
            BranchConfig cfg = config_from(points, alpha_prime, level);
            Rng rng(seed);
            std::map<std::string, double> worst;
            int done = 0;
            while (done < samples) {
                Complex z(rng.uniform(-2.2, 2.2), rng.uniform(-2.2, 2.2));
                Complex P = curve_poly(cfg, 1, z);
                if (std::abs(P) < 1e-3) continue;
                Complex w = std::sqrt(P);
                if (rng.uniform() < 0.5) w = -w;
                AnsatzFrame af = assemble_point_structures(
                    evaluate_frame(cfg, 1, z, w), rng.uniform(-0.6, 0.6),
                    Complex(rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3)));
                for (const auto& r : verify_algebraic_identities(af))
                    worst[r.name] = std::max(worst[r.name], r.residual);
                for (const auto& r : verify_differential_identities(af))
                    worst[r.name] = std::max(worst[r.name], r.residual);
                ++done;
            }
            py::dict out;
            for (const auto& [k, v] : worst) out[py::str(k)] = v;
            return out;
        },
        py::arg("points"), py::arg("alpha_prime") = 1.0, py::arg("level") = 2,
        py::arg("samples") = 50, py::arg("seed") = 20240816);

    m.def(
        "periods",
        [](const std::vector<Complex>& points, double alpha_prime, int level) {
            SurfaceMesh mesh = build_surface(config_from(points, alpha_prime, level));
            auto loops = homology_loops(mesh);
            py::array_t<std::complex<double>> out({static_cast<int>(loops.size()), 3});
            auto b = out.mutable_unchecked<2>();
            for (std::size_t i = 0; i < loops.size(); ++i)
                for (int j = 1; j <= 3; ++j) b(i, j - 1) = period_integral(mesh, loops[i], j);
            return out;
        },
        py::arg("points"), py::arg("alpha_prime") = 1.0, py::arg("level") = 2);

    m.def(
        "run_config_file",
        [](const std::string& path, const std::string& subcommand) {
            RunOptions opts;
            opts.subcommand = subcommand;
            opts.config_path = path;
            RunReport rep = run_pipeline(opts);
            return machine_summary(rep);
        },
        py::arg("path"), py::arg("subcommand") = "report");
}
