#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <sstream>

#include "cglab/errors.hpp"
#include "cglab/pipeline.hpp"
#include "test_fixtures.hpp"

using namespace cglab;
using namespace cglab::testing;

namespace {

std::string cap_config_text(int level = 1) {
    std::ostringstream os;
    auto raw = cap_config(level);
    os << "# cap configuration\n";
    for (int i = 0; i < 8; ++i)
        os << "point" << i + 1 << " = " << raw.points[i].zeta.real() << ", "
           << raw.points[i].zeta.imag() << "\n";
    os << "alpha_prime = 1.0\n";
    os << "mesh_level = " << level << "\n";
    return os.str();
}

} // namespace

TEST_CASE("config parsing accepts pairs, triples and comments") {
    std::string text = cap_config_text();
    RawBranchInput raw = parse_config_text(text);
    CHECK(raw.points.size() == 8);
    CHECK(raw.alpha_prime == 1.0);
    CHECK(raw.mesh_level == 1);

    // unit-triple form of the same first point
    UnitVec3 v = stereo_to_sphere(raw.points[0]);
    std::string text2 = text;
    std::ostringstream repl;
    repl.precision(17);
    repl << "point1 = " << v.x << "," << v.y << "," << v.z << "\n";
    text2.replace(text2.find("point1"), text2.find('\n', text2.find("point1")) - text2.find("point1") + 1,
                  repl.str());
    RawBranchInput raw2 = parse_config_text(text2);
    CHECK(std::abs(raw2.points[0].zeta - raw.points[0].zeta) < 1e-12);

    // a point at the chart pole comes in as "inf" and normalizes away
    {
        std::string with_inf = text;
        with_inf.replace(with_inf.find("point2"), with_inf.find('\n', with_inf.find("point2")) - with_inf.find("point2") + 1,
                         "point2 = inf\n");
        RawBranchInput ri = parse_config_text(with_inf);
        CHECK(ri.points[1].infinite);
        BranchConfig ci = validate_config(ri);
        for (const auto& p : ci.points) CHECK(std::isfinite(std::abs(p)));
    }

    CHECK_THROWS_AS(parse_config_text("point1 = 1"), ValidationError);
    CHECK_THROWS_AS(parse_config_text("point1 = a,b"), ValidationError);
    CHECK_THROWS_AS(parse_config_text("nonsense = 1"), ValidationError);
    CHECK_THROWS_AS(parse_config_text("point9 = 0,0"), ValidationError);
    CHECK_THROWS_AS(parse_config_text(text + "point3 = 0,0\n"), ValidationError);

    // missing points named in the error
    try {
        parse_config_text("point1 = 0,0\n");
        FAIL("expected throw");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("point2") != std::string::npos);
    }

    // pairing
    RawBranchInput rp = parse_config_text(text + "pairing = 1-5, 2-6, 3-7, 4-8\n");
    REQUIRE(rp.pairing.has_value());
    CHECK((*rp.pairing)[0][0] == 0);
    CHECK((*rp.pairing)[0][1] == 4);
    CHECK_THROWS_AS(parse_config_text(text + "pairing = 1-5\n"), ValidationError);
}

TEST_CASE("config hash: canonical and sensitive") {
    BranchConfig a = validate_config(cap_config(1));
    BranchConfig b = validate_config(cap_config(1));
    CHECK(config_hash(a, 1) == config_hash(b, 1));
    CHECK(config_hash(a, 2) != config_hash(a, 1));
    auto raw = cap_config(1);
    raw.alpha_prime = 2.0;
    CHECK(config_hash(validate_config(raw), 1) != config_hash(a, 1));
}

TEST_CASE("run_pipeline: mesh subcommand and summary lines") {
    RunOptions opts;
    opts.subcommand = "mesh";
    opts.config_path = "/tmp/cglab_test_cap.cfg";
    {
        std::ofstream out(opts.config_path);
        out << cap_config_text();
    }
    RunReport rep = run_pipeline(opts);
    CHECK(rep.euler == -4);
    CHECK(rep.genus == 3);
    CHECK(rep.hemisphere.feasible);
    std::string s = summarize(rep);
    CHECK(s.find("FEASIBLE") != std::string::npos);
    CHECK(s.find("genus=3") != std::string::npos);

    std::string m = machine_summary(rep);
    CHECK(m.find("euler_characteristic=-4") != std::string::npos);
    CHECK(m.find("strominger_solved=0") != std::string::npos);
}

TEST_CASE("summarize: infeasible config prints the unsolvable verdict and the Tysk line") {
    RunOptions opts;
    opts.subcommand = "report";
    opts.eigs = 10;
    opts.samples = 5;
    opts.config_path = "/tmp/cglab_test_cube.cfg";
    {
        auto raw = cube_config(2);
        std::ofstream out(opts.config_path);
        out << "# schwarz P branch data\n";
        for (int i = 0; i < 8; ++i)
            out << "point" << i + 1 << " = " << raw.points[i].zeta.real() << ", "
                << raw.points[i].zeta.imag() << "\n";
        out << "mesh_level = 2\n";
    }
    RunReport rep = run_pipeline(opts);
    CHECK_FALSE(rep.hemisphere.feasible);
    REQUIRE(rep.spectral.has_value());
    std::string s = summarize(rep);
    CHECK(s.find("index <= 15") != std::string::npos);
    if (rep.spectral->index < 2)
        CHECK(s.find("index " + std::to_string(rep.spectral->index) + " < deg 2: Strominger ansatz unsolvable") !=
              std::string::npos);
}

TEST_CASE("export artifacts are deterministic byte-for-byte") {
    RunOptions opts;
    opts.subcommand = "solve";
    opts.config_path = "/tmp/cglab_test_cap.cfg";
    {
        std::ofstream out(opts.config_path);
        out << cap_config_text();
    }
    RunReport rep = run_pipeline(opts);

    auto read_all = [](const std::string& p) {
        std::ifstream in(p, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    auto files1 = export_artifacts(rep, "/tmp/cglab_out_a");
    RunReport rep2 = run_pipeline(opts);
    auto files2 = export_artifacts(rep2, "/tmp/cglab_out_b");
    REQUIRE(files1.size() == files2.size());
    for (std::size_t i = 0; i < files1.size(); ++i)
        CHECK(read_all(files1[i]) == read_all(files2[i]));

    // field CSV row count = vertex count
    for (const auto& f : files1)
        if (f.find("fields.csv") != std::string::npos) {
            std::string content = read_all(f);
            CHECK(std::count(content.begin(), content.end(), '\n') == rep.vertex_count + 1);
        }

    CHECK_THROWS_AS(export_artifacts(rep, "/proc/definitely/not/writable"), IoError);
}
