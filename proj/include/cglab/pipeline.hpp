#pragma once

// Config ingestion, pipeline orchestration, artifact export and the
// machine-readable summary behind the cglab CLI.

#include <optional>
#include <string>
#include <vector>

#include "cglab/forms.hpp"
#include "cglab/spectral.hpp"
#include "cglab/strominger.hpp"
#include "cglab/surface.hpp"

namespace cglab {

struct RunOptions {
    std::string subcommand;         // mesh | spectrum | solve | verify | report
    std::string config_path;
    int level_override = -1;
    int eigs = 16;
    int samples = 100;
    int cover_k = 1;
    std::string out_dir;            // empty: no artifact export
    int lanczos_budget = 8;
    double u_scale = 1.0;
    std::uint64_t seed = 20240816;
};

// Flat key = value text; '#' comments; points as "re,im" stereographic
// pairs, "x,y,z" unit triples, or "inf". Throws ValidationError with the
// offending line number.
RawBranchInput parse_config_text(const std::string& text);
RawBranchInput parse_config_file(const std::string& path);

struct PeriodChecks {
    double homologous_rel_diff = 0.0; // rings 1 vs 2 around each arc
    double contractible_abs = 0.0;    // triangle boundary loop
    std::vector<Complex> periods;     // mu_j over the six loops, row-major
};

struct RunReport {
    BranchConfig config;
    std::string config_hash;
    int cover_k = 1;
    // mesh stats
    int vertex_count = 0, edge_count = 0, face_count = 0, euler = 0, genus = 0, covering_degree = 0;
    HemisphereReport hemisphere;
    std::optional<SpectralReport> spectral;
    std::optional<StromingerSolution> solution;
    std::vector<IdentityResidual> identities; // max over sampled points, per identity
    std::optional<PeriodChecks> periods;
    std::optional<SurfaceMesh> mesh;          // retained for exports
    double elapsed_seconds = 0.0;             // console only, never exported
};

std::string config_hash(const BranchConfig& config, int cover_k);

// Runs the subcommand pipeline; failures surface as the typed exceptions
// that the CLI maps onto exit codes (2 validation, 3 no admissible u,
// 4 numerical, 5 io).
RunReport run_pipeline(const RunOptions& options);

// Writes the artifact set for whatever the report carries. Filenames are
// <hash>_<name>; repeated identical runs produce byte-identical files.
std::vector<std::string> export_artifacts(const RunReport& report, const std::string& directory);

// One-screen human synopsis (genus, margin, index vs bounds, kernel count,
// residual maxima).
std::string summarize(const RunReport& report);

// The machine-parseable key=value block (also the content of *_summary.txt).
std::string machine_summary(const RunReport& report);

} // namespace cglab
