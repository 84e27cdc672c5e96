// cglab: build generalized Calabi-Gray data from 8 branch points, compute
// the Schrodinger-operator spectrum/index/kernel, solve the reduced system,
// and verify the pointwise identities of the reduction.

#include <CLI11.hpp>
#include <cstdio>
#include <iostream>

#include "cglab/errors.hpp"
#include "cglab/pipeline.hpp"

int main(int argc, char** argv) {
    CLI::App app{"generalized Calabi-Gray laboratory"};
    app.require_subcommand(1);

    cglab::RunOptions opts;
    for (const char* name : {"mesh", "spectrum", "solve", "verify", "report"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", opts.config_path, "config file")->required();
        sub->add_option("--level", opts.level_override, "mesh level override");
        sub->add_option("--eigs", opts.eigs, "eigenpair count (<= 30)");
        sub->add_option("--samples", opts.samples, "identity sample points");
        sub->add_option("--cover", opts.cover_k, "cyclic cover sheets k");
        sub->add_option("--out", opts.out_dir, "artifact output directory");
        sub->add_option("--u-scale", opts.u_scale, "scale of u inside the kernel cone");
        sub->add_option("--lanczos-budget", opts.lanczos_budget, "eigensolver restart budget");
        sub->add_option("--seed", opts.seed, "sample seed");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) ? 2 : 0;
    }
    opts.subcommand = app.get_subcommands().front()->get_name();

    try {
        cglab::RunReport rep = cglab::run_pipeline(opts);
        std::cout << cglab::summarize(rep);
        if (!opts.out_dir.empty()) {
            auto files = cglab::export_artifacts(rep, opts.out_dir);
            for (const auto& f : files) std::cout << "wrote " << f << "\n";
        }
        std::fprintf(stderr, "elapsed: %.2fs\n", rep.elapsed_seconds);
        return 0;
    } catch (const cglab::ValidationError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const cglab::NoAdmissibleU& e) {
        std::fprintf(stderr, "no admissible u: %s\n", e.what());
        if (!e.certificate_subset.empty()) {
            std::fprintf(stderr, "hull certificate: points");
            for (std::size_t i = 0; i < e.certificate_subset.size(); ++i)
                std::fprintf(stderr, " %d (weight %.6f)", e.certificate_subset[i] + 1,
                             e.certificate_weights[i]);
            std::fprintf(stderr, "\n");
        }
        return 3;
    } catch (const cglab::IoError& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return 5;
    } catch (const cglab::NumericalError& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "unexpected failure: %s\n", e.what());
        return 4;
    }
}
