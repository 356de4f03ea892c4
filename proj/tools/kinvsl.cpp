// kinvsl: construct, verify and classify K-invariant Sturm-Liouville
// operators from JSON problem specs or the bundled example gallery.

#include "kinvsl/cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

using namespace kinvsl;

namespace {

void emit(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(out_path);
    if (!out) throw InputError("cannot write output file: " + out_path);
    out << text;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"K-invariant Sturm-Liouville operators: verification, "
                 "classification and spectra"};
    app.require_subcommand(1);

    cli::Options opt;
    std::string spec_arg, out_path, bc_desc = "dirichlet";
    std::size_t N = 2000, count = 3;
    double L_flag = 0;
    int n_power = 3;
    std::optional<double> anchor;
    double anchor_flag = 0;
    int orientation = 1;

    app.add_option("--tol-residual", opt.tol_residual,
                   "coefficient-equation tolerance (default 1e-10)");
    app.add_option("--tol-eig", opt.tol_eig, "eigenvalue tolerance (default 1e-8)");
    app.add_option("--grid", opt.grid_n, "residual grid size (default 1000)");

    auto* verify = app.add_subcommand("verify", "check the K-invariance equations");
    verify->add_option("spec", spec_arg, "spec file or gallery id")->required();
    verify->add_option("--out", out_path, "write the JSON report here");

    auto* classify = app.add_subcommand("classify", "invariant boundary conditions");
    classify->add_option("spec", spec_arg)->required();
    classify->add_option("--out", out_path);

    auto* spectrum = app.add_subcommand("spectrum", "discretized eigenvalues (CSV)");
    spectrum->add_option("spec", spec_arg)->required();
    spectrum->add_option("--bc", bc_desc,
                         "dirichlet|neumann|krein|alpha=..[,beta=..]|coupled:a,b,c,d");
    spectrum->add_option("--N", N, "grid nodes (default 2000)");
    auto* lopt = spectrum->add_option("--L", L_flag, "truncation for infinite ends");
    spectrum->add_option("--count", count, "number of eigenvalues (default 3)");
    spectrum->add_option("--out", out_path);

    auto* schroeder = app.add_subcommand("schroeder", "Schroeder-equation checks");
    schroeder->add_option("spec", spec_arg)->required();
    schroeder->add_option("--out", out_path);

    auto* transform = app.add_subcommand("transform", "Liouville-Green transform");
    transform->add_option("spec", spec_arg)->required();
    auto* aopt = transform->add_option("--anchor", anchor_flag, "xi anchor (xi(k) = 0)");
    transform->add_option("--orientation", orientation, "+1 increasing, -1 flipped");
    bool transform_csv = false;
    transform->add_flag("--csv", transform_csv, "emit plot-ready CSV instead of JSON");
    transform->add_option("--out", out_path);

    auto* gal = app.add_subcommand("gallery", "bundled paper examples");
    auto* gal_list = gal->add_subcommand("list", "list bundled ids");
    auto* gal_run = gal->add_subcommand("run", "run one bundled example end-to-end");
    gal_run->add_option("id", spec_arg)->required();
    gal_run->add_option("--n", n_power, "power-family index (default 3)");
    gal_run->add_option("--out", out_path);
    gal->require_subcommand(1);

    auto* lab = app.add_subcommand("abstract-lab", "defect-space dichotomy and block model");
    double lab_c = 1.0, lab_d = 3.0, lab_mu = 1.0;
    lab->add_option("--c", lab_c);
    lab->add_option("--d", lab_d);
    lab->add_option("--mu", lab_mu);
    lab->add_option("--N", N);
    lab->add_option("--out", out_path);

    CLI11_PARSE(app, argc, argv);

    try {
        if (lopt->count()) opt.L = L_flag;
        if (aopt->count()) anchor = anchor_flag;

        Json report;
        int code = 0;
        if (*verify) {
            code = cli::cmd_verify(cli::resolve_spec(spec_arg), opt, report);
            emit(dump_report(report), out_path);
        } else if (*classify) {
            code = cli::cmd_classify(cli::resolve_spec(spec_arg), opt, report);
            emit(dump_report(report), out_path);
        } else if (*spectrum) {
            std::string csv;
            code = cli::cmd_spectrum(cli::resolve_spec(spec_arg), bc_desc, N, count,
                                     opt, csv);
            emit(csv, out_path);
        } else if (*schroeder) {
            code = cli::cmd_schroeder(cli::resolve_spec(spec_arg), opt, report);
            emit(dump_report(report), out_path);
        } else if (*transform) {
            std::string plot;
            code = cli::cmd_transform(cli::resolve_spec(spec_arg), anchor, orientation,
                                      opt, report, transform_csv ? &plot : nullptr);
            emit(transform_csv ? plot : dump_report(report), out_path);
        } else if (*gal_list) {
            emit(dump_report(cli::gallery_listing()), out_path);
        } else if (*gal_run) {
            code = cli::cmd_gallery_run(spec_arg, n_power, opt, report);
            emit(dump_report(report), out_path);
        } else if (*lab) {
            code = cli::cmd_abstract_lab(lab_c, lab_d, lab_mu, N, report);
            emit(dump_report(report), out_path);
        }
        return code;
    } catch (const InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
