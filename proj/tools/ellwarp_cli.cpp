#include <cstdlib>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "ellwarp/bench/bench.hpp"
#include "ellwarp/warp_layout.hpp"

namespace ew = ellwarp;
namespace ewb = ellwarp::bench;
using ew::idx;
using ew::real;
using ew::require;

namespace {

std::string default_cache_dir() {
    if (const char* env = std::getenv("ELLWARP_CACHE_DIR")) return env;
    return "cache";
}

int cmd_fetch(const std::string& name, const std::string& cache_dir, bool offline) {
    ewb::FetchOptions opts;
    opts.offline = offline;
    const std::string path = ewb::fetch_matrix(name, cache_dir, opts);
    std::cout << path << "\n";
    return 0;
}

int cmd_stats(const std::string& matrix, const std::string& cache_dir, bool offline,
              std::uint64_t seed, bool histogram) {
    ewb::FetchOptions opts;
    opts.offline = offline;
    const ew::SparseCsr m = ewb::load_matrix_spec(matrix, cache_dir, opts, seed);
    const ew::MatrixStats stats = ew::matrix_stats(m);
    std::cout << ewb::to_csv(ewb::stats_table(matrix, stats));
    if (histogram) {
        std::cout << "row_length,row_count\n";
        for (const auto& [len, count] : stats.histogram) {
            std::cout << len << "," << count << "\n";
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sparse SPMV kernel laboratory: warp-model kernels, CG, FEM demo"};
    app.require_subcommand(1);
    app.fallthrough();  // global options may follow the subcommand

    std::string cache_dir = default_cache_dir();
    std::uint64_t seed = 1;
    bool offline = false;
    app.add_option("--cache-dir", cache_dir, "matrix cache directory");
    app.add_option("--seed", seed, "seed for synthetic matrices and input vectors");
    app.add_flag("--offline", offline, "never touch the network; use caches and generators");

    // fetch
    auto* fetch = app.add_subcommand("fetch", "download a benchmark matrix into the cache");
    std::string fetch_name;
    fetch->add_option("name", fetch_name, "matrix alias")->required();

    // stats
    auto* stats = app.add_subcommand("stats", "matrix statistics (rows, nnz, row lengths)");
    std::string stats_matrix;
    bool stats_hist = false;
    stats->add_option("matrix", stats_matrix, "path, alias, or synthetic:<spec>")->required();
    stats->add_flag("--histogram", stats_hist, "print the row-length histogram");

    // bench
    auto* bench = app.add_subcommand("bench", "kernel parameter sweep with transaction reports");
    ewb::BenchSpec spec;
    std::string bench_out = "reports";
    std::string bench_format = "csv";
    bench->add_option("--matrices", spec.matrices,
                      "matrix specs (repeat values; synthetic specs contain commas)")
        ->required();
    bench->add_option("--kernels", spec.kernels, "kernel ids")->required()->delimiter(',');
    bench->add_option("--warp-sizes", spec.warp_sizes, "warp sizes")->delimiter(',');
    bench->add_option("--block-sizes", spec.block_sizes, "block sizes")->delimiter(',');
    bench->add_option("--thresholds", spec.thresholds, "K2 thresholds (default minrow..maxrow)")
        ->delimiter(',');
    bench->add_option("--threshold-stride", spec.threshold_stride, "K2 threshold stride");
    bench->add_option("--iterations", spec.iterations, "timing repetitions (1, 50, 1200)");
    bench->add_option("--out-dir", bench_out, "report output directory");
    bench->add_option("--format", bench_format, "csv or json")
        ->check(CLI::IsMember({"csv", "json"}));
    bench->add_option("--segment-bytes", spec.warp.segment_bytes, "memory segment size");
    bench->add_flag("--align,!--no-align", spec.warp.align_warp_offsets,
                    "warp offset alignment padding (default on)");
    bench->add_flag("--ideal-cache", spec.warp.ideal_cache, "ideal x-load cache");
    bench->add_option("--cache-lines", spec.warp.cache_lines, "ideal cache line count");

    // alpha
    auto* alpha = app.add_subcommand("alpha", "reorder-cost break-even analysis");
    std::string alpha_matrix, alpha_kernel = "k1rs", alpha_baseline = "csr_ref";
    std::string alpha_mode = "bulk_scatter";
    idx alpha_reps = 9;
    std::string alpha_out;
    alpha->add_option("matrix", alpha_matrix, "matrix spec")->required();
    alpha->add_option("--kernel", alpha_kernel, "reordered kernel (k1r/k1rs/k2r/k2rs)");
    alpha->add_option("--baseline", alpha_baseline, "baseline kernel");
    alpha->add_option("--mode", alpha_mode, "host_loop or bulk_scatter")
        ->check(CLI::IsMember({"host_loop", "bulk_scatter"}));
    alpha->add_option("--reps", alpha_reps, "timing repetitions");
    alpha->add_option("--out", alpha_out, "write alpha CSV here");

    // cg
    auto* cg = app.add_subcommand("cg", "solve an SPD system with a chosen kernel");
    std::string cg_matrix, cg_kernel = "k1", cg_out;
    ew::CgConfig cg_cfg;
    bool cg_no_precond = false;
    cg->add_option("matrix", cg_matrix, "matrix spec (must be SPD)")->required();
    cg->add_option("--kernel", cg_kernel, "SPMV kernel id");
    cg->add_option("--tol", cg_cfg.rel_tolerance, "relative residual tolerance");
    cg->add_option("--max-it", cg_cfg.max_iterations, "iteration limit");
    cg->add_flag("--no-jacobi", cg_no_precond, "disable the Jacobi preconditioner");
    cg->add_option("--out", cg_out, "residual history CSV path");

    // fem-demo
    auto* fem = app.add_subcommand("fem-demo", "monodomain FEM demo on a tet mesh");
    std::string fem_mesh = "box:4,4,4";
    std::string fem_kernel = "csr_ref";
    std::string fem_out = "fem_out";
    std::string fem_params_file;
    idx fem_steps = 5;
    ew::fem::ApParams ap;
    ew::fem::TimestepConfig fem_cfg;
    real fem_phi0 = 0.3;
    fem->add_option("--mesh", fem_mesh, "box:nx,ny,nz[,h] or mesh file path");
    fem->add_option("--steps", fem_steps, "number of time steps");
    fem->add_option("--dt", ap.dt, "time step size");
    fem->add_option("--kernel", fem_kernel, "SPMV kernel for the CG solves");
    fem->add_option("--params", fem_params_file, "JSON file overriding model parameters");
    fem->add_option("--phi0", fem_phi0, "initial uniform membrane potential");
    fem->add_option("--outer-tol", fem_cfg.outer_tol, "outer Newton tolerance");
    fem->add_option("--inner-tol", fem_cfg.inner_tol, "recovery Newton tolerance");
    fem->add_flag("--adaptive-dt", fem_cfg.adaptive_dt, "halve/double dt controller");
    fem->add_flag("--consistent-mass", [&fem_cfg](std::int64_t) { fem_cfg.lumped_mass = false; },
                  "use the centroid consistent mass instead of the lumped one");
    fem->add_option("--out-dir", fem_out, "output directory");

    // report
    auto* report = app.add_subcommand("report", "re-render a CSV report (csv -> json)");
    std::string report_in, report_out2, report_format = "json";
    report->add_option("--in", report_in, "input CSV")->required();
    report->add_option("--out", report_out2, "output path")->required();
    report->add_option("--format", report_format, "output format")
        ->check(CLI::IsMember({"csv", "json"}));

    CLI11_PARSE(app, argc, argv);

    try {
        ewb::FetchOptions fopts;
        fopts.offline = offline;
        if (fetch->parsed()) return cmd_fetch(fetch_name, cache_dir, offline);
        if (stats->parsed()) return cmd_stats(stats_matrix, cache_dir, offline, seed, stats_hist);
        if (bench->parsed()) {
            spec.cache_dir = cache_dir;
            spec.offline = offline;
            spec.seed = seed;
            const auto rows = ewb::run_bench(spec);
            const auto fmt =
                bench_format == "csv" ? ewb::ReportFormat::csv : ewb::ReportFormat::json;
            for (const auto& path : ewb::emit_reports(rows, {}, fmt, bench_out)) {
                std::cout << path << "\n";
            }
            return 0;
        }
        if (alpha->parsed()) {
            const ew::SparseCsr m = ewb::load_matrix_spec(alpha_matrix, cache_dir, fopts, seed);
            ew::WarpModelConfig cfg;
            const auto row = ewb::analyze_alpha(
                alpha_matrix, m, alpha_kernel, alpha_baseline,
                alpha_mode == "bulk_scatter" ? ewb::ReorderMode::bulk_scatter
                                             : ewb::ReorderMode::host_loop,
                cfg, alpha_reps, seed);
            const std::string csv = ewb::to_csv(ewb::alpha_table({row}));
            std::cout << csv;
            if (!alpha_out.empty()) ewb::write_file(alpha_out, csv);
            return 0;
        }
        if (cg->parsed()) {
            const ew::SparseCsr m = ewb::load_matrix_spec(cg_matrix, cache_dir, fopts, seed);
            ew::WarpModelConfig cfg;
            ew::PreparedKernel kernel = ew::prepare_kernel(cg_kernel, m, cfg);
            if (cg_no_precond) cg_cfg.preconditioner = ew::CgConfig::Precond::none;
            const auto diag = ew::extract_diagonal(m);
            // right-hand side: A times the all-ones vector, so the exact
            // solution is known
            const std::vector<real> ones(m.ncols, 1.0);
            const auto b = ew::spmv_csr_reference(m, ones);
            ew::SpmvFn op = [&](std::span<const real> v) { return kernel.apply(v, nullptr); };
            const auto res = ew::cg_solve(op, b, cg_cfg, diag);
            std::cout << "kernel=" << cg_kernel << " converged=" << (res.converged ? "yes" : "no")
                      << " iterations=" << res.iterations
                      << " final_rel_residual=" << res.residual_history.back() << "\n";
            if (!cg_out.empty()) {
                ewb::Table t;
                t.header = {"iteration", "rel_residual"};
                for (std::size_t i = 0; i < res.residual_history.size(); ++i) {
                    std::ostringstream v;
                    v.precision(12);
                    v << res.residual_history[i];
                    t.add_row({std::to_string(i), v.str()});
                }
                ewb::write_file(cg_out, ewb::to_csv(t));
            }
            return res.converged ? 0 : 1;
        }
        if (fem->parsed()) {
            if (!fem_params_file.empty()) {
                const auto text = ewb::read_file(fem_params_file);
                const auto j = nlohmann::json::parse(text);
                auto get = [&](const char* key, real& out) {
                    if (j.contains(key)) out = j[key].get<real>();
                };
                get("alpha", ap.alpha);
                get("b", ap.b);
                get("c", ap.c);
                get("gamma", ap.gamma);
                get("mu1", ap.mu1);
                get("mu2", ap.mu2);
                get("d_iso", ap.d_iso);
                get("d_ani", ap.d_ani);
                get("dt", ap.dt);
                if (j.contains("n_fiber")) {
                    auto v = j["n_fiber"].get<std::vector<real>>();
                    require(v.size() == 3, "n_fiber needs 3 components");
                    ap.n_fiber = {v[0], v[1], v[2]};
                }
            }
            fem_cfg.kernel_id = fem_kernel;
            const auto mesh = ew::fem::load_mesh_spec(fem_mesh);
            const auto result = ewb::fem_demo(mesh, ap, fem_cfg, fem_steps, fem_out, fem_phi0);
            std::cout << "steps=" << result.steps << " checkpoint=" << result.checkpoint_path
                      << " timing=" << fem_out << "/fem_timing.csv\n";
            return 0;
        }
        if (report->parsed()) {
            const auto table = ewb::from_csv(ewb::read_file(report_in));
            const std::string out = report_format == "json" ? ewb::to_json(table)
                                                            : ewb::to_csv(table);
            ewb::write_file(report_out2, out);
            std::cout << report_out2 << "\n";
            return 0;
        }
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 1;
    }
    return 0;
}
