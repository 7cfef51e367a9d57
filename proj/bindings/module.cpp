#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "ellwarp/bench/bench.hpp"
#include "ellwarp/fem/timestep.hpp"
#include "ellwarp/mm_io.hpp"
#include "ellwarp/synth.hpp"

namespace py = pybind11;
using namespace ellwarp;

namespace {

WarpModelConfig make_config(int warp_size, int segment_bytes, bool align, bool ideal_cache,
                            int cache_lines) {
    WarpModelConfig cfg;
    cfg.warp_size = warp_size;
    cfg.block_size = std::max(32, warp_size);
    cfg.segment_bytes = segment_bytes;
    cfg.align_warp_offsets = align;
    cfg.ideal_cache = ideal_cache;
    cfg.cache_lines = cache_lines;
    return cfg;
}

py::dict report_to_dict(const TransactionReport& r) {
    py::dict d;
    py::dict loads, stores;
    for (int s = 0; s < kNumSpaces; ++s) {
        loads[to_string(static_cast<MemSpace>(s))] = r.load_transactions[s];
        stores[to_string(static_cast<MemSpace>(s))] = r.store_transactions[s];
    }
    d["loads"] = loads;
    d["stores"] = stores;
    d["total_transactions"] = r.total_transactions();
    d["total_warp_steps"] = r.total_warp_steps;
    d["useful_bytes"] = r.useful_bytes;
    d["cache_hits"] = r.cache_hits;
    return d;
}

}  // namespace

PYBIND11_MODULE(_ellwarp, m) {
    m.doc() = "warp-model sparse SPMV kernels, CG solver, and FEM assembly";

    py::class_<SparseCsr>(m, "SparseCsr")
        .def(py::init([](idx nrows, idx ncols, std::vector<idx> row_offsets,
                         std::vector<idx> col_indices, std::vector<real> values) {
                 SparseCsr m2;
                 m2.nrows = nrows;
                 m2.ncols = ncols;
                 m2.row_offsets = std::move(row_offsets);
                 m2.col_indices = std::move(col_indices);
                 m2.values = std::move(values);
                 validate_csr(m2);
                 return m2;
             }),
             py::arg("nrows"), py::arg("ncols"), py::arg("row_offsets"), py::arg("col_indices"),
             py::arg("values"))
        .def_static(
            "from_coo",
            [](idx nrows, idx ncols, std::vector<idx> rows, std::vector<idx> cols,
               std::vector<real> vals) {
                require(rows.size() == cols.size() && cols.size() == vals.size(),
                        "from_coo: array length mismatch");
                SparseCoo coo;
                coo.nrows = nrows;
                coo.ncols = ncols;
                for (std::size_t k = 0; k < rows.size(); ++k) {
                    coo.entries.push_back({rows[k], cols[k], vals[k]});
                }
                canonicalize(coo);
                return coo_to_csr(coo);
            },
            py::arg("nrows"), py::arg("ncols"), py::arg("rows"), py::arg("cols"), py::arg("values"))
        .def_readonly("nrows", &SparseCsr::nrows)
        .def_readonly("ncols", &SparseCsr::ncols)
        .def_readonly("row_offsets", &SparseCsr::row_offsets)
        .def_readonly("col_indices", &SparseCsr::col_indices)
        .def_readonly("values", &SparseCsr::values)
        .def("nnz", &SparseCsr::nnz)
        .def("__repr__", [](const SparseCsr& m2) {
            std::ostringstream os;
            os << "SparseCsr(" << m2.nrows << "x" << m2.ncols << ", nnz=" << m2.nnz() << ")";
            return os.str();
        });

    m.def(
        "parse_matrix_market",
        [](const std::string& text) { return coo_to_csr(parse_matrix_market_string(text)); },
        py::arg("text"), "Parse Matrix Market coordinate text into CSR.");
    m.def(
        "read_matrix_market",
        [](const std::string& path) { return coo_to_csr(read_matrix_market_file(path)); },
        py::arg("path"), "Read a .mtx or .mtx.gz file into CSR.");

    m.def("laplacian3d", &laplacian3d, py::arg("nx"), py::arg("ny"), py::arg("nz"));
    m.def("fem_tet_graph", &fem_tet_graph, py::arg("n"), py::arg("minrow"), py::arg("maxrow"),
          py::arg("seed"));
    m.def("powerlaw_rows", &powerlaw_rows, py::arg("nrows"), py::arg("alpha"), py::arg("maxrow"),
          py::arg("seed"), py::arg("ncols") = 0);
    m.def("uniform_band", &uniform_band, py::arg("n"), py::arg("row_len"));
    m.def("generate_synthetic", &generate_synthetic, py::arg("spec"), py::arg("seed") = 1);

    m.def(
        "matrix_stats",
        [](const SparseCsr& m2) {
            const MatrixStats s = matrix_stats(m2);
            py::dict d;
            d["nnz"] = s.nnz;
            d["nrows"] = s.nrows;
            d["bytes"] = s.bytes;
            d["minrow"] = s.minrow;
            d["maxrow"] = s.maxrow;
            d["mean_nnz_per_row"] = s.mean_nnz_per_row;
            py::dict hist;
            for (const auto& [len, count] : s.histogram) hist[py::int_(len)] = count;
            d["histogram"] = hist;
            return d;
        },
        py::arg("matrix"));

    m.def("kernel_ids", [] { return kernel_ids(); });

    m.def(
        "spmv",
        [](const std::string& kernel, const SparseCsr& m2, const std::vector<real>& x,
           int warp_size, idx threshold, int segment_bytes, bool align) {
            const auto cfg = make_config(warp_size, segment_bytes, align, false, 64);
            KernelOptions opts;
            opts.k2_threshold = threshold;
            return prepare_kernel(kernel, m2, cfg, opts).apply(x, nullptr);
        },
        py::arg("kernel"), py::arg("matrix"), py::arg("x"), py::arg("warp_size") = 32,
        py::arg("threshold") = 0, py::arg("segment_bytes") = 128, py::arg("align") = true,
        "Run one SPMV through the chosen emulated kernel.");

    m.def(
        "spmv_traced",
        [](const std::string& kernel, const SparseCsr& m2, const std::vector<real>& x,
           int warp_size, idx threshold, int segment_bytes, bool align, bool ideal_cache,
           int cache_lines) {
            const auto cfg =
                make_config(warp_size, segment_bytes, align, ideal_cache, cache_lines);
            KernelOptions opts;
            opts.k2_threshold = threshold;
            const PreparedKernel k = prepare_kernel(kernel, m2, cfg, opts);
            auto [y, report] = run_traced_spmv(k, x, cfg);
            py::dict rep = report_to_dict(report);
            if (report.total_transactions() > 0) {
                rep["utilization"] = effective_bandwidth_proxy(report, cfg.segment_bytes);
            }
            rep["stored_slots"] = k.stored_slots;
            rep["padded_slots"] = k.stored_slots - m2.nnz();
            return py::make_tuple(y, rep);
        },
        py::arg("kernel"), py::arg("matrix"), py::arg("x"), py::arg("warp_size") = 32,
        py::arg("threshold") = 0, py::arg("segment_bytes") = 128, py::arg("align") = true,
        py::arg("ideal_cache") = false, py::arg("cache_lines") = 64,
        "SPMV under the memory-transaction tracer; returns (y, report).");

    m.def(
        "spmv_reference",
        [](const SparseCsr& m2, const std::vector<real>& x) { return spmv_csr_reference(m2, x); },
        py::arg("matrix"), py::arg("x"));

    m.def(
        "sort_rows_desc",
        [](const SparseCsr& m2) {
            const Permutation p = sort_rows_desc(m2);
            return py::make_tuple(p.forward, p.inverse);
        },
        py::arg("matrix"), "Stable longest-first row ordering; returns (forward, inverse).");

    m.def("compute_k2_lanes", &compute_k2_lanes, py::arg("nnz_row"), py::arg("threshold"),
          py::arg("warp_size") = 32);

    m.def(
        "reorder",
        [](const SparseCsr& m2, bool sort_within_rows) {
            const Permutation p = sort_rows_desc(m2);
            ReorderedOperand op = make_reordered_r(m2, p);
            if (sort_within_rows) op = make_reordered_rs(op);
            return py::make_tuple(op.matrix, p.forward);
        },
        py::arg("matrix"), py::arg("sort_within_rows") = false,
        "Column-renumbered operand (r, or rs with sorted rows); returns (matrix, forward).");

    m.def(
        "layout_info",
        [](const SparseCsr& m2, const std::string& kind, int warp_size, idx threshold,
           bool sort_rows) {
            const auto cfg = make_config(warp_size, 128, true, false, 64);
            BuildOptions opts;
            opts.sort_rows = sort_rows;
            py::dict d;
            if (kind == "k1") {
                const WarpLayoutK1 l = build_k1(m2, cfg, opts);
                d["stored_slots"] = l.stored_slots();
                d["padded_slots"] = l.padded_slots();
                d["nwarps"] = l.nwarps();
                d["dump"] = dump_layout(l);
            } else if (kind == "k2") {
                idx t = threshold;
                if (t <= 0) t = matrix_stats(m2).maxrow > 0 ? matrix_stats(m2).maxrow : 1;
                const WarpLayoutK2 l = build_k2(m2, cfg, t, opts);
                d["stored_slots"] = l.stored_slots();
                d["padded_slots"] = l.padded_slots();
                d["nwarps"] = l.nwarps();
                d["dump"] = dump_layout(l);
            } else if (kind == "ell") {
                const EllLayout l = build_ell(m2);
                d["stored_slots"] = l.stored_slots();
                d["padded_slots"] = l.padded_slots();
                d["width"] = l.width;
            } else {
                throw std::invalid_argument("layout_info: kind must be k1, k2 or ell");
            }
            return d;
        },
        py::arg("matrix"), py::arg("kind"), py::arg("warp_size") = 32, py::arg("threshold") = 0,
        py::arg("sort_rows") = true);

    m.def(
        "cg_solve",
        [](const SparseCsr& m2, const std::vector<real>& b, const std::string& kernel, real tol,
           idx max_iterations, bool jacobi) {
            const WarpModelConfig cfg;
            const PreparedKernel k = prepare_kernel(kernel, m2, cfg);
            CgConfig ccfg;
            ccfg.rel_tolerance = tol;
            ccfg.max_iterations = max_iterations;
            ccfg.preconditioner = jacobi ? CgConfig::Precond::jacobi : CgConfig::Precond::none;
            const auto diag = extract_diagonal(m2);
            SpmvFn op = [&](std::span<const real> v) { return k.apply(v, nullptr); };
            const CgResult res = cg_solve(op, b, ccfg, jacobi ? diag : std::span<const real>{});
            py::dict d;
            d["solution"] = res.solution;
            d["iterations"] = res.iterations;
            d["converged"] = res.converged;
            d["residual_history"] = res.residual_history;
            d["spmv_calls"] = res.spmv_calls;
            return d;
        },
        py::arg("matrix"), py::arg("b"), py::arg("kernel") = "k1", py::arg("tol") = 1e-8,
        py::arg("max_iterations") = 1000, py::arg("jacobi") = true);

    m.def(
        "compute_alpha",
        [](real t_reorder, real t_kernel, real t_base) -> py::object {
            const AlphaAnalysis a = compute_alpha(t_reorder, t_kernel, t_base);
            if (!a.alpha) return py::none();
            return py::int_(*a.alpha);
        },
        py::arg("t_reorder"), py::arg("t_kernel"), py::arg("t_base"),
        "Break-even SPMV count; None means the reordered kernel never wins.");

    m.def(
        "fem_simulate",
        [](idx nx, idx ny, idx nz, idx steps, real dt, const std::string& kernel, real phi0,
           real r0) {
            const auto mesh = fem::box_mesh(nx, ny, nz);
            fem::ApParams params;
            params.dt = dt;
            fem::TimestepConfig cfg;
            cfg.kernel_id = kernel;
            fem::FemSimulator sim(mesh, params, cfg, phi0, r0);
            for (idx s = 0; s < steps; ++s) (void)sim.step();
            py::dict d;
            d["phi"] = sim.state().phi;
            d["r"] = sim.state().r;
            d["time"] = sim.state().time;
            d["nnodes"] = mesh.nnodes();
            d["nelements"] = mesh.nelements();
            return d;
        },
        py::arg("nx"), py::arg("ny"), py::arg("nz"), py::arg("steps"), py::arg("dt") = 0.1,
        py::arg("kernel") = "csr_ref", py::arg("phi0") = 0.3, py::arg("r0") = 0.0,
        "Run the monodomain FEM demo on a box mesh and return the final state.");
}
