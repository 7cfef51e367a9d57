#pragma once

#include "ellwarp/bench/fetch.hpp"
#include "ellwarp/bench/reports.hpp"
#include "ellwarp/cg.hpp"
#include "ellwarp/fem/timestep.hpp"
#include "ellwarp/kernels.hpp"

namespace ellwarp::bench {

struct BenchSpec {
    std::vector<std::string> matrices;  // file path, registry alias, or synthetic:<spec>
    std::vector<std::string> kernels;
    std::vector<int> warp_sizes = {32};
    std::vector<int> block_sizes = {32, 64, 96, 128, 160, 192, 224, 256};
    std::vector<idx> thresholds;  // K2 sweep; empty = minrow..maxrow
    idx threshold_stride = 1;
    idx iterations = 1;  // timing repetitions per point (presets 1, 50, 1200)
    std::uint64_t seed = 1;
    std::string cache_dir = "cache";
    bool offline = false;
    WarpModelConfig warp;  // segment size, alignment, cache flags
};

struct BenchRow {
    std::string matrix;
    std::string kernel;
    int warp_size = 0;
    int block_size = 0;
    idx threshold = -1;  // -1: not applicable
    idx iterations = 0;
    std::string selection = "sweep";  // sweep | best_time | best_transactions
    real wall_first_s = 0.0;
    real wall_median_s = 0.0;
    TransactionReport report;
    real utilization = 0.0;
    idx nnz = 0;
    idx stored_slots = 0;
    idx padded_slots = 0;
    real padding_fraction = 0.0;
    std::string status = "ok";  // ok | skipped
    std::string note;
};

// Full sweep plus one best-by-median-time and one best-by-transactions row
// per (matrix, kernel). Transaction fields are independent of timing noise.
std::vector<BenchRow> run_bench(const BenchSpec& spec);

Table bench_table(const std::vector<BenchRow>& rows);
// bench_table with the wall-clock columns blanked; bitwise stable across
// reruns with the same seed.
Table bench_table_deterministic(const std::vector<BenchRow>& rows);
Table padding_table(const std::vector<BenchRow>& rows);
Table stats_table(const std::string& name, const MatrixStats& stats);

enum class ReorderMode { host_loop, bulk_scatter };

struct AlphaRow {
    std::string matrix;
    std::string kernel;
    std::string baseline;
    ReorderMode mode = ReorderMode::bulk_scatter;
    AlphaAnalysis analysis;
    idx nnz = 0;
};

// Measures t_reorder / t_kernel / t_base for a reordered kernel against a
// baseline. bulk_scatter refreshes values through the precomputed slot map
// (structure reuse); host_loop recomputes every destination on the fly.
AlphaRow analyze_alpha(const std::string& matrix_name, const SparseCsr& m,
                       const std::string& reordered_id, const std::string& baseline_id,
                       ReorderMode mode, const WarpModelConfig& cfg, idx reps = 9,
                       std::uint64_t seed = 1);

Table alpha_table(const std::vector<AlphaRow>& rows);

enum class ReportFormat { csv, json };

// One file per report kind under out_dir (bench, padding, and optionally
// alpha). Throws on empty input rather than writing empty files.
std::vector<std::string> emit_reports(const std::vector<BenchRow>& rows,
                                      const std::vector<AlphaRow>& alpha_rows, ReportFormat format,
                                      const std::string& out_dir);

struct FemDemoResult {
    Table timing;  // per-step phase seconds and shares plus a total row
    std::string checkpoint_path;
    idx steps = 0;
};

FemDemoResult fem_demo(const fem::TetMesh& mesh, const fem::ApParams& params,
                       const fem::TimestepConfig& cfg, idx steps, const std::string& out_dir,
                       real phi0 = 0.3, real r0 = 0.0);

}  // namespace ellwarp::bench
