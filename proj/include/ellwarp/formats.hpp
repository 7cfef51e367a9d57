#pragma once

#include "ellwarp/csr.hpp"
#include "ellwarp/warp_model.hpp"

namespace ellwarp {

// ELLPACK storage: every row padded to the global maximum row length K,
// stored column-major (element (row r, slot j) at flat index j*nrows + r).
// Padding entries are value 0.0 at column 0 so all reads stay in bounds.
struct EllLayout {
    idx nrows = 0;
    idx ncols = 0;
    idx nnz = 0;
    idx width = 0;  // K
    std::vector<real> values;
    std::vector<idx> col_indices;

    idx stored_slots() const { return nrows * width; }
    idx padded_slots() const { return stored_slots() - nnz; }
};

struct HybLayout {
    EllLayout ell_part;
    SparseCoo coo_tail;  // overflow entries, sorted by row
    idx k_ell = 0;
};

EllLayout build_ell(const SparseCsr& m);

// Rows keep their first k_ell entries in ELL; the remainder spills to COO.
HybLayout build_hyb(const SparseCsr& m, idx k_ell);

// Smallest width that fully covers at least the given fraction of rows
// (the documented stand-in for the empirical ELL/COO split).
idx hyb_default_k_ell(const SparseCsr& m, real covered_fraction = 2.0 / 3.0);

// One thread per row, lockstep over slots 0..K-1.
std::vector<real> spmv_ell(const EllLayout& l, std::span<const real> x,
                           const WarpModelConfig& cfg, WarpTracer* tracer = nullptr);

// ELL pass followed by a COO pass accumulating into y.
std::vector<real> spmv_hyb(const HybLayout& l, std::span<const real> x,
                           const WarpModelConfig& cfg, WarpTracer* tracer = nullptr);

// One warp walks the entry list 32 at a time with an intra-warp segmented
// scan keyed on row index; partial sums carry across warp iterations.
std::vector<real> spmv_coo_segmented(const SparseCoo& m, std::span<const real> x,
                                     const WarpModelConfig& cfg, WarpTracer* tracer = nullptr);

// One warp per row, lanes stride the row, pairwise tree reduction.
std::vector<real> spmv_csr_vector(const SparseCsr& m, std::span<const real> x,
                                  const WarpModelConfig& cfg, WarpTracer* tracer = nullptr);

}  // namespace ellwarp
