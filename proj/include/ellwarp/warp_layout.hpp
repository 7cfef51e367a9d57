#pragma once

#include "ellwarp/csr.hpp"
#include "ellwarp/permutation.hpp"
#include "ellwarp/warp_model.hpp"

namespace ellwarp {

// Warp-granular padded storage: rows sorted longest-to-shortest, grouped one
// warp at a time, each warp padded to its own maximum row length and
// interleaved column-major so lane loads coalesce. Entry j of the lane-i row
// of warp w sits at flat index warp_offset[w] + j*warp_size + i.
struct WarpLayoutK1 {
    int warp_size = 32;
    idx nrows = 0;
    idx ncols = 0;
    idx nnz = 0;
    std::vector<real> values;
    std::vector<idx> col_indices;
    std::vector<idx> warp_offset;   // per warp, first flat slot
    std::vector<idx> maxrows;       // per warp, padded row length
    std::vector<idx> rows_in_warp;  // per warp, sorted positions actually present
    Permutation row_perm;           // forward: sorted position -> original row
    std::vector<idx> sorted_row_length;
    bool row_major = false;  // diagnostic build: lane-major, deliberately uncoalesced

    idx nwarps() const { return static_cast<idx>(warp_offset.size()); }
    idx stored_slots() const;
    idx padded_slots() const { return stored_slots() - nnz; }
    // flat slot of entry j in the lane-i row of warp w
    idx slot(idx w, idx lane, idx j) const {
        return row_major ? warp_offset[w] + lane * maxrows[w] + j
                         : warp_offset[w] + j * warp_size + lane;
    }
};

// K1 plus a power-of-two lane count per warp: a warp serves
// warp_size/reduction consecutive sorted rows, each row split across
// `reduction` lanes in chunks of maxrows slots, combined by pairwise
// reduction through a per-warp scratch array.
struct WarpLayoutK2 {
    int warp_size = 32;
    idx nrows = 0;
    idx ncols = 0;
    idx nnz = 0;
    idx threshold = 0;  // max slots per lane for rows split below warp_size lanes
    std::vector<real> values;
    std::vector<idx> col_indices;
    std::vector<idx> warp_offset;
    std::vector<idx> maxrows;          // per warp, slots per lane
    std::vector<idx> reduction;        // per warp, lanes per row (power of two)
    std::vector<idx> rows_offset_warp; // per warp, first sorted position
    std::vector<idx> rows_in_warp;     // per warp, rows actually present
    Permutation row_perm;
    std::vector<idx> sorted_row_length;

    idx nwarps() const { return static_cast<idx>(warp_offset.size()); }
    idx stored_slots() const;
    idx padded_slots() const { return stored_slots() - nnz; }
    idx slot(idx w, idx lane, idx j) const { return warp_offset[w] + j * warp_size + lane; }
};

struct BuildOptions {
    bool sort_rows = true;    // false: keep original row order (padding diagnostics)
    bool row_major = false;   // K1 only
};

WarpLayoutK1 build_k1(const SparseCsr& m, const WarpModelConfig& cfg, BuildOptions opts = {});

// Smallest power-of-two lane count p with ceil(nnz_row/p) <= threshold,
// capped at warp_size; rows longer than warp_size*threshold take the whole
// warp.
idx compute_k2_lanes(idx nnz_row, idx threshold, idx warp_size);

WarpLayoutK2 build_k2(const SparseCsr& m, const WarpModelConfig& cfg, idx threshold,
                      BuildOptions opts = {});

// Flat destination slot of every CSR entry, in nonzero order. This is the
// precomputed scatter map that lets a values-only refresh skip the sort and
// layout arithmetic when the matrix structure is reused.
std::vector<idx> value_slot_map(const WarpLayoutK1& l, const SparseCsr& m);
std::vector<idx> value_slot_map(const WarpLayoutK2& l, const SparseCsr& m);

struct PaddingReport {
    idx stored_slots = 0;
    idx padded_slots = 0;
    real padding_fraction = 0.0;  // padded / stored
};

PaddingReport padding_report(idx stored_slots, idx nnz);

// Debug listing of per-warp metadata, one line per warp; golden-file tested.
std::string dump_layout(const WarpLayoutK1& l);
std::string dump_layout(const WarpLayoutK2& l);

}  // namespace ellwarp
