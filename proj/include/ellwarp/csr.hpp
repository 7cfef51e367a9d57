#pragma once

#include <map>

#include "ellwarp/types.hpp"

namespace ellwarp {

// Coordinate-list matrix. Canonical form: entries sorted by (row, col),
// duplicates summed.
struct SparseCoo {
    idx nrows = 0;
    idx ncols = 0;
    struct Entry {
        idx row;
        idx col;
        real value;
    };
    std::vector<Entry> entries;

    idx nnz() const { return static_cast<idx>(entries.size()); }
};

// Compressed sparse row matrix. Canonical form: strictly increasing column
// indices within each row.
struct SparseCsr {
    idx nrows = 0;
    idx ncols = 0;
    std::vector<idx> row_offsets;   // length nrows + 1
    std::vector<idx> col_indices;   // length nnz
    std::vector<real> values;       // length nnz

    idx nnz() const { return static_cast<idx>(col_indices.size()); }
    idx row_length(idx r) const { return row_offsets[r + 1] - row_offsets[r]; }
    bool square() const { return nrows == ncols; }
};

struct MatrixStats {
    idx nnz = 0;
    idx nrows = 0;
    idx bytes = 0;  // 20 bytes per stored nonzero
    idx minrow = 0;
    idx maxrow = 0;
    real mean_nnz_per_row = 0.0;
    std::map<idx, idx> histogram;  // row length -> row count
};

// Sorts entries by (row, col) and sums duplicate coordinates in place.
void canonicalize(SparseCoo& m);

SparseCsr coo_to_csr(const SparseCoo& m);
SparseCoo csr_to_coo(const SparseCsr& m);

// Throws std::invalid_argument when a CSR invariant is violated.
void validate_csr(const SparseCsr& m);

// Sequential row-by-row product in ascending column order; the oracle every
// emulated kernel is checked against.
std::vector<real> spmv_csr_reference(const SparseCsr& m, std::span<const real> x);

MatrixStats matrix_stats(const SparseCsr& m);

std::vector<real> extract_diagonal(const SparseCsr& m);

}  // namespace ellwarp
