#include "ellwarp/csr.hpp"

#include <algorithm>

namespace ellwarp {

void canonicalize(SparseCoo& m) {
    for (const auto& e : m.entries) {
        require(e.row >= 0 && e.row < m.nrows, "coo entry row out of range");
        require(e.col >= 0 && e.col < m.ncols, "coo entry col out of range");
    }
    std::sort(m.entries.begin(), m.entries.end(), [](const auto& a, const auto& b) {
        return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    std::vector<SparseCoo::Entry> out;
    out.reserve(m.entries.size());
    for (const auto& e : m.entries) {
        if (!out.empty() && out.back().row == e.row && out.back().col == e.col) {
            out.back().value += e.value;
        } else {
            out.push_back(e);
        }
    }
    m.entries = std::move(out);
}

SparseCsr coo_to_csr(const SparseCoo& m) {
    SparseCsr out;
    out.nrows = m.nrows;
    out.ncols = m.ncols;
    out.row_offsets.assign(m.nrows + 1, 0);
    out.col_indices.reserve(m.entries.size());
    out.values.reserve(m.entries.size());
    for (const auto& e : m.entries) out.row_offsets[e.row + 1]++;
    for (idx r = 0; r < m.nrows; ++r) out.row_offsets[r + 1] += out.row_offsets[r];
    for (const auto& e : m.entries) {
        out.col_indices.push_back(e.col);
        out.values.push_back(e.value);
    }
    validate_csr(out);
    return out;
}

SparseCoo csr_to_coo(const SparseCsr& m) {
    SparseCoo out;
    out.nrows = m.nrows;
    out.ncols = m.ncols;
    out.entries.reserve(m.nnz());
    for (idx r = 0; r < m.nrows; ++r) {
        for (idx k = m.row_offsets[r]; k < m.row_offsets[r + 1]; ++k) {
            out.entries.push_back({r, m.col_indices[k], m.values[k]});
        }
    }
    return out;
}

void validate_csr(const SparseCsr& m) {
    require(m.nrows >= 0 && m.ncols >= 0, "negative dimensions");
    require(static_cast<idx>(m.row_offsets.size()) == m.nrows + 1, "row_offsets length");
    require(m.row_offsets.front() == 0, "row_offsets[0] != 0");
    require(m.row_offsets.back() == m.nnz(), "row_offsets[nrows] != nnz");
    require(m.values.size() == m.col_indices.size(), "values/col_indices length mismatch");
    for (idx r = 0; r < m.nrows; ++r) {
        require(m.row_offsets[r] <= m.row_offsets[r + 1], "row_offsets not nondecreasing");
        for (idx k = m.row_offsets[r]; k < m.row_offsets[r + 1]; ++k) {
            require(m.col_indices[k] >= 0 && m.col_indices[k] < m.ncols, "column out of range");
            if (k > m.row_offsets[r]) {
                require(m.col_indices[k - 1] < m.col_indices[k],
                        "columns not strictly increasing within row");
            }
        }
    }
}

std::vector<real> spmv_csr_reference(const SparseCsr& m, std::span<const real> x) {
    require(static_cast<idx>(x.size()) == m.ncols, "spmv dimension mismatch");
    std::vector<real> y(m.nrows, 0.0);
    for (idx r = 0; r < m.nrows; ++r) {
        real sum = 0.0;
        for (idx k = m.row_offsets[r]; k < m.row_offsets[r + 1]; ++k) {
            sum += m.values[k] * x[m.col_indices[k]];
        }
        y[r] = sum;
    }
    return y;
}

MatrixStats matrix_stats(const SparseCsr& m) {
    MatrixStats s;
    s.nnz = m.nnz();
    s.nrows = m.nrows;
    s.bytes = 20 * s.nnz;
    s.minrow = m.nrows > 0 ? m.nnz() : 0;
    s.maxrow = 0;
    for (idx r = 0; r < m.nrows; ++r) {
        const idx len = m.row_length(r);
        s.minrow = std::min(s.minrow, len);
        s.maxrow = std::max(s.maxrow, len);
        s.histogram[len]++;
    }
    if (m.nrows == 0) s.minrow = 0;
    s.mean_nnz_per_row = m.nrows > 0 ? static_cast<real>(s.nnz) / static_cast<real>(m.nrows) : 0.0;
    return s;
}

std::vector<real> extract_diagonal(const SparseCsr& m) {
    std::vector<real> d(m.nrows, 0.0);
    for (idx r = 0; r < m.nrows && r < m.ncols; ++r) {
        for (idx k = m.row_offsets[r]; k < m.row_offsets[r + 1]; ++k) {
            if (m.col_indices[k] == r) {
                d[r] = m.values[k];
                break;
            }
        }
    }
    return d;
}

}  // namespace ellwarp
