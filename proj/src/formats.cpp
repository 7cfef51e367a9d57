#include "ellwarp/formats.hpp"

#include <algorithm>

namespace ellwarp {

EllLayout build_ell(const SparseCsr& m) {
    EllLayout l;
    l.nrows = m.nrows;
    l.ncols = m.ncols;
    l.nnz = m.nnz();
    for (idx r = 0; r < m.nrows; ++r) l.width = std::max(l.width, m.row_length(r));
    l.values.assign(static_cast<std::size_t>(l.nrows * l.width), 0.0);
    l.col_indices.assign(static_cast<std::size_t>(l.nrows * l.width), 0);
    for (idx r = 0; r < m.nrows; ++r) {
        for (idx j = 0; j < m.row_length(r); ++j) {
            const idx k = m.row_offsets[r] + j;
            l.values[j * l.nrows + r] = m.values[k];
            l.col_indices[j * l.nrows + r] = m.col_indices[k];
        }
    }
    return l;
}

HybLayout build_hyb(const SparseCsr& m, idx k_ell) {
    require(k_ell >= 0, "build_hyb: k_ell must be >= 0");
    HybLayout h;
    h.k_ell = k_ell;
    auto& e = h.ell_part;
    e.nrows = m.nrows;
    e.ncols = m.ncols;
    e.width = 0;
    for (idx r = 0; r < m.nrows; ++r) e.width = std::max(e.width, std::min(k_ell, m.row_length(r)));
    e.values.assign(static_cast<std::size_t>(e.nrows * e.width), 0.0);
    e.col_indices.assign(static_cast<std::size_t>(e.nrows * e.width), 0);
    h.coo_tail.nrows = m.nrows;
    h.coo_tail.ncols = m.ncols;
    for (idx r = 0; r < m.nrows; ++r) {
        const idx len = m.row_length(r);
        for (idx j = 0; j < len; ++j) {
            const idx k = m.row_offsets[r] + j;
            if (j < k_ell) {
                e.values[j * e.nrows + r] = m.values[k];
                e.col_indices[j * e.nrows + r] = m.col_indices[k];
                e.nnz++;
            } else {
                h.coo_tail.entries.push_back({r, m.col_indices[k], m.values[k]});
            }
        }
    }
    return h;
}

idx hyb_default_k_ell(const SparseCsr& m, real covered_fraction) {
    if (m.nrows == 0) return 0;
    std::vector<idx> lengths(m.nrows);
    for (idx r = 0; r < m.nrows; ++r) lengths[r] = m.row_length(r);
    std::sort(lengths.begin(), lengths.end());
    const idx want = static_cast<idx>(std::ceil(covered_fraction * static_cast<real>(m.nrows)));
    const idx pos = std::clamp<idx>(want, 1, m.nrows);
    return lengths[pos - 1];
}

std::vector<real> spmv_ell(const EllLayout& l, std::span<const real> x,
                           const WarpModelConfig& cfg, WarpTracer* tracer) {
    require(static_cast<idx>(x.size()) == l.ncols, "spmv_ell: dimension mismatch");
    std::vector<real> y(l.nrows, 0.0);
    const idx ws = cfg.warp_size;
    const idx nwarps = ceil_div(l.nrows, ws);
    std::vector<idx> elems;
    for (idx w = 0; w < nwarps; ++w) {
        const idx lo = w * ws;
        const idx hi = std::min(lo + ws, l.nrows);
        for (idx j = 0; j < l.width; ++j) {
            for (idx r = lo; r < hi; ++r) {
                y[r] += l.values[j * l.nrows + r] * x[l.col_indices[j * l.nrows + r]];
            }
            if (tracer) {
                elems.clear();
                for (idx r = lo; r < hi; ++r) elems.push_back(j * l.nrows + r);
                tracer->step(MemSpace::matrix_values, AccessKind::load, 8, elems);
                tracer->step(MemSpace::col_indices, AccessKind::load, 4, elems);
                elems.clear();
                for (idx r = lo; r < hi; ++r) elems.push_back(l.col_indices[j * l.nrows + r]);
                tracer->step(MemSpace::x_vector, AccessKind::load, 8, elems);
            }
        }
        if (tracer) {
            elems.clear();
            for (idx r = lo; r < hi; ++r) elems.push_back(r);
            tracer->step(MemSpace::y_vector, AccessKind::store, 8, elems);
        }
    }
    return y;
}

namespace {

// Accumulates the COO pass into y. Rows must be sorted; y is written once per
// row via the first-lane carry.
void coo_pass(const SparseCoo& m, std::span<const real> x, std::vector<real>& y,
              const WarpModelConfig& cfg, WarpTracer* tracer) {
    const idx ws = cfg.warp_size;
    const idx n = m.nnz();
    for (idx k = 1; k < n; ++k) {
        require(m.entries[k - 1].row <= m.entries[k].row, "coo entries must be sorted by row");
    }
    bool have_carry = false;
    idx carry_row = -1;
    real carry_val = 0.0;

    std::vector<real> partial(ws);
    std::vector<idx> rows(ws), elems;
    for (idx base = 0; base < n; base += ws) {
        const idx lanes = std::min(ws, n - base);
        for (idx l = 0; l < lanes; ++l) {
            const auto& e = m.entries[base + l];
            partial[l] = e.value * x[e.col];
            rows[l] = e.row;
        }
        if (tracer) {
            elems.clear();
            for (idx l = 0; l < lanes; ++l) elems.push_back(base + l);
            tracer->step(MemSpace::matrix_values, AccessKind::load, 8, elems);
            tracer->step(MemSpace::col_indices, AccessKind::load, 4, elems);
            tracer->step(MemSpace::metadata, AccessKind::load, 4, elems);  // row index list
            elems.clear();
            for (idx l = 0; l < lanes; ++l) elems.push_back(m.entries[base + l].col);
            tracer->step(MemSpace::x_vector, AccessKind::load, 8, elems);
        }
        // first lane: flush the previous iteration's carry if its row ended
        elems.clear();
        if (have_carry && carry_row != rows[0]) {
            y[carry_row] += carry_val;
            elems.push_back(carry_row);
            have_carry = false;
        }
        // intra-warp segmented inclusive scan keyed on row
        for (idx stride = 1; stride < lanes; stride <<= 1) {
            for (idx l = lanes - 1; l >= stride; --l) {
                if (rows[l] == rows[l - stride]) partial[l] += partial[l - stride];
            }
        }
        // lane l ends its row segment if the next lane has a different row
        for (idx l = 0; l < lanes; ++l) {
            const bool last_of_run = l + 1 == lanes || rows[l + 1] != rows[l];
            if (!last_of_run) continue;
            real total = partial[l];
            if (have_carry && carry_row == rows[l]) {
                total += carry_val;
                have_carry = false;
            }
            if (l + 1 == lanes) {
                have_carry = true;  // may continue into the next warp iteration
                carry_row = rows[l];
                carry_val = total;
            } else {
                y[rows[l]] += total;
                elems.push_back(rows[l]);
            }
        }
        if (tracer && !elems.empty()) {
            tracer->step(MemSpace::y_vector, AccessKind::load, 8, elems);
            tracer->step(MemSpace::y_vector, AccessKind::store, 8, elems);
        }
    }
    if (have_carry) {
        y[carry_row] += carry_val;
        if (tracer) {
            const idx one[] = {carry_row};
            tracer->step(MemSpace::y_vector, AccessKind::load, 8, one);
            tracer->step(MemSpace::y_vector, AccessKind::store, 8, one);
        }
    }
}

}  // namespace

std::vector<real> spmv_hyb(const HybLayout& l, std::span<const real> x,
                           const WarpModelConfig& cfg, WarpTracer* tracer) {
    std::vector<real> y = spmv_ell(l.ell_part, x, cfg, tracer);
    coo_pass(l.coo_tail, x, y, cfg, tracer);
    return y;
}

std::vector<real> spmv_coo_segmented(const SparseCoo& m, std::span<const real> x,
                                     const WarpModelConfig& cfg, WarpTracer* tracer) {
    require(static_cast<idx>(x.size()) == m.ncols, "spmv_coo_segmented: dimension mismatch");
    std::vector<real> y(m.nrows, 0.0);
    coo_pass(m, x, y, cfg, tracer);
    return y;
}

std::vector<real> spmv_csr_vector(const SparseCsr& m, std::span<const real> x,
                                  const WarpModelConfig& cfg, WarpTracer* tracer) {
    require(static_cast<idx>(x.size()) == m.ncols, "spmv_csr_vector: dimension mismatch");
    std::vector<real> y(m.nrows, 0.0);
    const idx ws = cfg.warp_size;
    std::vector<real> partial(ws);
    std::vector<idx> elems;
    for (idx r = 0; r < m.nrows; ++r) {
        const idx lo = m.row_offsets[r];
        const idx hi = m.row_offsets[r + 1];
        if (tracer) {
            tracer->broadcast(MemSpace::metadata, r, 4);      // row_offsets[r]
            tracer->broadcast(MemSpace::metadata, r + 1, 4);  // row_offsets[r+1]
        }
        std::fill(partial.begin(), partial.end(), 0.0);
        for (idx base = lo; base < hi; base += ws) {
            const idx lanes = std::min(ws, hi - base);
            for (idx l = 0; l < lanes; ++l) {
                partial[l] += m.values[base + l] * x[m.col_indices[base + l]];
            }
            if (tracer) {
                elems.clear();
                for (idx l = 0; l < lanes; ++l) elems.push_back(base + l);
                tracer->step(MemSpace::matrix_values, AccessKind::load, 8, elems);
                tracer->step(MemSpace::col_indices, AccessKind::load, 4, elems);
                elems.clear();
                for (idx l = 0; l < lanes; ++l) elems.push_back(m.col_indices[base + l]);
                tracer->step(MemSpace::x_vector, AccessKind::load, 8, elems);
            }
        }
        // pairwise tree reduction over lanes
        for (idx stride = 1; stride < ws; stride <<= 1) {
            for (idx l = 0; l + stride < ws; l += 2 * stride) partial[l] += partial[l + stride];
        }
        y[r] = partial[0];
        if (tracer) {
            const idx one[] = {r};
            tracer->step(MemSpace::y_vector, AccessKind::store, 8, one);
        }
    }
    return y;
}

}  // namespace ellwarp
