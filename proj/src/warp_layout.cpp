#include "ellwarp/warp_layout.hpp"

#include <algorithm>
#include <sstream>

namespace ellwarp {

namespace {

// Flat offsets are padded so every warp starts on a segment boundary for both
// the 8-byte value array and the 4-byte column array.
idx align_offset(idx offset, const WarpModelConfig& cfg) {
    if (!cfg.align_warp_offsets) return offset;
    const idx unit = cfg.segment_bytes / 4;
    return ceil_div(offset, unit) * unit;
}

}  // namespace

idx WarpLayoutK1::stored_slots() const {
    idx total = 0;
    for (idx w = 0; w < nwarps(); ++w) total += maxrows[w] * rows_in_warp[w];
    return total;
}

idx WarpLayoutK2::stored_slots() const {
    idx total = 0;
    for (idx w = 0; w < nwarps(); ++w) total += maxrows[w] * reduction[w] * rows_in_warp[w];
    return total;
}

WarpLayoutK1 build_k1(const SparseCsr& m, const WarpModelConfig& cfg, BuildOptions opts) {
    cfg.validate();
    WarpLayoutK1 l;
    l.warp_size = cfg.warp_size;
    l.nrows = m.nrows;
    l.ncols = m.ncols;
    l.nnz = m.nnz();
    l.row_major = opts.row_major;
    l.row_perm = opts.sort_rows ? sort_rows_desc(m) : Permutation::identity(m.nrows);

    const idx ws = cfg.warp_size;
    l.sorted_row_length.resize(m.nrows);
    for (idx p = 0; p < m.nrows; ++p) l.sorted_row_length[p] = m.row_length(l.row_perm.forward[p]);

    const idx nwarps = ceil_div(m.nrows, ws);
    idx offset = 0;
    for (idx w = 0; w < nwarps; ++w) {
        const idx lo = w * ws;
        const idx hi = std::min(lo + ws, m.nrows);
        idx mx = 0;
        for (idx p = lo; p < hi; ++p) mx = std::max(mx, l.sorted_row_length[p]);
        offset = align_offset(offset, cfg);
        l.warp_offset.push_back(offset);
        l.maxrows.push_back(mx);
        l.rows_in_warp.push_back(hi - lo);
        offset += mx * ws;
    }
    l.values.assign(static_cast<std::size_t>(offset), 0.0);
    l.col_indices.assign(static_cast<std::size_t>(offset), 0);
    for (idx w = 0; w < nwarps; ++w) {
        for (idx lane = 0; lane < l.rows_in_warp[w]; ++lane) {
            const idx p = w * ws + lane;
            const idx row = l.row_perm.forward[p];
            for (idx j = 0; j < l.sorted_row_length[p]; ++j) {
                const idx k = m.row_offsets[row] + j;
                const idx s = l.slot(w, lane, j);
                l.values[s] = m.values[k];
                l.col_indices[s] = m.col_indices[k];
            }
        }
    }
    return l;
}

idx compute_k2_lanes(idx nnz_row, idx threshold, idx warp_size) {
    require(threshold >= 1, "compute_k2_lanes: threshold must be >= 1");
    require(warp_size >= 1 && (warp_size & (warp_size - 1)) == 0,
            "compute_k2_lanes: warp_size must be a power of two");
    if (nnz_row > warp_size * threshold) return warp_size;
    idx lanes = 1;
    while (ceil_div(nnz_row, lanes) > threshold) lanes <<= 1;
    return lanes;
}

WarpLayoutK2 build_k2(const SparseCsr& m, const WarpModelConfig& cfg, idx threshold,
                      BuildOptions opts) {
    cfg.validate();
    require(threshold >= 1, "build_k2: threshold must be >= 1");
    WarpLayoutK2 l;
    l.warp_size = cfg.warp_size;
    l.nrows = m.nrows;
    l.ncols = m.ncols;
    l.nnz = m.nnz();
    l.threshold = threshold;
    l.row_perm = opts.sort_rows ? sort_rows_desc(m) : Permutation::identity(m.nrows);

    const idx ws = cfg.warp_size;
    l.sorted_row_length.resize(m.nrows);
    for (idx p = 0; p < m.nrows; ++p) l.sorted_row_length[p] = m.row_length(l.row_perm.forward[p]);

    // Greedy packing over sorted rows: a warp holds consecutive rows sharing
    // one lane count and closes when the count changes or the warp fills.
    idx p = 0;
    while (p < m.nrows) {
        const idx lanes = compute_k2_lanes(l.sorted_row_length[p], threshold, ws);
        const idx capacity = ws / lanes;
        idx q = p;
        idx mx = 0;
        while (q < m.nrows && q - p < capacity &&
               compute_k2_lanes(l.sorted_row_length[q], threshold, ws) == lanes) {
            mx = std::max(mx, ceil_div(l.sorted_row_length[q], lanes));
            ++q;
        }
        l.reduction.push_back(lanes);
        l.rows_offset_warp.push_back(p);
        l.rows_in_warp.push_back(q - p);
        l.maxrows.push_back(mx);
        p = q;
    }

    const idx nwarps = static_cast<idx>(l.reduction.size());
    idx offset = 0;
    for (idx w = 0; w < nwarps; ++w) {
        offset = align_offset(offset, cfg);
        l.warp_offset.push_back(offset);
        offset += l.maxrows[w] * ws;
    }
    l.values.assign(static_cast<std::size_t>(offset), 0.0);
    l.col_indices.assign(static_cast<std::size_t>(offset), 0);
    for (idx w = 0; w < nwarps; ++w) {
        const idx red = l.reduction[w];
        const idx mx = l.maxrows[w];
        for (idx r = 0; r < l.rows_in_warp[w]; ++r) {
            const idx pos = l.rows_offset_warp[w] + r;
            const idx row = l.row_perm.forward[pos];
            for (idx e = 0; e < l.sorted_row_length[pos]; ++e) {
                const idx lane = r * red + e / mx;
                const idx s = l.slot(w, lane, e % mx);
                const idx k = m.row_offsets[row] + e;
                l.values[s] = m.values[k];
                l.col_indices[s] = m.col_indices[k];
            }
        }
    }
    return l;
}

std::vector<idx> value_slot_map(const WarpLayoutK1& l, const SparseCsr& m) {
    std::vector<idx> map(m.nnz());
    for (idx p = 0; p < m.nrows; ++p) {
        const idx row = l.row_perm.forward[p];
        const idx w = p / l.warp_size;
        const idx lane = p % l.warp_size;
        for (idx j = 0; j < m.row_length(row); ++j) map[m.row_offsets[row] + j] = l.slot(w, lane, j);
    }
    return map;
}

std::vector<idx> value_slot_map(const WarpLayoutK2& l, const SparseCsr& m) {
    std::vector<idx> map(m.nnz());
    for (idx w = 0; w < l.nwarps(); ++w) {
        const idx red = l.reduction[w];
        const idx mx = l.maxrows[w];
        for (idx r = 0; r < l.rows_in_warp[w]; ++r) {
            const idx pos = l.rows_offset_warp[w] + r;
            const idx row = l.row_perm.forward[pos];
            for (idx e = 0; e < l.sorted_row_length[pos]; ++e) {
                map[m.row_offsets[row] + e] = l.slot(w, r * red + e / mx, e % mx);
            }
        }
    }
    return map;
}

PaddingReport padding_report(idx stored_slots, idx nnz) {
    PaddingReport r;
    r.stored_slots = stored_slots;
    r.padded_slots = stored_slots - nnz;
    r.padding_fraction =
        stored_slots > 0 ? static_cast<real>(r.padded_slots) / static_cast<real>(stored_slots) : 0.0;
    return r;
}

std::string dump_layout(const WarpLayoutK1& l) {
    std::ostringstream os;
    os << "k1 warp_size=" << l.warp_size << " nrows=" << l.nrows << " nnz=" << l.nnz
       << " nwarps=" << l.nwarps() << "\n";
    for (idx w = 0; w < l.nwarps(); ++w) {
        os << "warp " << w << ": offset=" << l.warp_offset[w] << " maxrows=" << l.maxrows[w]
           << " reduction=1 rows=[" << w * l.warp_size << ","
           << w * l.warp_size + l.rows_in_warp[w] << ")\n";
    }
    return os.str();
}

std::string dump_layout(const WarpLayoutK2& l) {
    std::ostringstream os;
    os << "k2 warp_size=" << l.warp_size << " nrows=" << l.nrows << " nnz=" << l.nnz
       << " threshold=" << l.threshold << " nwarps=" << l.nwarps() << "\n";
    for (idx w = 0; w < l.nwarps(); ++w) {
        os << "warp " << w << ": offset=" << l.warp_offset[w] << " maxrows=" << l.maxrows[w]
           << " reduction=" << l.reduction[w] << " rows=[" << l.rows_offset_warp[w] << ","
           << l.rows_offset_warp[w] + l.rows_in_warp[w] << ")\n";
    }
    return os.str();
}

}  // namespace ellwarp
