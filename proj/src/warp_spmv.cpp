#include "ellwarp/warp_spmv.hpp"

namespace ellwarp {

namespace {

// Shared K1 warp loop; `scatter` selects the remapped store (K1) or the
// coalesced sorted store (K1r / K1rs operands).
std::vector<real> run_k1(const WarpLayoutK1& l, std::span<const real> x, bool scatter,
                         WarpTracer* tracer) {
    require(static_cast<idx>(x.size()) == l.ncols, "spmv_k1: dimension mismatch");
    std::vector<real> y(l.nrows, 0.0);
    const idx ws = l.warp_size;
    std::vector<real> sums(ws);
    std::vector<idx> elems, lanes_active;
    for (idx w = 0; w < l.nwarps(); ++w) {
        const idx base = w * ws;
        // active lanes own a row with at least one entry; they run all
        // maxrows steps, padding included
        lanes_active.clear();
        for (idx lane = 0; lane < l.rows_in_warp[w]; ++lane) {
            if (l.sorted_row_length[base + lane] > 0) lanes_active.push_back(lane);
        }
        if (lanes_active.empty()) continue;
        if (tracer) {
            tracer->broadcast(MemSpace::metadata, w, 4);               // warp_offset[w]
            tracer->broadcast(MemSpace::metadata, l.nwarps() + w, 4);  // maxrows[w]
        }
        std::fill(sums.begin(), sums.end(), 0.0);
        for (idx j = 0; j < l.maxrows[w]; ++j) {
            for (idx lane : lanes_active) {
                const idx s = l.slot(w, lane, j);
                sums[lane] += l.values[s] * x[l.col_indices[s]];
            }
            if (tracer) {
                elems.clear();
                for (idx lane : lanes_active) elems.push_back(l.slot(w, lane, j));
                tracer->step(MemSpace::matrix_values, AccessKind::load, 8, elems);
                tracer->step(MemSpace::col_indices, AccessKind::load, 4, elems);
                elems.clear();
                for (idx lane : lanes_active) elems.push_back(l.col_indices[l.slot(w, lane, j)]);
                tracer->step(MemSpace::x_vector, AccessKind::load, 8, elems);
            }
        }
        if (tracer && scatter) {
            elems.clear();
            for (idx lane : lanes_active) elems.push_back(base + lane);
            tracer->step(MemSpace::metadata, AccessKind::load, 4, elems);  // row map
        }
        elems.clear();
        for (idx lane : lanes_active) {
            const idx pos = base + lane;
            const idx target = scatter ? l.row_perm.forward[pos] : pos;
            y[target] = sums[lane];
            elems.push_back(target);
        }
        if (tracer) tracer->step(MemSpace::y_vector, AccessKind::store, 8, elems);
    }
    return y;
}

std::vector<real> run_k2(const WarpLayoutK2& l, std::span<const real> x, bool scatter,
                         WarpTracer* tracer) {
    require(static_cast<idx>(x.size()) == l.ncols, "spmv_k2: dimension mismatch");
    std::vector<real> y(l.nrows, 0.0);
    const idx ws = l.warp_size;
    std::vector<real> scratch(ws);
    std::vector<idx> elems, lanes_active;
    for (idx w = 0; w < l.nwarps(); ++w) {
        const idx red = l.reduction[w];
        const idx mx = l.maxrows[w];
        if (mx == 0) continue;
        lanes_active.clear();
        for (idx r = 0; r < l.rows_in_warp[w]; ++r) {
            if (l.sorted_row_length[l.rows_offset_warp[w] + r] == 0) continue;
            for (idx t = 0; t < red; ++t) lanes_active.push_back(r * red + t);
        }
        if (lanes_active.empty()) continue;
        if (tracer) {
            tracer->broadcast(MemSpace::metadata, w, 4);                   // warp_offset[w]
            tracer->broadcast(MemSpace::metadata, l.nwarps() + w, 4);      // maxrows[w]
            tracer->broadcast(MemSpace::metadata, 2 * l.nwarps() + w, 4);  // reduction[w]
            tracer->broadcast(MemSpace::metadata, 3 * l.nwarps() + w, 4);  // rows_offset_warp[w]
        }
        std::fill(scratch.begin(), scratch.end(), 0.0);
        for (idx j = 0; j < mx; ++j) {
            for (idx lane : lanes_active) {
                const idx s = l.slot(w, lane, j);
                scratch[lane] += l.values[s] * x[l.col_indices[s]];
            }
            if (tracer) {
                elems.clear();
                for (idx lane : lanes_active) elems.push_back(l.slot(w, lane, j));
                tracer->step(MemSpace::matrix_values, AccessKind::load, 8, elems);
                tracer->step(MemSpace::col_indices, AccessKind::load, 4, elems);
                elems.clear();
                for (idx lane : lanes_active) elems.push_back(l.col_indices[l.slot(w, lane, j)]);
                tracer->step(MemSpace::x_vector, AccessKind::load, 8, elems);
            }
        }
        // pairwise reduction inside each lane group; result lands on the leader
        for (idx stride = 1; stride < red; stride <<= 1) {
            for (idx lane : lanes_active) {
                const idx local = lane % red;
                if ((local & (2 * stride - 1)) == 0 && local + stride < red) {
                    scratch[lane] += scratch[lane + stride];
                }
            }
        }
        elems.clear();
        std::vector<idx> targets;
        for (idx r = 0; r < l.rows_in_warp[w]; ++r) {
            const idx pos = l.rows_offset_warp[w] + r;
            if (l.sorted_row_length[pos] == 0) continue;
            const idx target = scatter ? l.row_perm.forward[pos] : pos;
            y[target] = scratch[r * red];
            elems.push_back(pos);
            targets.push_back(target);
        }
        if (tracer) {
            if (scatter) tracer->step(MemSpace::metadata, AccessKind::load, 4, elems);
            tracer->step(MemSpace::y_vector, AccessKind::store, 8, targets);
        }
    }
    return y;
}

}  // namespace

std::vector<real> spmv_k1(const WarpLayoutK1& l, std::span<const real> x, WarpTracer* tracer) {
    return run_k1(l, x, /*scatter=*/true, tracer);
}

std::vector<real> spmv_k1_sorted(const WarpLayoutK1& l, std::span<const real> x_perm,
                                 WarpTracer* tracer) {
    return run_k1(l, x_perm, /*scatter=*/false, tracer);
}

std::vector<real> spmv_k2(const WarpLayoutK2& l, std::span<const real> x, WarpTracer* tracer) {
    return run_k2(l, x, /*scatter=*/true, tracer);
}

std::vector<real> spmv_k2_sorted(const WarpLayoutK2& l, std::span<const real> x_perm,
                                 WarpTracer* tracer) {
    return run_k2(l, x_perm, /*scatter=*/false, tracer);
}

}  // namespace ellwarp
