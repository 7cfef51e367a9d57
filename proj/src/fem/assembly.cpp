#include "ellwarp/fem/assembly.hpp"

#include <algorithm>
#include <set>

namespace ellwarp::fem {

namespace {

// Builds a K1 layout over a synthetic CSR that only carries row lengths; the
// assembly kernel never reads column indices or the prebuilt values.
WarpLayoutK1 layout_over_lengths(const std::vector<idx>& lengths, const WarpModelConfig& cfg) {
    SparseCsr shape;
    shape.nrows = static_cast<idx>(lengths.size());
    idx maxlen = 1;
    for (idx len : lengths) maxlen = std::max(maxlen, len);
    shape.ncols = maxlen;
    shape.row_offsets.assign(shape.nrows + 1, 0);
    for (idx r = 0; r < shape.nrows; ++r) shape.row_offsets[r + 1] = shape.row_offsets[r] + lengths[r];
    shape.col_indices.assign(shape.row_offsets.back(), 0);
    shape.values.assign(shape.row_offsets.back(), 0.0);
    for (idx r = 0; r < shape.nrows; ++r) {
        for (idx j = 0; j < lengths[r]; ++j) shape.col_indices[shape.row_offsets[r] + j] = j;
    }
    return build_k1(shape, cfg);
}

// Flat slot of the c-th contributor of contribution row `row`.
idx layout_slot_of(const WarpLayoutK1& l, idx row, idx c) {
    const idx pos = l.row_perm.inverse[row];
    const idx w = pos / l.warp_size;
    const idx lane = pos % l.warp_size;
    return l.slot(w, lane, c);
}

// Row-sum kernel over a contributions layout (warp-model trace included):
// out[original_row] = sum of that row's slots.
std::vector<real> row_sum_kernel(const WarpLayoutK1& l, std::span<const real> flat,
                                 WarpTracer* tracer) {
    std::vector<real> out(l.nrows, 0.0);
    const idx ws = l.warp_size;
    std::vector<idx> elems, lanes_active;
    for (idx w = 0; w < l.nwarps(); ++w) {
        const idx base = w * ws;
        lanes_active.clear();
        for (idx lane = 0; lane < l.rows_in_warp[w]; ++lane) {
            if (l.sorted_row_length[base + lane] > 0) lanes_active.push_back(lane);
        }
        if (lanes_active.empty()) continue;
        if (tracer) {
            tracer->broadcast(MemSpace::metadata, w, 4);
            tracer->broadcast(MemSpace::metadata, l.nwarps() + w, 4);
        }
        for (idx j = 0; j < l.maxrows[w]; ++j) {
            for (idx lane : lanes_active) {
                out[l.row_perm.forward[base + lane]] += flat[l.slot(w, lane, j)];
            }
            if (tracer) {
                elems.clear();
                for (idx lane : lanes_active) elems.push_back(l.slot(w, lane, j));
                tracer->step(MemSpace::matrix_values, AccessKind::load, 8, elems);
            }
        }
        if (tracer) {
            elems.clear();
            for (idx lane : lanes_active) elems.push_back(base + lane);
            tracer->step(MemSpace::metadata, AccessKind::load, 4, elems);
            elems.clear();
            for (idx lane : lanes_active) elems.push_back(l.row_perm.forward[base + lane]);
            tracer->step(MemSpace::y_vector, AccessKind::store, 8, elems);
        }
    }
    return out;
}

}  // namespace

AssemblyMap build_assembly_map(const TetMesh& mesh, const WarpModelConfig& cfg) {
    mesh.validate();
    AssemblyMap map;
    const idx n = mesh.nnodes();

    // node adjacency pattern (diagonal included)
    std::vector<std::set<idx>> adj(n);
    for (const auto& t : mesh.elements) {
        for (idx a : t) {
            for (idx b : t) adj[a].insert(b);
        }
    }
    map.pattern.nrows = map.pattern.ncols = n;
    map.pattern.row_offsets.assign(n + 1, 0);
    for (idx r = 0; r < n; ++r) {
        map.pattern.row_offsets[r + 1] =
            map.pattern.row_offsets[r] + static_cast<idx>(adj[r].size());
    }
    map.pattern.col_indices.reserve(map.pattern.row_offsets[n]);
    for (idx r = 0; r < n; ++r) {
        map.pattern.col_indices.insert(map.pattern.col_indices.end(), adj[r].begin(), adj[r].end());
    }
    map.pattern.values.assign(map.pattern.nnz(), 0.0);

    auto entry_of = [&](idx row, idx col) {
        const auto first = map.pattern.col_indices.begin() + map.pattern.row_offsets[row];
        const auto last = map.pattern.col_indices.begin() + map.pattern.row_offsets[row + 1];
        const auto it = std::lower_bound(first, last, col);
        return static_cast<idx>(it - map.pattern.col_indices.begin());
    };

    // contributor counts, element-major enumeration fixes the summation order
    std::vector<idx> tangent_len(map.pattern.nnz(), 0);
    std::vector<idx> residual_len(n, 0);
    for (const auto& t : mesh.elements) {
        for (int i = 0; i < 4; ++i) {
            residual_len[t[i]]++;
            for (int j = 0; j < 4; ++j) tangent_len[entry_of(t[i], t[j])]++;
        }
    }
    map.max_node_connectivity = *std::max_element(residual_len.begin(), residual_len.end());

    map.tangent_layout = layout_over_lengths(tangent_len, cfg);
    map.residual_layout = layout_over_lengths(residual_len, cfg);

    std::vector<idx> tangent_fill(map.pattern.nnz(), 0);
    std::vector<idx> residual_fill(n, 0);
    map.tangent_slot.reserve(16 * mesh.nelements());
    map.residual_slot.reserve(4 * mesh.nelements());
    for (const auto& t : mesh.elements) {
        for (int i = 0; i < 4; ++i) {
            for (int j = 0; j < 4; ++j) {
                const idx k = entry_of(t[i], t[j]);
                map.tangent_slot.push_back(layout_slot_of(map.tangent_layout, k, tangent_fill[k]++));
            }
            map.residual_slot.push_back(
                layout_slot_of(map.residual_layout, t[i], residual_fill[t[i]]++));
        }
    }
    return map;
}

AssembledSystem assemble_spmv(const AssemblyMap& map, std::span<const ElementOutput> outputs,
                              WarpTracer* tracer) {
    require(static_cast<idx>(outputs.size()) * 16 == static_cast<idx>(map.tangent_slot.size()),
            "assemble_spmv: element output count does not match the map");
    std::vector<real> tangent_flat(map.tangent_layout.values.size(), 0.0);
    std::vector<real> residual_flat(map.residual_layout.values.size(), 0.0);
    for (idx e = 0; e < static_cast<idx>(outputs.size()); ++e) {
        const auto& out = outputs[e];
        for (int i = 0; i < 4; ++i) {
            for (int j = 0; j < 4; ++j) {
                tangent_flat[map.tangent_slot[16 * e + 4 * i + j]] = out.Ke[i][j];
            }
            residual_flat[map.residual_slot[4 * e + i]] = out.Re[i];
        }
    }
    AssembledSystem sys;
    sys.tangent_values = row_sum_kernel(map.tangent_layout, tangent_flat, tracer);
    sys.residual = row_sum_kernel(map.residual_layout, residual_flat, tracer);
    return sys;
}

}  // namespace ellwarp::fem
