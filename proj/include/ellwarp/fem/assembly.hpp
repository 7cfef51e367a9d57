#pragma once

#include "ellwarp/csr.hpp"
#include "ellwarp/fem/element.hpp"
#include "ellwarp/warp_layout.hpp"

namespace ellwarp::fem {

// Race-free global assembly expressed as row sums of a contributions matrix:
// one contribution row per global tangent nonzero (and one per node for the
// residual), each row listing the element-local entries that add into it.
// The rows are packed into a K1-style warp layout once; per assembly only the
// values are scattered and the row-sum kernel runs (the all-ones multiply is
// elided).
struct AssemblyMap {
    SparseCsr pattern;  // global tangent sparsity, values zeroed

    // scatter destinations into the two flat layouts, element-major order:
    // tangent_slot[16*e + 4*i + j], residual_slot[4*e + i]
    std::vector<idx> tangent_slot;
    std::vector<idx> residual_slot;

    WarpLayoutK1 tangent_layout;   // contribution rows = pattern.nnz()
    WarpLayoutK1 residual_layout;  // contribution rows = nnodes

    idx max_node_connectivity = 0;  // max elements sharing a node
};

AssemblyMap build_assembly_map(const TetMesh& mesh, const WarpModelConfig& cfg = {});

struct AssembledSystem {
    std::vector<real> tangent_values;  // aligned with map.pattern nonzero order
    std::vector<real> residual;        // length nnodes
};

// Row-sums the scattered element outputs. Equals sequential scatter-add.
AssembledSystem assemble_spmv(const AssemblyMap& map, std::span<const ElementOutput> outputs,
                              WarpTracer* tracer = nullptr);

}  // namespace ellwarp::fem
