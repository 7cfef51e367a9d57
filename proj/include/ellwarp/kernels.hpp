#pragma once

#include <functional>
#include <memory>

#include "ellwarp/formats.hpp"
#include "ellwarp/reorder.hpp"
#include "ellwarp/warp_spmv.hpp"

namespace ellwarp {

// One prepared SPMV kernel: layouts are built once, apply() is a pure
// function of x. For r/rs variants apply() permutes in and out so the result
// is always in original numbering; apply_permuted() exposes the raw
// scatter-free path for permuted-space solvers.
struct PreparedKernel {
    std::string id;
    std::function<std::vector<real>(std::span<const real>, WarpTracer*)> apply;
    std::function<std::vector<real>(std::span<const real>, WarpTracer*)> apply_permuted;
    std::shared_ptr<const Permutation> perm;  // set for r/rs variants
    idx nnz = 0;
    idx stored_slots = 0;  // padded layout slots; 0 when the format has no padding
};

// All kernel ids, in reporting order:
// csr_ref, csr_vector, coo, ell, hyb, k1, k1r, k1rs, k2, k2r, k2rs.
const std::vector<std::string>& kernel_ids();

struct KernelOptions {
    idx k2_threshold = 0;  // <= 0: defaults to max row length
    idx hyb_k_ell = -1;    // < 0: 2/3-coverage heuristic
};

// Builds layouts for `id` over m. Throws std::invalid_argument for unknown
// ids and for r/rs variants on non-square matrices.
PreparedKernel prepare_kernel(const std::string& id, const SparseCsr& m,
                              const WarpModelConfig& cfg, KernelOptions opts = {});

// Runs the kernel under the transaction tracer; y is bitwise identical to the
// untraced call. useful_bytes is set to 20 * nnz.
std::pair<std::vector<real>, TransactionReport> run_traced_spmv(const PreparedKernel& kernel,
                                                                std::span<const real> x,
                                                                const WarpModelConfig& cfg);

}  // namespace ellwarp
