#include "ellwarp/kernels.hpp"

#include <algorithm>

namespace ellwarp {

const std::vector<std::string>& kernel_ids() {
    static const std::vector<std::string> ids = {"csr_ref", "csr_vector", "coo", "ell",
                                                 "hyb",     "k1",         "k1r", "k1rs",
                                                 "k2",      "k2r",        "k2rs"};
    return ids;
}

namespace {

idx default_threshold(const SparseCsr& m, idx requested) {
    if (requested > 0) return requested;
    idx mx = 1;
    for (idx r = 0; r < m.nrows; ++r) mx = std::max(mx, m.row_length(r));
    return mx;
}

PreparedKernel make_reordered_kernel(const std::string& id, const SparseCsr& m,
                                     const WarpModelConfig& cfg, KernelOptions opts) {
    require(m.square(), "kernel '" + id + "' requires a square matrix");
    auto perm = std::make_shared<Permutation>(sort_rows_desc(m));
    auto op = std::make_shared<ReorderedOperand>(make_reordered_r(m, *perm));
    const bool rs = id == "k1rs" || id == "k2rs";
    if (rs) *op = make_reordered_rs(*op);

    PreparedKernel k;
    k.id = id;
    k.perm = perm;
    k.nnz = m.nnz();
    if (id == "k1r" || id == "k1rs") {
        auto layout = std::make_shared<WarpLayoutK1>(build_k1(op->matrix, cfg));
        k.stored_slots = layout->stored_slots();
        k.apply_permuted = [layout](std::span<const real> x_perm, WarpTracer* t) {
            return spmv_k1_sorted(*layout, x_perm, t);
        };
    } else {
        auto layout = std::make_shared<WarpLayoutK2>(
            build_k2(op->matrix, cfg, default_threshold(m, opts.k2_threshold)));
        k.stored_slots = layout->stored_slots();
        k.apply_permuted = [layout](std::span<const real> x_perm, WarpTracer* t) {
            return spmv_k2_sorted(*layout, x_perm, t);
        };
    }
    auto permuted = k.apply_permuted;
    k.apply = [op, permuted](std::span<const real> x, WarpTracer* t) {
        const auto x_perm = op->permute_input(x);
        return op->unpermute_output(permuted(x_perm, t));
    };
    return k;
}

}  // namespace

PreparedKernel prepare_kernel(const std::string& id, const SparseCsr& m,
                              const WarpModelConfig& cfg, KernelOptions opts) {
    cfg.validate();
    PreparedKernel k;
    k.id = id;
    k.nnz = m.nnz();
    k.stored_slots = m.nnz();  // formats without padding store exactly nnz
    if (id == "csr_ref") {
        auto mat = std::make_shared<SparseCsr>(m);
        k.apply = [mat](std::span<const real> x, WarpTracer*) {
            return spmv_csr_reference(*mat, x);
        };
        return k;
    }
    if (id == "csr_vector") {
        auto mat = std::make_shared<SparseCsr>(m);
        k.apply = [mat, cfg](std::span<const real> x, WarpTracer* t) {
            return spmv_csr_vector(*mat, x, cfg, t);
        };
        return k;
    }
    if (id == "coo") {
        auto coo = std::make_shared<SparseCoo>(csr_to_coo(m));
        k.apply = [coo, cfg](std::span<const real> x, WarpTracer* t) {
            return spmv_coo_segmented(*coo, x, cfg, t);
        };
        return k;
    }
    if (id == "ell") {
        auto layout = std::make_shared<EllLayout>(build_ell(m));
        k.stored_slots = layout->stored_slots();
        k.apply = [layout, cfg](std::span<const real> x, WarpTracer* t) {
            return spmv_ell(*layout, x, cfg, t);
        };
        return k;
    }
    if (id == "hyb") {
        const idx k_ell = opts.hyb_k_ell >= 0 ? opts.hyb_k_ell : hyb_default_k_ell(m);
        auto layout = std::make_shared<HybLayout>(build_hyb(m, k_ell));
        k.stored_slots = layout->ell_part.stored_slots() + layout->coo_tail.nnz();
        k.apply = [layout, cfg](std::span<const real> x, WarpTracer* t) {
            return spmv_hyb(*layout, x, cfg, t);
        };
        return k;
    }
    if (id == "k1") {
        auto layout = std::make_shared<WarpLayoutK1>(build_k1(m, cfg));
        k.stored_slots = layout->stored_slots();
        k.apply = [layout](std::span<const real> x, WarpTracer* t) {
            return spmv_k1(*layout, x, t);
        };
        return k;
    }
    if (id == "k2") {
        auto layout = std::make_shared<WarpLayoutK2>(
            build_k2(m, cfg, default_threshold(m, opts.k2_threshold)));
        k.stored_slots = layout->stored_slots();
        k.apply = [layout](std::span<const real> x, WarpTracer* t) {
            return spmv_k2(*layout, x, t);
        };
        return k;
    }
    if (id == "k1r" || id == "k1rs" || id == "k2r" || id == "k2rs") {
        return make_reordered_kernel(id, m, cfg, opts);
    }
    throw std::invalid_argument("unknown kernel id '" + id + "'");
}

std::pair<std::vector<real>, TransactionReport> run_traced_spmv(const PreparedKernel& kernel,
                                                                std::span<const real> x,
                                                                const WarpModelConfig& cfg) {
    WarpTracer tracer(cfg);
    auto y = kernel.apply(x, &tracer);
    tracer.report().useful_bytes = 20 * kernel.nnz;
    return {std::move(y), tracer.report()};
}

}  // namespace ellwarp
