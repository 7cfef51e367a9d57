#pragma once

#include "ellwarp/permutation.hpp"

namespace ellwarp {

enum class ReorderVariant { r, rs };

// A square matrix prepared for scatter-free warp kernels: the row-sort
// permutation is reused to renumber columns, so the kernel can store results
// in sorted numbering and read from a pre-permuted x. Variant rs additionally
// re-sorts each row by the renumbered columns for ordered x access.
struct ReorderedOperand {
    SparseCsr matrix;      // rows in original storage order, columns renumbered
    Permutation row_perm;  // sorted position <-> original index
    ReorderVariant variant = ReorderVariant::r;

    std::vector<real> permute_input(std::span<const real> x) const {
        return apply_forward(row_perm, x);
    }
    std::vector<real> unpermute_output(std::span<const real> y_perm) const {
        return apply_inverse(row_perm, y_perm);
    }
};

// Renumbers columns by p.inverse; entry storage order inside each row is kept,
// so columns are generally unsorted afterwards. Requires a square matrix (the
// row permutation doubles as the unknown renumbering).
ReorderedOperand make_reordered_r(const SparseCsr& m, const Permutation& p);

// Sorts (column, value) pairs ascending inside each row of an r operand.
ReorderedOperand make_reordered_rs(const ReorderedOperand& op);

}  // namespace ellwarp
