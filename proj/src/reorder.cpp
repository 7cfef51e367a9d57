#include "ellwarp/reorder.hpp"

#include <algorithm>
#include <numeric>

namespace ellwarp {

ReorderedOperand make_reordered_r(const SparseCsr& m, const Permutation& p) {
    require(m.square(), "make_reordered_r: matrix must be square");
    require(p.size() == m.nrows, "make_reordered_r: permutation size mismatch");
    ReorderedOperand op;
    op.matrix = m;
    op.row_perm = p;
    op.variant = ReorderVariant::r;
    for (auto& c : op.matrix.col_indices) c = p.inverse[c];
    return op;
}

ReorderedOperand make_reordered_rs(const ReorderedOperand& op) {
    require(op.variant == ReorderVariant::r, "make_reordered_rs: expects a variant-r operand");
    ReorderedOperand out = op;
    out.variant = ReorderVariant::rs;
    auto& m = out.matrix;
    std::vector<idx> order;
    for (idx r = 0; r < m.nrows; ++r) {
        const idx lo = m.row_offsets[r];
        const idx len = m.row_length(r);
        order.resize(len);
        std::iota(order.begin(), order.end(), idx{0});
        std::sort(order.begin(), order.end(), [&](idx a, idx b) {
            return m.col_indices[lo + a] < m.col_indices[lo + b];
        });
        std::vector<idx> cols(len);
        std::vector<real> vals(len);
        for (idx k = 0; k < len; ++k) {
            cols[k] = m.col_indices[lo + order[k]];
            vals[k] = m.values[lo + order[k]];
        }
        std::copy(cols.begin(), cols.end(), m.col_indices.begin() + lo);
        std::copy(vals.begin(), vals.end(), m.values.begin() + lo);
    }
    return out;
}

}  // namespace ellwarp
