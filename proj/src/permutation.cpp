#include "ellwarp/permutation.hpp"

#include <algorithm>
#include <numeric>

namespace ellwarp {

Permutation Permutation::identity(idx n) {
    Permutation p;
    p.forward.resize(n);
    std::iota(p.forward.begin(), p.forward.end(), idx{0});
    p.inverse = p.forward;
    return p;
}

Permutation Permutation::from_forward(std::vector<idx> fwd) {
    Permutation p;
    p.inverse.assign(fwd.size(), -1);
    for (idx k = 0; k < static_cast<idx>(fwd.size()); ++k) {
        const idx old = fwd[k];
        require(old >= 0 && old < static_cast<idx>(fwd.size()), "permutation index out of range");
        require(p.inverse[old] == -1, "permutation not a bijection");
        p.inverse[old] = k;
    }
    p.forward = std::move(fwd);
    return p;
}

bool Permutation::is_identity() const {
    for (idx k = 0; k < size(); ++k)
        if (forward[k] != k) return false;
    return true;
}

std::vector<real> apply_forward(const Permutation& p, std::span<const real> x) {
    require(static_cast<idx>(x.size()) == p.size(), "permutation size mismatch");
    std::vector<real> out(x.size());
    for (idx k = 0; k < p.size(); ++k) out[k] = x[p.forward[k]];
    return out;
}

std::vector<real> apply_inverse(const Permutation& p, std::span<const real> x_new) {
    require(static_cast<idx>(x_new.size()) == p.size(), "permutation size mismatch");
    std::vector<real> out(x_new.size());
    for (idx k = 0; k < p.size(); ++k) out[p.forward[k]] = x_new[k];
    return out;
}

Permutation sort_rows_desc(const SparseCsr& m) {
    std::vector<idx> order(m.nrows);
    std::iota(order.begin(), order.end(), idx{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](idx a, idx b) { return m.row_length(a) > m.row_length(b); });
    return Permutation::from_forward(std::move(order));
}

}  // namespace ellwarp
