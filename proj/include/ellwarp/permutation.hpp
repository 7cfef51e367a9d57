#pragma once

#include "ellwarp/csr.hpp"

namespace ellwarp {

// Bijective renumbering. forward[new_position] = old_index,
// inverse[old_index] = new_position.
struct Permutation {
    std::vector<idx> forward;
    std::vector<idx> inverse;

    idx size() const { return static_cast<idx>(forward.size()); }

    static Permutation identity(idx n);
    static Permutation from_forward(std::vector<idx> fwd);

    bool is_identity() const;
};

// x_new[k] = x[forward[k]]
std::vector<real> apply_forward(const Permutation& p, std::span<const real> x);

// x[forward[k]] = x_new[k]
std::vector<real> apply_inverse(const Permutation& p, std::span<const real> x_new);

// Stable sort of rows by length, longest first; ties keep ascending original
// row order.
Permutation sort_rows_desc(const SparseCsr& m);

}  // namespace ellwarp
