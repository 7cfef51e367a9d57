#pragma once

#include "ellwarp/warp_layout.hpp"

namespace ellwarp {

// K1: one lane per row, serial sum with stride warp_size, final store
// scattered back to the original row numbering.
std::vector<real> spmv_k1(const WarpLayoutK1& l, std::span<const real> x,
                          WarpTracer* tracer = nullptr);

// K1 over a reordered operand: x is already permuted, the store is coalesced
// into sorted numbering (y_perm[sorted_pos] = sum). Used by the r/rs variants.
std::vector<real> spmv_k1_sorted(const WarpLayoutK1& l, std::span<const real> x_perm,
                                 WarpTracer* tracer = nullptr);

// K2: `reduction` lanes cooperate per row through a warp-local scratch array
// and a pairwise reduction; the group leader stores the row result.
std::vector<real> spmv_k2(const WarpLayoutK2& l, std::span<const real> x,
                          WarpTracer* tracer = nullptr);

std::vector<real> spmv_k2_sorted(const WarpLayoutK2& l, std::span<const real> x_perm,
                                 WarpTracer* tracer = nullptr);

}  // namespace ellwarp
