#pragma once

#include <cstdint>

#include "ellwarp/csr.hpp"

namespace ellwarp {

// Synthetic matrix generators, deterministic for a fixed seed. These stand in
// for the benchmark-collection matrices at desk scale.

// SPD 7-point stencil on an nx*ny*nz grid: diagonal 6.0, neighbors -1.0.
SparseCsr laplacian3d(idx nx, idx ny, idx nz);

// Symmetric mesh-like adjacency pattern (diagonal included) with row lengths
// clamped to [minrow, maxrow]; diagonally dominant values, so the matrix is
// SPD and usable in CG tests.
SparseCsr fem_tet_graph(idx n, idx minrow, idx maxrow, std::uint64_t seed);

// Skewed row-length distribution: length of rank-k row = maxrow*(k+1)^-alpha
// clamped to [1, min(maxrow, ncols)], ranks shuffled over rows. Mimics the
// web-graph style max/median ratios.
SparseCsr powerlaw_rows(idx nrows, real alpha, idx maxrow, std::uint64_t seed, idx ncols = 0);

// Every row has exactly row_len entries, cols (r + k) mod n: zero padding in
// any ELL-family layout.
SparseCsr uniform_band(idx n, idx row_len);

struct SyntheticSpec {
    std::string kind;  // laplacian3d | fem_tet_graph | powerlaw_rows | uniform_band
    std::vector<std::pair<std::string, std::string>> params;
};

// Parses "kind:k=v,k=v" (also accepts bare "laplacian3d:4,4,4") and builds the
// matrix. Throws on unknown kinds or invalid dimensions.
SparseCsr generate_synthetic(const std::string& spec, std::uint64_t default_seed = 1);

}  // namespace ellwarp
