#pragma once

#include <functional>
#include <optional>

#include "ellwarp/permutation.hpp"

namespace ellwarp {

struct CgConfig {
    real rel_tolerance = 1e-8;
    idx max_iterations = 1000;
    enum class Precond { none, jacobi };
    Precond preconditioner = Precond::jacobi;
    // true-residual refresh period, bounds recurrence drift
    idx recompute_interval = 50;
    real divergence_limit = 1e6;
};

struct CgResult {
    std::vector<real> solution;
    idx iterations = 0;
    std::vector<real> residual_history;  // relative ||r||2/||b||2, entry 0 is the initial residual
    bool converged = false;
    idx spmv_calls = 0;  // iterations + 1, plus any true-residual recomputations
};

struct CgDivergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

using SpmvFn = std::function<std::vector<real>(std::span<const real>)>;

// Jacobi-preconditioned conjugate gradient on an SPD operator given as a
// closure. One SPMV for the initial residual, then exactly one per iteration
// (plus one per recompute_interval refresh). `diag` is required for the
// jacobi preconditioner.
CgResult cg_solve(const SpmvFn& apply_A, std::span<const real> b, const CgConfig& cfg,
                  std::span<const real> diag = {});

// CG run entirely in permuted numbering: b and diag (given in original
// numbering) are permuted once on entry, the solution once on exit. The
// operator must map permuted input to permuted output (the r/rs kernels).
CgResult cg_solve_permuted(const SpmvFn& apply_A_perm, std::span<const real> b,
                           const Permutation& p, const CgConfig& cfg,
                           std::span<const real> diag = {});

struct AlphaAnalysis {
    real t_reorder = 0.0;
    real t_kernel = 0.0;  // per SPMV, reordered kernel
    real t_base = 0.0;    // per SPMV, baseline kernel
    std::optional<idx> alpha;  // empty = infinity (reordered kernel is not faster)
};

// Smallest positive integer a with t_reorder + a*t_kernel <= a*t_base;
// infinity iff t_kernel >= t_base.
AlphaAnalysis compute_alpha(real t_reorder, real t_kernel, real t_base);

}  // namespace ellwarp
