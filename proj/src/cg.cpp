#include "ellwarp/cg.hpp"

#include <cmath>

namespace ellwarp {

namespace {

real dot(std::span<const real> a, std::span<const real> b) {
    real s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

real norm2(std::span<const real> v) { return std::sqrt(dot(v, v)); }

void check_finite(std::span<const real> v, const char* what) {
    for (real x : v) {
        if (!std::isfinite(x)) throw CgDivergenceError(std::string("cg: non-finite ") + what);
    }
}

}  // namespace

CgResult cg_solve(const SpmvFn& apply_A, std::span<const real> b, const CgConfig& cfg,
                  std::span<const real> diag) {
    require(cfg.rel_tolerance > 0.0, "cg: tolerance must be positive");
    const idx n = static_cast<idx>(b.size());
    check_finite(b, "right-hand side");

    const bool jacobi = cfg.preconditioner == CgConfig::Precond::jacobi;
    if (jacobi) {
        require(static_cast<idx>(diag.size()) == n, "cg: jacobi preconditioner needs the diagonal");
        for (real d : diag) require(d != 0.0, "cg: zero diagonal entry under jacobi");
    }
    auto precond = [&](const std::vector<real>& r) {
        std::vector<real> z(r);
        if (jacobi) {
            for (idx i = 0; i < n; ++i) z[i] = r[i] / diag[i];
        }
        return z;
    };

    CgResult res;
    res.solution.assign(n, 0.0);
    const real bnorm = norm2(b);
    if (bnorm == 0.0) {
        res.converged = true;
        res.residual_history.push_back(0.0);
        return res;
    }

    // one SPMV for the initial residual
    std::vector<real> r(n);
    {
        auto ax = apply_A(res.solution);
        res.spmv_calls++;
        for (idx i = 0; i < n; ++i) r[i] = b[i] - ax[i];
    }
    res.residual_history.push_back(norm2(r) / bnorm);
    if (res.residual_history.back() <= cfg.rel_tolerance) {
        res.converged = true;
        return res;
    }

    std::vector<real> z = precond(r);
    std::vector<real> p = z;
    real rz = dot(r, z);

    for (idx k = 1; k <= cfg.max_iterations; ++k) {
        auto q = apply_A(p);
        res.spmv_calls++;
        const real pq = dot(p, q);
        if (!std::isfinite(pq) || pq <= 0.0) {
            throw CgDivergenceError("cg: breakdown, operator not positive definite");
        }
        const real alpha = rz / pq;
        for (idx i = 0; i < n; ++i) {
            res.solution[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        if (cfg.recompute_interval > 0 && k % cfg.recompute_interval == 0) {
            auto ax = apply_A(res.solution);
            res.spmv_calls++;
            for (idx i = 0; i < n; ++i) r[i] = b[i] - ax[i];
        }
        check_finite(r, "residual");
        res.iterations = k;
        const real rel = norm2(r) / bnorm;
        res.residual_history.push_back(rel);
        if (rel > cfg.divergence_limit) throw CgDivergenceError("cg: residual diverged");
        if (rel <= cfg.rel_tolerance) {
            res.converged = true;
            return res;
        }
        z = precond(r);
        const real rz_new = dot(r, z);
        const real beta = rz_new / rz;
        for (idx i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
        rz = rz_new;
    }
    res.converged = false;
    return res;
}

CgResult cg_solve_permuted(const SpmvFn& apply_A_perm, std::span<const real> b,
                           const Permutation& p, const CgConfig& cfg,
                           std::span<const real> diag) {
    const auto b_perm = apply_forward(p, b);
    std::vector<real> diag_perm;
    std::span<const real> diag_view;
    if (!diag.empty()) {
        diag_perm = apply_forward(p, diag);
        diag_view = diag_perm;
    }
    CgResult res = cg_solve(apply_A_perm, b_perm, cfg, diag_view);
    res.solution = apply_inverse(p, res.solution);
    return res;
}

AlphaAnalysis compute_alpha(real t_reorder, real t_kernel, real t_base) {
    require(t_reorder >= 0.0 && t_kernel >= 0.0 && t_base >= 0.0, "compute_alpha: negative time");
    AlphaAnalysis a;
    a.t_reorder = t_reorder;
    a.t_kernel = t_kernel;
    a.t_base = t_base;
    if (t_kernel >= t_base) return a;  // infinity
    // a counts SPMV uses, so the minimum is 1 even when reordering is free
    const real ratio = t_reorder / (t_base - t_kernel);
    a.alpha = std::max<idx>(1, static_cast<idx>(std::ceil(ratio)));
    return a;
}

}  // namespace ellwarp
