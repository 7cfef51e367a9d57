#include <cmath>

#include "doctest.h"
#include "ellwarp/cg.hpp"
#include "ellwarp/kernels.hpp"
#include "ellwarp/synth.hpp"
#include "test_support.hpp"

using namespace ellwarp;
namespace ewt = ellwarp::testing;

namespace {

SpmvFn make_op(const PreparedKernel& k) {
    return [&k](std::span<const real> v) { return k.apply(v, nullptr); };
}

real true_residual(const SparseCsr& A, std::span<const real> x, std::span<const real> b) {
    const auto ax = spmv_csr_reference(A, x);
    real num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < b.size(); ++i) {
        num += (b[i] - ax[i]) * (b[i] - ax[i]);
        den += b[i] * b[i];
    }
    return std::sqrt(num / den);
}

}  // namespace

TEST_CASE("cg: identity solves in one iteration") {
    SparseCsr eye = uniform_band(24, 1);
    for (auto& v : eye.values) v = 1.0;
    const auto b = ewt::random_vector(24, 3);
    const PreparedKernel k = prepare_kernel("csr_ref", eye, WarpModelConfig{});
    CgConfig cfg;
    const auto res = cg_solve(make_op(k), b, cfg, extract_diagonal(eye));
    CHECK(res.converged);
    CHECK(res.iterations == 1);
    CHECK(ewt::vectors_close(res.solution, b, 1e-12));
    CHECK(res.spmv_calls == 2);  // initial residual + one iteration
}

TEST_CASE("cg: laplacian with known solution") {
    const SparseCsr A = laplacian3d(4, 4, 4);
    const std::vector<real> ones(A.ncols, 1.0);
    const auto b = spmv_csr_reference(A, ones);
    const PreparedKernel k = prepare_kernel("csr_ref", A, WarpModelConfig{});
    CgConfig cfg;
    const auto res = cg_solve(make_op(k), b, cfg, extract_diagonal(A));
    REQUIRE(res.converged);
    CHECK(res.iterations <= A.nrows);
    CHECK(ewt::vectors_close(res.solution, ones, 1e-7));
    CHECK(true_residual(A, res.solution, b) <= 1e-8);
    // one SPMV per iteration plus the initial residual, none skipped
    CHECK(res.spmv_calls == res.iterations + 1 + res.iterations / cfg.recompute_interval);
}

TEST_CASE("cg: identical iteration counts and solutions across kernels") {
    const SparseCsr A = laplacian3d(5, 4, 3);
    const std::vector<real> ones(A.ncols, 1.0);
    const auto b = spmv_csr_reference(A, ones);
    const auto diag = extract_diagonal(A);
    WarpModelConfig wcfg;
    CgConfig cfg;

    idx first_iterations = -1;
    std::vector<real> first_solution;
    for (const auto& id : kernel_ids()) {
        const PreparedKernel k = prepare_kernel(id, A, wcfg);
        const auto res = cg_solve(make_op(k), b, cfg, diag);
        REQUIRE(res.converged);
        if (first_iterations < 0) {
            first_iterations = res.iterations;
            first_solution = res.solution;
        } else {
            CHECK(res.iterations == first_iterations);
            CHECK(ewt::vectors_close(res.solution, first_solution, 1e-10));
        }
    }
}

TEST_CASE("cg_solve_permuted matches unpermuted") {
    const SparseCsr A = fem_tet_graph(600, 5, 21, 12);  // SPD by construction
    const auto b = ewt::random_vector(A.nrows, 31);
    const auto diag = extract_diagonal(A);
    WarpModelConfig wcfg;
    CgConfig cfg;

    const PreparedKernel base = prepare_kernel("csr_ref", A, wcfg);
    const auto plain = cg_solve(make_op(base), b, cfg, diag);
    REQUIRE(plain.converged);

    const PreparedKernel k1rs = prepare_kernel("k1rs", A, wcfg);
    SpmvFn op = [&](std::span<const real> v) { return k1rs.apply_permuted(v, nullptr); };
    const auto perm = cg_solve_permuted(op, b, *k1rs.perm, cfg, diag);
    REQUIRE(perm.converged);

    SUBCASE("identity permutation gives the verbatim cg_solve result") {
        const Permutation id = Permutation::identity(A.nrows);
        const auto same = cg_solve_permuted(make_op(base), b, id, cfg, diag);
        CHECK(same.solution == plain.solution);
        CHECK(same.iterations == plain.iterations);
    }
    SUBCASE("solutions and residual histories agree") {
        CHECK(perm.iterations == plain.iterations);
        CHECK(ewt::vectors_close(perm.solution, plain.solution, 1e-10));
        REQUIRE(perm.residual_history.size() == plain.residual_history.size());
        for (std::size_t i = 0; i < perm.residual_history.size(); ++i) {
            CHECK(std::abs(perm.residual_history[i] - plain.residual_history[i]) <=
                  1e-10 * (1.0 + plain.residual_history[i]));
        }
    }
}

TEST_CASE("cg error paths") {
    SUBCASE("max_iterations reached reports converged=false") {
        const SparseCsr A = laplacian3d(6, 6, 6);
        const auto b = ewt::random_vector(A.nrows, 17);
        const PreparedKernel k = prepare_kernel("csr_ref", A, WarpModelConfig{});
        CgConfig cfg;
        cfg.max_iterations = 2;
        const auto res = cg_solve(make_op(k), b, cfg, extract_diagonal(A));
        CHECK_FALSE(res.converged);
        CHECK(res.iterations == 2);
    }
    SUBCASE("non-finite input raises a divergence error") {
        const SparseCsr A = laplacian3d(2, 2, 2);
        std::vector<real> b(A.nrows, 1.0);
        b[3] = std::numeric_limits<real>::quiet_NaN();
        const PreparedKernel k = prepare_kernel("csr_ref", A, WarpModelConfig{});
        CHECK_THROWS_AS((void)cg_solve(make_op(k), b, CgConfig{}, extract_diagonal(A)),
                        CgDivergenceError);
    }
    SUBCASE("indefinite operator raises breakdown") {
        SparseCsr A = uniform_band(8, 1);
        for (auto& v : A.values) v = -1.0;  // negative definite
        std::vector<real> b(8, 1.0);
        CgConfig cfg;
        cfg.preconditioner = CgConfig::Precond::none;
        const PreparedKernel k = prepare_kernel("csr_ref", A, WarpModelConfig{});
        CHECK_THROWS_AS((void)cg_solve(make_op(k), b, cfg), CgDivergenceError);
    }
}

TEST_CASE("jacobi preconditioning never hurts on the laplacian family") {
    for (idx n : {2, 3, 4, 5}) {
        const SparseCsr A = laplacian3d(n, n, n);
        const auto b = ewt::random_vector(A.nrows, 100 + n);
        const auto diag = extract_diagonal(A);
        const PreparedKernel k = prepare_kernel("csr_ref", A, WarpModelConfig{});
        CgConfig with;
        CgConfig without;
        without.preconditioner = CgConfig::Precond::none;
        const auto res_j = cg_solve(make_op(k), b, with, diag);
        const auto res_n = cg_solve(make_op(k), b, without);
        REQUIRE(res_j.converged);
        REQUIRE(res_n.converged);
        CHECK(res_j.iterations <= res_n.iterations);
    }
}

TEST_CASE("compute_alpha") {
    SUBCASE("hand case 10,1,2") {
        const auto a = compute_alpha(10.0, 1.0, 2.0);
        REQUIRE(a.alpha.has_value());
        CHECK(*a.alpha == 10);
    }
    SUBCASE("t_kernel >= t_base is infinity") {
        CHECK_FALSE(compute_alpha(10.0, 2.0, 2.0).alpha.has_value());
        CHECK_FALSE(compute_alpha(0.0, 3.0, 2.0).alpha.has_value());
    }
    SUBCASE("free reorder still counts one SPMV") {
        const auto a = compute_alpha(0.0, 1.0, 2.0);
        REQUIRE(a.alpha.has_value());
        CHECK(*a.alpha == 1);
    }
    SUBCASE("monotone in t_reorder") {
        idx prev = 1;
        for (real tr : {0.0, 0.5, 1.0, 5.0, 50.0, 1e4}) {
            const auto a = compute_alpha(tr, 1.0, 3.0);
            REQUIRE(a.alpha.has_value());
            CHECK(*a.alpha >= prev);
            prev = *a.alpha;
        }
    }
    SUBCASE("alpha satisfies its defining inequality minimally") {
        for (int i = 0; i < 50; ++i) {
            const real tr = 0.123 * i;
            const real tk = 1.0;
            const real tb = 1.0 + 0.07 * (i + 1);
            const auto a = compute_alpha(tr, tk, tb);
            REQUIRE(a.alpha.has_value());
            const real lhs = tr + static_cast<real>(*a.alpha) * tk;
            CHECK(lhs <= static_cast<real>(*a.alpha) * tb + 1e-9);
            if (*a.alpha > 1) {
                const real prev_lhs = tr + static_cast<real>(*a.alpha - 1) * tk;
                CHECK(prev_lhs > static_cast<real>(*a.alpha - 1) * tb - 1e-9);
            }
        }
    }
    SUBCASE("negative times rejected") {
        CHECK_THROWS_AS((void)compute_alpha(-1.0, 1.0, 2.0), std::invalid_argument);
    }
}
