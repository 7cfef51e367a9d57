#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "ellwarp/fem/timestep.hpp"
#include "test_support.hpp"

using namespace ellwarp;
using namespace ellwarp::fem;
namespace ewt = ellwarp::testing;

namespace {

// second, independent implementation of the source formulas
std::pair<real, real> naive_sources(real phi, real r, const ApParams& p) {
    const real cubic = p.c * phi * (phi - p.alpha) * (1.0 - phi);
    const real f_phi = cubic - r * phi;
    const real bracket = -r - p.c * phi * (phi - p.b - 1.0);
    const real factor = p.gamma + (p.mu1 * r) / (p.mu2 + phi);
    return {f_phi, factor * bracket};
}

// sequential scatter-add oracle for the global assembly
std::pair<std::vector<real>, std::vector<real>> scatter_add_oracle(
    const TetMesh& mesh, const AssemblyMap& map, std::span<const ElementOutput> outputs) {
    std::vector<real> K(map.pattern.nnz(), 0.0);
    std::vector<real> R(mesh.nnodes(), 0.0);
    auto entry_of = [&](idx row, idx col) {
        for (idx k = map.pattern.row_offsets[row]; k < map.pattern.row_offsets[row + 1]; ++k) {
            if (map.pattern.col_indices[k] == col) return k;
        }
        REQUIRE(false);
        return idx{-1};
    };
    for (idx e = 0; e < mesh.nelements(); ++e) {
        const auto& t = mesh.elements[e];
        for (int i = 0; i < 4; ++i) {
            R[t[i]] += outputs[e].Re[i];
            for (int j = 0; j < 4; ++j) K[entry_of(t[i], t[j])] += outputs[e].Ke[i][j];
        }
    }
    return {K, R};
}

std::vector<ElementOutput> run_element_kernels(const TetMesh& mesh, std::span<const real> phi,
                                               std::span<const real> phi_n,
                                               std::span<const real> r_n, const ApParams& p,
                                               const ElementOptions& opts = {}) {
    std::vector<ElementOutput> out(mesh.nelements());
    for (idx e = 0; e < mesh.nelements(); ++e) {
        const auto& t = mesh.elements[e];
        const Vec4 phi_e = {phi[t[0]], phi[t[1]], phi[t[2]], phi[t[3]]};
        const Vec4 phi_n_e = {phi_n[t[0]], phi_n[t[1]], phi_n[t[2]], phi_n[t[3]]};
        out[e] = element_kernel(mesh, e, phi_e, phi_n_e, r_n[e], p, opts);
    }
    return out;
}

}  // namespace

TEST_CASE("ap_sources") {
    ApParams p;
    SUBCASE("both vanish at the origin") {
        const auto s = ap_sources(0.0, 0.0, p);
        CHECK(s.f_phi == 0.0);
        CHECK(s.f_r == 0.0);
    }
    SUBCASE("phi=1 kills the cubic term") {
        for (real r : {0.0, 0.1, 0.5}) {
            const auto s = ap_sources(1.0, r, p);
            CHECK(s.f_phi == doctest::Approx(-r).epsilon(1e-14));
        }
    }
    SUBCASE("matches an independent evaluation term by term") {
        std::mt19937_64 rng(5);
        std::uniform_real_distribution<real> phis(-0.2, 1.2), rs(0.0, 2.0);
        for (int i = 0; i < 100; ++i) {
            const real phi = phis(rng), r = rs(rng);
            const auto got = ap_sources(phi, r, p);
            const auto [f_phi, f_r] = naive_sources(phi, r, p);
            CHECK(got.f_phi == doctest::Approx(f_phi).epsilon(1e-14));
            CHECK(got.f_r == doctest::Approx(f_r).epsilon(1e-14));
        }
        const auto mid = ap_sources(0.5, 0.1, p);
        const auto [e_phi, e_r] = naive_sources(0.5, 0.1, p);
        CHECK(mid.f_phi == e_phi);
        CHECK(mid.f_r == e_r);
    }
    SUBCASE("pole guard") {
        CHECK_THROWS_AS((void)ap_sources(-p.mu2, 0.1, p), std::domain_error);
    }
}

TEST_CASE("ap_tangents match central finite differences") {
    ApParams p;
    const real h = 1e-6;
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<real> phis(-0.2, 1.2), rs(0.0, 2.0);
    for (int i = 0; i < 100; ++i) {
        const real phi = phis(rng), r = rs(rng);
        const auto t = ap_tangents(phi, r, p);
        const auto fp = ap_sources(phi + h, r, p);
        const auto fm = ap_sources(phi - h, r, p);
        const auto gp = ap_sources(phi, r + h, p);
        const auto gm = ap_sources(phi, r - h, p);
        CHECK(t.df_phi_dphi ==
              doctest::Approx((fp.f_phi - fm.f_phi) / (2 * h)).epsilon(1e-6));
        CHECK(t.df_r_dphi == doctest::Approx((fp.f_r - fm.f_r) / (2 * h)).epsilon(1e-6));
        CHECK(t.df_phi_dr == doctest::Approx((gp.f_phi - gm.f_phi) / (2 * h)).epsilon(1e-6));
        CHECK(t.df_r_dr == doctest::Approx((gp.f_r - gm.f_r) / (2 * h)).epsilon(1e-6));
        CHECK(t.df_phi_dr == -phi);  // exact linear dependence
    }
    // hand value at the origin
    CHECK(ap_tangents(0.0, 0.0, p).df_phi_dphi == doctest::Approx(-p.c * p.alpha).epsilon(1e-14));
}

TEST_CASE("local_newton_r") {
    ApParams p;
    SUBCASE("zero source regime converges immediately") {
        ApParams frozen = p;
        frozen.gamma = 0.0;
        frozen.mu1 = 0.0;
        const auto res = local_newton_r(0.37, 0.5, frozen);
        CHECK(res.r == 0.37);
        CHECK(res.iterations <= 1);
    }
    SUBCASE("matches a bracketing bisection oracle") {
        p.dt = 0.1;
        const real phi = 0.3, r_n = 0.05;
        const auto res = local_newton_r(r_n, phi, p, 1e-12);
        // bisection on R(r) = (r - r_n)/dt - f_r(phi, r)
        auto R = [&](real r) { return (r - r_n) / p.dt - ap_sources(phi, r, p).f_r; };
        real lo = -1.0, hi = 1.0;
        REQUIRE(R(lo) * R(hi) < 0.0);
        for (int it = 0; it < 200; ++it) {
            const real mid = 0.5 * (lo + hi);
            if (R(lo) * R(mid) <= 0.0) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        CHECK(res.r == doctest::Approx(0.5 * (lo + hi)).epsilon(1e-10));
    }
    SUBCASE("convergence within five iterations across the (phi, r_n) grid") {
        p.dt = 0.1;
        for (real phi = -0.1; phi <= 1.2; phi += 0.1) {
            for (real r_n = 0.0; r_n <= 2.0; r_n += 0.2) {
                const auto res = local_newton_r(r_n, phi, p, 1e-10);
                CHECK(res.iterations <= 5);
            }
        }
    }
    SUBCASE("quadratic convergence near the root") {
        p.dt = 0.25;
        const real phi = 0.4;
        const real root = local_newton_r(0.1, phi, p, 1e-14).r;
        // one Newton step from a nearby start shrinks the error quadratically
        auto newton_step = [&](real r) {
            const real res = (r - 0.1) / p.dt - ap_sources(phi, r, p).f_r;
            const real slope = 1.0 / p.dt - ap_tangents(phi, r, p).df_r_dr;
            return r - res / slope;
        };
        const real e0 = 1e-3;
        const real e1 = std::abs(newton_step(root + e0) - root);
        CHECK(e1 <= 100.0 * e0 * e0);
    }
    SUBCASE("nonconvergence carries the last iterate") {
        ApParams bad = p;
        bad.dt = 0.1;
        try {
            (void)local_newton_r(0.4, 0.8, bad, 1e-30, 0);
            CHECK(false);
        } catch (const LocalNewtonError& err) {
            CHECK(std::isfinite(err.last_iterate));
        }
    }
}

TEST_CASE("element_kernel") {
    // reference tetrahedron
    TetMesh mesh;
    mesh.nodes = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    mesh.elements = {{0, 1, 2, 3}};
    ApParams p;

    SUBCASE("diffusion and sources off: Ke = M/dt, Re = M dphi/dt") {
        ApParams off = p;
        off.d_iso = 0.0;
        off.d_ani = 0.0;
        off.c = 0.0;  // with r_n = 0 both sources vanish identically
        off.gamma = 0.0;
        off.mu1 = 0.0;
        const Vec4 phi = {0.4, 0.1, 0.7, 0.2};
        const Vec4 phi_n = {0.3, 0.1, 0.5, 0.2};
        const real V = tet_volume(mesh, 0);

        ElementOptions lumped;
        const auto out = element_kernel(mesh, 0, phi, phi_n, 0.0, off, lumped);
        for (int i = 0; i < 4; ++i) {
            CHECK(out.Re[i] ==
                  doctest::Approx(V / 4.0 * (phi[i] - phi_n[i]) / off.dt).epsilon(1e-13));
            for (int j = 0; j < 4; ++j) {
                const real expect = i == j ? V / 4.0 / off.dt : 0.0;
                CHECK(out.Ke[i][j] == doctest::Approx(expect).epsilon(1e-13));
            }
        }
        ElementOptions consistent;
        consistent.lumped_mass = false;
        const auto out2 = element_kernel(mesh, 0, phi, phi_n, 0.0, off, consistent);
        for (int i = 0; i < 4; ++i) {
            for (int j = 0; j < 4; ++j) {
                CHECK(out2.Ke[i][j] == doctest::Approx(V / 16.0 / off.dt).epsilon(1e-13));
            }
        }
    }
    SUBCASE("stiffness equals the analytic linear-tet operator") {
        ApParams diff = p;
        diff.d_iso = 2.5;
        diff.d_ani = 0.0;
        diff.c = 0.0;
        diff.gamma = 0.0;
        diff.mu1 = 0.0;
        diff.dt = 1e12;  // mass term negligible
        const Vec4 phi = {1.0, 0.0, 0.0, 0.0};
        const Vec4 zero = {0, 0, 0, 0};
        const auto out = element_kernel(mesh, 0, phi, zero, 0.0, diff);
        const real L[4][4] = {{3, -1, -1, -1}, {-1, 1, 0, 0}, {-1, 0, 1, 0}, {-1, 0, 0, 1}};
        for (int i = 0; i < 4; ++i) {
            for (int j = 0; j < 4; ++j) {
                CHECK(out.Ke[i][j] ==
                      doctest::Approx(diff.d_iso * L[i][j] / 6.0).epsilon(1e-12));
            }
        }
    }
    SUBCASE("anisotropic stiffness equals the rank-one fiber form") {
        ApParams aniso = p;
        aniso.d_iso = 0.0;
        aniso.d_ani = 3.0;
        aniso.n_fiber = {1.0, 0.0, 0.0};
        aniso.c = 0.0;
        aniso.gamma = 0.0;
        aniso.mu1 = 0.0;
        aniso.dt = 1e12;
        const Vec4 phi = {1.0, 0.0, 0.0, 0.0};
        const Vec4 zero = {0, 0, 0, 0};
        const auto out = element_kernel(mesh, 0, phi, zero, 0.0, aniso);
        // D = 3 e1 (x) e1, so L_ij = 3 V gx_i gx_j with gx = (-1, 1, 0, 0)
        const real gx[4] = {-1, 1, 0, 0};
        for (int i = 0; i < 4; ++i) {
            for (int j = 0; j < 4; ++j) {
                CHECK(out.Ke[i][j] ==
                      doctest::Approx(3.0 * gx[i] * gx[j] / 6.0).epsilon(1e-12));
            }
        }
        ApParams tilted = aniso;
        tilted.n_fiber = {0.6, 0.8, 0.1};  // not unit length
        CHECK_THROWS_AS(tilted.validate(), std::invalid_argument);
    }
    SUBCASE("Ke equals dRe/dphi by central finite differences") {
        const real h = 1e-6;
        std::mt19937_64 rng(23);
        std::uniform_real_distribution<real> vals(0.0, 0.9);
        for (int trial = 0; trial < 5; ++trial) {
            Vec4 phi, phi_n;
            for (int i = 0; i < 4; ++i) {
                phi[i] = vals(rng);
                phi_n[i] = vals(rng);
            }
            const real r_n = 0.3 * vals(rng);
            for (bool lumped : {true, false}) {
                ElementOptions opts;
                opts.lumped_mass = lumped;
                opts.inner_tol = 1e-14;
                const auto base = element_kernel(mesh, 0, phi, phi_n, r_n, p, opts);
                for (int j = 0; j < 4; ++j) {
                    Vec4 up = phi, dn = phi;
                    up[j] += h;
                    dn[j] -= h;
                    const auto fu = element_kernel(mesh, 0, up, phi_n, r_n, p, opts);
                    const auto fd = element_kernel(mesh, 0, dn, phi_n, r_n, p, opts);
                    for (int i = 0; i < 4; ++i) {
                        const real fd_val = (fu.Re[i] - fd.Re[i]) / (2 * h);
                        CHECK(base.Ke[i][j] ==
                              doctest::Approx(fd_val).epsilon(1e-6).scale(1.0));
                    }
                }
            }
        }
    }
    SUBCASE("element symmetry") {
        const Vec4 phi = {0.2, 0.5, 0.8, 0.1};
        const Vec4 phi_n = {0.2, 0.4, 0.7, 0.1};
        const auto out = element_kernel(mesh, 0, phi, phi_n, 0.1, p);
        for (int i = 0; i < 4; ++i) {
            for (int j = 0; j < 4; ++j) {
                CHECK(std::abs(out.Ke[i][j] - out.Ke[j][i]) <= 1e-12);
            }
        }
    }
    SUBCASE("degenerate element rejected") {
        TetMesh flat;
        flat.nodes = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}};
        flat.elements = {{0, 1, 2, 3}};
        CHECK_THROWS_AS((void)element_kernel(flat, 0, {0, 0, 0, 0}, {0, 0, 0, 0}, 0.0, p),
                        std::domain_error);
    }
}

TEST_CASE("mesh generation and io") {
    const TetMesh mesh = box_mesh(2, 3, 2, 0.5);
    CHECK(mesh.nelements() == 2 * 3 * 2 * 6);
    CHECK(mesh.nnodes() == 3 * 4 * 3);
    mesh.validate();

    std::ostringstream os;
    write_mesh(os, mesh);
    std::istringstream is(os.str());
    const TetMesh back = read_mesh(is);
    CHECK(back.nodes == mesh.nodes);
    CHECK(back.elements == mesh.elements);

    const TetMesh spec = load_mesh_spec("box:2,3,2,0.5");
    CHECK(spec.nnodes() == mesh.nnodes());
}

TEST_CASE("assembly map structure") {
    ApParams p;
    SUBCASE("single tet: 16 tangent rows with one contributor") {
        TetMesh mesh;
        mesh.nodes = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
        mesh.elements = {{0, 1, 2, 3}};
        const AssemblyMap map = build_assembly_map(mesh);
        CHECK(map.pattern.nnz() == 16);
        for (idx pos = 0; pos < 16; ++pos) {
            CHECK(map.tangent_layout.sorted_row_length[pos] == 1);
        }
        // K equals its own Ke scattered
        std::vector<real> phi = {0.2, 0.3, 0.1, 0.6};
        std::vector<real> phi_n = {0.2, 0.2, 0.1, 0.5};
        std::vector<real> r_n = {0.05};
        const auto outs = run_element_kernels(mesh, phi, phi_n, r_n, p);
        const auto sys = assemble_spmv(map, outs);
        const auto [K_oracle, R_oracle] = scatter_add_oracle(mesh, map, outs);
        CHECK(sys.tangent_values == K_oracle);
        CHECK(sys.residual == R_oracle);
    }
    SUBCASE("two tets sharing a face: shared diagonal rows have 2 contributors") {
        TetMesh mesh;
        mesh.nodes = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1, 1, 1}};
        mesh.elements = {{0, 1, 2, 3}, {1, 2, 3, 4}};
        mesh.validate();
        const AssemblyMap map = build_assembly_map(mesh);
        // diagonal entries of shared nodes 1,2,3 collect from both elements
        auto entry_of = [&](idx rr, idx cc) {
            for (idx k = map.pattern.row_offsets[rr]; k < map.pattern.row_offsets[rr + 1]; ++k) {
                if (map.pattern.col_indices[k] == cc) return k;
            }
            return idx{-1};
        };
        for (idx shared : {1, 2, 3}) {
            const idx contrib_row = entry_of(shared, shared);
            const idx pos = map.tangent_layout.row_perm.inverse[contrib_row];
            CHECK(map.tangent_layout.sorted_row_length[pos] == 2);
        }
        CHECK(map.max_node_connectivity == 2);
    }
}

TEST_CASE("assembly-as-spmv equals sequential scatter-add on meshes up to 500 elements") {
    ApParams p;
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<real> vals(0.0, 0.9);
    for (const auto& dims : {std::array<idx, 3>{1, 1, 1}, {2, 2, 2}, {4, 4, 5}}) {
        const TetMesh mesh = box_mesh(dims[0], dims[1], dims[2]);
        REQUIRE(mesh.nelements() <= 500);
        const AssemblyMap map = build_assembly_map(mesh);
        std::vector<real> phi(mesh.nnodes()), phi_n(mesh.nnodes()), r_n(mesh.nelements());
        for (auto& v : phi) v = vals(rng);
        for (auto& v : phi_n) v = vals(rng);
        for (auto& v : r_n) v = 0.2 * vals(rng);
        const auto outs = run_element_kernels(mesh, phi, phi_n, r_n, p);
        const auto sys = assemble_spmv(map, outs);
        const auto [K_oracle, R_oracle] = scatter_add_oracle(mesh, map, outs);
        REQUIRE(sys.tangent_values.size() == K_oracle.size());
        for (std::size_t k = 0; k < K_oracle.size(); ++k) {
            CHECK(almost_equal(sys.tangent_values[k], K_oracle[k], 1e-12));
        }
        for (std::size_t i = 0; i < R_oracle.size(); ++i) {
            CHECK(almost_equal(sys.residual[i], R_oracle[i], 1e-12));
        }
        // global tangent symmetry
        SparseCsr K = map.pattern;
        K.values = sys.tangent_values;
        for (idx r = 0; r < K.nrows; ++r) {
            for (idx k = K.row_offsets[r]; k < K.row_offsets[r + 1]; ++k) {
                const idx c = K.col_indices[k];
                real kt = 0.0;
                for (idx k2 = K.row_offsets[c]; k2 < K.row_offsets[c + 1]; ++k2) {
                    if (K.col_indices[k2] == r) kt = K.values[k2];
                }
                CHECK(std::abs(K.values[k] - kt) <= 1e-12);
            }
        }
    }
}

TEST_CASE("timestep") {
    ApParams p;
    SUBCASE("zero sources and diffusion: phi is a fixed point") {
        ApParams off = p;
        off.d_iso = 0.0;
        off.c = 0.0;
        off.gamma = 0.0;
        off.mu1 = 0.0;
        const TetMesh mesh = box_mesh(2, 2, 2);
        const AssemblyMap map = build_assembly_map(mesh);
        fem::State state = fem::State::uniform(mesh.nnodes(), mesh.nelements(), 0.25, 0.0);
        TimestepConfig cfg;
        const auto diag = timestep(state, mesh, map, off, cfg);
        CHECK(diag.outer_iterations == 1);
        for (real v : state.phi) CHECK(v == 0.25);
    }
    SUBCASE("space-clamped trajectory matches an independent 2-variable integrator") {
        ApParams clamp = p;
        clamp.d_iso = 0.0;
        clamp.d_ani = 0.0;
        clamp.dt = 0.1;
        TetMesh mesh;
        mesh.nodes = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
        mesh.elements = {{0, 1, 2, 3}};
        const AssemblyMap map = build_assembly_map(mesh);
        fem::State state = fem::State::uniform(4, 1, 0.8, 0.2);
        TimestepConfig cfg;
        cfg.outer_tol = 1e-12;
        cfg.inner_tol = 1e-13;

        // oracle: backward Euler on the coupled scalar system, solved by a
        // damped fixed-slope Newton on both unknowns with finite-difference
        // Jacobians of the independently implemented sources
        real phi = 0.8, r = 0.2;
        std::vector<real> phi_traj;
        const real h = 1e-7;
        for (int step = 0; step < 100; ++step) {
            const real phin = phi, rn = r;
            for (int it = 0; it < 200; ++it) {
                const auto [f1, f2] = naive_sources(phi, r, clamp);
                const real g1 = (phi - phin) / clamp.dt - f1;
                const real g2 = (r - rn) / clamp.dt - f2;
                if (std::abs(g1) + std::abs(g2) < 1e-14) break;
                const auto [f1p, f2p] = naive_sources(phi + h, r, clamp);
                const auto [f1r, f2r] = naive_sources(phi, r + h, clamp);
                const real a = 1.0 / clamp.dt - (f1p - f1) / h;
                const real b = -(f1r - f1) / h;
                const real c2 = -(f2p - f2) / h;
                const real d = 1.0 / clamp.dt - (f2r - f2) / h;
                const real det = a * d - b * c2;
                phi -= (d * g1 - b * g2) / det;
                r -= (-c2 * g1 + a * g2) / det;
            }
            phi_traj.push_back(phi);
        }

        for (int step = 0; step < 100; ++step) {
            (void)timestep(state, mesh, map, clamp, cfg);
            for (real v : state.phi) {
                CHECK(v == doctest::Approx(phi_traj[step]).epsilon(1e-6));
            }
        }
    }
    SUBCASE("kernel swap leaves the state within 1e-10") {
        const TetMesh mesh = box_mesh(2, 2, 2);
        const AssemblyMap map = build_assembly_map(mesh);
        std::vector<std::vector<real>> finals;
        for (const std::string kernel : {"csr_ref", "k1", "k1rs", "k2", "hyb"}) {
            ApParams prm;
            prm.dt = 0.05;
            fem::State state = fem::State::uniform(mesh.nnodes(), mesh.nelements(), 0.6, 0.05);
            TimestepConfig cfg;
            cfg.kernel_id = kernel;
            for (int s = 0; s < 3; ++s) (void)timestep(state, mesh, map, prm, cfg);
            finals.push_back(state.phi);
        }
        for (std::size_t i = 1; i < finals.size(); ++i) {
            for (std::size_t n = 0; n < finals[0].size(); ++n) {
                CHECK(std::abs(finals[i][n] - finals[0][n]) <= 1e-10);
            }
        }
    }
    SUBCASE("outer residuals decrease monotonically on the fixture") {
        const TetMesh mesh = box_mesh(2, 2, 2);
        const AssemblyMap map = build_assembly_map(mesh);
        ApParams prm;
        prm.dt = 0.1;
        fem::State state = fem::State::uniform(mesh.nnodes(), mesh.nelements(), 0.7, 0.1);
        TimestepConfig cfg;
        const auto diag = timestep(state, mesh, map, prm, cfg);
        for (std::size_t i = 1; i < diag.outer_residuals.size(); ++i) {
            CHECK(diag.outer_residuals[i] < diag.outer_residuals[i - 1]);
        }
    }
    SUBCASE("nonconvergence carries the step index") {
        const TetMesh mesh = box_mesh(1, 1, 1);
        const AssemblyMap map = build_assembly_map(mesh);
        ApParams prm;
        prm.dt = 0.1;
        fem::State state = fem::State::uniform(mesh.nnodes(), mesh.nelements(), 0.7, 0.1);
        TimestepConfig cfg;
        cfg.outer_tol = 1e-16;  // unreachable
        cfg.outer_max_it = 2;
        try {
            (void)timestep(state, mesh, map, prm, cfg, 7);
            CHECK(false);
        } catch (const FemError& err) {
            CHECK(err.step_index == 7);
        }
    }
}

TEST_CASE("checkpoint round trip") {
    fem::State s;
    s.phi = {0.1, 0.2, 0.3};
    s.r = {0.4, 0.5};
    s.phi_n = s.phi;
    s.r_n = s.r;
    s.time = 1.25;
    std::ostringstream os(std::ios::binary);
    save_checkpoint(os, s);
    std::istringstream is(os.str(), std::ios::binary);
    const fem::State back = load_checkpoint(is);
    CHECK(back.phi == s.phi);
    CHECK(back.r == s.r);
    CHECK(back.time == s.time);

    std::istringstream bad("nope", std::ios::binary);
    CHECK_THROWS_AS((void)load_checkpoint(bad), std::runtime_error);
}

TEST_CASE("assembly tracing leaves results untouched and counts traffic") {
    const TetMesh mesh = box_mesh(2, 2, 2);
    const AssemblyMap map = build_assembly_map(mesh);
    ApParams p;
    std::vector<real> phi(mesh.nnodes(), 0.4), phi_n(mesh.nnodes(), 0.35);
    std::vector<real> r_n(mesh.nelements(), 0.1);
    const auto outs = run_element_kernels(mesh, phi, phi_n, r_n, p);
    const auto plain = assemble_spmv(map, outs);
    WarpModelConfig cfg;
    WarpTracer tracer(cfg);
    const auto traced = assemble_spmv(map, outs, &tracer);
    CHECK(traced.tangent_values == plain.tangent_values);
    CHECK(traced.residual == plain.residual);
    CHECK(tracer.report().transactions(MemSpace::matrix_values) > 0);
    CHECK(tracer.report().transactions(MemSpace::y_vector) > 0);
}

TEST_CASE("adaptive dt controller halves on failure and recovers") {
    ApParams p;
    p.dt = 0.4;
    TimestepConfig cfg;
    cfg.adaptive_dt = true;
    cfg.outer_max_it = 4;  // tight enough that a large step can fail
    FemSimulator sim(box_mesh(2, 2, 2), p, cfg, 0.75, 0.0);
    for (int s = 0; s < 3; ++s) {
        const auto diag = sim.step();
        CHECK(diag.dt_used <= 0.4);
    }
    CHECK(sim.steps_taken() == 3);
    CHECK(sim.state().time > 0.0);
}
