#include "ellwarp/fem/element.hpp"

#include <cmath>

namespace ellwarp::fem {

ElementGeometry element_geometry(const TetMesh& mesh, idx elem) {
    const auto& t = mesh.elements[elem];
    const Vec3& a = mesh.nodes[t[0]];
    std::array<Vec3, 3> jac;  // columns: edges from node 0
    for (int c = 0; c < 3; ++c) {
        const Vec3& q = mesh.nodes[t[c + 1]];
        jac[c] = {q[0] - a[0], q[1] - a[1], q[2] - a[2]};
    }
    const real det = jac[0][0] * (jac[1][1] * jac[2][2] - jac[1][2] * jac[2][1]) -
                     jac[1][0] * (jac[0][1] * jac[2][2] - jac[0][2] * jac[2][1]) +
                     jac[2][0] * (jac[0][1] * jac[1][2] - jac[0][2] * jac[1][1]);
    if (det <= 0.0) {
        throw std::domain_error("element " + std::to_string(elem) + " is degenerate");
    }
    // rows of the inverse Jacobian = gradients of N2..N4
    ElementGeometry g;
    g.volume = det / 6.0;
    const real inv = 1.0 / det;
    // inverse of a 3x3 with columns jac[c]: entries of J^-1 row i = d xi_i / d x
    const real m[3][3] = {{jac[0][0], jac[1][0], jac[2][0]},
                          {jac[0][1], jac[1][1], jac[2][1]},
                          {jac[0][2], jac[1][2], jac[2][2]}};
    real minv[3][3];
    minv[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) * inv;
    minv[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) * inv;
    minv[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) * inv;
    minv[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) * inv;
    minv[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) * inv;
    minv[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) * inv;
    minv[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) * inv;
    minv[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) * inv;
    minv[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) * inv;
    for (int i = 1; i < 4; ++i) {
        // grad N_i = row (i-1) of J^-1
        g.grad[i] = {minv[i - 1][0], minv[i - 1][1], minv[i - 1][2]};
    }
    g.grad[0] = {-g.grad[1][0] - g.grad[2][0] - g.grad[3][0],
                 -g.grad[1][1] - g.grad[2][1] - g.grad[3][1],
                 -g.grad[1][2] - g.grad[2][2] - g.grad[3][2]};
    return g;
}

ElementOutput element_kernel(const TetMesh& mesh, idx elem, const Vec4& phi_e, const Vec4& phi_n_e,
                             real r_n, const ApParams& p, const ElementOptions& opts) {
    const ElementGeometry g = element_geometry(mesh, elem);
    const real V = g.volume;

    // diffusion tensor D = d_iso I + d_ani n (x) n
    real D[3][3];
    for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) {
            D[a][b] = p.d_ani * p.n_fiber[a] * p.n_fiber[b] + (a == b ? p.d_iso : 0.0);
        }
    }

    // stiffness L_ij = V * grad_i . D . grad_j
    Mat4 L{};
    for (int i = 0; i < 4; ++i) {
        Vec3 Dg = {0.0, 0.0, 0.0};
        for (int a = 0; a < 3; ++a) {
            for (int b = 0; b < 3; ++b) Dg[a] += D[a][b] * g.grad[i][b];
        }
        for (int j = 0; j < 4; ++j) {
            L[i][j] = V * (Dg[0] * g.grad[j][0] + Dg[1] * g.grad[j][1] + Dg[2] * g.grad[j][2]);
        }
    }

    // centroid value of phi (single integration point, N_i = 1/4)
    const real phi_bar = 0.25 * (phi_e[0] + phi_e[1] + phi_e[2] + phi_e[3]);

    const auto local = local_newton_r(r_n, phi_bar, p, opts.inner_tol, opts.inner_max_it);
    const real r_star = local.r;

    const auto src = ap_sources(phi_bar, r_star, p);
    const auto tan = ap_tangents(phi_bar, r_star, p);
    // sensitivity of the converged recovery value: d r*/d phi from the
    // implicit residual (r - r_n)/dt - f_r = 0
    const real dr_dphi = tan.df_r_dphi / (1.0 / p.dt - tan.df_r_dr);
    const real df_total = tan.df_phi_dphi + tan.df_phi_dr * dr_dphi;

    ElementOutput out;
    out.r_updated = r_star;
    out.inner_iterations = local.iterations;

    const real m_lumped = V / 4.0;
    const real m_centroid = V / 16.0;
    for (int i = 0; i < 4; ++i) {
        real re = -V * 0.25 * src.f_phi;
        for (int j = 0; j < 4; ++j) {
            real mass_dt = 0.0;
            if (opts.lumped_mass) {
                mass_dt = (i == j ? m_lumped : 0.0) / p.dt;
            } else {
                mass_dt = m_centroid / p.dt;
            }
            out.Ke[i][j] = mass_dt + L[i][j] - df_total * m_centroid;
            re += mass_dt * (phi_e[j] - phi_n_e[j]) + L[i][j] * phi_e[j];
        }
        out.Re[i] = re;
    }
    return out;
}

}  // namespace ellwarp::fem
