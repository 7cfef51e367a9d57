#include "ellwarp/fem/ap.hpp"

#include <cmath>

namespace ellwarp::fem {

void ApParams::validate() const {
    require(dt > 0.0, "ap: dt must be positive");
    const real n2 = n_fiber[0] * n_fiber[0] + n_fiber[1] * n_fiber[1] + n_fiber[2] * n_fiber[2];
    require(d_ani == 0.0 || std::abs(std::sqrt(n2) - 1.0) <= 1e-12,
            "ap: fiber direction must be a unit vector");
}

namespace {

void guard_pole(real phi, const ApParams& p) {
    if (std::abs(p.mu2 + phi) <= 1e-12) {
        throw std::domain_error("ap: mu2 + phi too close to zero");
    }
}

}  // namespace

ApSources ap_sources(real phi, real r, const ApParams& p) {
    guard_pole(phi, p);
    ApSources s;
    s.f_phi = p.c * phi * (phi - p.alpha) * (1.0 - phi) - r * phi;
    const real g = p.gamma + p.mu1 * r / (p.mu2 + phi);
    const real h = -r - p.c * phi * (phi - p.b - 1.0);
    s.f_r = g * h;
    return s;
}

ApTangents ap_tangents(real phi, real r, const ApParams& p) {
    guard_pole(phi, p);
    ApTangents t;
    t.df_phi_dphi =
        p.c * ((phi - p.alpha) * (1.0 - phi) + phi * (1.0 - phi) - phi * (phi - p.alpha)) - r;
    t.df_phi_dr = -phi;
    const real denom = p.mu2 + phi;
    const real g = p.gamma + p.mu1 * r / denom;
    const real h = -r - p.c * phi * (phi - p.b - 1.0);
    const real dg_dphi = -p.mu1 * r / (denom * denom);
    const real dg_dr = p.mu1 / denom;
    const real dh_dphi = -p.c * (2.0 * phi - p.b - 1.0);
    t.df_r_dphi = dg_dphi * h + g * dh_dphi;
    t.df_r_dr = dg_dr * h - g;
    return t;
}

LocalNewtonResult local_newton_r(real r_n, real phi, const ApParams& p, real tol, idx max_it) {
    require(p.dt > 0.0, "local_newton_r: dt must be positive");
    real r = r_n;
    for (idx it = 0; it <= max_it; ++it) {
        const real residual = (r - r_n) / p.dt - ap_sources(phi, r, p).f_r;
        if (std::abs(residual) <= tol) return {r, it};
        const real slope = 1.0 / p.dt - ap_tangents(phi, r, p).df_r_dr;
        if (slope == 0.0 || !std::isfinite(slope)) {
            throw LocalNewtonError("local_newton_r: singular tangent", r);
        }
        r -= residual / slope;
        if (!std::isfinite(r)) throw LocalNewtonError("local_newton_r: iterate diverged", r);
    }
    throw LocalNewtonError("local_newton_r: no convergence in " + std::to_string(max_it) +
                               " iterations",
                           r);
}

}  // namespace ellwarp::fem
