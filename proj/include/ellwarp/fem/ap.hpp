#pragma once

#include <array>

#include "ellwarp/types.hpp"

namespace ellwarp::fem {

// Two-variable excitable-tissue cell model: transmembrane potential phi
// (global) and recovery variable r (local per integration point).
struct ApParams {
    real alpha = 0.01;
    real b = 0.15;
    real c = 8.0;
    real gamma = 0.002;
    real mu1 = 0.2;
    real mu2 = 0.3;
    real d_iso = 1.0;
    real d_ani = 0.0;
    std::array<real, 3> n_fiber = {1.0, 0.0, 0.0};
    real dt = 0.1;

    void validate() const;  // dt > 0, unit fiber direction
};

struct ApSources {
    real f_phi;
    real f_r;
};

struct ApTangents {
    real df_phi_dphi;
    real df_phi_dr;
    real df_r_dphi;
    real df_r_dr;
};

// f_phi = c*phi*(phi - alpha)*(1 - phi) - r*phi
// f_r   = (gamma + mu1*r / (mu2 + phi)) * (-r - c*phi*(phi - b - 1))
// Throws when mu2 + phi comes within 1e-12 of the pole.
ApSources ap_sources(real phi, real r, const ApParams& p);

// Analytic partials of both sources; checked against central differences.
ApTangents ap_tangents(real phi, real r, const ApParams& p);

struct LocalNewtonError : std::runtime_error {
    LocalNewtonError(const std::string& msg, real last)
        : std::runtime_error(msg), last_iterate(last) {}
    real last_iterate;
};

struct LocalNewtonResult {
    real r;
    idx iterations;
};

// Solves the backward-Euler recovery update (r - r_n)/dt - f_r(phi, r) = 0
// by Newton iteration on the scalar residual.
LocalNewtonResult local_newton_r(real r_n, real phi, const ApParams& p, real tol = 1e-10,
                                 idx max_it = 25);

}  // namespace ellwarp::fem
