#pragma once

#include "ellwarp/fem/ap.hpp"
#include "ellwarp/fem/mesh.hpp"

namespace ellwarp::fem {

using Mat4 = std::array<std::array<real, 4>, 4>;
using Vec4 = std::array<real, 4>;

struct ElementOptions {
    bool lumped_mass = true;  // diagonal V/4 time term; centroid form otherwise
    real inner_tol = 1e-10;
    idx inner_max_it = 25;
};

struct ElementOutput {
    Mat4 Ke;
    Vec4 Re;
    real r_updated;        // converged recovery value at the integration point
    idx inner_iterations;
};

struct ElementGeometry {
    real volume;
    std::array<Vec3, 4> grad;  // constant shape-function gradients
};

// Throws on non-positive volume.
ElementGeometry element_geometry(const TetMesh& mesh, idx elem);

// Backward-Euler tangent and residual of one linear tetrahedron with a single
// centroid integration point. The recovery variable is solved to tolerance
// inside, and its sensitivity enters the tangent, so Ke is the exact
// derivative of Re with respect to phi_e.
ElementOutput element_kernel(const TetMesh& mesh, idx elem, const Vec4& phi_e, const Vec4& phi_n_e,
                             real r_n, const ApParams& p, const ElementOptions& opts = {});

}  // namespace ellwarp::fem
