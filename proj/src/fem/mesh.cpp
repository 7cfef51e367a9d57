#include "ellwarp/fem/mesh.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace ellwarp::fem {

real tet_volume(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
    const Vec3 u = {b[0] - a[0], b[1] - a[1], b[2] - a[2]};
    const Vec3 v = {c[0] - a[0], c[1] - a[1], c[2] - a[2]};
    const Vec3 w = {d[0] - a[0], d[1] - a[1], d[2] - a[2]};
    const real det = u[0] * (v[1] * w[2] - v[2] * w[1]) - u[1] * (v[0] * w[2] - v[2] * w[0]) +
                     u[2] * (v[0] * w[1] - v[1] * w[0]);
    return det / 6.0;
}

real tet_volume(const TetMesh& mesh, idx elem) {
    const auto& t = mesh.elements[elem];
    return tet_volume(mesh.nodes[t[0]], mesh.nodes[t[1]], mesh.nodes[t[2]], mesh.nodes[t[3]]);
}

void TetMesh::validate() const {
    for (const auto& t : elements) {
        for (idx n : t) require(n >= 0 && n < nnodes(), "mesh: connectivity index out of range");
    }
    for (idx e = 0; e < nelements(); ++e) {
        require(tet_volume(*this, e) > 0.0, "mesh: element " + std::to_string(e) +
                                                " has non-positive volume");
    }
}

TetMesh box_mesh(idx nx, idx ny, idx nz, real spacing) {
    require(nx > 0 && ny > 0 && nz > 0, "box_mesh: cell counts must be positive");
    require(spacing > 0.0, "box_mesh: spacing must be positive");
    TetMesh mesh;
    auto node_id = [&](idx i, idx j, idx k) { return (k * (ny + 1) + j) * (nx + 1) + i; };
    for (idx k = 0; k <= nz; ++k) {
        for (idx j = 0; j <= ny; ++j) {
            for (idx i = 0; i <= nx; ++i) {
                mesh.nodes.push_back({static_cast<real>(i) * spacing,
                                      static_cast<real>(j) * spacing,
                                      static_cast<real>(k) * spacing});
            }
        }
    }
    // Freudenthal split: six tetrahedra around the main cell diagonal.
    const int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
    for (idx k = 0; k < nz; ++k) {
        for (idx j = 0; j < ny; ++j) {
            for (idx i = 0; i < nx; ++i) {
                for (const auto& perm : perms) {
                    std::array<idx, 3> at = {i, j, k};
                    Tet tet;
                    tet[0] = node_id(at[0], at[1], at[2]);
                    for (int s = 0; s < 3; ++s) {
                        at[perm[s]] += 1;
                        tet[s + 1] = node_id(at[0], at[1], at[2]);
                    }
                    if (tet_volume(mesh.nodes[tet[0]], mesh.nodes[tet[1]], mesh.nodes[tet[2]],
                                   mesh.nodes[tet[3]]) < 0.0) {
                        std::swap(tet[1], tet[2]);
                    }
                    mesh.elements.push_back(tet);
                }
            }
        }
    }
    mesh.validate();
    return mesh;
}

TetMesh read_mesh(std::istream& in) {
    TetMesh mesh;
    idx nnodes = 0;
    if (!(in >> nnodes) || nnodes < 0) throw std::runtime_error("mesh: bad node count");
    mesh.nodes.resize(nnodes);
    for (auto& n : mesh.nodes) {
        if (!(in >> n[0] >> n[1] >> n[2])) throw std::runtime_error("mesh: bad node line");
    }
    idx nelem = 0;
    if (!(in >> nelem) || nelem < 0) throw std::runtime_error("mesh: bad element count");
    mesh.elements.resize(nelem);
    for (auto& t : mesh.elements) {
        if (!(in >> t[0] >> t[1] >> t[2] >> t[3])) throw std::runtime_error("mesh: bad element line");
    }
    mesh.validate();
    return mesh;
}

TetMesh read_mesh_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open mesh file " + path);
    return read_mesh(f);
}

void write_mesh(std::ostream& out, const TetMesh& mesh) {
    out << mesh.nnodes() << "\n";
    out.precision(17);
    for (const auto& n : mesh.nodes) out << n[0] << " " << n[1] << " " << n[2] << "\n";
    out << mesh.nelements() << "\n";
    for (const auto& t : mesh.elements)
        out << t[0] << " " << t[1] << " " << t[2] << " " << t[3] << "\n";
}

TetMesh load_mesh_spec(const std::string& spec) {
    if (spec.rfind("box:", 0) == 0) {
        std::istringstream iss(spec.substr(4));
        idx nx = 0, ny = 0, nz = 0;
        real spacing = 1.0;
        char sep = ',';
        if (!(iss >> nx >> sep >> ny >> sep >> nz)) {
            throw std::invalid_argument("mesh spec: expected box:nx,ny,nz[,spacing]");
        }
        if (iss >> sep >> spacing) {}
        return box_mesh(nx, ny, nz, spacing);
    }
    return read_mesh_file(spec);
}

}  // namespace ellwarp::fem
