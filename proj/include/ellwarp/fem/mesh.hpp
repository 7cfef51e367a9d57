#pragma once

#include <array>
#include <iosfwd>

#include "ellwarp/types.hpp"

namespace ellwarp::fem {

using Vec3 = std::array<real, 3>;
using Tet = std::array<idx, 4>;

// Linear tetrahedral mesh with one integration point per element.
struct TetMesh {
    std::vector<Vec3> nodes;
    std::vector<Tet> elements;

    idx nnodes() const { return static_cast<idx>(nodes.size()); }
    idx nelements() const { return static_cast<idx>(elements.size()); }

    void validate() const;  // indices in range, positive volumes
};

real tet_volume(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d);
real tet_volume(const TetMesh& mesh, idx elem);

// Structured box of (nx x ny x nz) cells, six tetrahedra per cell.
TetMesh box_mesh(idx nx, idx ny, idx nz, real spacing = 1.0);

// Text format: node count, one "x y z" line per node, element count, one
// "a b c d" line per element (0-based connectivity).
TetMesh read_mesh(std::istream& in);
TetMesh read_mesh_file(const std::string& path);
void write_mesh(std::ostream& out, const TetMesh& mesh);

// Parses "box:nx,ny,nz[,spacing]" or treats the string as a file path.
TetMesh load_mesh_spec(const std::string& spec);

}  // namespace ellwarp::fem
