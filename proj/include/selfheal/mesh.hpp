#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <vector>

namespace selfheal {

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

enum class BoundaryTag { Interior, Left, OtherBoundary };

/// How each grid cell is cut into two right triangles.
enum class DiagonalPattern {
    Uniform,      // every cell cut lower-left to upper-right
    Alternating,  // checkerboard of both diagonals ("union jack")
};

using Triangle = std::array<std::size_t, 3>;

/// Structured triangulation of the unit square (lengths in cm).
struct Mesh {
    int n_div = 0;
    DiagonalPattern pattern = DiagonalPattern::Uniform;
    std::vector<Point2> nodes;
    std::vector<Triangle> triangles;  // counterclockwise
    std::vector<BoundaryTag> tags;

    std::size_t node_count() const { return nodes.size(); }
    std::size_t triangle_count() const { return triangles.size(); }

    double signed_area(std::size_t tri) const;

    /// Node ids tagged Left, ascending.
    std::vector<std::size_t> left_nodes() const;
};

/// (n_div+1)^2 nodes on a uniform grid, 2*n_div^2 congruent right triangles.
/// Throws InvalidConfiguration when n_div < 2.
Mesh build_unit_square_mesh(int n_div, DiagonalPattern pattern = DiagonalPattern::Uniform);

/// CSV dump with a `nodes` section (id,x,y,tag) and a `triangles` section
/// (id,n0,n1,n2).
void write_mesh_csv(std::ostream& os, const Mesh& mesh);

const char* to_string(BoundaryTag tag);

}  // namespace selfheal
