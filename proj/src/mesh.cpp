#include "selfheal/mesh.hpp"

#include <cmath>
#include <ostream>
#include <string>

#include "selfheal/error.hpp"

namespace selfheal {

namespace {

constexpr double kTagTol = 1e-12;

BoundaryTag classify(const Point2& p) {
    if (std::abs(p.x) <= kTagTol) return BoundaryTag::Left;
    if (std::abs(p.x - 1.0) <= kTagTol || std::abs(p.y) <= kTagTol || std::abs(p.y - 1.0) <= kTagTol)
        return BoundaryTag::OtherBoundary;
    return BoundaryTag::Interior;
}

}  // namespace

double Mesh::signed_area(std::size_t tri) const {
    const auto& t = triangles[tri];
    const Point2& a = nodes[t[0]];
    const Point2& b = nodes[t[1]];
    const Point2& c = nodes[t[2]];
    return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

std::vector<std::size_t> Mesh::left_nodes() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < tags.size(); ++i)
        if (tags[i] == BoundaryTag::Left) out.push_back(i);
    return out;
}

Mesh build_unit_square_mesh(int n_div, DiagonalPattern pattern) {
    if (n_div < 2)
        throw InvalidConfiguration("n_div must be >= 2, got " + std::to_string(n_div));

    Mesh mesh;
    mesh.n_div = n_div;
    mesh.pattern = pattern;
    const auto n = static_cast<std::size_t>(n_div);
    const std::size_t per_side = n + 1;
    mesh.nodes.reserve(per_side * per_side);
    for (std::size_t j = 0; j < per_side; ++j)
        for (std::size_t i = 0; i < per_side; ++i)
            mesh.nodes.push_back({static_cast<double>(i) / n_div, static_cast<double>(j) / n_div});

    mesh.tags.reserve(mesh.nodes.size());
    for (const auto& p : mesh.nodes) mesh.tags.push_back(classify(p));

    mesh.triangles.reserve(2 * n * n);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t a = j * per_side + i;
            const std::size_t b = a + 1;
            const std::size_t c = a + per_side + 1;
            const std::size_t d = a + per_side;
            const bool flip = pattern == DiagonalPattern::Alternating && (i + j) % 2 == 1;
            if (flip) {
                mesh.triangles.push_back({a, b, d});
                mesh.triangles.push_back({b, c, d});
            } else {
                mesh.triangles.push_back({a, b, c});
                mesh.triangles.push_back({a, c, d});
            }
        }
    }
    return mesh;
}

const char* to_string(BoundaryTag tag) {
    switch (tag) {
        case BoundaryTag::Left: return "LEFT";
        case BoundaryTag::OtherBoundary: return "OTHER_BOUNDARY";
        case BoundaryTag::Interior: return "INTERIOR";
    }
    return "?";
}

void write_mesh_csv(std::ostream& os, const Mesh& mesh) {
    const auto old_precision = os.precision(17);
    os << "nodes\nid,x,y,tag\n";
    for (std::size_t i = 0; i < mesh.nodes.size(); ++i)
        os << i << ',' << mesh.nodes[i].x << ',' << mesh.nodes[i].y << ',' << to_string(mesh.tags[i]) << '\n';
    os << "triangles\nid,n0,n1,n2\n";
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const auto& tri = mesh.triangles[t];
        os << t << ',' << tri[0] << ',' << tri[1] << ',' << tri[2] << '\n';
    }
    os.precision(old_precision);
}

}  // namespace selfheal
