#include "selfheal/fem.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "selfheal/error.hpp"

namespace selfheal {

P1Assembler::P1Assembler(const Mesh& mesh) : mesh_(&mesh) {
    geometry_.reserve(mesh.triangle_count());
    for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
        const auto& tri = mesh.triangles[t];
        const Point2& p0 = mesh.nodes[tri[0]];
        const Point2& p1 = mesh.nodes[tri[1]];
        const Point2& p2 = mesh.nodes[tri[2]];
        const double area = mesh.signed_area(t);
        if (!(area > 0.0)) {
            std::ostringstream msg;
            msg << "triangle " << t << " has non-positive signed area " << area;
            throw InvalidConfiguration(msg.str());
        }
        geometry_.push_back({area,
                             {p1.y - p2.y, p2.y - p0.y, p0.y - p1.y},
                             {p2.x - p1.x, p0.x - p2.x, p1.x - p0.x}});
    }

    std::vector<Triplet> triplets;
    triplets.reserve(9 * mesh.triangle_count());
    for (const auto& tri : mesh.triangles)
        for (std::size_t a = 0; a < 3; ++a)
            for (std::size_t b = 0; b < 3; ++b) triplets.push_back({tri[a], tri[b], 0.0});
    pattern_ = CsrMatrix::from_triplets(mesh.node_count(), triplets);

    slots_.reserve(mesh.triangle_count());
    for (const auto& tri : mesh.triangles) {
        std::array<std::size_t, 9> s{};
        for (std::size_t a = 0; a < 3; ++a)
            for (std::size_t b = 0; b < 3; ++b) s[3 * a + b] = pattern_.find(tri[a], tri[b]);
        slots_.push_back(s);
    }
}

CsrMatrix P1Assembler::zero_matrix() const { return pattern_; }

std::array<double, 9> P1Assembler::element_mass(std::size_t tri) const {
    const double s = geometry_[tri].area / 12.0;
    return {2 * s, s, s, s, 2 * s, s, s, s, 2 * s};
}

std::array<double, 9> P1Assembler::element_stiffness(std::size_t tri, double coeff) const {
    const auto& g = geometry_[tri];
    const double scale = coeff / (4.0 * g.area);
    std::array<double, 9> k{};
    for (std::size_t a = 0; a < 3; ++a)
        for (std::size_t b = 0; b < 3; ++b) k[3 * a + b] = scale * (g.gx[a] * g.gx[b] + g.gy[a] * g.gy[b]);
    return k;
}

CsrMatrix P1Assembler::mass(MassKind kind) const {
    CsrMatrix m = zero_matrix();
    auto& values = m.values();
    for (std::size_t t = 0; t < geometry_.size(); ++t) {
        const auto& slots = slots_[t];
        if (kind == MassKind::Lumped) {
            const double share = geometry_[t].area / 3.0;
            for (std::size_t a = 0; a < 3; ++a) values[slots[4 * a]] += share;
        } else {
            const auto local = element_mass(t);
            for (std::size_t k = 0; k < 9; ++k) values[slots[k]] += local[k];
        }
    }
    return m;
}

CsrMatrix P1Assembler::stiffness(std::span<const double> coeff) const {
    if (coeff.size() != dim()) throw InvalidField("stiffness: coefficient field has wrong size");
    for (std::size_t i = 0; i < coeff.size(); ++i) {
        if (!(coeff[i] > 0.0) || !std::isfinite(coeff[i])) {
            std::ostringstream msg;
            msg << "stiffness: coefficient must be positive, node " << i << " has " << coeff[i];
            throw InvalidField(msg.str());
        }
    }
    CsrMatrix k = zero_matrix();
    auto& values = k.values();
    for (std::size_t t = 0; t < geometry_.size(); ++t) {
        const auto& tri = mesh_->triangles[t];
        const double c = (coeff[tri[0]] + coeff[tri[1]] + coeff[tri[2]]) / 3.0;
        const auto local = element_stiffness(t, c);
        const auto& slots = slots_[t];
        for (std::size_t e = 0; e < 9; ++e) values[slots[e]] += local[e];
    }
    return k;
}

CsrMatrix P1Assembler::stiffness_unit() const {
    const std::vector<double> ones(dim(), 1.0);
    return stiffness(ones);
}

CsrMatrix assemble_mass(const Mesh& mesh, MassKind kind) { return P1Assembler(mesh).mass(kind); }

CsrMatrix assemble_stiffness(const Mesh& mesh, std::span<const double> coeff) {
    return P1Assembler(mesh).stiffness(coeff);
}

void apply_dirichlet(CsrMatrix& system, std::vector<double>& rhs, const DirichletSet& bc) {
    if (bc.nodes.empty()) return;
    const std::size_t n = system.dim();
    if (rhs.size() != n) throw std::invalid_argument("apply_dirichlet: rhs size mismatch");
    std::vector<char> fixed(n, 0);
    for (std::size_t node : bc.nodes) {
        if (node >= n) throw std::out_of_range("apply_dirichlet: node index out of range");
        fixed[node] = 1;
    }
    const auto& offsets = system.row_offsets();
    const auto& cols = system.col_indices();
    auto& values = system.values();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = offsets[i]; k < offsets[i + 1]; ++k) {
            const std::size_t j = cols[k];
            if (fixed[i]) {
                values[k] = (i == j) ? 1.0 : 0.0;
            } else if (fixed[j]) {
                rhs[i] -= values[k] * bc.value;
                values[k] = 0.0;
            }
        }
    }
    for (std::size_t node : bc.nodes) rhs[node] = bc.value;
}

NodalField backward_euler_step(const P1Assembler& fe, const CsrMatrix& mass, std::span<const double> u_old,
                               std::span<const double> coeff, double dt,
                               const std::optional<DirichletSet>& dirichlet, const SolverOptions& solver) {
    if (!(dt > 0.0)) throw InvalidConfiguration("backward_euler_step: dt must be positive");
    if (u_old.size() != fe.dim()) throw InvalidField("backward_euler_step: field has wrong size");

    CsrMatrix system = fe.stiffness(coeff);
    for (double& v : system.values()) v *= dt;
    system.add_scaled(mass, 1.0);

    std::vector<double> rhs = mass * u_old;
    NodalField u(u_old.begin(), u_old.end());
    if (dirichlet) {
        apply_dirichlet(system, rhs, *dirichlet);
        for (std::size_t node : dirichlet->nodes) u[node] = dirichlet->value;
    }
    solve_spd(system, rhs, u, solver);
    return u;
}

NodalField backward_euler_step(const Mesh& mesh, const CsrMatrix& mass, std::span<const double> u_old,
                               std::span<const double> coeff, double dt,
                               const std::optional<DirichletSet>& dirichlet, const SolverOptions& solver) {
    return backward_euler_step(P1Assembler(mesh), mass, u_old, coeff, dt, dirichlet, solver);
}

}  // namespace selfheal
