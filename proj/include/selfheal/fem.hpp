#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "selfheal/mesh.hpp"
#include "selfheal/sparse.hpp"

namespace selfheal {

/// One value per mesh node.
using NodalField = std::vector<double>;

enum class MassKind { Consistent, Lumped };

/// Homogeneous value imposed on a set of nodes.
struct DirichletSet {
    std::vector<std::size_t> nodes;
    double value = 0.0;
};

/// P1 Lagrange assembly on a fixed mesh. Element geometry and the global
/// sparsity pattern are computed once; every matrix produced shares that
/// pattern, so they can be combined with CsrMatrix::add_scaled.
class P1Assembler {
public:
    explicit P1Assembler(const Mesh& mesh);

    const Mesh& mesh() const { return *mesh_; }
    std::size_t dim() const { return mesh_->node_count(); }

    /// Consistent: area/12 * [2 1 1; 1 2 1; 1 1 2]. Lumped: row sums on the
    /// diagonal.
    CsrMatrix mass(MassKind kind = MassKind::Consistent) const;

    /// Stiffness of -div(coeff grad u). The per-element coefficient is the
    /// arithmetic mean of its three nodal values. Throws InvalidField unless
    /// coeff is finite and strictly positive.
    CsrMatrix stiffness(std::span<const double> coeff) const;
    CsrMatrix stiffness_unit() const;

    /// Element matrices, in local node order.
    std::array<double, 9> element_mass(std::size_t tri) const;
    std::array<double, 9> element_stiffness(std::size_t tri, double coeff) const;

private:
    struct ElementGeometry {
        double area;
        std::array<double, 3> gx;  // gradient of each local basis function times 2*area
        std::array<double, 3> gy;
    };

    CsrMatrix zero_matrix() const;

    const Mesh* mesh_;
    std::vector<ElementGeometry> geometry_;
    CsrMatrix pattern_;
    std::vector<std::array<std::size_t, 9>> slots_;
};

CsrMatrix assemble_mass(const Mesh& mesh, MassKind kind = MassKind::Consistent);
CsrMatrix assemble_stiffness(const Mesh& mesh, std::span<const double> coeff);

/// Symmetric row-and-column elimination: rows and columns of the constrained
/// nodes are zeroed, the diagonal set to one, and the rhs corrected so the
/// solution equals `bc.value` on those nodes. An empty node set is a no-op.
void apply_dirichlet(CsrMatrix& system, std::vector<double>& rhs, const DirichletSet& bc);

/// Solves (M + dt K(coeff)) u_new = M u_old with optional Dirichlet data.
/// Throws SolverDivergence from the linear solve.
NodalField backward_euler_step(const P1Assembler& fe, const CsrMatrix& mass, std::span<const double> u_old,
                               std::span<const double> coeff, double dt,
                               const std::optional<DirichletSet>& dirichlet, const SolverOptions& solver = {});

NodalField backward_euler_step(const Mesh& mesh, const CsrMatrix& mass, std::span<const double> u_old,
                               std::span<const double> coeff, double dt,
                               const std::optional<DirichletSet>& dirichlet, const SolverOptions& solver = {});

}  // namespace selfheal
