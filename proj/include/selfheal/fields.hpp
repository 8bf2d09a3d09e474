#pragma once

#include <span>

#include "selfheal/fem.hpp"
#include "selfheal/mesh.hpp"
#include "selfheal/sparse.hpp"

namespace selfheal {

/// Straight Gaussian crack through the centre of the square.
struct CrackSpec {
    double beta = 0.0;       // incline angle, radians in [0, pi]
    double sigma = 0.0224;   // width indicator, cm

    void validate() const;
};

/// Diffusivities in cm^2/s, alpha in 1/s, gamma in cm^2.
struct MaterialLaw {
    double d_intact = 1e-8;
    double d_cracked = 1e-7;
    double p = 1.0;
    double q = 1.0;
    double alpha = 0.01;
    double gamma = 0.0316;

    void validate() const;
};

/// Moisture gate applied to transport through heavily damaged nodes.
struct GateSpec {
    double d_threshold = 0.5;
    double u_critical = 0.5;
    double delta_u = 0.01;
    double epsilon = 1e-3;

    void validate() const;
};

/// d = exp(-((x-0.5)cos(beta) - (y-0.5)sin(beta))^2 / sigma^2) at each node.
NodalField init_damage(const Mesh& mesh, const CrackSpec& crack);

/// Log-space power-law interpolation between intact and cracked diffusivity.
/// Damage within 1e-9 outside [0, 1] is clamped; anything further out throws
/// InvalidField.
NodalField diffusivity(std::span<const double> d, const MaterialLaw& law);
double diffusivity(double d, const MaterialLaw& law);

/// chi = (1 - d)^q.
NodalField cement_availability(std::span<const double> d, double q);

/// Solves (M + gamma K(1)) chi_eff = M chi. `guess`, if non-empty, seeds the
/// iterative solve.
NodalField helmholtz_filter(const P1Assembler& fe, const CsrMatrix& mass, std::span<const double> chi, double gamma,
                            std::span<const double> guess = {}, const SolverOptions& solver = {});
NodalField helmholtz_filter(const Mesh& mesh, const CsrMatrix& mass, std::span<const double> chi, double gamma);

double gate(double u, const GateSpec& spec);
NodalField gate(std::span<const double> u, const GateSpec& spec);

/// D(d) where d <= d_threshold, G(U) * D(d) elsewhere.
NodalField effective_diffusivity_cmm(std::span<const double> d, std::span<const double> u, const MaterialLaw& law,
                                     const GateSpec& spec);

}  // namespace selfheal
