#include "selfheal/fields.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "selfheal/error.hpp"

namespace selfheal {

namespace {

constexpr double kDamageSlack = 1e-9;
constexpr double kGateExponentCap = 500.0;

double checked_damage(double d, std::size_t node) {
    if (!(d >= -kDamageSlack && d <= 1.0 + kDamageSlack)) {
        std::ostringstream msg;
        msg << "damage out of [0,1] at node " << node << ": " << d;
        throw InvalidField(msg.str());
    }
    return std::clamp(d, 0.0, 1.0);
}

void require(bool ok, const char* what) {
    if (!ok) throw InvalidConfiguration(what);
}

}  // namespace

void CrackSpec::validate() const {
    require(beta >= 0.0 && beta <= std::numbers::pi, "crack.beta must lie in [0, pi]");
    require(sigma > 0.0 && std::isfinite(sigma), "crack.sigma must be positive");
}

void MaterialLaw::validate() const {
    require(d_intact > 0.0 && std::isfinite(d_intact), "law.d_intact must be positive");
    require(d_cracked > 0.0 && std::isfinite(d_cracked), "law.d_cracked must be positive");
    require(p >= 1.0, "law.p must be >= 1");
    require(q >= 1.0, "law.q must be >= 1");
    require(alpha > 0.0 && std::isfinite(alpha), "law.alpha must be positive");
    require(gamma >= 0.0 && std::isfinite(gamma), "law.gamma must be non-negative");
}

void GateSpec::validate() const {
    require(d_threshold > 0.0 && d_threshold < 1.0, "gate.d_threshold must lie in (0, 1)");
    require(u_critical > 0.0 && u_critical < 1.0, "gate.u_critical must lie in (0, 1)");
    require(delta_u > 0.0 && std::isfinite(delta_u), "gate.delta_u must be positive");
    require(epsilon > 0.0 && epsilon <= 0.1, "gate.epsilon must lie in (0, 0.1]");
}

NodalField init_damage(const Mesh& mesh, const CrackSpec& crack) {
    const double c = std::cos(crack.beta);
    const double s = std::sin(crack.beta);
    const double inv_s2 = 1.0 / (crack.sigma * crack.sigma);
    NodalField d(mesh.node_count());
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double r = (mesh.nodes[i].x - 0.5) * c - (mesh.nodes[i].y - 0.5) * s;
        d[i] = std::exp(-r * r * inv_s2);
    }
    return d;
}

namespace {

double diffusivity_unchecked(double d, const MaterialLaw& law) {
    const double w = std::pow(1.0 - d, law.p);
    return std::exp(w * std::log(law.d_intact) + (1.0 - w) * std::log(law.d_cracked));
}

}  // namespace

double diffusivity(double d, const MaterialLaw& law) { return diffusivity_unchecked(checked_damage(d, 0), law); }

NodalField diffusivity(std::span<const double> d, const MaterialLaw& law) {
    NodalField out(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) out[i] = diffusivity_unchecked(checked_damage(d[i], i), law);
    return out;
}

NodalField cement_availability(std::span<const double> d, double q) {
    NodalField out(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) out[i] = std::pow(1.0 - checked_damage(d[i], i), q);
    return out;
}

NodalField helmholtz_filter(const P1Assembler& fe, const CsrMatrix& mass, std::span<const double> chi, double gamma,
                            std::span<const double> guess, const SolverOptions& solver) {
    if (!(gamma >= 0.0)) throw InvalidConfiguration("helmholtz_filter: gamma must be non-negative");
    if (chi.size() != fe.dim()) throw InvalidField("helmholtz_filter: field has wrong size");
    if (gamma == 0.0) return NodalField(chi.begin(), chi.end());

    CsrMatrix system = fe.stiffness_unit();
    for (double& v : system.values()) v *= gamma;
    system.add_scaled(mass, 1.0);
    const std::vector<double> rhs = mass * chi;
    NodalField out = guess.size() == chi.size() ? NodalField(guess.begin(), guess.end())
                                                : NodalField(chi.begin(), chi.end());
    solve_spd(system, rhs, out, solver);
    return out;
}

NodalField helmholtz_filter(const Mesh& mesh, const CsrMatrix& mass, std::span<const double> chi, double gamma) {
    return helmholtz_filter(P1Assembler(mesh), mass, chi, gamma);
}

double gate(double u, const GateSpec& spec) {
    const double z = std::clamp(-(u - spec.u_critical) / spec.delta_u, -kGateExponentCap, kGateExponentCap);
    return spec.epsilon + (1.0 - spec.epsilon) / (1.0 + std::exp(z));
}

NodalField gate(std::span<const double> u, const GateSpec& spec) {
    NodalField out(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) out[i] = gate(u[i], spec);
    return out;
}

NodalField effective_diffusivity_cmm(std::span<const double> d, std::span<const double> u, const MaterialLaw& law,
                                     const GateSpec& spec) {
    if (d.size() != u.size()) throw InvalidField("effective_diffusivity_cmm: field sizes differ");
    NodalField out = diffusivity(d, law);
    for (std::size_t i = 0; i < d.size(); ++i)
        if (d[i] > spec.d_threshold) out[i] *= gate(u[i], spec);
    return out;
}

}  // namespace selfheal
