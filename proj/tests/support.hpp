#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "selfheal/fem.hpp"
#include "selfheal/mesh.hpp"

namespace selfheal::testing {

/// L2 error at t_end of P1/backward Euler against u = cos(pi x) exp(-D pi^2 t)
/// with zero flux on every side. The error integral uses the edge-midpoint
/// rule, exact for quadratics, against the closed form rather than its
/// interpolant.
inline double manufactured_l2_error(int n_div, double dt, double t_end, double diff) {
    const Mesh mesh = build_unit_square_mesh(n_div);
    const P1Assembler fe(mesh);
    const CsrMatrix mass = fe.mass(MassKind::Consistent);
    const std::vector<double> coeff(mesh.node_count(), diff);
    const double pi = std::numbers::pi;

    std::vector<double> u(mesh.node_count());
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = std::cos(pi * mesh.nodes[i].x);
    const long steps = std::lround(t_end / dt);
    for (long k = 0; k < steps; ++k) u = backward_euler_step(fe, mass, u, coeff, dt, std::nullopt, {1e-13, 0});

    const double decay = std::exp(-diff * pi * pi * static_cast<double>(steps) * dt);
    double err2 = 0.0;
    for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
        const auto& tri = mesh.triangles[t];
        const double area = std::abs(mesh.signed_area(t));
        for (int e = 0; e < 3; ++e) {
            const std::size_t a = tri[e];
            const std::size_t b = tri[(e + 1) % 3];
            const double x = 0.5 * (mesh.nodes[a].x + mesh.nodes[b].x);
            const double uh = 0.5 * (u[a] + u[b]);
            const double diffv = uh - std::cos(pi * x) * decay;
            err2 += area / 3.0 * diffv * diffv;
        }
    }
    return std::sqrt(err2);
}

/// Spearman rank correlation, average ranks for ties.
inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    auto ranks = [](const std::vector<double>& v) {
        std::vector<std::size_t> idx(v.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
        std::vector<double> r(v.size());
        for (std::size_t i = 0; i < idx.size();) {
            std::size_t j = i;
            while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
            for (std::size_t k = i; k <= j; ++k) r[idx[k]] = 0.5 * static_cast<double>(i + j);
            i = j + 1;
        }
        return r;
    };
    const auto ra = ranks(a);
    const auto rb = ranks(b);
    const double n = static_cast<double>(a.size());
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) ma += ra[i], mb += rb[i];
    ma /= n;
    mb /= n;
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (ra[i] - ma) * (rb[i] - mb);
        saa += (ra[i] - ma) * (ra[i] - ma);
        sbb += (rb[i] - mb) * (rb[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

}  // namespace selfheal::testing
