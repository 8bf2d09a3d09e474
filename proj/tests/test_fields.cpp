#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "selfheal/error.hpp"
#include "selfheal/fields.hpp"

using namespace selfheal;

TEST(Damage, CenterlineIsFullyCracked) {
    const Mesh m = build_unit_square_mesh(32);
    const auto d = init_damage(m, {0.0, 0.05});
    for (std::size_t i = 0; i < m.node_count(); ++i)
        if (m.nodes[i].x == 0.5) {
            EXPECT_DOUBLE_EQ(d[i], 1.0);
        }
}

TEST(Damage, ThreeSigmaOffset) {
    // sigma^2 = 0.0005 puts x = 0.5671 at three widths from the centreline.
    Mesh m;
    m.nodes = {{0.5671, 0.3}};
    const double sigma = std::sqrt(0.0005);
    const auto d = init_damage(m, {0.0, sigma});
    const double expected = std::exp(-(0.0671 * 0.0671) / 0.0005);
    EXPECT_NEAR(d[0], expected, 1e-12);
    EXPECT_NEAR(d[0], 1.23e-4, 0.01e-4);
}

TEST(Damage, SupplementaryAnglesAreMirrorImages) {
    const Mesh m = build_unit_square_mesh(16);
    const int n = m.n_div;
    for (double beta : {0.2, 0.7, 1.1, std::numbers::pi / 4}) {
        const auto a = init_damage(m, {beta, 0.03});
        const auto b = init_damage(m, {std::numbers::pi - beta, 0.03});
        for (int j = 0; j <= n; ++j)
            for (int i = 0; i <= n; ++i)
                EXPECT_NEAR(a[j * (n + 1) + i], b[(n - j) * (n + 1) + i], 1e-14);
    }
}

TEST(Diffusivity, Endpoints) {
    const MaterialLaw law;
    EXPECT_NEAR(diffusivity(0.0, law), 1e-8, 1e-22);
    EXPECT_NEAR(diffusivity(1.0, law), 1e-7, 1e-21);
}

TEST(Diffusivity, GeometricMeanAtMidpoint) {
    const MaterialLaw law;
    EXPECT_NEAR(diffusivity(0.5, law), std::pow(10.0, -7.5), 1e-20);
}

TEST(Diffusivity, QuadraticExponent) {
    MaterialLaw law;
    law.p = 2.0;
    const double expected = std::pow(1e-8, 0.25) * std::pow(1e-7, 0.75);
    EXPECT_NEAR(diffusivity(0.5, law), expected, 1e-20);
    EXPECT_NEAR(expected, 5.623e-8, 0.001e-8);
}

TEST(Diffusivity, ClampsRoundoffAndRejectsOutliers) {
    const MaterialLaw law;
    EXPECT_EQ(diffusivity(-5e-10, law), diffusivity(0.0, law));
    EXPECT_EQ(diffusivity(1.0 + 5e-10, law), diffusivity(1.0, law));
    EXPECT_THROW(diffusivity(-1e-6, law), InvalidField);
    EXPECT_THROW(diffusivity(1.1, law), InvalidField);
    const std::vector<double> bad{0.1, std::nan("")};
    EXPECT_THROW(diffusivity(bad, law), InvalidField);
}

TEST(Diffusivity, MonotoneBetweenEndpoints) {
    const MaterialLaw law;
    double prev = diffusivity(0.0, law);
    for (int k = 1; k <= 100; ++k) {
        const double v = diffusivity(k / 100.0, law);
        EXPECT_GT(v, prev);
        prev = v;
    }
}

TEST(Availability, Values) {
    const std::vector<double> d{0.0, 1.0, 0.5};
    const auto q1 = cement_availability(d, 1.0);
    EXPECT_DOUBLE_EQ(q1[0], 1.0);
    EXPECT_DOUBLE_EQ(q1[1], 0.0);
    EXPECT_DOUBLE_EQ(q1[2], 0.5);
    EXPECT_DOUBLE_EQ(cement_availability(d, 2.0)[2], 0.25);
}

TEST(Filter, ConstantIsFixedPoint) {
    const Mesh m = build_unit_square_mesh(16);
    const P1Assembler fe(m);
    const CsrMatrix mass = fe.mass();
    const std::vector<double> chi(m.node_count(), 0.37);
    for (double v : helmholtz_filter(fe, mass, chi, 0.0316)) EXPECT_NEAR(v, 0.37, 1e-10);
}

TEST(Filter, ZeroGammaIsIdentity) {
    const Mesh m = build_unit_square_mesh(8);
    const P1Assembler fe(m);
    const CsrMatrix mass = fe.mass();
    std::vector<double> chi(m.node_count());
    for (std::size_t i = 0; i < chi.size(); ++i) chi[i] = std::sin(static_cast<double>(i));
    EXPECT_EQ(helmholtz_filter(fe, mass, chi, 0.0), chi);
}

TEST(Filter, PreservesIntegral) {
    const Mesh m = build_unit_square_mesh(16);
    const P1Assembler fe(m);
    const CsrMatrix mass = fe.mass();
    const std::vector<double> ones(m.node_count(), 1.0);
    const auto w = mass * ones;
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<double> chi(m.node_count());
        for (double& v : chi) v = u(rng);
        const auto f = helmholtz_filter(fe, mass, chi, 0.01 + 0.02 * trial);
        EXPECT_NEAR(dot(w, f), dot(w, chi), 1e-10 * dot(w, chi));
    }
}

TEST(Filter, SmoothsPeaks) {
    const Mesh m = build_unit_square_mesh(16);
    const P1Assembler fe(m);
    const auto chi = cement_availability(init_damage(m, {0.0, 0.03}), 1.0);
    const auto f = helmholtz_filter(fe, fe.mass(), chi, 0.0316);
    EXPECT_GT(*std::min_element(f.begin(), f.end()), *std::min_element(chi.begin(), chi.end()));
}

TEST(Filter, RejectsNegativeGamma) {
    const Mesh m = build_unit_square_mesh(4);
    const P1Assembler fe(m);
    const std::vector<double> chi(m.node_count(), 1.0);
    EXPECT_THROW(helmholtz_filter(fe, fe.mass(), chi, -1.0), InvalidConfiguration);
}

TEST(Gate, MidpointAndTails) {
    const GateSpec g;
    EXPECT_NEAR(gate(0.5, g), 1e-3 + (1 - 1e-3) / 2, 1e-15);
    EXPECT_NEAR(gate(0.5, g), 0.5005, 1e-15);
    EXPECT_NEAR(gate(0.0, g), 1e-3, 1e-20);
    EXPECT_NEAR(gate(1.0, g), 1.0, 1e-20);
}

TEST(Gate, ExtremeArgumentsStayFinite) {
    GateSpec g;
    g.delta_u = 1e-12;
    EXPECT_NEAR(gate(0.0, g), g.epsilon, 1e-20);
    EXPECT_NEAR(gate(1.0, g), 1.0, 1e-20);
}

TEST(Gate, EffectiveDiffusivityBranches) {
    const MaterialLaw law;
    const GateSpec g;
    const std::vector<double> intact(3, 0.0);
    const std::vector<double> u{0.0, 0.5, 1.0};
    const auto di = effective_diffusivity_cmm(intact, u, law, g);
    for (double v : di) EXPECT_NEAR(v, law.d_intact, 1e-22);

    const std::vector<double> cracked(3, 1.0);
    const auto dc = effective_diffusivity_cmm(cracked, u, law, g);
    EXPECT_NEAR(dc[0], g.epsilon * law.d_cracked, 1e-14 * law.d_cracked);
    EXPECT_NEAR(dc[2], law.d_cracked, 1e-14 * law.d_cracked);
}

TEST(Config, ValidationRejectsOutOfRange) {
    EXPECT_THROW((CrackSpec{4.0, 0.02}.validate()), InvalidConfiguration);
    EXPECT_THROW((CrackSpec{0.0, 0.0}.validate()), InvalidConfiguration);
    MaterialLaw law;
    law.p = 0.5;
    EXPECT_THROW(law.validate(), InvalidConfiguration);
    GateSpec g;
    g.epsilon = 0.0;
    EXPECT_THROW(g.validate(), InvalidConfiguration);
}
