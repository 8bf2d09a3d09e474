#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "selfheal/error.hpp"
#include "selfheal/simulation.hpp"

using namespace selfheal;

namespace {

SimConfig coarse_config() {
    SimConfig c;
    c.n_div = 16;
    return c;
}

HealingTrace trace_of(std::initializer_list<std::pair<double, double>> points) {
    HealingTrace tr;
    for (const auto& [t, h] : points) {
        TraceSample s;
        s.t = t;
        s.healing = h;
        tr.samples.push_back(s);
    }
    return tr;
}

bool close_relative(double a, double b, double rel) {
    return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b)) + 1e-300;
}

}  // namespace

TEST(Init, MoistureOnlyOnWaterSide) {
    const Simulator sim(SimConfig{});
    const SimState s = sim.init_state();
    double total = 0.0;
    for (double v : s.u) total += v;
    EXPECT_DOUBLE_EQ(total, static_cast<double>(sim.mesh().left_nodes().size()));
    EXPECT_EQ(sim.mesh().left_nodes().size(), 33u);
    EXPECT_DOUBLE_EQ(sim.healing_percentage(s), 0.0);
}

TEST(Init, DamageIntegralMatchesGaussianStrip) {
    const Simulator sim(SimConfig{});
    const SimState s = sim.init_state();
    const double sigma = sim.config().crack.sigma;
    EXPECT_NEAR(s.d0_integral, sigma * std::sqrt(std::numbers::pi), 0.02 * sigma * std::sqrt(std::numbers::pi));
}

TEST(HealingPercentage, LinearInDamage) {
    const Simulator sim(coarse_config());
    SimState s = sim.init_state();
    EXPECT_DOUBLE_EQ(sim.healing_percentage(s), 0.0);
    for (double& v : s.d) v *= 0.5;
    EXPECT_NEAR(sim.healing_percentage(s), 0.5, 1e-14);
    for (double& v : s.d) v = 0.0;
    EXPECT_DOUBLE_EQ(sim.healing_percentage(s), 1.0);
}

TEST(HealingPercentage, ZeroInitialDamageIsDegenerate) {
    const Simulator sim(coarse_config());
    SimState s = sim.init_state();
    s.d0_integral = 0.0;
    EXPECT_THROW(sim.healing_percentage(s), DegenerateCrack);
}

TEST(Step, UndamagedStaysUndamaged) {
    const Simulator sim(coarse_config());
    SimState s = sim.init_state();
    for (double& v : s.d) v = 0.0;
    for (int k = 0; k < 3; ++k) s = sim.step(s);
    for (double v : s.d) EXPECT_EQ(v, 0.0);
}

TEST(Step, FullyWetUndamagedStaysUndamaged) {
    const Simulator sim(coarse_config());
    SimState s = sim.init_state();
    for (double& v : s.d) v = 0.0;
    for (double& v : s.u) v = 1.0;
    s = sim.step(s);
    for (double v : s.d) EXPECT_EQ(v, 0.0);
    for (double v : s.u) EXPECT_NEAR(v, 1.0, 1e-12);
}

TEST(Step, DamageClampsAtZero) {
    // gamma = 0 leaves chi_eff = 1 - d, so alpha is chosen to make the
    // healing increment 0.3 at a water-side node with d = 0.2.
    SimConfig c = coarse_config();
    c.law.gamma = 0.0;
    c.law.alpha = 0.3 / (0.8 * c.dt);
    const Simulator sim(c);
    SimState s = sim.init_state();
    const std::size_t node = sim.mesh().left_nodes()[5];
    s.d[node] = 0.2;
    const SimState next = sim.step(s);
    EXPECT_EQ(next.d[node], 0.0);
}

TEST(Step, SingleStepDamageUpdateIsExplicit) {
    SimConfig c = coarse_config();
    c.law.gamma = 0.0;
    const Simulator sim(c);
    const SimState s = sim.init_state();
    const SimState next = sim.step(s);
    for (std::size_t i = 0; i < s.d.size(); ++i) {
        const double expected = std::clamp(s.d[i] - c.dt * c.law.alpha * std::max(next.u[i], 0.0) * (1.0 - s.d[i]),
                                           0.0, 1.0);
        EXPECT_NEAR(next.d[i], expected, 1e-15);
    }
}

TEST(Step, NonFiniteDamageIsReported) {
    SimConfig c = coarse_config();
    c.law.gamma = 0.0;
    c.law.alpha = 1e308;  // alpha * dt overflows; 0 * inf on the crack line gives NaN
    const Simulator sim(c);
    try {
        sim.step(sim.init_state());
        FAIL() << "expected NumericalFailure";
    } catch (const NumericalFailure& e) {
        EXPECT_NE(std::string(e.what()).find("field d at step 1"), std::string::npos) << e.what();
    }
}

TEST(TimeToHeal, LinearInterpolation) {
    EXPECT_NEAR(*time_to_heal(trace_of({{0, 0.9}, {100, 1.0}}), 0.95), 50.0, 1e-12);
}

TEST(TimeToHeal, IncompleteTrace) {
    EXPECT_FALSE(time_to_heal(trace_of({{0, 0.0}, {10, 0.5}, {20, 0.8}}), 0.95).has_value());
}

TEST(TimeToHeal, FirstSampleAlreadyHealed) {
    EXPECT_DOUBLE_EQ(*time_to_heal(trace_of({{7, 0.97}, {9, 0.99}}), 0.95), 7.0);
}

TEST(HealingAt, InterpolatesAndHolds) {
    const auto tr = trace_of({{0, 0.0}, {10, 0.5}, {20, 0.96}});
    EXPECT_NEAR(healing_at(tr, 5.0), 0.25, 1e-15);
    EXPECT_NEAR(healing_at(tr, 15.0), 0.73, 1e-15);
    EXPECT_DOUBLE_EQ(healing_at(tr, 1e9), 0.96);
}

TEST(Run, RecordsEveryNthStepAndCrossing) {
    SimConfig c = coarse_config();
    c.record_every = 7;
    const HealingTrace tr = run(c);
    ASSERT_TRUE(tr.complete);
    EXPECT_DOUBLE_EQ(tr.samples.front().t, 0.0);
    EXPECT_GE(tr.samples.back().healing, c.heal_threshold);
    EXPECT_LT(tr.samples[tr.samples.size() - 2].healing, c.heal_threshold);
    for (std::size_t i = 1; i + 1 < tr.samples.size(); ++i)
        EXPECT_EQ(std::llround(tr.samples[i].t / c.dt) % 7, 0);
}

TEST(Run, StopsAtHorizonWhenUnhealed) {
    SimConfig c = coarse_config();
    c.t_max = 2e5;
    const HealingTrace tr = run(c);
    EXPECT_FALSE(tr.complete);
    EXPECT_NEAR(tr.samples.back().t, 2e5, 1e-6);
}

TEST(Run, Deterministic) {
    const SimConfig c = coarse_config();
    const HealingTrace a = run(c);
    const HealingTrace b = run(c);
    ASSERT_EQ(a.samples.size(), b.samples.size());
    for (std::size_t i = 0; i < a.samples.size(); ++i) EXPECT_EQ(a.samples[i].healing, b.samples[i].healing);
}

TEST(Run, MonotoneHealingAndBoundedMoisture) {
    SimConfig c = coarse_config();
    c.record_every = 1;
    const Simulator sim(c);
    SimState prev = sim.init_state();
    for (int k = 0; k < 200; ++k) {
        const SimState next = sim.step(prev);
        for (std::size_t i = 0; i < next.d.size(); ++i) {
            ASSERT_LE(next.d[i], prev.d[i]);
            ASSERT_GE(next.u[i], -1e-6);
            ASSERT_LE(next.u[i], 1.0 + 1e-6);
        }
        ASSERT_GE(sim.healing_percentage(next), sim.healing_percentage(prev));
        prev = next;
    }
}

TEST(Run, MirrorSymmetryOnSymmetricMesh) {
    SimConfig c = coarse_config();
    c.mesh_pattern = DiagonalPattern::Alternating;
    c.crack.beta = std::numbers::pi / 6;
    const HealingTrace a = run(c);
    c.crack.beta = std::numbers::pi - std::numbers::pi / 6;
    const HealingTrace b = run(c);
    ASSERT_EQ(a.samples.size(), b.samples.size());
    for (std::size_t i = 0; i < a.samples.size(); ++i)
        EXPECT_TRUE(close_relative(a.samples[i].healing, b.samples[i].healing, 1e-6))
            << "sample " << i << ": " << a.samples[i].healing << " vs " << b.samples[i].healing;
}

TEST(Run, MembraneHealsNoSoonerThanDiffusion) {
    SimConfig c = coarse_config();
    const double cdm = *time_to_heal(run(c), 0.95);
    c.model = ModelKind::CMM;
    const double cmm = *time_to_heal(run(c), 0.95);
    EXPECT_GE(cmm, cdm);
}

TEST(Run, MembraneTracePointwiseBelowDiffusion) {
    SimConfig c = coarse_config();
    c.stop_at_threshold = false;
    c.record_every = 1;  // keeps the threshold-crossing sample from shifting indices
    c.t_max = 1.4e6;
    const HealingTrace cdm = run(c);
    c.model = ModelKind::CMM;
    const HealingTrace cmm = run(c);
    ASSERT_EQ(cdm.samples.size(), cmm.samples.size());
    for (std::size_t i = 0; i < cdm.samples.size(); ++i)
        EXPECT_LE(cmm.samples[i].healing, cdm.samples[i].healing) << "t=" << cdm.samples[i].t;
}

TEST(Run, ReactionDominatedLimitHealsFarSooner) {
    SimConfig c = coarse_config();
    const double diffusion_limited = *time_to_heal(run(c), 0.95);
    c.law.alpha = 1e4;
    c.record_every = 1;
    const HealingTrace tr = run(c);
    ASSERT_TRUE(tr.complete);
    EXPECT_LE(*time_to_heal(tr, 0.95), 0.2 * diffusion_limited);
    for (std::size_t i = 1; i < tr.samples.size(); ++i) EXPECT_GE(tr.samples[i].healing, tr.samples[i - 1].healing);
}

TEST(Run, ExponentIrrelevantWhenDiffusivitiesMatch) {
    SimConfig c = coarse_config();
    c.law.d_cracked = c.law.d_intact = 3e-8;
    const double t1 = *time_to_heal(run(c), 0.95);
    c.law.p = 3.0;
    const double t3 = *time_to_heal(run(c), 0.95);
    EXPECT_NEAR(t1, t3, 1e-9 * t1);
}

TEST(Run, HalvingStepChangesHealTimeLittle) {
    SimConfig c;
    const double coarse = *time_to_heal(run(c), 0.95);
    c.dt = 1000.0;
    c.record_every = 10;
    const double fine = *time_to_heal(run(c), 0.95);
    EXPECT_LT(std::abs(coarse - fine) / fine, 0.05);
}

TEST(Output, TraceCsvSchema) {
    SimConfig c = coarse_config();
    c.t_max = 20000;
    std::ostringstream cdm, cmm;
    write_trace_csv(cdm, run(c));
    c.model = ModelKind::CMM;
    write_trace_csv(cmm, run(c));
    const std::string header = "t,healing_pct,u_min,u_max,d_integral,gate_open_fraction\n";
    EXPECT_EQ(cdm.str().rfind(header, 0), 0u);
    EXPECT_EQ(cmm.str().rfind(header, 0), 0u);
    // The gate column is empty for the diffusion model and numeric for the membrane model.
    const std::string cdm_row = cdm.str().substr(header.size(), cdm.str().find('\n', header.size()) - header.size());
    const std::string cmm_row = cmm.str().substr(header.size(), cmm.str().find('\n', header.size()) - header.size());
    EXPECT_EQ(cdm_row.back(), ',');
    EXPECT_NE(cmm_row.back(), ',');
}

TEST(Output, SnapshotCsvSchema) {
    const Simulator sim(coarse_config());
    std::ostringstream os;
    write_snapshot_csv(os, sim.mesh(), sim.init_state());
    std::istringstream in(os.str());
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "node_id,x,y,U,d");
    std::size_t rows = 0;
    while (std::getline(in, line)) ++rows;
    EXPECT_EQ(rows, sim.mesh().node_count());
}

TEST(Config, Validation) {
    SimConfig c;
    c.dt = 0;
    EXPECT_THROW(c.validate(), InvalidConfiguration);
    c = SimConfig{};
    c.heal_threshold = 1.0;
    EXPECT_THROW(c.validate(), InvalidConfiguration);
    c = SimConfig{};
    c.n_div = 1;
    EXPECT_THROW(Simulator{c}, InvalidConfiguration);
    EXPECT_EQ(parse_model("cmm"), ModelKind::CMM);
    EXPECT_THROW(parse_model("xyz"), InvalidConfiguration);
}
