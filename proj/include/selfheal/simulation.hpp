#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "selfheal/fem.hpp"
#include "selfheal/fields.hpp"
#include "selfheal/mesh.hpp"

namespace selfheal {

enum class ModelKind { CDM, CMM };

const char* to_string(ModelKind model);
ModelKind parse_model(const std::string& name);

struct SimConfig {
    int n_div = 32;
    DiagonalPattern mesh_pattern = DiagonalPattern::Uniform;
    CrackSpec crack;
    MaterialLaw law;
    ModelKind model = ModelKind::CDM;
    GateSpec gate;  // read only for CMM
    double dt = 2000.0;
    double t_max = 5e6;
    double heal_threshold = 0.95;
    int record_every = 5;
    double rel_tol = 1e-10;
    int picard_iters = 1;
    /// Mass matrix of the moisture transport step. The Helmholtz filter and
    /// the damage integral always use the consistent mass matrix.
    MassKind transport_mass = MassKind::Lumped;
    /// Stop as soon as heal_threshold is crossed; otherwise run to t_max.
    bool stop_at_threshold = true;

    void validate() const;
};

struct SimState {
    double t = 0.0;
    long step = 0;
    NodalField u;  // moisture, dimensionless
    NodalField d;  // damage fraction
    NodalField chi_eff;
    double d0_integral = 0.0;  // cm^2
};

struct TraceSample {
    double t = 0.0;
    double healing = 0.0;
    double u_min = 0.0;
    double u_max = 0.0;
    double d_integral = 0.0;
    /// Fraction of gated nodes (d > d_threshold) whose gate is at least half
    /// open. NaN for CDM.
    double gate_open_fraction = 0.0;
    /// Mean gate value over gated nodes. NaN for CDM.
    double gate_mean = 0.0;
};

struct HealingTrace {
    ModelKind model = ModelKind::CDM;
    std::vector<TraceSample> samples;
    /// True when heal_threshold was reached before t_max.
    bool complete = false;
};

/// Owns the mesh and the fixed matrices for one configuration; runs are
/// independent and the object is safe to share read-only across threads.
class Simulator {
public:
    explicit Simulator(SimConfig config);
    Simulator(const Simulator&) = delete;
    Simulator& operator=(const Simulator&) = delete;

    const SimConfig& config() const { return config_; }
    const Mesh& mesh() const { return mesh_; }
    const P1Assembler& assembler() const { return fe_; }
    const CsrMatrix& mass() const { return mass_; }

    /// U = 1 on Left nodes and 0 elsewhere; d from the Gaussian crack.
    SimState init_state() const;

    /// One coupled step: implicit moisture, filtered availability, explicit
    /// damage. Throws NumericalFailure on non-finite fields.
    SimState step(const SimState& state) const;

    /// 1 - int(d) / int(d0), clamped to [0, 1]. Throws DegenerateCrack when
    /// the initial damage integral is zero.
    double healing_percentage(const SimState& state) const;

    double integral(std::span<const double> field) const;

    TraceSample sample(const SimState& state) const;

    using Observer = std::function<void(const SimState&)>;
    HealingTrace run(const Observer& observer = {}) const;

private:
    NodalField transport_coefficient(const NodalField& d, const NodalField& u) const;
    void check_finite(const NodalField& field, const char* name, long step) const;

    SimConfig config_;
    Mesh mesh_;
    P1Assembler fe_;
    CsrMatrix mass_;
    CsrMatrix transport_mass_;
    std::optional<BandedCholesky> filter_factor_;
    std::vector<double> node_weights_;  // row sums of the mass matrix
    DirichletSet water_supply_;
};

HealingTrace run(const SimConfig& config);

/// Time at which healing first reaches `threshold`, linearly interpolated
/// between the bracketing samples. nullopt when never reached.
std::optional<double> time_to_heal(const HealingTrace& trace, double threshold);

/// Healing percentage at time t, linearly interpolated; holds the last
/// value beyond the end of the trace.
double healing_at(const HealingTrace& trace, double t);

void write_trace_csv(std::ostream& os, const HealingTrace& trace);
void write_snapshot_csv(std::ostream& os, const Mesh& mesh, const SimState& state);

}  // namespace selfheal
