#include "selfheal/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include "selfheal/error.hpp"

namespace selfheal {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require(bool ok, const std::string& what) {
    if (!ok) throw InvalidConfiguration(what);
}

}  // namespace

const char* to_string(ModelKind model) { return model == ModelKind::CDM ? "cdm" : "cmm"; }

ModelKind parse_model(const std::string& name) {
    if (name == "cdm" || name == "CDM") return ModelKind::CDM;
    if (name == "cmm" || name == "CMM") return ModelKind::CMM;
    throw InvalidConfiguration("model must be cdm or cmm, got '" + name + "'");
}

void SimConfig::validate() const {
    require(n_div >= 2, "n_div must be >= 2");
    crack.validate();
    law.validate();
    if (model == ModelKind::CMM) gate.validate();
    require(dt > 0.0 && std::isfinite(dt), "dt must be positive");
    require(t_max >= dt && std::isfinite(t_max), "t_max must be >= dt");
    require(heal_threshold > 0.0 && heal_threshold < 1.0, "heal_threshold must lie in (0, 1)");
    require(record_every >= 1, "record_every must be >= 1");
    require(rel_tol > 0.0 && rel_tol < 1.0, "rel_tol must lie in (0, 1)");
    require(picard_iters >= 1, "picard_iters must be >= 1");
}

Simulator::Simulator(SimConfig config)
    : config_((config.validate(), std::move(config))),
      mesh_(build_unit_square_mesh(config_.n_div, config_.mesh_pattern)),
      fe_(mesh_),
      mass_(fe_.mass(MassKind::Consistent)),
      transport_mass_(fe_.mass(config_.transport_mass)) {
    if (config_.law.gamma > 0.0) {
        // The filter operator is constant over a run, so it is factored once.
        CsrMatrix filter = fe_.stiffness_unit();
        for (double& v : filter.values()) v *= config_.law.gamma;
        filter.add_scaled(mass_, 1.0);
        filter_factor_.emplace(filter);
    }
    node_weights_ = mass_ * std::vector<double>(mesh_.node_count(), 1.0);
    water_supply_ = DirichletSet{mesh_.left_nodes(), 1.0};
}

SimState Simulator::init_state() const {
    SimState s;
    s.d = init_damage(mesh_, config_.crack);
    s.u.assign(mesh_.node_count(), 0.0);
    for (std::size_t node : water_supply_.nodes) s.u[node] = 1.0;
    s.chi_eff = cement_availability(s.d, config_.law.q);
    if (filter_factor_) s.chi_eff = filter_factor_->solve(mass_ * s.chi_eff);
    s.d0_integral = integral(s.d);
    return s;
}

double Simulator::integral(std::span<const double> field) const { return dot(node_weights_, field); }

NodalField Simulator::transport_coefficient(const NodalField& d, const NodalField& u) const {
    if (config_.model == ModelKind::CMM) return effective_diffusivity_cmm(d, u, config_.law, config_.gate);
    return diffusivity(d, config_.law);
}

void Simulator::check_finite(const NodalField& field, const char* name, long step) const {
    for (std::size_t i = 0; i < field.size(); ++i) {
        if (!std::isfinite(field[i])) {
            std::ostringstream msg;
            msg << "non-finite value in field " << name << " at step " << step << " (node " << i << ")";
            throw NumericalFailure(msg.str());
        }
    }
}

SimState Simulator::step(const SimState& state) const {
    const SolverOptions solver{config_.rel_tol, 0};
    const double dt = config_.dt;
    const long next = state.step + 1;

    NodalField u = state.u;
    for (int k = 0; k < config_.picard_iters; ++k) {
        // The coefficient lags: d from the previous step, U from the latest iterate.
        const NodalField coeff = transport_coefficient(state.d, k == 0 ? state.u : u);
        u = backward_euler_step(fe_, transport_mass_, state.u, coeff, dt, water_supply_, solver);
        check_finite(u, "U", next);
        if (config_.model == ModelKind::CDM) break;
    }

    const NodalField chi = cement_availability(state.d, config_.law.q);
    NodalField chi_eff = filter_factor_ ? filter_factor_->solve(mass_ * chi) : chi;
    check_finite(chi_eff, "chi_eff", next);

    SimState out;
    out.t = state.t + dt;
    out.step = next;
    out.d0_integral = state.d0_integral;
    out.d.resize(state.d.size());
    const double rate = dt * config_.law.alpha;
    for (std::size_t i = 0; i < out.d.size(); ++i) {
        // Negative moisture or availability (solver round-off) never adds damage.
        const double heal = rate * std::max(u[i], 0.0) * std::max(chi_eff[i], 0.0);
        out.d[i] = std::clamp(state.d[i] - heal, 0.0, 1.0);
    }
    check_finite(out.d, "d", next);
    out.u = std::move(u);
    out.chi_eff = std::move(chi_eff);
    return out;
}

double Simulator::healing_percentage(const SimState& state) const {
    if (!(state.d0_integral > 0.0)) throw DegenerateCrack("initial damage integral is zero; healing is undefined");
    return std::clamp(1.0 - integral(state.d) / state.d0_integral, 0.0, 1.0);
}

TraceSample Simulator::sample(const SimState& state) const {
    TraceSample s;
    s.t = state.t;
    s.healing = healing_percentage(state);
    const auto [lo, hi] = std::minmax_element(state.u.begin(), state.u.end());
    s.u_min = *lo;
    s.u_max = *hi;
    s.d_integral = integral(state.d);
    if (config_.model == ModelKind::CMM) {
        std::size_t gated = 0;
        std::size_t open = 0;
        double total = 0.0;
        for (std::size_t i = 0; i < state.d.size(); ++i) {
            if (state.d[i] <= config_.gate.d_threshold) continue;
            const double g = gate(state.u[i], config_.gate);
            ++gated;
            total += g;
            if (g >= 0.5) ++open;
        }
        s.gate_open_fraction = gated == 0 ? 1.0 : static_cast<double>(open) / static_cast<double>(gated);
        s.gate_mean = gated == 0 ? 1.0 : total / static_cast<double>(gated);
    } else {
        s.gate_open_fraction = kNaN;
        s.gate_mean = kNaN;
    }
    return s;
}

HealingTrace Simulator::run(const Observer& observer) const {
    HealingTrace trace;
    trace.model = config_.model;
    SimState state = init_state();
    if (observer) observer(state);
    trace.samples.push_back(sample(state));

    // Half a step of slack so t_max = k * dt ends on step k exactly.
    const double end = config_.t_max - 0.5 * config_.dt;
    while (state.t < end) {
        state = step(state);
        if (observer) observer(state);
        const bool last = state.t >= end;
        TraceSample s = sample(state);
        const bool crossing = !trace.complete && s.healing >= config_.heal_threshold;
        if (crossing || last || state.step % config_.record_every == 0) trace.samples.push_back(s);
        if (crossing) {
            trace.complete = true;
            if (config_.stop_at_threshold) break;
        }
    }
    return trace;
}

HealingTrace run(const SimConfig& config) { return Simulator(config).run(); }

std::optional<double> time_to_heal(const HealingTrace& trace, double threshold) {
    const auto& s = trace.samples;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i].healing < threshold) continue;
        if (i == 0) return s[0].t;
        const double h0 = s[i - 1].healing;
        const double h1 = s[i].healing;
        const double w = h1 > h0 ? (threshold - h0) / (h1 - h0) : 1.0;
        return s[i - 1].t + w * (s[i].t - s[i - 1].t);
    }
    return std::nullopt;
}

double healing_at(const HealingTrace& trace, double t) {
    const auto& s = trace.samples;
    if (s.empty()) return 0.0;
    if (t <= s.front().t) return s.front().healing;
    if (t >= s.back().t) return s.back().healing;
    const auto it = std::lower_bound(s.begin(), s.end(), t, [](const TraceSample& a, double v) { return a.t < v; });
    const auto& hi = *it;
    if (hi.t == t) return hi.healing;
    const auto& lo = *(it - 1);
    return lo.healing + (hi.healing - lo.healing) * (t - lo.t) / (hi.t - lo.t);
}

void write_trace_csv(std::ostream& os, const HealingTrace& trace) {
    const auto old_precision = os.precision(17);
    os << "t,healing_pct,u_min,u_max,d_integral,gate_open_fraction\n";
    for (const auto& s : trace.samples) {
        os << s.t << ',' << s.healing << ',' << s.u_min << ',' << s.u_max << ',' << s.d_integral << ',';
        if (!std::isnan(s.gate_open_fraction)) os << s.gate_open_fraction;
        os << '\n';
    }
    os.precision(old_precision);
}

void write_snapshot_csv(std::ostream& os, const Mesh& mesh, const SimState& state) {
    const auto old_precision = os.precision(17);
    os << "node_id,x,y,U,d\n";
    for (std::size_t i = 0; i < mesh.node_count(); ++i)
        os << i << ',' << mesh.nodes[i].x << ',' << mesh.nodes[i].y << ',' << state.u[i] << ',' << state.d[i] << '\n';
    os.precision(old_precision);
}

}  // namespace selfheal
