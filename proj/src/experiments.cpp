#include "selfheal/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <sstream>

#include "selfheal/error.hpp"
#include "selfheal/parallel.hpp"

namespace selfheal {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

struct RunOutcome {
    std::optional<double> heal_time;
    std::string error;
};

RunOutcome heal_time_of(const SimConfig& config) {
    RunOutcome out;
    try {
        const HealingTrace trace = run(config);
        out.heal_time = time_to_heal(trace, config.heal_threshold);
    } catch (const std::exception& e) {
        out.error = e.what();
        if (out.error.empty()) out.error = "unknown error";
    }
    return out;
}

std::vector<SweepRow> sweep(const SweepSpec& spec, const SimConfig& base) {
    const auto outcomes = parallel_map<RunOutcome>(spec.values.size(), spec.workers, [&](std::size_t i) {
        SimConfig config = base;
        const double v = spec.values[i];
        if (spec.parameter == "beta") config.crack.beta = v * kDegToRad;
        else if (spec.parameter == "sigma") config.crack.sigma = v;
        else config.law.gamma = v;
        return heal_time_of(config);
    });
    std::vector<SweepRow> rows;
    rows.reserve(outcomes.size());
    for (std::size_t i = 0; i < outcomes.size(); ++i)
        rows.push_back({spec.values[i], outcomes[i].heal_time, outcomes[i].error});
    return rows;
}

void write_heal_time(std::ostream& os, const std::optional<double>& heal_time, const std::string& error) {
    if (!error.empty()) os << "nan";
    else if (heal_time) os << *heal_time;
    else os << -1;
}

}  // namespace

void SweepSpec::validate() const {
    if (parameter != "beta" && parameter != "sigma" && parameter != "gamma")
        throw InvalidConfiguration("sweep parameter must be beta, sigma or gamma, got '" + parameter + "'");
    if (values.empty()) throw InvalidConfiguration("sweep value list is empty");
    for (std::size_t i = 1; i < values.size(); ++i)
        if (!(values[i] > values[i - 1])) throw InvalidConfiguration("sweep values must be strictly increasing");
    if (workers < 1) throw InvalidConfiguration("workers must be >= 1");
}

std::vector<double> linspace(double lo, double hi, std::size_t count) {
    if (count == 0) return {};
    if (count == 1) return {lo};
    std::vector<double> out(count);
    for (std::size_t i = 0; i < count; ++i)
        out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
    out.back() = hi;
    return out;
}

SimConfig reference_config() {
    SimConfig c;
    c.crack = {0.0, 0.0224};
    c.law = MaterialLaw{};
    return c;
}

std::vector<SweepRow> angle_sweep(const SweepSpec& spec) {
    spec.validate();
    if (spec.parameter != "beta") throw InvalidConfiguration("angle_sweep varies beta");
    if (spec.values.front() < 0.0 || spec.values.back() > 180.0)
        throw InvalidConfiguration("angle sweep values must lie in [0, 180] degrees");
    return sweep(spec, spec.base);
}

std::vector<SweepRow> width_sweep(const SweepSpec& spec, std::optional<double> d_cracked_override) {
    spec.validate();
    if (spec.parameter != "sigma") throw InvalidConfiguration("width_sweep varies sigma");
    SimConfig base = spec.base;
    base.crack.beta = 0.0;
    if (d_cracked_override) base.law.d_cracked = *d_cracked_override;
    return sweep(spec, base);
}

std::vector<SurfaceRow> surface_sweep(const std::vector<double>& sigmas, const std::vector<double>& gammas,
                                      const SimConfig& base, int workers) {
    if (sigmas.empty() || gammas.empty()) throw InvalidConfiguration("surface sweep needs nonempty sigma and gamma lists");
    const std::size_t n = sigmas.size() * gammas.size();
    const auto outcomes = parallel_map<RunOutcome>(n, workers, [&](std::size_t k) {
        SimConfig config = base;
        config.crack.sigma = sigmas[k / gammas.size()];
        config.law.gamma = gammas[k % gammas.size()];
        return heal_time_of(config);
    });
    std::vector<SurfaceRow> rows;
    rows.reserve(n);
    for (std::size_t k = 0; k < n; ++k)
        rows.push_back({sigmas[k / gammas.size()], gammas[k % gammas.size()], outcomes[k].heal_time, outcomes[k].error});
    return rows;
}

StagingAnalysis analyze_staging(const HealingTrace& trace, double drop_fraction, double noise_floor) {
    StagingAnalysis a;
    const auto& s = trace.samples;
    bool in_dip = false;
    for (std::size_t k = 1; k < s.size(); ++k) {
        if (s[k - 1].healing < noise_floor) continue;
        const double rate = (s[k].healing - s[k - 1].healing) / (s[k].t - s[k - 1].t);
        if (!a.dip_start) {
            // Until the first dip the running maximum is the pre-gate peak.
            if (rate >= a.peak_rate) {
                a.peak_rate = rate;
                a.peak_time = s[k].t;
                continue;
            }
            a.min_ratio = std::min(a.min_ratio, rate / a.peak_rate);
            if (rate < drop_fraction * a.peak_rate) {
                a.dip_start = s[k].t;
                in_dip = true;
            }
            continue;
        }
        if (in_dip && rate >= drop_fraction * a.peak_rate) {
            a.dip_end = s[k].t;
            in_dip = false;
        }
        if (rate > a.peak_rate) {
            a.recovery_time = s[k].t;
            break;
        }
        a.min_ratio = std::min(a.min_ratio, rate / a.peak_rate);
    }
    return a;
}

StageBoundaries annotate_stages(const HealingTrace& cmm, double noise_floor) {
    StageBoundaries b;
    const auto& s = cmm.samples;
    double prev_rate = -1.0;
    for (std::size_t k = 1; k < s.size(); ++k) {
        if (!b.stage2_start && s[k - 1].healing >= noise_floor) {
            const double rate = (s[k].healing - s[k - 1].healing) / (s[k].t - s[k - 1].t);
            const bool stalled = !(s[k].gate_open_fraction > s[k - 1].gate_open_fraction);
            if (prev_rate >= 0.0 && rate < prev_rate && stalled) b.stage2_start = s[k].t;
            prev_rate = rate;
        }
        if (b.stage2_start && !b.stage3_start && s[k].gate_mean > 0.5) b.stage3_start = s[k].t;
    }
    return b;
}

ModelComparison model_comparison(const SimConfig& base, int workers) {
    const auto traces = parallel_map<HealingTrace>(2, workers, [&](std::size_t i) {
        SimConfig config = base;
        config.model = i == 0 ? ModelKind::CDM : ModelKind::CMM;
        return run(config);
    });
    ModelComparison out;
    out.cdm = traces[0];
    out.cmm = traces[1];
    out.stages = annotate_stages(out.cmm);
    out.staging = analyze_staging(out.cmm);
    return out;
}

std::size_t GridAxis::count() const {
    return static_cast<std::size_t>(std::llround((upper - lower) / step)) + 1;
}

std::vector<double> GridAxis::values() const {
    std::vector<double> out(count());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = lower + static_cast<double>(i) * step;
    return out;
}

DatasetSpec DatasetSpec::full() {
    DatasetSpec spec;
    spec.sigma = {0.001, 0.1, 0.001};
    spec.gamma = {0.001, 0.1, 0.001};
    spec.t = {30000.0, 3000000.0, 30000.0};
    spec.base = reference_config();
    spec.base.crack.beta = std::numbers::pi / 2.0;
    return spec;
}

DatasetSpec DatasetSpec::desk() {
    DatasetSpec spec = full();
    spec.sigma = {0.004, 0.1, 0.004};
    spec.gamma = {0.004, 0.1, 0.004};
    spec.t = {50000.0, 3000000.0, 50000.0};
    return spec;
}

void DatasetSpec::validate() const {
    for (const auto* axis : {&sigma, &gamma, &t}) {
        if (!(axis->lower > 0.0 && axis->upper >= axis->lower && axis->step > 0.0))
            throw InvalidConfiguration("dataset grid bounds and steps must be positive with upper >= lower");
        const double n = (axis->upper - axis->lower) / axis->step;
        if (std::abs(n - std::round(n)) > 1e-6)
            throw InvalidConfiguration("dataset grid range is not a whole number of steps");
    }
    if (!(heal_threshold > 0.0 && heal_threshold < 1.0))
        throw InvalidConfiguration("dataset heal_threshold must lie in (0, 1)");
    if (t.values().back() < base.dt) throw InvalidConfiguration("dataset time grid ends before the first step");
}

DatasetResult generate_dataset(const DatasetSpec& spec, int workers) {
    spec.validate();
    const auto sigmas = spec.sigma.values();
    const auto gammas = spec.gamma.values();
    const auto times = spec.t.values();

    struct CellResult {
        std::vector<int> labels;
        std::string error;
    };
    const std::size_t cells = sigmas.size() * gammas.size();
    const auto results = parallel_map<CellResult>(cells, workers, [&](std::size_t k) {
        CellResult r;
        SimConfig config = spec.base;
        config.crack.sigma = sigmas[k / gammas.size()];
        config.law.gamma = gammas[k % gammas.size()];
        config.t_max = times.back();
        config.heal_threshold = spec.heal_threshold;
        config.record_every = 1;
        // Healing only grows, so every checkpoint after the crossing is labelled healed.
        config.stop_at_threshold = true;
        try {
            const HealingTrace trace = run(config);
            r.labels.reserve(times.size());
            for (double t : times) r.labels.push_back(healing_at(trace, t) >= spec.heal_threshold ? 1 : 0);
        } catch (const std::exception& e) {
            r.error = e.what();
            if (r.error.empty()) r.error = "unknown error";
        }
        return r;
    });

    DatasetResult out;
    out.rows.reserve(cells * times.size());
    for (std::size_t k = 0; k < cells; ++k) {
        const double sigma = sigmas[k / gammas.size()];
        const double gamma = gammas[k % gammas.size()];
        if (!results[k].error.empty()) {
            out.failed.push_back({sigma, gamma, results[k].error});
            continue;
        }
        for (std::size_t i = 0; i < times.size(); ++i) out.rows.push_back({sigma, gamma, times[i], results[k].labels[i]});
    }
    return out;
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows, const std::string& value_header) {
    const auto old_precision = os.precision(17);
    os << value_header << ",heal_time_s\n";
    for (const auto& r : rows) {
        os << r.value << ',';
        write_heal_time(os, r.heal_time, r.error);
        os << '\n';
    }
    os.precision(old_precision);
}

void write_surface_csv(std::ostream& os, const std::vector<SurfaceRow>& rows) {
    const auto old_precision = os.precision(17);
    os << "sigma_cm,gamma,heal_time_s\n";
    for (const auto& r : rows) {
        os << r.sigma << ',' << r.gamma << ',';
        write_heal_time(os, r.heal_time, r.error);
        os << '\n';
    }
    os.precision(old_precision);
}

void write_dataset_csv(std::ostream& os, const std::vector<DatasetRow>& rows) {
    const auto old_precision = os.precision(17);
    os << "sigma,gamma,t,H\n";
    for (const auto& r : rows) os << r.sigma << ',' << r.gamma << ',' << r.t << ',' << r.healed << '\n';
    os.precision(old_precision);
}

void write_failed_cells(std::ostream& os, const std::vector<FailedCell>& failed) {
    const auto old_precision = os.precision(17);
    os << "sigma,gamma,error\n";
    for (const auto& f : failed) {
        std::string msg = f.error;
        std::replace(msg.begin(), msg.end(), '\n', ' ');
        std::replace(msg.begin(), msg.end(), ',', ';');
        os << f.sigma << ',' << f.gamma << ',' << msg << '\n';
    }
    os.precision(old_precision);
}

void write_sweep_errors(std::ostream& os, const std::vector<SweepRow>& rows) {
    const auto old_precision = os.precision(17);
    for (const auto& r : rows)
        if (!r.error.empty()) os << r.value << ": " << r.error << '\n';
    os.precision(old_precision);
}

}  // namespace selfheal
