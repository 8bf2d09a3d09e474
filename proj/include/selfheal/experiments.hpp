#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "selfheal/simulation.hpp"

namespace selfheal {

/// One varied parameter over an ordered list of values.
struct SweepSpec {
    std::string parameter;  // "beta" (degrees), "sigma" (cm) or "gamma" (cm^2)
    std::vector<double> values;
    SimConfig base;
    std::string output_path;
    int workers = 1;

    void validate() const;
};

/// heal_time is nullopt when the run ended unhealed at t_max; `error` is
/// non-empty when the run itself failed.
struct SweepRow {
    double value = 0.0;
    std::optional<double> heal_time;
    std::string error;
};

struct SurfaceRow {
    double sigma = 0.0;
    double gamma = 0.0;
    std::optional<double> heal_time;
    std::string error;
};

/// `count` evenly spaced values over [lo, hi], endpoints included.
std::vector<double> linspace(double lo, double hi, std::size_t count);

/// Base configuration of the angle and width studies: alpha 0.01,
/// sigma 0.0224 cm, gamma 0.0316 cm^2, D_intact 1e-8, D_cracked 1e-7.
SimConfig reference_config();

std::vector<SweepRow> angle_sweep(const SweepSpec& spec);

/// Width sweep at beta = 0. The override replaces D_cracked: 1e-9 gives the
/// crack-slower-than-concrete study, 1e-7 the crack-faster one.
std::vector<SweepRow> width_sweep(const SweepSpec& spec, std::optional<double> d_cracked_override);

/// Full Cartesian product, sigma-major.
std::vector<SurfaceRow> surface_sweep(const std::vector<double>& sigmas, const std::vector<double>& gammas,
                                      const SimConfig& base, int workers = 1);

/// Rate-based reading of a staged healing curve.
struct StagingAnalysis {
    double peak_rate = 0.0;  // pre-gate maximum healing rate, 1/s
    double peak_time = 0.0;
    double min_ratio = 1.0;  // lowest rate after the peak, relative to it, before recovery
    std::optional<double> dip_start;
    std::optional<double> dip_end;
    std::optional<double> recovery_time;  // first time the rate exceeds the peak again

    bool three_stages() const { return dip_start.has_value() && recovery_time.has_value(); }
};

/// Rates are differences of consecutive samples; samples below
/// `noise_floor` healing are ignored since their rates are round-off.
StagingAnalysis analyze_staging(const HealingTrace& trace, double drop_fraction = 0.25, double noise_floor = 1e-3);

struct StageBoundaries {
    std::optional<double> stage2_start;  // gate fraction stalls while the rate drops
    std::optional<double> stage3_start;  // mean gate value over the crack exceeds 0.5
};

StageBoundaries annotate_stages(const HealingTrace& cmm, double noise_floor = 1e-3);

struct ModelComparison {
    HealingTrace cdm;
    HealingTrace cmm;
    StageBoundaries stages;
    StagingAnalysis staging;
};

ModelComparison model_comparison(const SimConfig& base, int workers = 1);

/// Inclusive uniform grid lower, lower + step, ..., upper.
struct GridAxis {
    double lower = 0.0;
    double upper = 0.0;
    double step = 0.0;

    std::size_t count() const;
    std::vector<double> values() const;
};

struct DatasetSpec {
    GridAxis sigma;
    GridAxis gamma;
    GridAxis t;
    double heal_threshold = 0.95;
    SimConfig base;  // beta, alpha and the numerics; sigma and gamma are overwritten

    /// 100 x 100 x 100 grid: sigma, gamma in 0.001..0.1 step 0.001,
    /// t in 30,000..3,000,000 s step 30,000.
    static DatasetSpec full();
    /// 25 x 25 x 60 grid: sigma, gamma in 0.004..0.1 step 0.004,
    /// t in 50,000..3,000,000 s step 50,000.
    static DatasetSpec desk();

    void validate() const;
};

struct DatasetRow {
    double sigma = 0.0;
    double gamma = 0.0;
    double t = 0.0;
    int healed = 0;
};

struct FailedCell {
    double sigma = 0.0;
    double gamma = 0.0;
    std::string error;
};

struct DatasetResult {
    std::vector<DatasetRow> rows;  // sigma-major, then gamma, then t
    std::vector<FailedCell> failed;
};

/// One checkpointed run per (sigma, gamma) cell; H(t) = 1 iff the healing
/// percentage at t reaches the label threshold. Failed cells are skipped
/// and reported.
DatasetResult generate_dataset(const DatasetSpec& spec, int workers = 1);

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows, const std::string& value_header);
void write_surface_csv(std::ostream& os, const std::vector<SurfaceRow>& rows);
void write_dataset_csv(std::ostream& os, const std::vector<DatasetRow>& rows);
void write_failed_cells(std::ostream& os, const std::vector<FailedCell>& failed);
/// Lists sweep rows that carry an error, one per line.
void write_sweep_errors(std::ostream& os, const std::vector<SweepRow>& rows);

}  // namespace selfheal
