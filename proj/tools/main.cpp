// Command-line driver: simulate, sweep, dataset, train, eval.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "selfheal/config.hpp"
#include "selfheal/error.hpp"
#include "selfheal/experiments.hpp"
#include "selfheal/manifest.hpp"
#include "selfheal/simulation.hpp"
#include "selfheal/surrogate.hpp"

namespace fs = std::filesystem;
using namespace selfheal;

namespace {

enum ExitCode { kOk = 0, kInternal = 1, kConfig = 2, kNumerical = 3, kData = 4 };

struct Options {
    std::string config_path;
    std::string out_dir = "out";
    std::uint64_t seed = 42;
    int workers = std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
    std::string model;
    std::optional<double> d_cracked;
    bool full = false;
    std::string models = "knn,gnb,logreg,linsvm,mlp";
    std::string data_path;
    std::string model_dir;
    std::string eval_split = "test";
};

RunConfig load_config(const Options& opt) {
    RunConfig rc = opt.config_path.empty() ? RunConfig{} : load_run_config(opt.config_path);
    if (!opt.model.empty()) rc.sim.model = parse_model(opt.model);
    if (opt.workers < 1) throw InvalidConfiguration("--workers must be >= 1");
    rc.sim.validate();
    return rc;
}

fs::path prepare_out(const Options& opt) {
    std::error_code ec;
    fs::create_directories(opt.out_dir, ec);
    if (ec || !fs::is_directory(opt.out_dir))
        throw InvalidConfiguration("cannot create output directory '" + opt.out_dir + "'");
    return opt.out_dir;
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream os(path);
    if (!os) throw InvalidConfiguration("cannot write '" + path.string() + "'");
    return os;
}

RunManifest begin_manifest(const std::string& command, const Options& opt, Json config) {
    RunManifest m;
    m.command = command;
    m.config = std::move(config);
    m.seed = opt.seed;
    m.workers = opt.workers;
    m.started = utc_timestamp();
    return m;
}

void finish_manifest(RunManifest& m, const fs::path& dir) {
    m.finished = utc_timestamp();
    m.write(dir / "manifest.json");
}

std::string snapshot_name(double t) {
    std::ostringstream os;
    os << "snapshot_t" << std::llround(t) << ".csv";
    return os.str();
}

int cmd_simulate(const Options& opt) {
    const RunConfig rc = load_config(opt);
    const fs::path dir = prepare_out(opt);
    RunManifest manifest = begin_manifest("simulate", opt, to_json(rc));

    Simulator sim(rc.sim);
    std::vector<double> pending = rc.snapshot_times;
    std::sort(pending.begin(), pending.end());
    std::vector<std::string> written;
    // A snapshot at time T is the first state with t >= T.
    const HealingTrace trace = sim.run([&](const SimState& state) {
        while (!pending.empty() && state.t >= pending.front() - 1e-9 * sim.config().dt) {
            const std::string name = snapshot_name(pending.front());
            auto os = open_out(dir / name);
            write_snapshot_csv(os, sim.mesh(), state);
            written.push_back(name);
            pending.erase(pending.begin());
        }
    });

    {
        auto os = open_out(dir / "trace.csv");
        write_trace_csv(os, trace);
    }
    manifest.add_file(dir, "trace.csv");
    for (const auto& name : written) manifest.add_file(dir, name);
    finish_manifest(manifest, dir);

    const auto& last = trace.samples.back();
    std::cout << "model=" << to_string(rc.sim.model) << " t_end=" << last.t << " healing=" << last.healing;
    if (const auto th = time_to_heal(trace, rc.sim.heal_threshold)) std::cout << " time_to_heal=" << *th;
    std::cout << '\n';
    if (!pending.empty())
        std::cout << pending.size() << " snapshot time(s) beyond the end of the run were skipped\n";
    return kOk;
}

int report_sweep_errors(const fs::path& dir, const std::vector<SweepRow>& rows, RunManifest& manifest) {
    const bool any = std::any_of(rows.begin(), rows.end(), [](const SweepRow& r) { return !r.error.empty(); });
    if (!any) return kOk;
    {
        auto os = open_out(dir / "sweep_errors.csv");
        write_sweep_errors(os, rows);
    }
    manifest.add_file(dir, "sweep_errors.csv");
    std::cerr << "some sweep points failed; see sweep_errors.csv\n";
    return kNumerical;
}

int cmd_sweep(const std::string& kind, const Options& opt) {
    RunConfig rc = load_config(opt);
    const fs::path dir = prepare_out(opt);
    Json snapshot = to_json(rc);
    if (opt.d_cracked) snapshot["d_cracked_override"] = *opt.d_cracked;
    RunManifest manifest = begin_manifest("sweep " + kind, opt, snapshot);
    int code = kOk;

    if (kind == "angle") {
        SweepSpec spec{"beta", rc.sweep.values.value_or(linspace(0.0, 180.0, 37)), rc.sim, "angle_sweep.csv",
                       opt.workers};
        if (opt.d_cracked) spec.base.law.d_cracked = *opt.d_cracked;
        const auto rows = angle_sweep(spec);
        {
            auto os = open_out(dir / spec.output_path);
            write_sweep_csv(os, rows, "beta_deg");
        }
        manifest.add_file(dir, spec.output_path);
        code = report_sweep_errors(dir, rows, manifest);
    } else if (kind == "width") {
        const double d_cracked = opt.d_cracked.value_or(rc.sim.law.d_cracked);
        // Slower-than-concrete cracks are studied over wider cracks.
        const auto fallback =
            d_cracked < rc.sim.law.d_intact ? linspace(0.025, 0.040, 7) : linspace(0.005, 0.025, 7);
        SweepSpec spec{"sigma", rc.sweep.values.value_or(fallback), rc.sim, "width_sweep.csv", opt.workers};
        const auto rows = width_sweep(spec, opt.d_cracked);
        {
            auto os = open_out(dir / spec.output_path);
            write_sweep_csv(os, rows, "sigma_cm");
        }
        manifest.add_file(dir, spec.output_path);
        code = report_sweep_errors(dir, rows, manifest);
    } else {
        SimConfig base = rc.sim;
        if (opt.d_cracked) base.law.d_cracked = *opt.d_cracked;
        const auto sigmas = rc.sweep.sigmas.value_or(linspace(0.005, 0.030, 6));
        const auto gammas = rc.sweep.gammas.value_or(linspace(0.01, 0.06, 6));
        const auto rows = surface_sweep(sigmas, gammas, base, opt.workers);
        {
            auto os = open_out(dir / "surface.csv");
            write_surface_csv(os, rows);
        }
        manifest.add_file(dir, "surface.csv");
        if (std::any_of(rows.begin(), rows.end(), [](const SurfaceRow& r) { return !r.error.empty(); })) {
            std::cerr << "some surface points failed; their heal_time_s is nan\n";
            code = kNumerical;
        }
    }
    finish_manifest(manifest, dir);
    return code;
}

int cmd_dataset(const Options& opt) {
    const RunConfig rc = load_config(opt);
    DatasetSpec spec = rc.dataset.value_or(opt.full ? DatasetSpec::full() : DatasetSpec::desk());
    if (opt.full && rc.dataset) throw InvalidConfiguration("--full conflicts with a dataset section in the config");
    if (!opt.model.empty()) spec.base.model = parse_model(opt.model);
    if (opt.d_cracked) spec.base.law.d_cracked = *opt.d_cracked;
    const fs::path dir = prepare_out(opt);
    RunManifest manifest = begin_manifest("dataset", opt, Json{{"dataset", to_json(spec)}});

    const DatasetResult result = generate_dataset(spec, opt.workers);
    {
        auto os = open_out(dir / "dataset.csv");
        write_dataset_csv(os, result.rows);
    }
    {
        auto os = open_out(dir / "failed_cells.csv");
        write_failed_cells(os, result.failed);
    }
    manifest.add_file(dir, "dataset.csv");
    manifest.add_file(dir, "failed_cells.csv");
    finish_manifest(manifest, dir);

    std::cout << "rows=" << result.rows.size() << " failed_cells=" << result.failed.size() << '\n';
    if (result.rows.empty()) {
        std::cerr << "every dataset cell failed\n";
        return kNumerical;
    }
    return kOk;
}

surrogate::Dataset read_data(const std::string& path) {
    if (path.empty()) throw InvalidConfiguration("--data is required");
    std::ifstream in(path);
    if (!in) throw InvalidConfiguration("cannot open dataset '" + path + "'");
    return surrogate::read_dataset_csv(in);
}

std::vector<surrogate::Variant> parse_models(const std::string& list) {
    std::vector<surrogate::Variant> out;
    std::stringstream ss(list);
    std::string name;
    while (std::getline(ss, name, ','))
        if (!name.empty()) out.push_back(surrogate::parse_variant(name));
    if (out.empty()) throw InvalidConfiguration("--models is empty");
    return out;
}

std::string model_file(surrogate::Variant v) { return std::string("model_") + surrogate::to_string(v) + ".txt"; }

int cmd_train(const Options& opt) {
    const RunConfig rc = load_config(opt);
    const auto variants = parse_models(opt.models);
    const surrogate::Dataset data = read_data(opt.data_path);
    const fs::path dir = prepare_out(opt);
    Json snapshot{{"data", opt.data_path}, {"models", opt.models}, {"surrogate", to_json(rc.hyper)}};
    RunManifest manifest = begin_manifest("train", opt, snapshot);

    const auto parts = surrogate::split(data.size(), opt.seed);
    const auto train = data.subset(parts.train);
    const auto validation = data.subset(parts.validation);
    surrogate::Hyperparameters hp = rc.hyper;
    hp.seed = opt.seed;

    {
        auto os = open_out(dir / "validation_metrics.csv");
        surrogate::write_metrics_header(os);
        for (const auto v : variants) {
            const auto model = surrogate::fit(v, train, validation, hp);
            {
                auto ms = open_out(dir / model_file(v));
                ms << surrogate::persist(model);
            }
            surrogate::write_metrics_row(os, surrogate::to_string(v), surrogate::evaluate(model, validation));
            std::cout << "trained " << surrogate::to_string(v) << '\n';
        }
    }
    for (const auto v : variants) manifest.add_file(dir, model_file(v));
    manifest.add_file(dir, "validation_metrics.csv");
    finish_manifest(manifest, dir);
    return kOk;
}

int cmd_eval(const Options& opt) {
    const auto variants = parse_models(opt.models);
    const surrogate::Dataset data = read_data(opt.data_path);
    if (opt.model_dir.empty()) throw InvalidConfiguration("--model-dir is required");
    const fs::path dir = prepare_out(opt);
    Json snapshot{{"data", opt.data_path}, {"model_dir", opt.model_dir}, {"split", opt.eval_split},
                  {"models", opt.models}};
    RunManifest manifest = begin_manifest("eval", opt, snapshot);

    surrogate::Dataset rows;
    if (opt.eval_split == "all") {
        rows = data;
    } else {
        const auto parts = surrogate::split(data.size(), opt.seed);
        rows = data.subset(opt.eval_split == "validation" ? parts.validation : parts.test);
    }

    {
        auto os = open_out(dir / "metrics.csv");
        surrogate::write_metrics_header(os);
        for (const auto v : variants) {
            const fs::path path = fs::path(opt.model_dir) / model_file(v);
            std::ifstream in(path, std::ios::binary);
            if (!in) throw InvalidConfiguration("cannot open model '" + path.string() + "'");
            const std::string payload((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
            const auto model = surrogate::load(payload);
            if (model.variant() != v) throw CorruptModel(path.string() + ": variant tag does not match file name");
            const auto m = surrogate::evaluate(model, rows);
            surrogate::write_metrics_row(os, surrogate::to_string(v), m);
            surrogate::write_metrics_row(std::cout, surrogate::to_string(v), m);
        }
    }
    manifest.add_file(dir, "metrics.csv");
    finish_manifest(manifest, dir);
    return kOk;
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const InvalidConfiguration*>(&e)) return kConfig;
    if (dynamic_cast<const NumericalFailure*>(&e) || dynamic_cast<const SolverDivergence*>(&e) ||
        dynamic_cast<const DegenerateCrack*>(&e) || dynamic_cast<const InvalidField*>(&e) ||
        dynamic_cast<const TrainingDivergence*>(&e))
        return kNumerical;
    if (dynamic_cast<const InvalidDataset*>(&e) || dynamic_cast<const DegenerateLabels*>(&e) ||
        dynamic_cast<const InvalidInput*>(&e) || dynamic_cast<const CorruptModel*>(&e))
        return kData;
    return kInternal;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Self-healing concrete simulator and surrogate toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);
    Options opt;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", opt.config_path, "JSON config file");
        sub->add_option("--out", opt.out_dir, "Output directory")->capture_default_str();
        sub->add_option("--workers", opt.workers, "Parallel workers")->capture_default_str();
        sub->add_option("--seed", opt.seed, "Seed for all randomness")->capture_default_str();
    };

    auto* simulate = app.add_subcommand("simulate", "Run one simulation");
    common(simulate);
    simulate->add_option("--model", opt.model, "cdm or cmm");

    auto* sweep = app.add_subcommand("sweep", "Parameter sweep");
    common(sweep);
    std::string sweep_kind;
    sweep->add_option("kind", sweep_kind, "angle, width or surface")
        ->required()
        ->check(CLI::IsMember({"angle", "width", "surface"}));
    sweep->add_option("--model", opt.model, "cdm or cmm");
    sweep->add_option("--d-cracked", opt.d_cracked, "Override D_cracked (cm^2/s)");

    auto* dataset = app.add_subcommand("dataset", "Generate the labelled (sigma, gamma, t, H) dataset");
    common(dataset);
    dataset->add_flag("--desk", "25 x 25 x 60 grid (default)");
    dataset->add_flag("--full", opt.full, "100 x 100 x 100 grid");
    dataset->add_option("--model", opt.model, "cdm or cmm");
    dataset->add_option("--d-cracked", opt.d_cracked, "Override D_cracked (cm^2/s)");

    auto* train = app.add_subcommand("train", "Train surrogate classifiers");
    common(train);
    train->add_option("--data", opt.data_path, "Dataset CSV")->required();
    train->add_option("--models", opt.models, "Comma-separated variants")->capture_default_str();

    auto* eval = app.add_subcommand("eval", "Evaluate trained classifiers");
    common(eval);
    eval->add_option("--data", opt.data_path, "Dataset CSV")->required();
    eval->add_option("--model-dir", opt.model_dir, "Directory holding model_<name>.txt")->required();
    eval->add_option("--models", opt.models, "Comma-separated variants")->capture_default_str();
    eval->add_option("--split", opt.eval_split, "Rows to score")
        ->check(CLI::IsMember({"test", "validation", "all"}))
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }

    try {
        if (simulate->parsed()) return cmd_simulate(opt);
        if (sweep->parsed()) return cmd_sweep(sweep_kind, opt);
        if (dataset->parsed()) return cmd_dataset(opt);
        if (train->parsed()) return cmd_train(opt);
        if (eval->parsed()) return cmd_eval(opt);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code_for(e);
    }
    return kInternal;
}
