#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "selfheal/experiments.hpp"
#include "selfheal/simulation.hpp"
#include "selfheal/surrogate.hpp"

namespace selfheal {

using Json = nlohmann::ordered_json;

/// Optional value lists for the sweep commands. Angles are in degrees.
struct SweepLists {
    std::optional<std::vector<double>> values;
    std::optional<std::vector<double>> sigmas;
    std::optional<std::vector<double>> gammas;
};

/// Everything a config file can hold. Top-level keys are the SimConfig
/// fields; `dataset`, `sweep`, `surrogate` and `snapshot_times` are
/// optional sections.
struct RunConfig {
    SimConfig sim;
    std::optional<DatasetSpec> dataset;
    SweepLists sweep;
    surrogate::Hyperparameters hyper;
    std::vector<double> snapshot_times;  // s
};

/// Throws InvalidConfiguration naming the offending key path. Unknown keys
/// are rejected so typos do not silently fall back to defaults.
RunConfig parse_run_config(const Json& doc);
RunConfig load_run_config(const std::filesystem::path& path);

Json to_json(const SimConfig& config);
Json to_json(const DatasetSpec& spec);
Json to_json(const surrogate::Hyperparameters& hp);
Json to_json(const RunConfig& config);

}  // namespace selfheal
