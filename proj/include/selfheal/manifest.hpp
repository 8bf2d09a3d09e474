#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "selfheal/config.hpp"

namespace selfheal {

inline constexpr const char* kToolVersion = "1.0.0";

struct ManifestFile {
    std::string path;  // relative to the output directory
    std::uintmax_t bytes = 0;
    std::string checksum;  // fnv1a64, hex
};

/// Provenance record written next to every command's outputs. Timestamps
/// are UTC ISO-8601; everything else is a pure function of the inputs.
struct RunManifest {
    std::string command;
    Json config;
    std::uint64_t seed = 0;
    int workers = 1;
    std::string started;
    std::string finished;
    std::vector<ManifestFile> files;

    /// Checksums each file under `dir` and appends it to `files`.
    void add_file(const std::filesystem::path& dir, const std::string& relative);
    Json to_json() const;
    void write(const std::filesystem::path& path) const;
};

std::string utc_timestamp();
std::string file_checksum(const std::filesystem::path& path);

}  // namespace selfheal
